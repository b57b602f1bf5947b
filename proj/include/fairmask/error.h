//
// Copyright 2026 The Fairmask Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef FAIRMASK_ERROR_H_
#define FAIRMASK_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace fairmask {

enum class ErrorCode {
  kInvalidArgument,
  kIoFailure,
  kParse,
  kMissingColumn,
  kEmptyAfterCleaning,
  kSingleGroup,
  kNonBinaryLabel,
  kUndefinedRate,
  kUnknownName,
  kSchemaMismatch,
  kMissingSynthetic,
  kLengthMismatch,
  kIndexOutOfRange,
  kDegenerateColumn,
  kPoolTooLarge,
};

std::string_view error_code_name(ErrorCode code);

// All library failures surface as this exception; `code()` identifies the
// failure class so callers (the CLI in particular) can map it to an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fairmask

#endif  // FAIRMASK_ERROR_H_
