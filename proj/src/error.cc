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

#include "fairmask/error.h"

namespace fairmask {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "InvalidArgument";
    case ErrorCode::kIoFailure:
      return "IoFailure";
    case ErrorCode::kParse:
      return "Parse";
    case ErrorCode::kMissingColumn:
      return "MissingColumn";
    case ErrorCode::kEmptyAfterCleaning:
      return "EmptyAfterCleaning";
    case ErrorCode::kSingleGroup:
      return "SingleGroup";
    case ErrorCode::kNonBinaryLabel:
      return "NonBinaryLabel";
    case ErrorCode::kUndefinedRate:
      return "UndefinedRate";
    case ErrorCode::kUnknownName:
      return "UnknownName";
    case ErrorCode::kSchemaMismatch:
      return "SchemaMismatch";
    case ErrorCode::kMissingSynthetic:
      return "MissingSynthetic";
    case ErrorCode::kLengthMismatch:
      return "LengthMismatch";
    case ErrorCode::kIndexOutOfRange:
      return "IndexOutOfRange";
    case ErrorCode::kDegenerateColumn:
      return "DegenerateColumn";
    case ErrorCode::kPoolTooLarge:
      return "PoolTooLarge";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      code_(code) {}

}  // namespace fairmask
