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

#include "fairmask/mask.h"

#include <cstring>

#include "fairmask/error.h"

namespace fairmask {

Mask::Mask(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto b : bits_) {
    if (b > 1) throw Error(ErrorCode::kInvalidArgument, "mask entry not 0/1");
  }
}

std::size_t Mask::popcount() const {
  // Bytes are 0 or 1, so the multiply sums eight of them in the top byte.
  const std::size_t n = bits_.size();
  std::size_t total = 0;
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    std::uint64_t w;
    std::memcpy(&w, bits_.data() + i, 8);
    total += (w * 0x0101010101010101ull) >> 56;
  }
  for (; i < n; ++i) total += bits_[i];
  return total;
}

std::string Mask::to_string() const {
  std::string out(bits_.size(), '0');
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) out[i] = '1';
  }
  return out;
}

std::size_t hamming_distance(const Mask& a, const Mask& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kLengthMismatch, "masks differ in length");
  }
  std::size_t distance = 0;
  for (std::size_t i = 0; i < a.size(); ++i) distance += a[i] != b[i];
  return distance;
}

}  // namespace fairmask
