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

#ifndef FAIRMASK_MASK_H_
#define FAIRMASK_MASK_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fairmask {

// Fixed-length selection vector over a sample pool; bit i set means pool
// row i is part of the selected subset.
class Mask {
 public:
  Mask() = default;
  explicit Mask(std::size_t size, bool value = false)
      : bits_(size, value ? 1 : 0) {}
  // Every entry must be 0 or 1.
  explicit Mask(std::vector<std::uint8_t> bits);

  static Mask ones(std::size_t size) { return Mask(size, true); }
  static Mask zeros(std::size_t size) { return Mask(size, false); }

  std::size_t size() const { return bits_.size(); }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool value) { bits_[i] = value ? 1 : 0; }
  void flip(std::size_t i) { bits_[i] ^= 1; }
  std::size_t popcount() const;
  std::span<const std::uint8_t> bits() const { return bits_; }
  std::span<std::uint8_t> mutable_bits() { return bits_; }

  // "0110..." in pool order.
  std::string to_string() const;

  friend bool operator==(const Mask&, const Mask&) = default;
  // Lexicographic order on (b_1, ..., b_n).
  friend auto operator<=>(const Mask&, const Mask&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

std::size_t hamming_distance(const Mask& a, const Mask& b);

// What the solvers see: a pool size and a black-box score to minimize.
struct Problem {
  std::size_t size = 0;
  std::function<double(const Mask&)> fitness;
};

}  // namespace fairmask

#endif  // FAIRMASK_MASK_H_
