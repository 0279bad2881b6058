// Copyright 2026 The TRIG Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <string>
#include <vector>

namespace trig {

/// The 97-class label alphabet: 10 digits, 26 uppercase, 26 lowercase, the 32
/// ASCII punctuation marks in codepoint order, then eos/pad/unk. Ordering is
/// fixed so checkpoints stay portable. Immutable after construction.
class Charset {
 public:
  static constexpr int kNumClasses = 97;

  Charset();

  int eos_id() const { return 94; }
  int pad_id() const { return 95; }
  int unk_id() const { return 96; }
  int num_classes() const { return kNumClasses; }

  /// Printable symbols, index 0..93.
  const std::string& symbols() const { return symbols_; }

  /// Class id for a character; unk for anything outside the alphabet.
  int char_id(char c) const;

  bool contains(char c) const { return char_id(c) != unk_id(); }

  /// Character ids, one eos, then pad out to max_len. Throws DataError when
  /// the text does not fit (needs len(text)+1 <= max_len).
  std::vector<int> encode(const std::string& text, long max_len) const;

  /// Concatenate symbols up to (excluding) the first eos; pad/unk after eos
  /// are ignored, unk before eos decodes to nothing printable and is skipped.
  std::string decode(const std::vector<int>& ids) const;

  /// One symbol per line plus the three control names, for documentation.
  std::string dump() const;

 private:
  std::string symbols_;           // 94 printable characters in canonical order
  std::array<int, 256> lookup_;   // char -> id (or unk)
};

/// Canonical charset singleton; construction is cheap but this keeps call
/// sites uniform.
const Charset& charset();

}  // namespace trig
