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

#include "trig/charset.hpp"

#include "trig/error.hpp"

namespace trig {

Charset::Charset() {
  for (char c = '0'; c <= '9'; ++c) symbols_ += c;
  for (char c = 'A'; c <= 'Z'; ++c) symbols_ += c;
  for (char c = 'a'; c <= 'z'; ++c) symbols_ += c;
  // The 32 ASCII punctuation marks, codepoint order (0x21-0x2f, 0x3a-0x40,
  // 0x5b-0x60, 0x7b-0x7e). Space is not part of the alphabet.
  for (int c = 0x21; c <= 0x7e; ++c) {
    bool alnum = (c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z');
    if (!alnum) symbols_ += static_cast<char>(c);
  }
  lookup_.fill(unk_id());
  for (int i = 0; i < static_cast<int>(symbols_.size()); ++i)
    lookup_[static_cast<uint8_t>(symbols_[i])] = i;
}

int Charset::char_id(char c) const { return lookup_[static_cast<uint8_t>(c)]; }

std::vector<int> Charset::encode(const std::string& text, long max_len) const {
  if (static_cast<long>(text.size()) + 1 > max_len)
    throw DataError("encode: text of length " + std::to_string(text.size()) +
                    " does not fit in max_len " + std::to_string(max_len));
  std::vector<int> ids;
  ids.reserve(max_len);
  for (char c : text) ids.push_back(char_id(c));
  ids.push_back(eos_id());
  while (static_cast<long>(ids.size()) < max_len) ids.push_back(pad_id());
  return ids;
}

std::string Charset::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (id == eos_id()) break;
    if (id >= 0 && id < static_cast<int>(symbols_.size())) out += symbols_[id];
  }
  return out;
}

std::string Charset::dump() const {
  std::string out;
  for (char c : symbols_) {
    out += c;
    out += '\n';
  }
  out += "<eos>\n<pad>\n<unk>\n";
  return out;
}

const Charset& charset() {
  static const Charset cs;
  return cs;
}

}  // namespace trig
