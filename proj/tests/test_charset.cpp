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

#include <cctype>
#include <set>

#include <doctest.h>

#include "trig/charset.hpp"
#include "trig/error.hpp"

using namespace trig;

TEST_CASE("alphabet layout: digits, upper, lower, punctuation in codepoint order") {
  const Charset& cs = charset();
  CHECK(cs.num_classes() == 97);
  CHECK(cs.symbols().size() == 94);
  CHECK(cs.char_id('0') == 0);
  CHECK(cs.char_id('9') == 9);
  CHECK(cs.char_id('A') == 10);
  CHECK(cs.char_id('Z') == 35);
  CHECK(cs.char_id('a') == 36);
  CHECK(cs.char_id('z') == 61);
  // 32 punctuation marks, ascending codepoints
  std::string punct = cs.symbols().substr(62);
  CHECK(punct.size() == 32);
  for (size_t i = 1; i < punct.size(); ++i) CHECK(punct[i - 1] < punct[i]);
  for (char c : punct) CHECK(std::ispunct(static_cast<unsigned char>(c)));

  std::set<char> uniq(cs.symbols().begin(), cs.symbols().end());
  CHECK(uniq.size() == 94);
  for (int i = 0; i < 94; ++i) CHECK(cs.char_id(cs.symbols()[i]) == i);
}

TEST_CASE("encode appends eos then pads; decode inverts") {
  const Charset& cs = charset();
  std::vector<int> ids = cs.encode("Ab1", 6);
  REQUIRE(ids.size() == 6);
  CHECK(ids[0] == cs.char_id('A'));
  CHECK(ids[1] == cs.char_id('b'));
  CHECK(ids[2] == cs.char_id('1'));
  CHECK(ids[3] == cs.eos_id());
  CHECK(ids[4] == cs.pad_id());
  CHECK(ids[5] == cs.pad_id());
  CHECK(cs.decode(ids) == "Ab1");

  CHECK_THROWS_AS((void)cs.encode("toolong", 7), DataError);
  CHECK_NOTHROW((void)cs.encode("fitsok!", 8));
}

TEST_CASE("out-of-alphabet characters map to unk and decode skips them") {
  const Charset& cs = charset();
  CHECK(cs.char_id(' ') == cs.unk_id());
  CHECK(cs.char_id('\n') == cs.unk_id());
  CHECK_FALSE(cs.contains(' '));
  std::vector<int> ids = cs.encode("a b", 5);
  CHECK(ids[1] == cs.unk_id());
  CHECK(cs.decode(ids) == "ab");
}

TEST_CASE("dump lists every class once") {
  std::string d = charset().dump();
  size_t lines = 0;
  for (char c : d)
    if (c == '\n') lines++;
  CHECK(lines == 97);
}
