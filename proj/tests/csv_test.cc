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

#include <sstream>

#include <gtest/gtest.h>

#include "fairmask/csv.h"
#include "fairmask/error.h"

namespace fairmask::csv {
namespace {

using Rows = std::vector<std::vector<std::string>>;

Table parse_text(const std::string& text, char delimiter = ',') {
  std::istringstream in(text);
  return parse(in, delimiter);
}

TEST(CsvParse, PlainRecords) {
  const Table t = parse_text("a,b\n1,2\n3,4\n");
  EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(t.rows, (Rows{{"1", "2"}, {"3", "4"}}));
}

TEST(CsvParse, QuotedFieldsWithDelimitersQuotesAndNewlines) {
  const Table t = parse_text("a,b\n\"x,y\",\"say \"\"hi\"\"\"\n\"two\nlines\",z\n");
  EXPECT_EQ(t.rows, (Rows{{"x,y", "say \"hi\""}, {"two\nlines", "z"}}));
}

TEST(CsvParse, CrlfAndMissingFinalNewline) {
  const Table t = parse_text("a,b\r\n\"q\",2\r\n3,4");
  EXPECT_EQ(t.rows, (Rows{{"q", "2"}, {"3", "4"}}));
}

TEST(CsvParse, SkipsBlankLinesAndBom) {
  const Table t = parse_text("\xEF\xBB\xBF" "a,b\n\n1,2\n\n");
  EXPECT_EQ(t.header.front(), "a");
  EXPECT_EQ(t.rows.size(), 1u);
}

TEST(CsvParse, EmptyFieldsArePreserved) {
  const Table t = parse_text("a,b,c\n,,\n");
  EXPECT_EQ(t.rows, (Rows{{"", "", ""}}));
}

TEST(CsvParse, FieldCountMismatchIsAParseError) {
  try {
    parse_text("a,b\n1,2,3\n");
    FAIL() << "expected a parse error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
  }
}

TEST(CsvParse, MissingHeaderIsAParseError) {
  EXPECT_THROW(parse_text(""), Error);
}

TEST(CsvParse, AlternativeDelimiter) {
  const Table t = parse_text("a;b\n\"1;5\";2\n", ';');
  EXPECT_EQ(t.rows, (Rows{{"1;5", "2"}}));
}

TEST(CsvWrite, EscapesOnlyWhenNeeded) {
  EXPECT_EQ(escape("plain"), "plain");
  EXPECT_EQ(escape("a,b"), "\"a,b\"");
  EXPECT_EQ(escape("say \"x\""), "\"say \"\"x\"\"\"");
  EXPECT_EQ(escape("semi;colon", ';'), "\"semi;colon\"");
}

TEST(CsvWrite, RoundTripsAwkwardFields) {
  const Rows rows = {{"x,y", "q\"uote"}, {"multi\nline", ""}, {" pad ", "z"}};
  std::ostringstream out;
  write_record(out, {"h1", "h2"});
  for (const auto& r : rows) write_record(out, r);
  const Table back = parse_text(out.str());
  EXPECT_EQ(back.rows, rows);
}

TEST(CsvTrim, StripsSpacesAndTabs) {
  EXPECT_EQ(trim("  a b\t"), "a b");
  EXPECT_EQ(trim("   "), "");
}

}  // namespace
}  // namespace fairmask::csv
