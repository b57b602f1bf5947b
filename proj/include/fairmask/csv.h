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

#ifndef FAIRMASK_CSV_H_
#define FAIRMASK_CSV_H_

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace fairmask::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC-4180 reader: quoted fields may contain delimiters, doubled quotes and
// line breaks. A trailing '\r' before '\n' is dropped. Blank lines are
// skipped. Every record must have as many fields as the header.
Table parse(std::istream& in, char delimiter = ',');
Table read_file(const std::string& path, char delimiter = ',');

// Quotes a field only when it contains the delimiter, a quote or a newline.
std::string escape(std::string_view field, char delimiter = ',');
void write_record(std::ostream& out, const std::vector<std::string>& fields,
                  char delimiter = ',');

std::string_view trim(std::string_view s);

}  // namespace fairmask::csv

#endif  // FAIRMASK_CSV_H_
