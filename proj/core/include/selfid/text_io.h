// Copyright 2026 The selfid Authors
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

// Small helpers shared by the text file formats.

#ifndef SELFID_TEXT_IO_H_
#define SELFID_TEXT_IO_H_

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace selfid {

// Parse failure carrying the 1-based line number of the offending input.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

std::vector<std::string> SplitFields(std::string_view line, char delimiter);
std::string_view Trim(std::string_view s);

// Strict: the whole field must be a number ("inf"/"nan" accepted).
double ParseDouble(std::string_view field, int line);
long long ParseInt(std::string_view field, int line);

// shortest text that parses back to the same double
std::string FormatDouble(double value);

}  // namespace selfid

#endif  // SELFID_TEXT_IO_H_
