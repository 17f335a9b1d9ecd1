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

#include "selfid/text_io.h"

#include <cerrno>
#include <cstdlib>
#include <string>

#include <fmt/format.h>

namespace selfid {

ParseError::ParseError(int line, const std::string& what)
    : std::runtime_error(fmt::format("line {}: {}", line, what)), line_(line) {}

std::vector<std::string> SplitFields(std::string_view line, char delimiter) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t end = line.find(delimiter, start);
    if (end == std::string_view::npos) {
      fields.emplace_back(Trim(line.substr(start)));
      break;
    }
    fields.emplace_back(Trim(line.substr(start, end - start)));
    start = end + 1;
  }
  return fields;
}

std::string_view Trim(std::string_view s) {
  const char* ws = " \t\r\n";
  std::size_t begin = s.find_first_not_of(ws);
  if (begin == std::string_view::npos) return {};
  std::size_t end = s.find_last_not_of(ws);
  return s.substr(begin, end - begin + 1);
}

double ParseDouble(std::string_view field, int line) {
  std::string text(Trim(field));
  if (text.empty()) throw ParseError(line, "empty numeric field");
  errno = 0;
  char* end = nullptr;
  double value = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || errno == ERANGE) {
    throw ParseError(line, fmt::format("not a number: '{}'", text));
  }
  return value;
}

long long ParseInt(std::string_view field, int line) {
  std::string text(Trim(field));
  if (text.empty()) throw ParseError(line, "empty integer field");
  errno = 0;
  char* end = nullptr;
  long long value = std::strtoll(text.c_str(), &end, 10);
  if (end != text.c_str() + text.size() || errno == ERANGE) {
    throw ParseError(line, fmt::format("not an integer: '{}'", text));
  }
  return value;
}

std::string FormatDouble(double value) { return fmt::format("{}", value); }

}  // namespace selfid
