/*
   Copyright 2026 The treestm Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/
#ifndef TREESTM_ERRORS_HPP
#define TREESTM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace treestm {

// Malformed input text; `line` is 1-based within the offending stream.
struct ParseError : std::runtime_error {
  int line;
  ParseError(int line_, const std::string& what_)
      : std::runtime_error("line " + std::to_string(line_) + ": " + what_),
        line(line_) {}
};

// A structural invariant of a parsed document failed; `doc` is 0-based.
struct TreeValidationError : std::runtime_error {
  int doc;
  TreeValidationError(int doc_, const std::string& what_)
      : std::runtime_error("document " + std::to_string(doc_) + ": " + what_),
        doc(doc_) {}
};

// Model file could not be loaded (bad version, dimensions, truncation, ...).
struct LoadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A quantity that must stay finite did not; `term` names it.
struct NumericalError : std::runtime_error {
  std::string term;
  NumericalError(const std::string& term_, const std::string& what_)
      : std::runtime_error(term_ + ": " + what_), term(term_) {}
};

}  // namespace treestm

#endif
