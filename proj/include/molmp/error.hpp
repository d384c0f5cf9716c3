// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace molmp {

/// Bad user input: unparsable molecules, malformed files, inconsistent
/// shapes handed in from outside. The CLI maps these to exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Positioned parse failure. `offset` is a byte offset for SMILES and a
/// 1-based line number for SDF (see `is_line`).
class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t offset, bool is_line = false)
      : InputError(what + (is_line ? " (line " : " (offset ") +
                   std::to_string(offset) + ")"),
        offset_(offset),
        is_line_(is_line) {}

  std::size_t offset() const noexcept { return offset_; }
  bool is_line() const noexcept { return is_line_; }

 private:
  std::size_t offset_;
  bool is_line_;
};

/// Broken internal invariant (a bug, not bad input). Exit code 2.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace molmp
