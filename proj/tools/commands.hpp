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

#include <string>
#include <vector>

namespace molmp::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Run the `molmp` command line. Returns the process exit code: 0 on
/// success, 1 on an input error, 2 on an internal invariant violation.
int run(int argc, const char* const* argv);
/// Same, with the arguments after the program name.
int run(const std::vector<std::string>& args);

}  // namespace molmp::cli
