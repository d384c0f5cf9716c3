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

#include <array>
#include <string>
#include <vector>

#include "molmp/chemio.hpp"

namespace molmp::cli {

/// RGB of a fixed perceptual colormap (viridis control points, linearly
/// interpolated) at t in [0, 1].
std::array<int, 3> colormap(double t);

/// Planar depiction with atoms colored by `scores` and the top five scores
/// printed next to their atoms.
std::string relevance_svg(const Molecule& m, const std::vector<double>& scores, const std::string& title);

}  // namespace molmp::cli
