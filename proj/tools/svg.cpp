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
#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "molmp/elements.hpp"
#include "molmp/error.hpp"
#include "molmp/featurizer.hpp"

namespace molmp::cli {

std::array<int, 3> colormap(double t) {
  static constexpr std::array<std::array<double, 3>, 5> kStops = {{
      {68, 1, 84},
      {59, 82, 139},
      {33, 145, 140},
      {94, 201, 98},
      {253, 231, 37},
  }};
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0) * (kStops.size() - 1);
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(t), kStops.size() - 2);
  const double f = t - i;
  std::array<int, 3> rgb{};
  for (int c = 0; c < 3; ++c) rgb[c] = static_cast<int>(std::lround(kStops[i][c] + f * (kStops[i + 1][c] - kStops[i][c])));
  return rgb;
}

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string relevance_svg(const Molecule& m, const std::vector<double>& scores, const std::string& title) {
  if (static_cast<int>(scores.size()) != m.atom_count()) {
    throw InputError("relevance scores do not match the atom count of '" + m.name + "'");
  }
  constexpr double kScale = 45.0;
  constexpr double kMargin = 40.0;
  const auto xy = m.atom_count() > 0 ? layout_2d(m) : std::vector<Vec3>{};
  double minx = 0, maxx = 0, miny = 0, maxy = 0;
  for (std::size_t i = 0; i < xy.size(); ++i) {
    minx = i ? std::min(minx, xy[i][0]) : xy[i][0];
    maxx = i ? std::max(maxx, xy[i][0]) : xy[i][0];
    miny = i ? std::min(miny, xy[i][1]) : xy[i][1];
    maxy = i ? std::max(maxy, xy[i][1]) : xy[i][1];
  }
  const double width = (maxx - minx) * kScale + 2 * kMargin;
  const double height = (maxy - miny) * kScale + 2 * kMargin + 20;
  auto px = [&](int i) { return kMargin + (xy[i][0] - minx) * kScale; };
  auto py = [&](int i) { return kMargin + 20 + (maxy - xy[i][1]) * kScale; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.0f} {:.0f}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{:.0f}\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">{}</text>\n",
      width, height, width, height, kMargin / 2, escape(title));
  for (const auto& b : m.bonds) {
    const double x1 = px(b.a), y1 = py(b.a), x2 = px(b.b), y2 = py(b.b);
    const int lines = b.order == BondOrder::Double ? 2 : b.order == BondOrder::Triple ? 3 : 1;
    const double len = std::hypot(x2 - x1, y2 - y1);
    const double nx = len > 0 ? -(y2 - y1) / len : 0.0;
    const double ny = len > 0 ? (x2 - x1) / len : 0.0;
    for (int k = 0; k < lines; ++k) {
      const double off = (k - (lines - 1) / 2.0) * 4.0;
      svg += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"#333\" "
                         "stroke-width=\"1.6\"{}/>\n",
                         x1 + nx * off, y1 + ny * off, x2 + nx * off, y2 + ny * off,
                         b.order == BondOrder::Aromatic ? " stroke-dasharray=\"5,2\"" : "");
    }
  }
  std::vector<int> order(m.atom_count());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] > scores[b]; });
  const std::size_t top = std::min<std::size_t>(5, order.size());
  for (int i = 0; i < m.atom_count(); ++i) {
    const auto [r, g, bl] = colormap(scores[i]);
    svg += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"11\" fill=\"rgb({},{},{})\" stroke=\"#222\"/>\n", px(i),
                       py(i), r, g, bl);
    const std::string sym(elements::symbol(m.atoms[i].element));
    const bool dark = scores[i] < 0.6;
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"11\" "
                       "text-anchor=\"middle\" fill=\"{}\">{}</text>\n",
                       px(i), py(i) + 4, dark ? "white" : "black", escape(sym));
  }
  for (std::size_t k = 0; k < top; ++k) {
    const int i = order[k];
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"10\" "
                       "fill=\"#b00\">{:.2f}</text>\n",
                       px(i) + 12, py(i) - 10, scores[i]);
  }
  return svg + "</svg>\n";
}

}  // namespace molmp::cli
