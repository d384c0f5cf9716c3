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

#include <cassert>
#include <initializer_list>
#include <vector>

namespace molmp {

/// Dense row-major matrix of doubles.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> values) {
    Matrix m;
    m.rows = static_cast<int>(values.size());
    m.cols = m.rows == 0 ? 0 : static_cast<int>(values.begin()->size());
    for (const auto& row : values) {
      assert(static_cast<int>(row.size()) == m.cols);
      m.data.insert(m.data.end(), row.begin(), row.end());
    }
    return m;
  }

  double& operator()(int r, int c) { return data[index(r, c)]; }
  double operator()(int r, int c) const { return data[index(r, c)]; }
  double* row(int r) { return data.data() + index(r, 0); }
  const double* row(int r) const { return data.data() + index(r, 0); }
  std::size_t size() const noexcept { return data.size(); }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c);
  }
};

}  // namespace molmp
