// Copyright 2026 The Promptsmith Authors.
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

#include "promptsmith/matrix.hpp"

#include <cmath>

#include "promptsmith/errors.hpp"

namespace promptsmith {

bool Matrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void to_json(nlohmann::json& j, const Matrix& m) {
  j = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    j.push_back(std::vector<double>(row.begin(), row.end()));
  }
}

void from_json(const nlohmann::json& j, Matrix& m) {
  const std::size_t rows = j.size();
  const std::size_t cols = rows ? j.at(0).size() : 0;
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& jr = j.at(r);
    if (jr.size() != cols) throw PreconditionError("ragged matrix in JSON");
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = jr.at(c).get<double>();
  }
  m = std::move(out);
}

}  // namespace promptsmith
