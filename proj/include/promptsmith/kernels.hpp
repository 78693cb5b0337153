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

#pragma once

// Data-parallel inner loops. Every OpenMP kernel has a serial twin that is
// kept as the reference; tests assert they agree bit for bit and the
// benchmark target compares their throughput.

#include <cstddef>
#include <exception>
#include <functional>
#include <span>
#include <vector>

#include "promptsmith/core.hpp"
#include "promptsmith/matrix.hpp"

namespace promptsmith::kernels {

enum class Exec { kSerial, kParallel };

// Embedding table with cached reciprocal row norms. Zero rows get a
// reciprocal of 0 so their cosine with anything is 0.
class VocabIndex {
 public:
  VocabIndex() = default;
  explicit VocabIndex(Matrix table);

  const Matrix& table() const { return table_; }
  std::span<const double> inv_norms() const { return inv_norms_; }
  std::size_t size() const { return table_.rows(); }
  std::size_t dim() const { return table_.cols(); }

 private:
  Matrix table_;
  std::vector<double> inv_norms_;
};

// For each query row, the vocabulary row with the highest cosine similarity.
// Ties resolve to the lowest vocabulary index. A zero query row has cosine 0
// with every entry and so maps to index 0.
std::vector<TokenId> nearest_cosine_serial(const Matrix& queries, const VocabIndex& vocab);
std::vector<TokenId> nearest_cosine_omp(const Matrix& queries, const VocabIndex& vocab);

inline std::vector<TokenId> nearest_cosine(const Matrix& queries, const VocabIndex& vocab,
                                           Exec exec = Exec::kParallel) {
  return exec == Exec::kParallel ? nearest_cosine_omp(queries, vocab)
                                 : nearest_cosine_serial(queries, vocab);
}

// Cosine similarity of every row against one reference vector.
std::vector<double> cosine_rows_serial(const Matrix& rows, std::span<const double> ref);
std::vector<double> cosine_rows_omp(const Matrix& rows, std::span<const double> ref);

// Runs fn(i) for i in [0, n). Exceptions thrown inside the parallel region
// are captured and the first one (by index) is rethrown after the loop.
void parallel_for(std::size_t n, Exec exec, const std::function<void(std::size_t)>& fn);

}  // namespace promptsmith::kernels
