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

#include "promptsmith/kernels.hpp"

#include <omp.h>

#include <cmath>

namespace promptsmith::kernels {

VocabIndex::VocabIndex(Matrix table) : table_(std::move(table)), inv_norms_(table_.rows()) {
  for (std::size_t v = 0; v < table_.rows(); ++v) {
    const double n = l2_norm(table_.row(v));
    inv_norms_[v] = n > 0.0 ? 1.0 / n : 0.0;
  }
}

namespace {

double inv_norm_of(std::span<const double> q) {
  const double n = l2_norm(q);
  return n > 0.0 ? 1.0 / n : 0.0;
}

// Shared by both kernels so they perform identical floating-point work.
inline double cosine_score(std::span<const double> q, double q_inv, const VocabIndex& vocab,
                           std::size_t v) {
  return dot(q, vocab.table().row(v)) * q_inv * vocab.inv_norms()[v];
}

}  // namespace

std::vector<TokenId> nearest_cosine_serial(const Matrix& queries, const VocabIndex& vocab) {
  std::vector<TokenId> out(queries.rows(), 0);
  for (std::size_t r = 0; r < queries.rows(); ++r) {
    const auto q = queries.row(r);
    const double q_inv = inv_norm_of(q);
    double best = -INFINITY;
    for (std::size_t v = 0; v < vocab.size(); ++v) {
      const double s = cosine_score(q, q_inv, vocab, v);
      if (s > best) {
        best = s;
        out[r] = static_cast<TokenId>(v);
      }
    }
  }
  return out;
}

std::vector<TokenId> nearest_cosine_omp(const Matrix& queries, const VocabIndex& vocab) {
  const auto nq = static_cast<std::ptrdiff_t>(queries.rows());
  const auto nv = static_cast<std::ptrdiff_t>(vocab.size());
  std::vector<double> q_inv(queries.rows());
  for (std::size_t r = 0; r < queries.rows(); ++r) q_inv[r] = inv_norm_of(queries.row(r));

  // Score the full (query x vocab) grid in parallel, then reduce each row in
  // index order so the tie rule matches the serial kernel exactly.
  std::vector<double> scores(queries.rows() * vocab.size());
#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t r = 0; r < nq; ++r) {
    for (std::ptrdiff_t v = 0; v < nv; ++v) {
      scores[static_cast<std::size_t>(r * nv + v)] =
          cosine_score(queries.row(static_cast<std::size_t>(r)),
                       q_inv[static_cast<std::size_t>(r)], vocab, static_cast<std::size_t>(v));
    }
  }

  std::vector<TokenId> out(queries.rows(), 0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < nq; ++r) {
    const double* row = scores.data() + r * nv;
    double best = -INFINITY;
    TokenId arg = 0;
    for (std::ptrdiff_t v = 0; v < nv; ++v) {
      if (row[v] > best) {
        best = row[v];
        arg = static_cast<TokenId>(v);
      }
    }
    out[static_cast<std::size_t>(r)] = arg;
  }
  return out;
}

std::vector<double> cosine_rows_serial(const Matrix& rows, std::span<const double> ref) {
  const double ref_inv = inv_norm_of(ref);
  std::vector<double> out(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r)
    out[r] = dot(rows.row(r), ref) * inv_norm_of(rows.row(r)) * ref_inv;
  return out;
}

std::vector<double> cosine_rows_omp(const Matrix& rows, std::span<const double> ref) {
  const double ref_inv = inv_norm_of(ref);
  std::vector<double> out(rows.rows());
  const auto n = static_cast<std::ptrdiff_t>(rows.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    const auto row = rows.row(static_cast<std::size_t>(r));
    out[static_cast<std::size_t>(r)] = dot(row, ref) * inv_norm_of(row) * ref_inv;
  }
  return out;
}

void parallel_for(std::size_t n, Exec exec, const std::function<void(std::size_t)>& fn) {
  if (exec == Exec::kSerial) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace promptsmith::kernels
