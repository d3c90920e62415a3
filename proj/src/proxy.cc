// Copyright 2026 The Authors.
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

#include "epic/proxy.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "epic/error.h"

namespace epic {
namespace {

void CheckLogits(std::span<const double> logits, size_t label) {
  if (logits.size() < 2) {
    Fail(ErrorCode::kInvalidInput, "need at least 2 classes");
  }
  if (label >= logits.size()) {
    Fail(ErrorCode::kInvalidInput,
         "label " + std::to_string(label) + " out of range for " +
             std::to_string(logits.size()) + " classes");
  }
  for (double v : logits) {
    if (!std::isfinite(v)) Fail(ErrorCode::kInvalidInput, "non-finite logit");
  }
}

}  // namespace

ProxyMatrix::ProxyMatrix(size_t rows, size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

ProxyMatrix::ProxyMatrix(size_t rows, size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    Fail(ErrorCode::kInvalidInput, "proxy matrix size mismatch");
  }
  for (size_t k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k])) {
      Fail(ErrorCode::kInvalidInput,
           "non-finite proxy entry at row " + std::to_string(k / cols_));
    }
  }
}

ProxyMatrix ProxyMatrix::FromFloat32(size_t rows, size_t cols,
                                     std::span<const float> values) {
  return ProxyMatrix(rows, cols,
                     std::vector<double>(values.begin(), values.end()));
}

ProxyMatrix ProxyMatrix::SelectRows(std::span<const size_t> indices) const {
  ProxyMatrix out(indices.size(), cols_);
  for (size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= rows_) {
      Fail(ErrorCode::kInvalidInput, "row index out of range");
    }
    std::ranges::copy(row(indices[r]), out.mutable_row(r).begin());
  }
  return out;
}

void ProxyMatrix::NormalizeRows() {
  for (size_t i = 0; i < rows_; ++i) {
    auto r = mutable_row(i);
    double sq = 0.0;
    for (double v : r) sq += v * v;
    if (sq == 0.0) continue;
    const double inv = 1.0 / std::sqrt(sq);
    for (double& v : r) v *= inv;
  }
}

std::string_view ProxyModeName(ProxyMode mode) {
  return mode == ProxyMode::kClassResidual ? "class_residual"
                                           : "last_layer_full";
}

ProxyMode ParseProxyMode(std::string_view name) {
  if (name == "class_residual") return ProxyMode::kClassResidual;
  if (name == "last_layer_full") return ProxyMode::kLastLayerFull;
  Fail(ErrorCode::kInvalidInput, "unknown proxy mode '" + std::string(name) + "'");
}

std::vector<double> Softmax(std::span<const double> logits) {
  const double peak = *std::ranges::max_element(logits);
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (size_t c = 0; c < logits.size(); ++c) {
    p[c] = std::exp(logits[c] - peak);
    total += p[c];
  }
  for (double& v : p) v /= total;
  return p;
}

std::vector<double> ClassResidualProxy(std::span<const double> logits,
                                       size_t label) {
  CheckLogits(logits, label);
  std::vector<double> r = Softmax(logits);
  r[label] -= 1.0;
  return r;
}

std::vector<double> LastLayerFullProxy(std::span<const double> embedding,
                                       std::span<const double> logits,
                                       size_t label) {
  if (embedding.empty()) {
    Fail(ErrorCode::kInvalidInput, "embedding must be nonempty");
  }
  for (double v : embedding) {
    if (!std::isfinite(v)) Fail(ErrorCode::kInvalidInput, "non-finite embedding");
  }
  const std::vector<double> r = ClassResidualProxy(logits, label);
  const size_t num_classes = logits.size();
  const size_t width = embedding.size();
  std::vector<double> out(num_classes * (width + 1));
  for (size_t c = 0; c < num_classes; ++c) {
    for (size_t e = 0; e < width; ++e) out[c * width + e] = r[c] * embedding[e];
  }
  std::ranges::copy(r, out.begin() + num_classes * width);
  return out;
}

double PairwiseDistance(const ProxyMatrix& proxies, size_t i, size_t j) {
  if (i >= proxies.rows() || j >= proxies.rows()) {
    Fail(ErrorCode::kInvalidInput, "distance index out of range");
  }
  return kernels::RowDistance(proxies.row(i), proxies.row(j));
}

namespace kernels {

double RowDistance(std::span<const double> a, std::span<const double> b) {
  double sq = 0.0;
  for (size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    sq += diff * diff;
  }
  return std::sqrt(sq);
}

std::vector<double> DistanceMatrix(const ProxyMatrix& proxies) {
  const auto n = static_cast<std::ptrdiff_t>(proxies.rows());
  std::vector<double> out(proxies.rows() * proxies.rows(), 0.0);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto row_i = proxies.row(static_cast<size_t>(i));
    for (std::ptrdiff_t j = 0; j < n; ++j) {
      if (i == j) continue;
      out[static_cast<size_t>(i * n + j)] =
          RowDistance(row_i, proxies.row(static_cast<size_t>(j)));
    }
  }
  return out;
}

}  // namespace kernels

DistanceOracle::DistanceOracle(ProxyMatrix proxies, CachePolicy policy)
    : proxies_(std::move(proxies)), policy_(policy) {
  if (policy_ == CachePolicy::kFull) cache_ = kernels::DistanceMatrix(proxies_);
}

double DistanceOracle::At(size_t i, size_t j) const {
  if (i >= size() || j >= size()) {
    Fail(ErrorCode::kInvalidInput, "distance index out of range");
  }
  return Distance(i, j);
}

double DistanceOracle::MaxDistance(std::span<const size_t> indices) const {
  double best = 0.0;
  for (size_t a = 0; a < indices.size(); ++a) {
    for (size_t b = a + 1; b < indices.size(); ++b) {
      best = std::max(best, At(indices[a], indices[b]));
    }
  }
  return best;
}

}  // namespace epic
