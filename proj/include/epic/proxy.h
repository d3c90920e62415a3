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

#ifndef EPIC_PROXY_H_
#define EPIC_PROXY_H_

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace epic {

// Row-major n x d matrix of per-example gradient surrogates. All selection
// math runs in double; float input is widened on construction.
class ProxyMatrix {
 public:
  ProxyMatrix() = default;
  ProxyMatrix(size_t rows, size_t cols);
  // Throws InvalidInput on a size mismatch or a non-finite entry.
  ProxyMatrix(size_t rows, size_t cols, std::vector<double> values);

  static ProxyMatrix FromFloat32(size_t rows, size_t cols,
                                 std::span<const float> values);

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  std::span<const double> row(size_t i) const {
    return {values_.data() + i * cols_, cols_};
  }
  std::span<double> mutable_row(size_t i) {
    return {values_.data() + i * cols_, cols_};
  }
  std::span<const double> values() const { return values_; }

  ProxyMatrix SelectRows(std::span<const size_t> indices) const;

  // Scales every nonzero row to unit L2 norm. Zero rows stay zero.
  void NormalizeRows();

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> values_;
};

enum class ProxyMode { kClassResidual, kLastLayerFull };

std::string_view ProxyModeName(ProxyMode mode);
ProxyMode ParseProxyMode(std::string_view name);

// Numerically stable softmax.
std::vector<double> Softmax(std::span<const double> logits);

// Gradient of softmax cross-entropy w.r.t. the logits: softmax(logits) - e_y.
std::vector<double> ClassResidualProxy(std::span<const double> logits,
                                       size_t label);

// Exact gradient of cross-entropy w.r.t. last-layer weights (C x E,
// row-major) followed by the bias block (C), i.e. (p - e_y) outer [emb; 1].
std::vector<double> LastLayerFullProxy(std::span<const double> embedding,
                                       std::span<const double> logits,
                                       size_t label);

// Euclidean distance between rows i and j.
double PairwiseDistance(const ProxyMatrix& proxies, size_t i, size_t j);

namespace kernels {

double RowDistance(std::span<const double> a, std::span<const double> b);

// Full symmetric n x n distance matrix, rows computed in parallel.
std::vector<double> DistanceMatrix(const ProxyMatrix& proxies);

}  // namespace kernels

enum class CachePolicy { kFull, kOnDemand };

// L2 distances over the rows of a proxy matrix. Read-only after
// construction; the cached and on-demand paths produce identical bits.
class DistanceOracle {
 public:
  explicit DistanceOracle(ProxyMatrix proxies,
                          CachePolicy policy = CachePolicy::kFull);

  size_t size() const { return proxies_.rows(); }
  CachePolicy policy() const { return policy_; }
  const ProxyMatrix& proxies() const { return proxies_; }

  double Distance(size_t i, size_t j) const {
    if (policy_ == CachePolicy::kFull) return cache_[i * size() + j];
    return kernels::RowDistance(proxies_.row(i), proxies_.row(j));
  }

  // Bounds-checked variant of Distance.
  double At(size_t i, size_t j) const;

  // Largest distance between any two of the given rows (0 for fewer than 2).
  double MaxDistance(std::span<const size_t> indices) const;

 private:
  ProxyMatrix proxies_;
  CachePolicy policy_;
  std::vector<double> cache_;
};

}  // namespace epic

#endif  // EPIC_PROXY_H_
