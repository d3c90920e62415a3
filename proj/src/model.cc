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

#include "epic/model.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "epic/error.h"
#include "epic/rng.h"

namespace epic {
namespace {

constexpr size_t kReduceChunk = 32;

double LogSumExp(std::span<const double> logits) {
  const double peak = *std::ranges::max_element(logits);
  double total = 0.0;
  for (double z : logits) total += std::exp(z - peak);
  return peak + std::log(total);
}

// Writes the last-layer gradient (r outer [emb;1]) into grad at offset.
void LastLayerGrad(std::span<const double> residual,
                   std::span<const double> embedding, std::span<double> out) {
  const size_t width = embedding.size();
  for (size_t c = 0; c < residual.size(); ++c) {
    for (size_t e = 0; e < width; ++e) out[c * width + e] = residual[c] * embedding[e];
    out[residual.size() * width + c] = residual[c];
  }
}

void CheckExample(const ToyModel& model, std::span<const double> x, size_t label) {
  if (x.size() != model.input_dim) {
    Fail(ErrorCode::kInvalidInput, "input width mismatch");
  }
  if (label >= model.num_classes) {
    Fail(ErrorCode::kInvalidInput, "label " + std::to_string(label) + " out of range");
  }
}

}  // namespace

std::string_view ArchitectureName(Architecture arch) {
  return arch == Architecture::kLinear ? "linear" : "one_hidden";
}

Architecture ParseArchitecture(std::string_view name) {
  if (name == "linear") return Architecture::kLinear;
  if (name == "one_hidden") return Architecture::kOneHidden;
  Fail(ErrorCode::kInvalidInput, "unknown architecture '" + std::string(name) + "'");
}

ToyModel ToyModel::Linear(size_t input_dim, size_t num_classes) {
  ToyModel m;
  m.arch = Architecture::kLinear;
  m.input_dim = input_dim;
  m.num_classes = num_classes;
  m.params.assign(m.ParameterCount(), 0.0);
  return m;
}

ToyModel ToyModel::OneHidden(size_t input_dim, size_t num_classes, size_t hidden) {
  if (hidden == 0) Fail(ErrorCode::kInvalidInput, "hidden width must be > 0");
  ToyModel m;
  m.arch = Architecture::kOneHidden;
  m.input_dim = input_dim;
  m.num_classes = num_classes;
  m.hidden = hidden;
  m.params.assign(m.ParameterCount(), 0.0);
  return m;
}

size_t ToyModel::EmbeddingWidth() const {
  return arch == Architecture::kLinear ? input_dim : hidden;
}

size_t ToyModel::LastLayerOffset() const {
  return arch == Architecture::kLinear ? 0 : hidden * input_dim + hidden;
}

size_t ToyModel::ParameterCount() const {
  return LastLayerOffset() + num_classes * (EmbeddingWidth() + 1);
}

void ToyModel::InitUniform(uint64_t seed, double scale) {
  Rng rng(seed);
  params.resize(ParameterCount());
  for (double& p : params) p = rng.Uniform(-scale, scale);
}

ForwardResult Forward(const ToyModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim) {
    Fail(ErrorCode::kInvalidInput, "input width mismatch");
  }
  ForwardResult out;
  const double* p = model.params.data();
  if (model.arch == Architecture::kLinear) {
    out.embedding.assign(x.begin(), x.end());
  } else {
    const double* w1 = p;
    const double* b1 = p + model.hidden * model.input_dim;
    out.embedding.resize(model.hidden);
    for (size_t h = 0; h < model.hidden; ++h) {
      double a = b1[h];
      for (size_t d = 0; d < model.input_dim; ++d) a += w1[h * model.input_dim + d] * x[d];
      out.embedding[h] = std::tanh(a);
    }
  }
  const size_t width = model.EmbeddingWidth();
  const double* w = p + model.LastLayerOffset();
  const double* b = w + model.num_classes * width;
  out.logits.resize(model.num_classes);
  for (size_t c = 0; c < model.num_classes; ++c) {
    double z = b[c];
    for (size_t e = 0; e < width; ++e) z += w[c * width + e] * out.embedding[e];
    out.logits[c] = z;
  }
  return out;
}

size_t Predict(const ToyModel& model, std::span<const double> x) {
  const ForwardResult f = Forward(model, x);
  return static_cast<size_t>(std::ranges::max_element(f.logits) - f.logits.begin());
}

LossGrad ExampleLossAndGrad(const ToyModel& model, std::span<const double> x,
                            size_t label) {
  CheckExample(model, x, label);
  const ForwardResult f = Forward(model, x);
  LossGrad out;
  out.loss = LogSumExp(f.logits) - f.logits[label];
  out.grad.assign(model.ParameterCount(), 0.0);
  std::vector<double> residual = Softmax(f.logits);
  residual[label] -= 1.0;
  const size_t offset = model.LastLayerOffset();
  LastLayerGrad(residual, f.embedding,
                std::span<double>(out.grad).subspan(offset));
  if (model.arch == Architecture::kOneHidden) {
    const size_t width = model.hidden;
    const double* w2 = model.params.data() + offset;
    double* dw1 = out.grad.data();
    double* db1 = dw1 + width * model.input_dim;
    for (size_t h = 0; h < width; ++h) {
      double back = 0.0;
      for (size_t c = 0; c < model.num_classes; ++c) back += w2[c * width + h] * residual[c];
      const double da = back * (1.0 - f.embedding[h] * f.embedding[h]);
      for (size_t d = 0; d < model.input_dim; ++d) dw1[h * model.input_dim + d] = da * x[d];
      db1[h] = da;
    }
  }
  return out;
}

LossGrad LossAndGrad(const ToyModel& model, const Dataset& data,
                     std::span<const size_t> batch) {
  if (batch.empty()) Fail(ErrorCode::kInvalidInput, "empty batch");
  const size_t count = model.ParameterCount();
  const size_t chunks = (batch.size() + kReduceChunk - 1) / kReduceChunk;
  std::vector<double> chunk_loss(chunks, 0.0);
  std::vector<double> chunk_grad(chunks * count, 0.0);
  // Exceptions must not escape an OpenMP region; validate up front.
  for (size_t i : batch) {
    if (i >= data.size()) Fail(ErrorCode::kInvalidInput, "batch index out of range");
    CheckExample(model, data.x(i), data.labels[i]);
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const size_t begin = static_cast<size_t>(c) * kReduceChunk;
    const size_t end = std::min(batch.size(), begin + kReduceChunk);
    double* g = chunk_grad.data() + static_cast<size_t>(c) * count;
    for (size_t k = begin; k < end; ++k) {
      const size_t i = batch[k];
      const LossGrad ex = ExampleLossAndGrad(model, data.x(i), data.labels[i]);
      chunk_loss[static_cast<size_t>(c)] += ex.loss;
      for (size_t p = 0; p < count; ++p) g[p] += ex.grad[p];
    }
  }
  LossGrad out;
  out.grad.assign(count, 0.0);
  for (size_t c = 0; c < chunks; ++c) {
    out.loss += chunk_loss[c];
    for (size_t p = 0; p < count; ++p) out.grad[p] += chunk_grad[c * count + p];
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.loss *= inv;
  for (double& v : out.grad) v *= inv;
  return out;
}

std::vector<double> GdStep(std::span<const double> params,
                           std::span<const double> grad, double lr) {
  if (!(lr > 0.0)) Fail(ErrorCode::kInvalidInput, "learning rate must be > 0");
  if (params.size() != grad.size()) {
    Fail(ErrorCode::kInvalidInput, "gradient length mismatch");
  }
  std::vector<double> out(params.size());
  for (size_t p = 0; p < params.size(); ++p) {
    if (!std::isfinite(grad[p])) {
      Fail(ErrorCode::kNumericalDivergence, "non-finite gradient");
    }
    out[p] = params[p] - lr * grad[p];
    if (!std::isfinite(out[p])) {
      Fail(ErrorCode::kNumericalDivergence, "parameter overflow");
    }
  }
  return out;
}

ToyModel GdStep(const ToyModel& model, const Dataset& data,
                std::span<const size_t> batch, double lr) {
  const LossGrad lg = LossAndGrad(model, data, batch);
  ToyModel next = model;
  next.params = GdStep(model.params, lg.grad, lr);
  return next;
}

double LrSchedule::At(size_t epoch) const {
  double lr = base;
  for (size_t e : decay_epochs) {
    if (epoch >= e) lr /= decay_factor;
  }
  return lr;
}

void LrSchedule::Validate() const {
  if (!(base > 0.0) || !std::isfinite(base)) {
    Fail(ErrorCode::kInvalidInput, "base learning rate must be positive");
  }
  if (!(decay_factor > 0.0) || !std::isfinite(decay_factor)) {
    Fail(ErrorCode::kInvalidInput, "decay factor must be positive");
  }
  if (!std::ranges::is_sorted(decay_epochs)) {
    Fail(ErrorCode::kInvalidInput, "decay epochs must be ascending");
  }
}

Evaluation EvaluateModel(const ToyModel& model, const Dataset& data,
                         std::span<const size_t> indices) {
  Evaluation out;
  if (indices.empty()) return out;
  size_t correct = 0;
  for (size_t i : indices) {
    const ForwardResult f = Forward(model, data.x(i));
    out.loss += LogSumExp(f.logits) - f.logits[data.labels[i]];
    const auto pred =
        static_cast<size_t>(std::ranges::max_element(f.logits) - f.logits.begin());
    if (pred == data.labels[i]) ++correct;
  }
  out.loss /= static_cast<double>(indices.size());
  out.accuracy = static_cast<double>(correct) / static_cast<double>(indices.size());
  return out;
}

Evaluation EvaluateModel(const ToyModel& model, const Dataset& data) {
  std::vector<size_t> all(data.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = i;
  return EvaluateModel(model, data, all);
}

ProxyMatrix ExtractProxies(const ToyModel& model, const Dataset& data,
                           std::span<const size_t> indices, ProxyMode mode,
                           bool unit_norm) {
  const size_t cols = mode == ProxyMode::kClassResidual
                          ? model.num_classes
                          : model.num_classes * (model.EmbeddingWidth() + 1);
  std::vector<double> values;
  values.reserve(indices.size() * cols);
  for (size_t i : indices) {
    if (i >= data.size()) Fail(ErrorCode::kInvalidInput, "proxy index out of range");
    const ForwardResult f = Forward(model, data.x(i));
    const std::vector<double> row =
        mode == ProxyMode::kClassResidual
            ? ClassResidualProxy(f.logits, data.labels[i])
            : LastLayerFullProxy(f.embedding, f.logits, data.labels[i]);
    values.insert(values.end(), row.begin(), row.end());
  }
  ProxyMatrix out(indices.size(), cols, std::move(values));
  if (unit_norm) out.NormalizeRows();
  return out;
}

}  // namespace epic
