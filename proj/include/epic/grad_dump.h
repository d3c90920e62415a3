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

#ifndef EPIC_GRAD_DUMP_H_
#define EPIC_GRAD_DUMP_H_

// Binary gradient dump ("EPGD"), all fields little-endian:
//
//   offset  size  field
//   0       4     magic "EPGD"
//   4       4     version (u32, currently 1)
//   8       8     n rows (u64)
//   16      8     d columns (u64)
//   24      1     dtype (0 = float32, 1 = float64)
//   25      7     reserved (zero)
//   32      ...   n * d values, row-major
//
// and the companion labels text file with one "<index>,<class>[,poison]"
// line per row.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "epic/error.h"
#include "epic/proxy.h"

namespace epic {

inline constexpr uint32_t kGradDumpVersion = 1;
inline constexpr size_t kGradDumpHeaderSize = 32;

enum class DumpType : uint8_t { kFloat32 = 0, kFloat64 = 1 };

// Parse failure with the byte offset (dump) or 1-based line (labels) of the
// problem.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, uint64_t position)
      : Error(ErrorCode::kInvalidInput, what), position_(position) {}
  uint64_t position() const { return position_; }

 private:
  uint64_t position_;
};

struct GradDump {
  DumpType dtype = DumpType::kFloat64;
  ProxyMatrix proxies;
};

std::vector<std::byte> EncodeGradDump(const ProxyMatrix& proxies, DumpType dtype);
GradDump DecodeGradDump(std::span<const std::byte> bytes);

void WriteGradDump(const std::string& path, const ProxyMatrix& proxies,
                   DumpType dtype);
GradDump ReadGradDump(const std::string& path);

struct Labels {
  size_t num_classes = 0;
  std::vector<size_t> classes;
  std::vector<uint8_t> poison;  // empty when no line carries a third column
};

// `expected_rows` must match the number of lines; indices must cover
// 0..n-1 exactly once.
Labels ParseLabels(std::string_view text, size_t expected_rows);
Labels ReadLabels(const std::string& path, size_t expected_rows);

std::string FormatLabels(const Labels& labels);

}  // namespace epic

#endif  // EPIC_GRAD_DUMP_H_
