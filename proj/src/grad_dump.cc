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

#include "epic/grad_dump.h"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace epic {
namespace {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian hosts are not supported");

template <typename T>
T ByteSwap(T value) {
  auto bytes = std::bit_cast<std::array<std::byte, sizeof(T)>>(value);
  std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

template <typename T>
void PutLe(std::vector<std::byte>& out, T value) {
  if constexpr (std::endian::native == std::endian::big) value = ByteSwap(value);
  const auto bytes = std::bit_cast<std::array<std::byte, sizeof(T)>>(value);
  out.insert(out.end(), bytes.begin(), bytes.end());
}

template <typename T>
T GetLe(std::span<const std::byte> in, size_t offset) {
  std::array<std::byte, sizeof(T)> bytes;
  std::memcpy(bytes.data(), in.data() + offset, sizeof(T));
  T value = std::bit_cast<T>(bytes);
  if constexpr (std::endian::native == std::endian::big) value = ByteSwap(value);
  return value;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

bool ParseSize(std::string_view s, size_t& out) {
  s = Trim(s);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string ReadAll(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kInvalidInput, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::vector<std::byte> EncodeGradDump(const ProxyMatrix& proxies, DumpType dtype) {
  std::vector<std::byte> out;
  const size_t width = dtype == DumpType::kFloat32 ? 4 : 8;
  out.reserve(kGradDumpHeaderSize + proxies.values().size() * width);
  for (char c : std::string_view("EPGD")) out.push_back(static_cast<std::byte>(c));
  PutLe<uint32_t>(out, kGradDumpVersion);
  PutLe<uint64_t>(out, proxies.rows());
  PutLe<uint64_t>(out, proxies.cols());
  out.push_back(static_cast<std::byte>(dtype));
  out.insert(out.end(), 7, std::byte{0});
  for (double v : proxies.values()) {
    if (dtype == DumpType::kFloat32) {
      PutLe<float>(out, static_cast<float>(v));
    } else {
      PutLe<double>(out, v);
    }
  }
  return out;
}

GradDump DecodeGradDump(std::span<const std::byte> bytes) {
  const uint64_t size = bytes.size();
  if (size < 4) throw FormatError("truncated header: file ends before magic", size);
  if (std::memcmp(bytes.data(), "EPGD", 4) != 0) {
    throw FormatError("bad magic (expected \"EPGD\")", 0);
  }
  if (size < kGradDumpHeaderSize) {
    throw FormatError("truncated header: " + std::to_string(size) + " of " +
                          std::to_string(kGradDumpHeaderSize) + " bytes",
                      size);
  }
  const auto version = GetLe<uint32_t>(bytes, 4);
  if (version != kGradDumpVersion) {
    throw FormatError("unsupported version " + std::to_string(version), 4);
  }
  const auto rows = GetLe<uint64_t>(bytes, 8);
  const auto cols = GetLe<uint64_t>(bytes, 16);
  const auto dtype = static_cast<uint8_t>(bytes[24]);
  if (dtype > 1) throw FormatError("invalid dtype " + std::to_string(dtype), 24);
  if (rows == 0) throw FormatError("empty dump", 8);
  if (cols == 0) throw FormatError("zero-width dump", 16);

  const uint64_t width = dtype == 0 ? 4 : 8;
  const uint64_t max_values = (std::numeric_limits<uint64_t>::max() - kGradDumpHeaderSize) / width;
  if (rows > max_values / cols) throw FormatError("row/column count overflows", 8);
  const uint64_t expected = rows * cols * width;
  const uint64_t payload = size - kGradDumpHeaderSize;
  if (payload < expected) {
    throw FormatError("truncated payload: need " + std::to_string(expected) +
                          " bytes, have " + std::to_string(payload),
                      size);
  }
  if (payload > expected) {
    throw FormatError("trailing bytes after payload", kGradDumpHeaderSize + expected);
  }

  std::vector<double> values(rows * cols);
  for (uint64_t k = 0; k < values.size(); ++k) {
    const uint64_t offset = kGradDumpHeaderSize + k * width;
    values[k] = dtype == 0 ? static_cast<double>(GetLe<float>(bytes, offset))
                           : GetLe<double>(bytes, offset);
    if (!std::isfinite(values[k])) throw FormatError("non-finite value", offset);
  }
  return {static_cast<DumpType>(dtype), ProxyMatrix(rows, cols, std::move(values))};
}

void WriteGradDump(const std::string& path, const ProxyMatrix& proxies,
                   DumpType dtype) {
  const std::vector<std::byte> bytes = EncodeGradDump(proxies, dtype);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kInvalidInput, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

GradDump ReadGradDump(const std::string& path) {
  const std::string raw = ReadAll(path);
  return DecodeGradDump(std::as_bytes(std::span(raw.data(), raw.size())));
}

Labels ParseLabels(std::string_view text, size_t expected_rows) {
  Labels out;
  out.classes.assign(expected_rows, 0);
  std::vector<uint8_t> seen(expected_rows, 0);
  std::vector<uint8_t> poison(expected_rows, 0);
  bool any_mask = false;
  size_t line_no = 0;
  size_t count = 0;
  while (!text.empty()) {
    const size_t nl = text.find('\n');
    std::string_view line = Trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;

    std::vector<std::string_view> fields;
    for (size_t start = 0;;) {
      const size_t comma = line.find(',', start);
      fields.push_back(Trim(line.substr(start, comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() < 2 || fields.size() > 3) {
      throw FormatError("expected <index>,<class>[,poison]", line_no);
    }
    size_t index = 0;
    size_t cls = 0;
    if (!ParseSize(fields[0], index)) throw FormatError("bad index", line_no);
    if (!ParseSize(fields[1], cls)) throw FormatError("bad class", line_no);
    if (index >= expected_rows) {
      throw FormatError("index " + std::to_string(index) + " out of range for " +
                            std::to_string(expected_rows) + " rows",
                        line_no);
    }
    if (seen[index]) {
      throw FormatError("duplicate index " + std::to_string(index), line_no);
    }
    if (fields.size() == 3) {
      if (fields[2] == "poison") {
        poison[index] = 1;
      } else if (!fields[2].empty() && fields[2] != "clean") {
        throw FormatError("third column must be 'poison' or 'clean'", line_no);
      }
      any_mask = true;
    }
    seen[index] = 1;
    out.classes[index] = cls;
    out.num_classes = std::max(out.num_classes, cls + 1);
    ++count;
  }
  if (count != expected_rows) {
    throw FormatError("labels cover " + std::to_string(count) + " rows, dump has " +
                          std::to_string(expected_rows),
                      line_no);
  }
  if (any_mask) out.poison = std::move(poison);
  return out;
}

Labels ReadLabels(const std::string& path, size_t expected_rows) {
  return ParseLabels(ReadAll(path), expected_rows);
}

std::string FormatLabels(const Labels& labels) {
  std::string out;
  for (size_t i = 0; i < labels.classes.size(); ++i) {
    out += std::to_string(i) + "," + std::to_string(labels.classes[i]);
    if (!labels.poison.empty() && labels.poison[i]) out += ",poison";
    out += "\n";
  }
  return out;
}

}  // namespace epic
