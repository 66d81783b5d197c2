// Copyright (c) 2026 The emtf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "emtf/feature_io.hpp"

#include <unistd.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "emtf/error.hpp"

namespace emtf::io {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'T', 'F'};
constexpr uint8_t kVersion = 1;

void append_u32(std::string* out, uint32_t v) {
  char b[4];
  b[0] = static_cast<char>(v & 0xff);
  b[1] = static_cast<char>((v >> 8) & 0xff);
  b[2] = static_cast<char>((v >> 16) & 0xff);
  b[3] = static_cast<char>((v >> 24) & 0xff);
  out->append(b, 4);
}

uint32_t read_u32(const std::string& s, size_t off) {
  return static_cast<uint32_t>(static_cast<uint8_t>(s[off])) |
         (static_cast<uint32_t>(static_cast<uint8_t>(s[off + 1])) << 8) |
         (static_cast<uint32_t>(static_cast<uint8_t>(s[off + 2])) << 16) |
         (static_cast<uint32_t>(static_cast<uint8_t>(s[off + 3])) << 24);
}

}  // namespace

size_t FeatureFile::element_count() const {
  size_t n = 1;
  for (uint32_t d : dims) n *= d;
  return n;
}

void atomic_write_file(const std::string& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::kIo, "cannot open for write: " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::kIo, "short write: " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    fail(ErrorKind::kIo, "rename failed for " + path + ": " + ec.message());
  }
}

void write_feature_file(const std::string& path, const FeatureFile& f) {
  if (f.rank < 1 || f.rank > 3)
    fail(ErrorKind::kFormat, "feature file rank must be 1..3");
  if (f.dims.size() != f.rank)
    fail(ErrorKind::kFormat, "dims size does not match rank");
  if (f.data.size() != f.element_count())
    fail(ErrorKind::kFormat, "data size does not match dims");
  std::string bytes;
  bytes.reserve(6 + 4 * f.rank + 4 * f.data.size());
  bytes.append(kMagic, 4);
  bytes.push_back(static_cast<char>(kVersion));
  bytes.push_back(static_cast<char>(f.rank));
  for (uint32_t d : f.dims) append_u32(&bytes, d);
  // floats are stored little-endian; this code targets little-endian hosts
  static_assert(sizeof(float) == 4);
  size_t payload_off = bytes.size();
  bytes.resize(bytes.size() + 4 * f.data.size());
  std::memcpy(bytes.data() + payload_off, f.data.data(), 4 * f.data.size());
  atomic_write_file(path, bytes);
}

FeatureFile read_feature_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() < 6 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    fail(ErrorKind::kFormat, "bad magic in " + path);
  uint8_t version = static_cast<uint8_t>(bytes[4]);
  if (version != kVersion)
    fail(ErrorKind::kFormat, "unsupported feature file version " +
                                 std::to_string(version) + " in " + path);
  FeatureFile f;
  f.rank = static_cast<uint8_t>(bytes[5]);
  if (f.rank < 1 || f.rank > 3)
    fail(ErrorKind::kFormat,
         "bad rank " + std::to_string(f.rank) + " in " + path);
  size_t off = 6;
  if (bytes.size() < off + 4 * f.rank)
    fail(ErrorKind::kFormat, "truncated header in " + path);
  for (int i = 0; i < f.rank; ++i) {
    f.dims.push_back(read_u32(bytes, off));
    off += 4;
  }
  size_t n = f.element_count();
  if (bytes.size() != off + 4 * n)
    fail(ErrorKind::kFormat, "payload size mismatch in " + path);
  f.data.resize(n);
  std::memcpy(f.data.data(), bytes.data() + off, 4 * n);
  return f;
}

FeatureFile make_rank1(const std::vector<float>& v) {
  FeatureFile f;
  f.rank = 1;
  f.dims = {static_cast<uint32_t>(v.size())};
  f.data = v;
  return f;
}

FeatureFile make_rank2(uint32_t rows, uint32_t cols, std::vector<float> data) {
  FeatureFile f;
  f.rank = 2;
  f.dims = {rows, cols};
  f.data = std::move(data);
  return f;
}

FeatureFile make_rank3(uint32_t d0, uint32_t d1, uint32_t d2,
                       std::vector<float> data) {
  FeatureFile f;
  f.rank = 3;
  f.dims = {d0, d1, d2};
  f.data = std::move(data);
  return f;
}

}  // namespace emtf::io
