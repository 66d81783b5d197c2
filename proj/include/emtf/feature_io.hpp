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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace emtf::io {

// Binary feature container used for every tensor that crosses a file
// boundary (mel spectrograms, SSL stacks, embedding pairs).
//
// Layout, all integers little-endian:
//   bytes 0..3   magic "EMTF"
//   byte  4      version (currently 1)
//   byte  5      rank (1, 2 or 3)
//   next  4*rank u32 dims
//   then         prod(dims) IEEE-754 binary32 values, row-major
struct FeatureFile {
  uint8_t rank = 0;
  std::vector<uint32_t> dims;
  std::vector<float> data;

  size_t element_count() const;
};

void write_feature_file(const std::string& path, const FeatureFile& f);
FeatureFile read_feature_file(const std::string& path);

// Convenience shapes
FeatureFile make_rank1(const std::vector<float>& v);
FeatureFile make_rank2(uint32_t rows, uint32_t cols, std::vector<float> data);
FeatureFile make_rank3(uint32_t d0, uint32_t d1, uint32_t d2,
                       std::vector<float> data);

// Writes to "<path>.tmp.<pid>" then renames, so partial output is never
// visible under the final name.
void atomic_write_file(const std::string& path, const std::string& bytes);

}  // namespace emtf::io
