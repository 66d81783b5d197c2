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

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "emtf/error.hpp"
#include "emtf/feature_io.hpp"
#include "test_util.hpp"

using namespace emtf;

TEST_SUITE_BEGIN("feature_io");

TEST_CASE("rank-3 roundtrip is bitwise identity") {
  auto dir = test::scratch_dir("featio");
  auto rng = make_rng(31);
  std::vector<float> data(24 * 50 * 16);
  for (auto& v : data) v = static_cast<float>(normal(rng));
  auto f = io::make_rank3(24, 50, 16, data);
  std::string path = dir + "/stack.ssl";
  io::write_feature_file(path, f);
  auto g = io::read_feature_file(path);
  CHECK(g.rank == 3);
  CHECK(g.dims == std::vector<uint32_t>{24, 50, 16});
  REQUIRE(g.data.size() == data.size());
  for (size_t i = 0; i < data.size(); ++i) {
    CHECK(std::memcmp(&g.data[i], &data[i], 4) == 0);
  }
  // whole-file determinism: write again, compare bytes
  std::string path2 = dir + "/stack2.ssl";
  io::write_feature_file(path2, f);
  std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(a)), {});
  std::string sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);
}

TEST_CASE("bad magic and truncation are format errors") {
  auto dir = test::scratch_dir("featio_bad");
  std::string path = dir + "/bad.bin";
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOPE1234567890";
  }
  CHECK_THROWS_WITH_AS(io::read_feature_file(path),
                       doctest::Contains("bad magic"), Error);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << "EMTF";
    char v = 1, rank = 2;
    out.write(&v, 1);
    out.write(&rank, 1);
    uint32_t dims[2] = {4, 4};
    out.write(reinterpret_cast<char*>(dims), 8);
    float one = 1.0f;  // payload too short
    out.write(reinterpret_cast<char*>(&one), 4);
  }
  CHECK_THROWS_WITH_AS(io::read_feature_file(path),
                       doctest::Contains("payload size"), Error);
}

TEST_CASE("rank validation") {
  io::FeatureFile f;
  f.rank = 4;
  f.dims = {1, 1, 1, 1};
  f.data = {1.0f};
  CHECK_THROWS_AS(io::write_feature_file("/tmp/never.bin", f), Error);
}

TEST_SUITE_END();
