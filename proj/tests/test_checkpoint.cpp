// Copyright 2026 The BNO Authors.
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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bno/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

using namespace bno;
using namespace bno::model;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("bno_test_ckpt_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

template <class F>
ErrorKind kind_of(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::InvalidArgument;
}

bool same_bits(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

BnoModel trained_looking_model(Index layers) {
  ArchConfig a;
  a.time_taps = 3;
  a.space_taps = 5;
  a.filters = {4, 6, 4};
  a.dmd_rank = 7;
  a.dmd_horizon = 2;
  a.layers = layers;
  BnoModel m = BnoModel::create(a, 77);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1e-3);
  for (auto s : parameter_spans(m))
    for (double& v : s) v += g(rng);
  m.norm = {0.1234567890123, 1.0 / 3.0};
  m.window = {20, 2, 80, 2};
  m.meta.train_nx = 16;
  m.meta.train_ny = 8;
  return m;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(is)), {});
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream os(p, std::ios::binary);
  os << bytes;
}

}  // namespace

TEST_CASE("BNO checkpoint round trip is bit-exact") {
  TempDir dir;
  for (Index layers : {1, 2}) {
    BnoModel m = trained_looking_model(layers);
    save_checkpoint(m, dir.path / "m.bno");
    BnoModel back = load_checkpoint(dir.path / "m.bno");
    auto a = parameter_spans(m);
    auto b = parameter_spans(back);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(same_bits(a[i], b[i]));
    CHECK(back.norm == m.norm);
    CHECK(back.window == m.window);
    CHECK(back.meta.seed == m.meta.seed);
    CHECK(back.meta.train_nx == 16);
    CHECK(back.meta.train_ny == 8);
    CHECK(back.meta.exact_gradients == (layers == 1));
    for (size_t i = 0; i < m.layers.size(); ++i) {
      CHECK(back.layers[i].koopman.rank == 7);
      CHECK(back.layers[i].koopman.horizon == 2);
      CHECK(back.layers[i].cnn.same_shapes(m.layers[i].cnn));
      CHECK(back.layers[i].cnn.branch[0].activation == nn::Activation::Relu);
      CHECK(back.layers[i].cnn.head.activation == nn::Activation::Linear);
    }

    save_checkpoint(back, dir.path / "again.bno");
    CHECK(read_bytes(dir.path / "m.bno") == read_bytes(dir.path / "again.bno"));
  }
}

TEST_CASE("CNN checkpoint round trip and kind dispatch") {
  TempDir dir;
  CnnBaseline c = transfer_weights(trained_looking_model(1));
  save_checkpoint(c, dir.path / "c.bno");
  const CnnBaseline back = load_cnn_checkpoint(dir.path / "c.bno");
  CHECK(same_bits(back.blocks[0].head.weights, c.blocks[0].head.weights));
  CHECK(std::holds_alternative<CnnBaseline>(load_any_checkpoint(dir.path / "c.bno")));
  CHECK(kind_of([&] { load_checkpoint(dir.path / "c.bno"); }) == ErrorKind::InvalidArgument);

  save_checkpoint(trained_looking_model(1), dir.path / "b.bno");
  CHECK(std::holds_alternative<BnoModel>(load_any_checkpoint(dir.path / "b.bno")));
  CHECK(kind_of([&] { load_cnn_checkpoint(dir.path / "b.bno"); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("checkpoint header layout") {
  TempDir dir;
  save_checkpoint(trained_looking_model(1), dir.path / "m.bno");
  const std::string bytes = read_bytes(dir.path / "m.bno");
  REQUIRE(bytes.size() > 10);
  CHECK(bytes.substr(0, 4) == "BNO1");
  CHECK(static_cast<unsigned char>(bytes[4]) == kCheckpointVersion);
  CHECK(static_cast<unsigned char>(bytes[5]) == 0);
  std::uint32_t len = 0;
  std::memcpy(&len, bytes.data() + 6, 4);
  REQUIRE(10 + len < bytes.size());
  CHECK(bytes[10] == '{');
  CHECK(bytes[10 + len - 1] == '}');
}

TEST_CASE("checkpoint error paths") {
  TempDir dir;
  save_checkpoint(trained_looking_model(1), dir.path / "m.bno");
  const std::string good = read_bytes(dir.path / "m.bno");

  CHECK(kind_of([&] { load_checkpoint(dir.path / "missing.bno"); }) == ErrorKind::IoError);

  std::string bad = good;
  bad[0] = 'X';
  write_bytes(dir.path / "magic.bno", bad);
  CHECK(kind_of([&] { load_checkpoint(dir.path / "magic.bno"); }) == ErrorKind::BadMagic);

  bad = good;
  bad[4] = 7;
  write_bytes(dir.path / "ver.bno", bad);
  CHECK(kind_of([&] { load_checkpoint(dir.path / "ver.bno"); }) == ErrorKind::VersionMismatch);

  write_bytes(dir.path / "trunc.bno", good.substr(0, good.size() - 9));
  CHECK(kind_of([&] { load_checkpoint(dir.path / "trunc.bno"); }) == ErrorKind::IoError);

  write_bytes(dir.path / "tiny.bno", "BN");
  const ErrorKind tiny = kind_of([&] { load_checkpoint(dir.path / "tiny.bno"); });
  CHECK((tiny == ErrorKind::BadMagic || tiny == ErrorKind::IoError));

  CHECK(kind_of([&] { save_checkpoint(trained_looking_model(1), dir.path / "no" / "such" / "dir.bno"); }) ==
        ErrorKind::IoError);
}

TEST_CASE("a checkpoint trained at 16x8 runs at 64x32") {
  TempDir dir;
  save_checkpoint(trained_looking_model(1), dir.path / "m.bno");
  const BnoModel m = load_checkpoint(dir.path / "m.bno");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor3<double> x(64 * 32, 20, 1);
  for (double& v : x.values()) v = u(rng);
  const Tensor3<double> y = bno_forward(m, x);
  CHECK(y.same_shape(x));
  CHECK(y.all_finite());
}
