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

#include "bno/checkpoint.hpp"

#include "binio.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <string>

namespace bno::model {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'B', 'N', 'O', '1'};
constexpr std::uint8_t kDtypeF32 = 1;
constexpr std::uint8_t kDtypeF64 = 2;

struct Blob {
  std::vector<std::uint64_t> dims;
  std::vector<double> values;
};

json layer_json(const nn::ConvLayer& l) {
  return {{"time_taps", l.time_taps}, {"space_taps", l.space_taps}, {"in", l.in_chan},
          {"out", l.out_chan},        {"activation", nn::to_string(l.activation)}};
}

nn::ConvLayer layer_from_json(const json& j) {
  return nn::ConvLayer::zeros(j.at("time_taps").get<Index>(), j.at("space_taps").get<Index>(),
                              j.at("in").get<Index>(), j.at("out").get<Index>(),
                              nn::activation_from_string(j.at("activation").get<std::string>()));
}

json header_json(const char* kind, std::span<const Block> blocks, const data::NormStats& norm,
                 const data::WindowSpec& w, const ModelMeta& meta) {
  json arch = json::array();
  for (const Block& b : blocks) {
    json jb;
    jb["branch"] = json::array();
    for (const auto& l : b.stack->branch) jb["branch"].push_back(layer_json(l));
    jb["head"] = layer_json(b.stack->head);
    if (b.koopman) {
      jb["koopman"] = {{"rank", b.koopman->rank}, {"horizon", b.koopman->horizon}};
    } else {
      jb["koopman"] = nullptr;
    }
    arch.push_back(jb);
  }
  return {{"kind", kind},
          {"architecture", arch},
          {"window", {{"n", w.n}, {"k", w.k}, {"m", w.m}, {"s", w.s}}},
          {"norm", {{"mean", norm.mean}, {"std", norm.std}}},
          {"seed", meta.seed},
          {"train_resolution", {meta.train_nx, meta.train_ny}},
          {"exact_gradients", meta.exact_gradients}};
}

void put_blob(std::ostream& os, const std::string& name, const std::vector<std::uint64_t>& dims,
              std::span<const double> values) {
  binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  binio::put<std::uint8_t>(os, kDtypeF64);
  binio::put<std::uint8_t>(os, static_cast<std::uint8_t>(dims.size()));
  for (auto d : dims) binio::put<std::uint64_t>(os, d);
  for (double v : values) binio::put<double>(os, v);
}

void write_checkpoint(const char* kind, std::span<const Block> blocks,
                      const data::NormStats& norm, const data::WindowSpec& w,
                      const ModelMeta& meta, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  const std::string header = header_json(kind, blocks, norm, w, meta).dump();
  os.write(kMagic, 4);
  binio::put<std::uint16_t>(os, kCheckpointVersion);
  binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(header.size()));
  os.write(header.data(), static_cast<std::streamsize>(header.size()));

  const auto names = parameter_names(blocks);
  size_t n = 0;
  auto put_layer = [&](const nn::ConvLayer& l) {
    put_blob(os, names[n++],
             {static_cast<std::uint64_t>(l.time_taps), static_cast<std::uint64_t>(l.space_taps),
              static_cast<std::uint64_t>(l.in_chan), static_cast<std::uint64_t>(l.out_chan)},
             l.weights);
    put_blob(os, names[n++], {static_cast<std::uint64_t>(l.out_chan)}, l.bias);
  };
  for (const Block& b : blocks) {
    for (const auto& l : b.stack->branch) put_layer(l);
    put_layer(b.stack->head);
  }
  if (!os) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

std::map<std::string, Blob> read_blobs(std::istream& is) {
  std::map<std::string, Blob> blobs;
  while (is.peek() != std::char_traits<char>::eof()) {
    const auto name_len = binio::get<std::uint32_t>(is, "tensor name length");
    if (name_len > (1u << 16)) throw Error(ErrorKind::IoError, "implausible tensor name length");
    std::string name(name_len, '\0');
    binio::get_bytes(is, name.data(), name_len, "tensor name");
    const auto dtype = binio::get<std::uint8_t>(is, "dtype");
    if (dtype != kDtypeF32 && dtype != kDtypeF64) {
      throw Error(ErrorKind::IoError, "unknown dtype tag in tensor " + name);
    }
    const auto rank = binio::get<std::uint8_t>(is, "rank");
    Blob b;
    std::uint64_t count = 1;
    for (std::uint8_t i = 0; i < rank; ++i) {
      b.dims.push_back(binio::get<std::uint64_t>(is, "dims"));
      count *= b.dims.back();
    }
    if (count > (1ull << 32)) throw Error(ErrorKind::IoError, "implausible tensor size " + name);
    b.values.resize(count);
    for (auto& v : b.values) {
      v = dtype == kDtypeF32 ? static_cast<double>(binio::get<float>(is, "payload"))
                             : binio::get<double>(is, "payload");
    }
    blobs[name] = std::move(b);
  }
  return blobs;
}

void fill_layer(nn::ConvLayer& l, const std::string& wname, const std::string& bname,
                std::map<std::string, Blob>& blobs) {
  auto take = [&](const std::string& name, size_t expected) {
    auto it = blobs.find(name);
    if (it == blobs.end()) throw Error(ErrorKind::IoError, "missing tensor " + name);
    if (it->second.values.size() != expected) {
      throw Error(ErrorKind::ShapeMismatch, "tensor " + name + " has wrong size");
    }
    return std::move(it->second.values);
  };
  l.weights = take(wname, l.weights.size());
  l.bias = take(bname, l.bias.size());
}

}  // namespace

void save_checkpoint(const BnoModel& model, const std::filesystem::path& path) {
  model.validate();
  write_checkpoint("bno", blocks_of(model), model.norm, model.window, model.meta, path);
}

void save_checkpoint(const CnnBaseline& model, const std::filesystem::path& path) {
  model.validate();
  write_checkpoint("cnn", blocks_of(model), model.norm, model.window, model.meta, path);
}

AnyModel load_any_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  char magic[4] = {};
  if (!is.read(magic, 4) || !std::equal(magic, magic + 4, kMagic)) {
    throw Error(ErrorKind::BadMagic, path.string() + " is not a BNO1 checkpoint");
  }
  const auto version = binio::get<std::uint16_t>(is, "version");
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::VersionMismatch, "checkpoint version " + std::to_string(version));
  }
  const auto len = binio::get<std::uint32_t>(is, "metadata length");
  std::string text(len, '\0');
  binio::get_bytes(is, text.data(), len, "metadata");
  auto blobs = read_blobs(is);

  try {
    const json meta = json::parse(text);
    std::vector<ConvStack> stacks;
    std::vector<std::optional<KoopmanConfig>> koopman;
    for (const json& jb : meta.at("architecture")) {
      ConvStack s;
      for (const json& jl : jb.at("branch")) s.branch.push_back(layer_from_json(jl));
      s.head = layer_from_json(jb.at("head"));
      stacks.push_back(std::move(s));
      if (jb.at("koopman").is_null()) {
        koopman.emplace_back(std::nullopt);
      } else {
        koopman.emplace_back(KoopmanConfig{jb["koopman"].at("rank").get<Index>(),
                                           jb["koopman"].at("horizon").get<int>()});
      }
    }
    std::vector<Block> blocks;
    for (size_t i = 0; i < stacks.size(); ++i) blocks.push_back({&stacks[i], koopman[i]});
    const auto names = parameter_names(blocks);
    size_t n = 0;
    for (auto& s : stacks) {
      for (auto& l : s.branch) {
        fill_layer(l, names[n], names[n + 1], blobs);
        n += 2;
      }
      fill_layer(s.head, names[n], names[n + 1], blobs);
      n += 2;
    }

    data::NormStats norm{meta.at("norm").at("mean").get<double>(),
                         meta.at("norm").at("std").get<double>()};
    const json& jw = meta.at("window");
    data::WindowSpec window{jw.at("n").get<Index>(), jw.at("k").get<Index>(),
                            jw.at("m").get<Index>(), jw.at("s").get<Index>()};
    ModelMeta mm;
    mm.seed = meta.at("seed").get<std::uint64_t>();
    mm.train_nx = meta.at("train_resolution").at(0).get<Index>();
    mm.train_ny = meta.at("train_resolution").at(1).get<Index>();
    mm.exact_gradients = meta.at("exact_gradients").get<bool>();

    const std::string kind = meta.at("kind").get<std::string>();
    if (kind == "bno") {
      BnoModel m;
      for (size_t i = 0; i < stacks.size(); ++i) {
        if (!koopman[i]) throw Error(ErrorKind::IoError, "bno layer without koopman config");
        m.layers.push_back({std::move(stacks[i]), *koopman[i]});
      }
      m.norm = norm;
      m.window = window;
      m.meta = mm;
      m.validate();
      return m;
    }
    if (kind == "cnn") {
      CnnBaseline m;
      m.blocks = std::move(stacks);
      m.norm = norm;
      m.window = window;
      m.meta = mm;
      m.validate();
      return m;
    }
    throw Error(ErrorKind::IoError, "unknown model kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw Error(ErrorKind::IoError, std::string("checkpoint metadata: ") + e.what());
  }
}

BnoModel load_checkpoint(const std::filesystem::path& path) {
  AnyModel any = load_any_checkpoint(path);
  if (auto* m = std::get_if<BnoModel>(&any)) return std::move(*m);
  throw Error(ErrorKind::InvalidArgument, path.string() + " holds a CNN baseline");
}

CnnBaseline load_cnn_checkpoint(const std::filesystem::path& path) {
  AnyModel any = load_any_checkpoint(path);
  if (auto* m = std::get_if<CnnBaseline>(&any)) return std::move(*m);
  throw Error(ErrorKind::InvalidArgument, path.string() + " holds a BNO model");
}

}  // namespace bno::model
