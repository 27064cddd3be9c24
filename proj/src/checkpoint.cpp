// Copyright 2026 The apg-control Authors
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

#include "apg/checkpoint.hpp"

#include <fstream>

namespace apg {

namespace {

constexpr char kMagic[8] = {'A', 'P', 'G', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw ConfigError("checkpoint: cannot write '" + path + "'");
  }
  void bytes(const void* p, size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void i32(std::int32_t v) { bytes(&v, 4); }
  void f64(double v) { bytes(&v, 8); }
  void doubles(const std::vector<double>& v) {
    i32(static_cast<std::int32_t>(v.size()));
    bytes(v.data(), v.size() * sizeof(double));
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw ConfigError("checkpoint: cannot open '" + path + "'");
  }
  void bytes(void* p, size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in_) throw ConfigError("checkpoint: truncated file");
  }
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    bytes(&v, 8);
    return v;
  }
  std::int32_t i32() {
    std::int32_t v;
    bytes(&v, 4);
    return v;
  }
  double f64() {
    double v;
    bytes(&v, 8);
    return v;
  }
  std::vector<double> doubles() {
    std::int32_t n = i32();
    if (n < 0) throw ConfigError("checkpoint: negative array length");
    std::vector<double> v(static_cast<size_t>(n));
    bytes(v.data(), v.size() * sizeof(double));
    return v;
  }

 private:
  std::ifstream in_;
};

void write_header(Writer& w, CheckpointKind kind, SystemKind system,
                  std::uint64_t config_hash) {
  w.bytes(kMagic, 8);
  w.u32(kVersion);
  w.u8(static_cast<std::uint8_t>(kind));
  w.u8(static_cast<std::uint8_t>(system));
  w.u8(0);
  w.u8(0);
  w.u64(config_hash);
}

struct Header {
  CheckpointKind kind;
  SystemKind system;
  std::uint32_t version;
  std::uint64_t config_hash;
};

Header read_header(Reader& r) {
  char magic[8];
  r.bytes(magic, 8);
  for (int i = 0; i < 8; ++i)
    if (magic[i] != kMagic[i]) throw ConfigError("checkpoint: bad magic");
  Header h;
  h.version = r.u32();
  if (h.version != kVersion)
    throw ConfigError("checkpoint: unsupported version " +
                      std::to_string(h.version));
  h.kind = static_cast<CheckpointKind>(r.u8());
  h.system = static_cast<SystemKind>(r.u8());
  r.u8();
  r.u8();
  h.config_hash = r.u64();
  return h;
}

void write_dense(Writer& w, const Dense& l) {
  w.i32(l.in);
  w.i32(l.out);
  w.u8(static_cast<std::uint8_t>(l.act));
  w.doubles(l.weights);
  w.doubles(l.bias);
}

Dense read_dense(Reader& r) {
  Dense l;
  l.in = r.i32();
  l.out = r.i32();
  l.act = static_cast<Activation>(r.u8());
  l.weights = r.doubles();
  l.bias = r.doubles();
  if (l.weights.size() != static_cast<size_t>(l.in) * l.out ||
      l.bias.size() != static_cast<size_t>(l.out))
    throw ConfigError("checkpoint: inconsistent layer shape");
  return l;
}

void write_layers(Writer& w, const std::vector<Dense>& layers) {
  w.u8(static_cast<std::uint8_t>(layers.size()));
  for (const Dense& l : layers) write_dense(w, l);
}

std::vector<Dense> read_layers(Reader& r) {
  std::vector<Dense> layers(r.u8());
  for (Dense& l : layers) l = read_dense(r);
  return layers;
}

void write_normalizer(Writer& w, const Normalizer& n) {
  w.u8(n.identity ? 1 : 0);
  w.doubles(n.mean);
  w.doubles(n.stddev);
}

Normalizer read_normalizer(Reader& r) {
  Normalizer n;
  n.identity = r.u8() != 0;
  n.mean = r.doubles();
  n.stddev = r.doubles();
  return n;
}

}  // namespace

void save_policy_checkpoint(const std::string& path, const PolicyParameters& policy,
                            std::uint64_t config_hash) {
  Writer w(path);
  write_header(w, CheckpointKind::kPolicy, policy.system, config_hash);
  w.i32(policy.horizon);
  w.i32(policy.ref_rows);
  w.u8(policy.conv_ref ? 1 : 0);
  w.u8(static_cast<std::uint8_t>(policy.scaling.kind));
  w.doubles(policy.scaling.lo);
  w.doubles(policy.scaling.hi);
  write_normalizer(w, policy.normalizer);
  write_layers(w, policy.state_branch);
  write_layers(w, policy.ref_branch);
  write_layers(w, policy.trunk);
}

PolicyParameters load_policy_checkpoint(const std::string& path,
                                        std::uint64_t* config_hash) {
  Reader r(path);
  Header h = read_header(r);
  if (h.kind != CheckpointKind::kPolicy)
    throw ConfigError("checkpoint: expected a policy checkpoint");
  PolicyParameters p;
  p.system = h.system;
  p.horizon = r.i32();
  p.ref_rows = r.i32();
  p.conv_ref = r.u8() != 0;
  p.scaling.kind = static_cast<ActionScaling::Kind>(r.u8());
  p.scaling.lo = r.doubles();
  p.scaling.hi = r.doubles();
  p.scaling.validate();
  p.normalizer = read_normalizer(r);
  p.state_branch = read_layers(r);
  p.ref_branch = read_layers(r);
  p.trunk = read_layers(r);
  if (config_hash != nullptr) *config_hash = h.config_hash;
  return p;
}

void save_residual_checkpoint(const std::string& path, const ResidualModel& model,
                              std::uint64_t config_hash) {
  Writer w(path);
  write_header(w, CheckpointKind::kResidual, model.system, config_hash);
  write_normalizer(w, model.input_norm);
  write_layers(w, model.layers);
}

ResidualModel load_residual_checkpoint(const std::string& path,
                                       std::uint64_t* config_hash) {
  Reader r(path);
  Header h = read_header(r);
  if (h.kind != CheckpointKind::kResidual)
    throw ConfigError("checkpoint: expected a residual checkpoint");
  ResidualModel m;
  m.system = h.system;
  m.input_norm = read_normalizer(r);
  m.layers = read_layers(r);
  if (config_hash != nullptr) *config_hash = h.config_hash;
  return m;
}

CheckpointInfo inspect_checkpoint(const std::string& path) {
  Reader r(path);
  Header h = read_header(r);
  CheckpointInfo info;
  info.kind = h.kind;
  info.system = h.system;
  info.version = h.version;
  info.config_hash = h.config_hash;
  if (h.kind == CheckpointKind::kPolicy) {
    PolicyParameters p = load_policy_checkpoint(path);
    info.param_count = p.param_count();
    info.horizon = p.horizon;
  } else {
    ResidualModel m = load_residual_checkpoint(path);
    info.param_count = m.param_count();
  }
  return info;
}

}  // namespace apg
