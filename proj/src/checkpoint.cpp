// Copyright 2026 The sparsnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sparsnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace sparsnn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

namespace {

constexpr char kMagic[8] = {'S', 'S', 'N', 'N', 'C', 'K', 'P', '1'};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out_.insert(out_.end(), p, p + sizeof(T));
  }
  template <typename Derived>
  void matrix(const Eigen::DenseBase<Derived>& m) {
    put<std::uint32_t>(static_cast<std::uint32_t>(m.rows()));
    put<std::uint32_t>(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) put<float>(m(i, j));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > in_.size()) throw DataError("checkpoint: truncated");
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  template <typename M>
  M matrix() {
    const auto rows = get<std::uint32_t>();
    const auto cols = get<std::uint32_t>();
    if (std::uint64_t{rows} * cols * 4 > in_.size() - pos_) throw DataError("checkpoint: truncated");
    M m(rows, cols);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = get<float>();
    return m;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  c.net.validate();
  Writer w;
  for (char ch : kMagic) w.put(ch);
  const auto& spec = c.net.spec;
  w.put<std::uint32_t>(static_cast<std::uint32_t>(spec.layer_sizes.size()));
  for (int n : spec.layer_sizes) w.put<std::int32_t>(n);
  for (int n : spec.sparse_sizes) w.put<std::int32_t>(n);
  w.put<std::int32_t>(spec.batch_size);
  w.put<std::int32_t>(spec.num_timesteps);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(spec.readout));
  for (const auto& layer : c.net.layers) {
    const auto& p = layer.params;
    w.put<float>(p.alpha);
    w.put<float>(p.capacitance);
    w.put<float>(p.beta);
    w.matrix(p.threshold);
    w.matrix(p.grad_threshold);
    w.matrix(layer.w);
  }
  const auto& a = c.optimizer.adam;
  w.put<std::uint8_t>(static_cast<std::uint8_t>(c.optimizer.kind));
  w.put<double>(a.lr);
  w.put<double>(a.beta1);
  w.put<double>(a.beta2);
  w.put<double>(a.eps);
  w.put<std::int64_t>(a.step);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(a.m.size()));
  for (std::size_t k = 0; k < a.m.size(); ++k) {
    w.matrix(a.m[k]);
    w.matrix(a.v[k]);
  }
  w.put<std::uint64_t>(c.seed);
  w.put<std::int32_t>(c.epoch);
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  for (char ch : kMagic)
    if (r.get<char>() != ch) throw DataError("checkpoint: bad magic");
  Checkpoint c;
  auto& spec = c.net.spec;
  const auto count = r.get<std::uint32_t>();
  if (count < 2 || count > 4096) throw DataError("checkpoint: bad layer count");
  for (std::uint32_t k = 0; k < count; ++k) spec.layer_sizes.push_back(r.get<std::int32_t>());
  for (std::uint32_t k = 0; k + 1 < count; ++k) spec.sparse_sizes.push_back(r.get<std::int32_t>());
  spec.batch_size = r.get<std::int32_t>();
  spec.num_timesteps = r.get<std::int32_t>();
  const auto readout = r.get<std::uint8_t>();
  if (readout > 1) throw DataError("checkpoint: bad readout");
  spec.readout = static_cast<Readout>(readout);
  for (std::uint32_t l = 0; l + 1 < count; ++l) {
    Layer<float> layer;
    layer.params.alpha = r.get<float>();
    layer.params.capacitance = r.get<float>();
    layer.params.beta = r.get<float>();
    layer.params.threshold = r.matrix<Eigen::MatrixXf>();
    layer.params.grad_threshold = r.matrix<Eigen::MatrixXf>();
    layer.w = r.matrix<WeightMatrix<float>>();
    c.net.layers.push_back(std::move(layer));
  }
  const auto kind = r.get<std::uint8_t>();
  if (kind > 1) throw DataError("checkpoint: bad optimizer kind");
  c.optimizer.kind = static_cast<OptimizerKind>(kind);
  auto& a = c.optimizer.adam;
  a.lr = r.get<double>();
  a.beta1 = r.get<double>();
  a.beta2 = r.get<double>();
  a.eps = r.get<double>();
  a.step = r.get<std::int64_t>();
  const auto moments = r.get<std::uint32_t>();
  if (moments != count - 1) throw DataError("checkpoint: moment count mismatch");
  for (std::uint32_t k = 0; k < moments; ++k) {
    a.m.push_back(r.matrix<WeightMatrix<float>>());
    a.v.push_back(r.matrix<WeightMatrix<float>>());
  }
  c.seed = r.get<std::uint64_t>();
  c.epoch = r.get<std::int32_t>();
  if (!r.done()) throw DataError("checkpoint: trailing bytes");
  try {
    c.net.validate();
  } catch (const std::exception& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace sparsnn
