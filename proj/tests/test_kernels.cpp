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

#include <doctest.h>

#include "sparsnn/kernels.hpp"
#include "sparsnn/parallel.hpp"

using namespace sparsnn;

namespace {

struct Case {
  WeightMatrix<float> w;
  BatchMatrix<float> u;
  BatchMatrix<float> spikes;
  SparseSpikeBatch<float> sparse;
  BatchMatrix<float> g;  // dL/dI
};

Case random_case(DropRng rng, int batch, int n_pre, int n_post, double rate) {
  Case c;
  c.w.resize(n_post, n_pre);
  for (Eigen::Index j = 0; j < n_pre; ++j)
    for (Eigen::Index i = 0; i < n_post; ++i) c.w(i, j) = static_cast<float>(rng.uniform01() * 2 - 1);
  c.u.resize(batch, n_pre);
  for (Eigen::Index b = 0; b < batch; ++b)
    for (Eigen::Index j = 0; j < n_pre; ++j)
      c.u(b, j) = rng.uniform01() < rate ? 1.5f : static_cast<float>(rng.uniform01() * 0.9);
  const auto params = LifParams<float>::uniform(n_pre, 0.9f, 1.0f, 1.0f, -1e6f, 10.0f);
  c.spikes = threshold_spikes_dense(c.u, params.threshold);
  c.sparse = encode_sparse<float>(c.u, params, n_pre + n_pre % 2, rng.stream(1), true);
  c.g.resize(batch, n_post);
  for (Eigen::Index b = 0; b < batch; ++b)
    for (Eigen::Index i = 0; i < n_post; ++i) c.g(b, i) = static_cast<float>(rng.uniform01() - 0.5);
  return c;
}

}  // namespace

TEST_CASE("forward current: sparse equals dense bitwise with full capacity") {
  DropRng gen(3);
  for (int trial = 0; trial < 30; ++trial) {
    auto c = random_case(gen.stream(trial), 1 + trial % 5, 3 + trial, 2 + 2 * trial, 0.3);
    CHECK(sparse_forward_current(c.w, c.sparse) == dense_forward_current(c.w, c.spikes));
  }
}

TEST_CASE("forward current: naive loop oracle") {
  auto c = random_case(DropRng(4), 3, 17, 9, 0.4);
  const auto got = dense_forward_current(c.w, c.spikes);
  for (int b = 0; b < 3; ++b)
    for (int i = 0; i < 9; ++i) {
      double ref = 0;
      for (int j = 0; j < 17; ++j) ref += double(c.w(i, j)) * c.spikes(b, j);
      CHECK(got(b, i) == doctest::Approx(ref).epsilon(1e-5));
    }
}

TEST_CASE("forward current: sparse work is proportional to spike count") {
  auto c = random_case(DropRng(5), 4, 50, 20, 0.1);
  KernelCounters k;
  sparse_forward_current(c.w, c.sparse, &k);
  CHECK(k.weight_reads == c.sparse.total_spikes() * 20);
  KernelCounters d;
  dense_forward_current(c.w, c.spikes, &d);
  CHECK(d.weight_reads == 4u * 50u * 20u);
  const auto empty = SparseSpikeBatch<float>::empty(4, 50, false);
  KernelCounters z;
  CHECK(sparse_forward_current(c.w, empty, &z).isZero());
  CHECK(z.weight_reads == 0);
}

TEST_CASE("weight gradient: sparse equals dense bitwise, naive oracle") {
  DropRng gen(6);
  for (int trial = 0; trial < 20; ++trial) {
    auto c = random_case(gen.stream(trial), 1 + trial % 4, 5 + trial, 3 + trial, 0.3);
    WeightMatrix<float> dense = WeightMatrix<float>::Zero(c.w.rows(), c.w.cols());
    WeightMatrix<float> sparse = dense;
    dense_weight_grad(c.g, c.spikes, dense);
    sparse_weight_grad(c.g, c.sparse, sparse);
    CHECK(dense == sparse);
    for (Eigen::Index i = 0; i < c.w.rows(); ++i)
      for (Eigen::Index j = 0; j < c.w.cols(); ++j) {
        double ref = 0;
        for (Eigen::Index b = 0; b < c.g.rows(); ++b) ref += double(c.g(b, i)) * c.spikes(b, j);
        CHECK(dense(i, j) == doctest::Approx(ref).epsilon(1e-5));
      }
  }
}

TEST_CASE("input gradient: sparse entries equal the dense columns") {
  DropRng gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto c = random_case(gen.stream(trial), 1 + trial % 4, 4 + trial, 3 + trial, 0.3);
    const auto dense = dense_input_grad(c.g, c.w);
    const auto sparse = sparse_input_grad(c.g, c.w, c.sparse);
    for (int b = 0; b < c.sparse.batch(); ++b) {
      auto entries = c.sparse.entries(b);
      for (std::size_t k = 0; k < entries.size(); ++k) CHECK(sparse(b, k) == dense(b, entries[k]));
      for (int k = static_cast<int>(entries.size()); k < c.sparse.capacity(); ++k) CHECK(sparse(b, k) == 0.0f);
    }
    const BatchMatrix<float> ref = c.g * c.w;
    CHECK(dense.isApprox(ref, 1e-5f));
  }
}

TEST_CASE("kernels: out-of-range ids are corruption") {
  auto c = random_case(DropRng(8), 2, 6, 4, 0.5);
  auto bad = c.sparse;
  bad.ids(0, 0) = 6;
  bad.num_spikes[0] = std::max<std::uint32_t>(bad.num_spikes[0], 1);
  bad.num_grads[0] = std::max(bad.num_grads[0], bad.num_spikes[0]);
  WeightMatrix<float> dw = WeightMatrix<float>::Zero(4, 6);
  CHECK_THROWS_AS(sparse_forward_current(c.w, bad), CorruptionError);
  CHECK_THROWS_AS(sparse_weight_grad(c.g, bad, dw), CorruptionError);
  CHECK_THROWS_AS(sparse_input_grad(c.g, c.w, bad), CorruptionError);
}

TEST_CASE("kernels: shape mismatches are contract violations") {
  WeightMatrix<float> w = WeightMatrix<float>::Zero(3, 4);
  CHECK_THROWS_AS(dense_forward_current<float>(w, BatchMatrix<float>::Zero(2, 5)), ContractViolation);
  CHECK_THROWS_AS(dense_input_grad<float>(BatchMatrix<float>::Zero(2, 2), w), ContractViolation);
}

TEST_CASE("kernels: thread count does not change results") {
  auto c = random_case(DropRng(9), 8, 300, 200, 0.2);
  set_num_threads(1);
  const auto a = dense_forward_current(c.w, c.spikes);
  const auto ga = dense_input_grad(c.g, c.w);
  set_num_threads(3);
  const auto b = dense_forward_current(c.w, c.spikes);
  const auto gb = dense_input_grad(c.g, c.w);
  set_num_threads(1);
  CHECK(a == b);
  CHECK(ga == gb);
}
