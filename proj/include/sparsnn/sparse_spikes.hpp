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

// Fixed-capacity sparse spike tensors.
//
// Each batch row holds up to N_max neuron ids laid out as
//
//   [ spikes ascending | gradient-only ascending | sentinel padding ]
//    0           num_spikes                  num_grads            N_max
//
// Spikes are neurons with u >= threshold. Gradient-only entries have
// grad_threshold <= u < threshold: they carry surrogate gradients backwards
// but never emit forward current. When a segment overflows its capacity a
// uniformly random subset is kept; spikes always win over gradient-only
// entries.

#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sparsnn/lif.hpp"
#include "sparsnn/rng.hpp"
#include "sparsnn/types.hpp"

namespace sparsnn {

inline constexpr std::uint32_t kSentinelId = 0xFFFFFFFFu;

template <typename Scalar>
struct SparseSpikeBatch {
  IdMatrix ids;
  CountVector num_spikes;
  CountVector num_grads;
  BatchMatrix<Scalar> grad_values;  // empty unless built for the backward pass
  // Pre-drop population sizes; merging needs them to keep drops uniform.
  CountVector spike_candidates;
  CountVector grad_candidates;

  static SparseSpikeBatch empty(int batch, int n_max, bool with_grads) {
    SparseSpikeBatch s;
    s.ids = IdMatrix::Constant(batch, n_max, kSentinelId);
    s.num_spikes = CountVector::Zero(batch);
    s.num_grads = CountVector::Zero(batch);
    s.spike_candidates = CountVector::Zero(batch);
    s.grad_candidates = CountVector::Zero(batch);
    if (with_grads) s.grad_values = BatchMatrix<Scalar>::Zero(batch, n_max);
    return s;
  }

  int batch() const { return static_cast<int>(ids.rows()); }
  int capacity() const { return static_cast<int>(ids.cols()); }
  bool has_grads() const { return grad_values.size() > 0; }

  std::span<const std::uint32_t> spikes(int b) const {
    return {ids.data() + ids.cols() * b, num_spikes[b]};
  }
  std::span<const std::uint32_t> entries(int b) const {
    return {ids.data() + ids.cols() * b, num_grads[b]};
  }

  std::uint64_t total_spikes() const { return num_spikes.template cast<std::uint64_t>().sum(); }
  std::uint64_t total_entries() const { return num_grads.template cast<std::uint64_t>().sum(); }

  /// Throws CorruptionError if any structural invariant is broken.
  void validate(int n) const {
    const auto cap = static_cast<std::uint32_t>(capacity());
    for (int b = 0; b < batch(); ++b) {
      if (num_spikes[b] > num_grads[b] || num_grads[b] > cap)
        throw CorruptionError("sparse batch row " + std::to_string(b) +
                              " has inconsistent counts");
      for (std::uint32_t k = 0; k < cap; ++k) {
        const std::uint32_t id = ids(b, k);
        if (k >= num_grads[b]) {
          if (id != kSentinelId)
            throw CorruptionError("padding slot does not hold the sentinel");
          continue;
        }
        if (id >= static_cast<std::uint32_t>(n))
          throw CorruptionError("spike id " + std::to_string(id) +
                                " out of range for layer of " +
                                std::to_string(n));
        const bool segment_start = k == 0 || k == num_spikes[b];
        if (!segment_start && ids(b, k - 1) >= id)
          throw CorruptionError("segment ids are not strictly increasing");
      }
      auto row = entries(b);
      std::vector<std::uint32_t> sorted(row.begin(), row.end());
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw CorruptionError("duplicate id across segments");
    }
  }
};

namespace detail {

// Moves a uniformly random `keep`-subset of `pool` to its front and sorts it.
inline void sample_prefix(std::vector<std::uint32_t>& pool, std::size_t keep,
                          DropRng& rng) {
  keep = std::min(keep, pool.size());
  if (keep < pool.size()) {
    for (std::size_t i = 0; i < keep; ++i) {
      const auto j = i + rng.uniform(static_cast<std::uint32_t>(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
  }
  pool.resize(keep);
  std::sort(pool.begin(), pool.end());
}

// Number of picks from population `a` when drawing `m` without replacement
// from populations of size a and b (hypergeometric).
inline std::uint32_t hypergeometric(std::uint32_t a, std::uint32_t b,
                                    std::uint32_t m, DropRng& rng) {
  std::uint32_t picked = 0;
  for (std::uint32_t draw = 0; draw < m && (a + b) > 0; ++draw) {
    if (rng.uniform(a + b) < a) {
      --a;
      ++picked;
    } else {
      --b;
    }
  }
  return picked;
}

}  // namespace detail

/// Selects spikes and gradient-only entries from membrane potentials.
///
/// `rng` keys the drop decisions; row b uses `rng.stream(b)`. With
/// `force_spikes` every neuron is treated as above threshold.
template <typename Scalar>
SparseSpikeBatch<Scalar> encode_sparse(const BatchMatrix<Scalar>& u,
                                       const LifParams<Scalar>& params,
                                       int n_max, const DropRng& rng,
                                       bool with_grads,
                                       bool force_spikes = false) {
  if (n_max < 2 || n_max % 2 != 0)
    throw ConfigError("N_max must be even and >= 2, got " +
                      std::to_string(n_max));
  require(u.cols() == params.size(), "encode_sparse: threshold length mismatch");

  const int batch = static_cast<int>(u.rows());
  const int n = static_cast<int>(u.cols());
  auto out = SparseSpikeBatch<Scalar>::empty(batch, n_max, with_grads);

#pragma omp parallel for schedule(static)
  for (int b = 0; b < batch; ++b) {
    DropRng row_rng = rng.stream(static_cast<std::uint64_t>(b));
    std::vector<std::uint32_t> fired;
    std::vector<std::uint32_t> near;
    for (int i = 0; i < n; ++i) {
      const Scalar v = u(b, i);
      if (force_spikes || v >= params.threshold[i])
        fired.push_back(static_cast<std::uint32_t>(i));
      else if (with_grads && v >= params.grad_threshold[i])
        near.push_back(static_cast<std::uint32_t>(i));
    }
    out.spike_candidates[b] = static_cast<std::uint32_t>(fired.size());
    out.grad_candidates[b] = static_cast<std::uint32_t>(near.size());

    detail::sample_prefix(fired, static_cast<std::size_t>(n_max), row_rng);
    detail::sample_prefix(near, static_cast<std::size_t>(n_max) - fired.size(),
                          row_rng);

    std::uint32_t k = 0;
    for (auto id : fired) out.ids(b, k++) = id;
    for (auto id : near) out.ids(b, k++) = id;
    out.num_spikes[b] = static_cast<std::uint32_t>(fired.size());
    out.num_grads[b] = k;
    if (with_grads) {
      for (std::uint32_t e = 0; e < k; ++e) {
        const auto id = out.ids(b, e);
        out.grad_values(b, e) =
            surrogate<Scalar>(u(b, id) - params.threshold[id], params.beta);
      }
    }
  }
  return out;
}

/// Encodes a binary spike matrix (nonzero = spike), e.g. network input.
template <typename Scalar>
SparseSpikeBatch<Scalar> encode_binary(const BatchMatrix<Scalar>& spikes,
                                       int n_max, const DropRng& rng) {
  auto params = LifParams<Scalar>::uniform(static_cast<int>(spikes.cols()),
                                           Scalar(0), Scalar(1), Scalar(0.5),
                                           Scalar(0.5), Scalar(1));
  return encode_sparse<Scalar>(spikes, params, n_max, rng, false);
}

/// Dense 0/1 matrix with ones at the forward spikes only.
template <typename Scalar>
BatchMatrix<Scalar> decode_to_dense(const SparseSpikeBatch<Scalar>& s, int n) {
  BatchMatrix<Scalar> dense = BatchMatrix<Scalar>::Zero(s.batch(), n);
  for (int b = 0; b < s.batch(); ++b) {
    for (auto id : s.spikes(b)) {
      if (id >= static_cast<std::uint32_t>(n))
        throw CorruptionError("spike id " + std::to_string(id) +
                              " out of range for layer of " + std::to_string(n));
      dense(b, id) = Scalar(1);
    }
  }
  return dense;
}

namespace detail {

template <typename Scalar>
struct RowEntries {
  std::vector<std::uint32_t> ids;
  std::vector<Scalar> values;
};

template <typename Scalar>
RowEntries<Scalar> segment(const SparseSpikeBatch<Scalar>& s, int b,
                           std::uint32_t begin, std::uint32_t end) {
  RowEntries<Scalar> r;
  for (auto k = begin; k < end; ++k) {
    r.ids.push_back(s.ids(b, k));
    r.values.push_back(s.has_grads() ? s.grad_values(b, k) : Scalar(0));
  }
  return r;
}

template <typename Scalar>
void keep_random(RowEntries<Scalar>& r, std::size_t keep, DropRng& rng) {
  keep = std::min(keep, r.ids.size());
  std::vector<std::uint32_t> order(r.ids.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
  sample_prefix(order, keep, rng);
  RowEntries<Scalar> kept;
  for (auto i : order) {
    kept.ids.push_back(r.ids[i]);
    kept.values.push_back(r.values[i]);
  }
  r = std::move(kept);
}

// Uniform m-subset of the union of two populations, given that each side
// already holds a uniform subset of its own population.
template <typename Scalar>
RowEntries<Scalar> merge_uniform(RowEntries<Scalar> a, std::uint32_t pop_a,
                                 RowEntries<Scalar> b, std::uint32_t pop_b,
                                 std::uint32_t capacity, DropRng& rng) {
  pop_a = std::max<std::uint32_t>(pop_a, static_cast<std::uint32_t>(a.ids.size()));
  pop_b = std::max<std::uint32_t>(pop_b, static_cast<std::uint32_t>(b.ids.size()));
  const auto avail_a = static_cast<std::uint32_t>(a.ids.size());
  const auto avail_b = static_cast<std::uint32_t>(b.ids.size());
  const std::uint32_t m = std::min(capacity, avail_a + avail_b);
  std::uint32_t from_a = std::min(hypergeometric(pop_a, pop_b, m, rng), avail_a);
  std::uint32_t from_b = std::min(m - from_a, avail_b);
  from_a = std::min(m - from_b, avail_a);
  keep_random(a, from_a, rng);
  keep_random(b, from_b, rng);

  RowEntries<Scalar> out;
  std::size_t i = 0, j = 0;
  while (i < a.ids.size() || j < b.ids.size()) {
    const bool take_a = j == b.ids.size() || (i < a.ids.size() && a.ids[i] < b.ids[j]);
    if (take_a) {
      out.ids.push_back(a.ids[i]);
      out.values.push_back(a.values[i++]);
    } else {
      out.ids.push_back(b.ids[j]);
      out.values.push_back(b.values[j++]);
    }
  }
  return out;
}

template <typename Scalar>
std::pair<std::uint32_t, std::uint32_t> id_range(const SparseSpikeBatch<Scalar>& s) {
  std::uint32_t lo = kSentinelId, hi = 0;
  for (int b = 0; b < s.batch(); ++b)
    for (auto id : s.entries(b)) {
      lo = std::min(lo, id);
      hi = std::max(hi, id);
    }
  return {lo, hi};
}

template <typename Scalar>
SparseSpikeBatch<Scalar> merge_pair(const SparseSpikeBatch<Scalar>& a,
                                    const SparseSpikeBatch<Scalar>& b,
                                    int n_max, const DropRng& rng) {
  const bool grads = a.has_grads() || b.has_grads();
  auto out = SparseSpikeBatch<Scalar>::empty(a.batch(), n_max, grads);
  const auto cap = static_cast<std::uint32_t>(n_max);
  for (int row = 0; row < a.batch(); ++row) {
    DropRng row_rng = rng.stream(static_cast<std::uint64_t>(row));
    auto spikes = merge_uniform(segment(a, row, 0, a.num_spikes[row]),
                                a.spike_candidates[row],
                                segment(b, row, 0, b.num_spikes[row]),
                                b.spike_candidates[row], cap, row_rng);
    const auto used = static_cast<std::uint32_t>(spikes.ids.size());
    auto near = merge_uniform(
        segment(a, row, a.num_spikes[row], a.num_grads[row]),
        a.grad_candidates[row],
        segment(b, row, b.num_spikes[row], b.num_grads[row]),
        b.grad_candidates[row], cap - used, row_rng);

    std::uint32_t k = 0;
    for (std::size_t e = 0; e < spikes.ids.size(); ++e, ++k) {
      out.ids(row, k) = spikes.ids[e];
      if (grads) out.grad_values(row, k) = spikes.values[e];
    }
    for (std::size_t e = 0; e < near.ids.size(); ++e, ++k) {
      out.ids(row, k) = near.ids[e];
      if (grads) out.grad_values(row, k) = near.values[e];
    }
    out.num_spikes[row] = used;
    out.num_grads[row] = k;
    out.spike_candidates[row] = a.spike_candidates[row] + b.spike_candidates[row];
    out.grad_candidates[row] = a.grad_candidates[row] + b.grad_candidates[row];
  }
  return out;
}

}  // namespace detail

/// Combines per-tile sparse results covering disjoint neuron-id ranges.
///
/// Parts are folded left to right in index order, so the result depends only
/// on (parts, n_max, rng). Drops stay uniform over the union as long as each
/// part's own capacity is at least n_max.
template <typename Scalar>
SparseSpikeBatch<Scalar> merge_segments(
    const std::vector<SparseSpikeBatch<Scalar>>& parts, int n_max,
    const DropRng& rng) {
  if (n_max < 2 || n_max % 2 != 0)
    throw ConfigError("N_max must be even and >= 2");
  if (parts.empty()) return SparseSpikeBatch<Scalar>::empty(0, n_max, false);

  const int batch = parts.front().batch();
  std::vector<std::pair<std::uint32_t, std::uint32_t>> ranges;
  for (const auto& p : parts) {
    require(p.batch() == batch, "merge_segments: batch sizes differ");
    auto r = detail::id_range(p);
    if (r.first == kSentinelId) continue;
    for (const auto& q : ranges)
      require(r.second < q.first || q.second < r.first,
              "merge_segments: parts have overlapping id ranges");
    ranges.push_back(r);
  }

  const bool grads = std::any_of(parts.begin(), parts.end(),
                                 [](const auto& p) { return p.has_grads(); });
  auto acc = SparseSpikeBatch<Scalar>::empty(batch, n_max, grads);
  for (std::size_t i = 0; i < parts.size(); ++i)
    acc = detail::merge_pair(acc, parts[i], n_max, rng.stream(i));
  return acc;
}

}  // namespace sparsnn
