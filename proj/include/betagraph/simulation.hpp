#pragma once

// Reproducible random streams, binomial graph sampling and a small
// deterministic worker pool.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "betagraph/graph_data.hpp"
#include "betagraph/models.hpp"

namespace betagraph {

/// xoshiro256** seeded through SplitMix64. Stream k of seed s is independent
/// of how replicates are scheduled.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  static Rng stream(std::uint64_t seed, std::uint64_t index, std::uint64_t tag = 0) {
    std::uint64_t sm = seed ^ 0x6a09e667f3bcc909ULL;
    std::uint64_t mixed = splitmix64(sm);
    mixed ^= index * 0x9e3779b97f4a7c15ULL;
    sm = mixed;
    mixed = splitmix64(sm) ^ (tag * 0xbf58476d1ce4e5b9ULL);
    return Rng(mixed);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Binomial(trials, p) as a sum of Bernoulli draws.
  Count binomial(Count trials, double p) {
    Count k = 0;
    for (Count t = 0; t < trials; ++t) k += uniform() < p ? 1 : 0;
    return k;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_[4];
};

/// Runs body(i) for i in [0, count) on `threads` workers. Each index is
/// processed exactly once; results should be written to per-index slots.
template <typename Body>
void parallel_for(std::size_t count, int threads, Body&& body) {
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(count)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Draws Y_ij ~ Bin(N_ij, p_ij) for every dyad; undirected variants draw once
/// per unordered pair and mirror.
inline GraphObservations sample_graph(const ModelSpec& spec, const ParameterVector& theta, const CountMatrix& trials,
                                      const Eigen::VectorXd& x, Rng& rng) {
  const Coefficients c = unpack(spec, theta);
  if (trials.rows() != spec.n || trials.cols() != spec.n) throw Error(ErrorKind::ShapeMismatch, "trial matrix must be n x n");
  if (x.size() != spec.K) throw Error(ErrorKind::ShapeMismatch, "covariate vector must have length K");
  const Eigen::MatrixXd eta = linear_predictor(c, x);
  GraphObservations g = GraphObservations::empty(spec.n, spec.directed());
  for (int i = 0; i < spec.n; ++i) {
    for (int j = spec.directed() ? 0 : i + 1; j < spec.n; ++j) {
      if (i == j || trials(i, j) == 0) continue;
      g.set(i, j, rng.binomial(trials(i, j), sigmoid(eta(i, j))), trials(i, j));
    }
  }
  return g;
}

inline GraphObservations sample_graph(const ModelSpec& spec, const ParameterVector& theta, const CountMatrix& trials,
                                      Rng& rng) {
  return sample_graph(spec, theta, trials, Eigen::VectorXd::Ones(1), rng);
}

/// Resamples every graph of `layout` (keeping its trials and design) from the model.
inline PanelObservations sample_panel(const ModelSpec& spec, const ParameterVector& theta,
                                      const PanelObservations& layout, Rng& rng) {
  PanelObservations out;
  out.design = layout.design;
  out.graphs.reserve(layout.graphs.size());
  for (int l = 0; l < layout.num_graphs(); ++l) {
    out.graphs.push_back(sample_graph(spec, theta, layout.graphs[l].trials, layout.design.x.row(l).transpose(), rng));
  }
  return out;
}

/// True when some per-graph degree is zero or at its maximum (the simulation
/// discard rule). Directed data checks out-degrees and in-degrees of all nodes
/// but the last.
inline bool has_degenerate_degrees(const PanelObservations& data) {
  for (const auto& g : data.graphs) {
    const CountVector out = g.y.rowwise().sum();
    const CountVector out_max = g.trials.rowwise().sum();
    for (int i = 0; i < g.n; ++i)
      if (out(i) == 0 || out(i) == out_max(i)) return true;
    if (g.directed) {
      const CountVector in = g.y.colwise().sum().transpose();
      const CountVector in_max = g.trials.colwise().sum().transpose();
      for (int i = 0; i + 1 < g.n; ++i)
        if (in(i) == 0 || in(i) == in_max(i)) return true;
    }
  }
  return false;
}

inline bool has_degenerate_degrees(const GraphObservations& g) {
  return has_degenerate_degrees(PanelObservations::single(g));
}

}  // namespace betagraph
