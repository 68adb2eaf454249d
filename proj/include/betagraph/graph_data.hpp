#pragma once

// Observation containers, validation, degree statistics and contact-list binning.

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "betagraph/error.hpp"

namespace betagraph {

using Count = std::int64_t;
using CountMatrix = Eigen::Matrix<Count, Eigen::Dynamic, Eigen::Dynamic>;
using CountVector = Eigen::Matrix<Count, Eigen::Dynamic, 1>;

/// Success counts y(i,j) out of trials(i,j) for every dyad of one graph.
///
/// Undirected graphs keep both triangles; the upper triangle is authoritative
/// and set() mirrors it.
struct GraphObservations {
  int n = 0;
  bool directed = false;
  CountMatrix y;
  CountMatrix trials;

  static GraphObservations empty(int n, bool directed) {
    GraphObservations g;
    g.n = n;
    g.directed = directed;
    g.y = CountMatrix::Zero(n, n);
    g.trials = CountMatrix::Zero(n, n);
    return g;
  }

  /// All off-diagonal dyads observed `per_dyad` times with no successes.
  static GraphObservations uniform_trials(int n, bool directed, Count per_dyad) {
    GraphObservations g = empty(n, directed);
    g.trials.setConstant(per_dyad);
    g.trials.diagonal().setZero();
    return g;
  }

  void set(int i, int j, Count successes, Count num_trials) {
    y(i, j) = successes;
    trials(i, j) = num_trials;
    if (!directed) {
      y(j, i) = successes;
      trials(j, i) = num_trials;
    }
  }

  Count total_successes() const {
    return directed ? y.sum() : y.triangularView<Eigen::StrictlyUpper>().toDenseMatrix().sum();
  }
  Count total_trials() const {
    return directed ? trials.sum()
                    : trials.triangularView<Eigen::StrictlyUpper>().toDenseMatrix().sum();
  }

  friend bool operator==(const GraphObservations& a, const GraphObservations& b) {
    return a.n == b.n && a.directed == b.directed && a.y == b.y && a.trials == b.trials;
  }
};

/// Throws Error naming the first violated invariant.
inline void validate(const GraphObservations& obs) {
  if (obs.n < 2) throw Error(ErrorKind::SchemaError, "graph needs at least 2 nodes, got " + std::to_string(obs.n));
  if (obs.y.rows() != obs.n || obs.y.cols() != obs.n || obs.trials.rows() != obs.n ||
      obs.trials.cols() != obs.n) {
    throw Error(ErrorKind::ShapeMismatch, "count matrices must be " + std::to_string(obs.n) + "x" +
                                              std::to_string(obs.n));
  }
  for (int i = 0; i < obs.n; ++i) {
    if (obs.y(i, i) != 0 || obs.trials(i, i) != 0) {
      throw Error(ErrorKind::DiagonalNonzero, "node " + std::to_string(i) + " has a self-loop count");
    }
  }
  for (int i = 0; i < obs.n; ++i) {
    for (int j = 0; j < obs.n; ++j) {
      const Count y = obs.y(i, j);
      const Count t = obs.trials(i, j);
      if (y < 0 || t < 0) {
        throw Error(ErrorKind::SchemaError, "negative count at (" + std::to_string(i) + "," + std::to_string(j) + ")");
      }
      if (y > t) {
        throw Error(ErrorKind::CountExceedsTrials, "y=" + std::to_string(y) + " > trials=" + std::to_string(t) +
                                                       " at (" + std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }
  if (!obs.directed) {
    for (int i = 0; i < obs.n; ++i) {
      for (int j = i + 1; j < obs.n; ++j) {
        if (obs.y(i, j) != obs.y(j, i) || obs.trials(i, j) != obs.trials(j, i)) {
          throw Error(ErrorKind::AsymmetricUndirected,
                      "undirected counts differ at (" + std::to_string(i) + "," + std::to_string(j) + ")");
        }
      }
    }
  }
}

/// Graph-level covariates; row l is the covariate vector of graph l.
struct CovariateDesign {
  Eigen::MatrixXd x;

  static CovariateDesign intercept_only(int num_graphs = 1) {
    return CovariateDesign{Eigen::MatrixXd::Ones(num_graphs, 1)};
  }

  int num_graphs() const { return static_cast<int>(x.rows()); }
  int dim() const { return static_cast<int>(x.cols()); }

  /// Design with column k removed.
  CovariateDesign without_column(int k) const {
    Eigen::MatrixXd reduced(x.rows(), x.cols() - 1);
    for (int c = 0, out = 0; c < x.cols(); ++c) {
      if (c != k) reduced.col(out++) = x.col(c);
    }
    return CovariateDesign{std::move(reduced)};
  }
};

inline void validate(const CovariateDesign& design) {
  if (design.num_graphs() < 1 || design.dim() < 1) {
    throw Error(ErrorKind::SchemaError, "covariate design must be at least 1x1");
  }
  if (!design.x.allFinite()) throw Error(ErrorKind::SchemaError, "covariate design has non-finite entries");
}

/// L graphs on a shared node set, each with a covariate row.
struct PanelObservations {
  std::vector<GraphObservations> graphs;
  CovariateDesign design;

  static PanelObservations single(GraphObservations g) {
    PanelObservations p;
    p.graphs.push_back(std::move(g));
    p.design = CovariateDesign::intercept_only(1);
    return p;
  }

  int n() const { return graphs.empty() ? 0 : graphs.front().n; }
  bool directed() const { return !graphs.empty() && graphs.front().directed; }
  int num_graphs() const { return static_cast<int>(graphs.size()); }
};

inline void validate(const PanelObservations& panel) {
  if (panel.graphs.empty()) throw Error(ErrorKind::SchemaError, "panel has no graphs");
  validate(panel.design);
  if (panel.design.num_graphs() != panel.num_graphs()) {
    throw Error(ErrorKind::ShapeMismatch, "design has " + std::to_string(panel.design.num_graphs()) +
                                              " rows but panel has " + std::to_string(panel.num_graphs()) + " graphs");
  }
  for (const auto& g : panel.graphs) {
    validate(g);
    if (g.n != panel.n() || g.directed != panel.directed()) {
      throw Error(ErrorKind::ShapeMismatch, "all graphs in a panel must share n and directedness");
    }
  }
}

struct DegreeStatistics {
  CountVector out_deg;
  CountVector in_deg;
};

inline DegreeStatistics degrees(const GraphObservations& obs) {
  DegreeStatistics d;
  d.out_deg = obs.y.rowwise().sum();
  d.in_deg = obs.directed ? CountVector(obs.y.colwise().sum().transpose()) : d.out_deg;
  return d;
}

/// Elementwise sum of graphs over the panel (same n and directedness).
inline GraphObservations merge_graphs(const std::vector<GraphObservations>& graphs) {
  GraphObservations out = GraphObservations::empty(graphs.at(0).n, graphs.at(0).directed);
  for (const auto& g : graphs) {
    out.y += g.y;
    out.trials += g.trials;
  }
  return out;
}

/// Undirected graph whose dyad {i,j} pools both directions of a directed graph.
inline GraphObservations symmetrize(const GraphObservations& directed) {
  GraphObservations out = GraphObservations::empty(directed.n, false);
  out.y = directed.y + directed.y.transpose();
  out.trials = directed.trials + directed.trials.transpose();
  return out;
}

// ---------------------------------------------------------------------------
// Contact lists

struct ContactRecord {
  std::int64_t t = 0;
  std::string a;
  std::string b;
};

/// Half-open interval [start, end) feeding graph `graph`.
struct TimeWindow {
  std::int64_t start = 0;
  std::int64_t end = 0;
  int graph = 0;
};

struct BinningSpec {
  std::vector<TimeWindow> windows;
  std::optional<std::vector<std::string>> node_whitelist;
};

/// Graphs built from a contact list, plus the node id of each matrix index.
struct ContactPanel {
  std::vector<GraphObservations> graphs;
  std::vector<std::string> node_ids;
};

namespace detail {

// Numeric ids sort numerically, everything else lexicographically after them.
inline bool node_id_less(const std::string& a, const std::string& b) {
  auto numeric = [](const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  const bool na = numeric(a), nb = numeric(b);
  if (na && nb) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  }
  if (na != nb) return na;
  return a < b;
}

}  // namespace detail

/// Bins contacts into undirected dyad observations.
///
/// Each window is split into `trials_per_window` equal sub-intervals; each
/// sub-interval is one Bernoulli trial per whitelisted pair, successful iff a
/// contact between the pair falls inside it. Records outside every window are
/// dropped.
inline ContactPanel ingest_contacts(const std::vector<ContactRecord>& records, const BinningSpec& spec,
                                    int trials_per_window = 1) {
  if (spec.windows.empty()) throw Error(ErrorKind::NoWindows, "binning spec has no time windows");
  if (trials_per_window < 1) throw Error(ErrorKind::InvalidArgument, "trials_per_window must be >= 1");

  std::vector<TimeWindow> windows = spec.windows;
  std::sort(windows.begin(), windows.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  for (std::size_t w = 0; w < windows.size(); ++w) {
    if (windows[w].end <= windows[w].start) throw Error(ErrorKind::InvalidArgument, "window with end <= start");
    if (windows[w].graph < 0) throw Error(ErrorKind::InvalidArgument, "window mapped to a negative graph index");
    if (w > 0 && windows[w].start < windows[w - 1].end) {
      throw Error(ErrorKind::InvalidArgument, "time windows overlap");
    }
  }
  auto window_of = [&](std::int64_t t) -> const TimeWindow* {
    auto it = std::upper_bound(windows.begin(), windows.end(), t,
                               [](std::int64_t v, const TimeWindow& w) { return v < w.start; });
    if (it == windows.begin()) return nullptr;
    --it;
    return t < it->end ? &*it : nullptr;
  };

  ContactPanel out;
  if (spec.node_whitelist) {
    std::set<std::string> seen;
    for (const auto& id : *spec.node_whitelist) {
      if (seen.insert(id).second) out.node_ids.push_back(id);
    }
    if (out.node_ids.size() < 2) throw Error(ErrorKind::EmptyWhitelist, "node whitelist needs at least 2 members");
  } else {
    std::set<std::string, decltype(&detail::node_id_less)> ids(&detail::node_id_less);
    for (const auto& r : records) {
      if (window_of(r.t) != nullptr) {
        ids.insert(r.a);
        ids.insert(r.b);
      }
    }
    out.node_ids.assign(ids.begin(), ids.end());
    if (out.node_ids.size() < 2) throw Error(ErrorKind::EmptyWhitelist, "fewer than 2 nodes appear in the windows");
  }
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < out.node_ids.size(); ++i) index.emplace(out.node_ids[i], static_cast<int>(i));
  const int n = static_cast<int>(out.node_ids.size());

  int num_graphs = 0;
  for (const auto& w : windows) num_graphs = std::max(num_graphs, w.graph + 1);
  out.graphs.assign(num_graphs, GraphObservations::empty(n, false));

  // (window index, sub-interval, i, j) tuples with at least one contact
  std::set<std::tuple<std::size_t, int, int, int>> hits;
  for (const auto& r : records) {
    if (r.a == r.b) throw Error(ErrorKind::InvalidArgument, "contact record of node '" + r.a + "' with itself");
    const TimeWindow* w = window_of(r.t);
    if (w == nullptr) continue;
    auto ia = index.find(r.a);
    auto ib = index.find(r.b);
    if (ia == index.end() || ib == index.end()) continue;
    const int i = std::min(ia->second, ib->second);
    const int j = std::max(ia->second, ib->second);
    const std::int64_t len = w->end - w->start;
    const int sub = static_cast<int>(((r.t - w->start) * trials_per_window) / len);
    hits.emplace(static_cast<std::size_t>(w - windows.data()), sub, i, j);
  }
  for (const auto& w : windows) {
    auto& g = out.graphs[w.graph];
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) g.trials(i, j) += trials_per_window;
    }
  }
  for (const auto& [w, sub, i, j] : hits) {
    (void)sub;
    out.graphs[windows[w].graph].y(i, j) += 1;
  }
  for (auto& g : out.graphs) {
    g.y = g.y.triangularView<Eigen::StrictlyUpper>().toDenseMatrix();
    g.trials = g.trials.triangularView<Eigen::StrictlyUpper>().toDenseMatrix();
    g.y += CountMatrix(g.y.transpose());
    g.trials += CountMatrix(g.trials.transpose());
  }
  return out;
}

}  // namespace betagraph
