#pragma once

// The four beta-model variants: edge probabilities, likelihood kernels and
// score (moment) residuals.
//
// The undirected and directed variants are the L = 1, K = 1, x = [1]
// instances of their generalized counterparts and share one code path.

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "betagraph/error.hpp"
#include "betagraph/graph_data.hpp"
#include "betagraph/numeric.hpp"

namespace betagraph {

enum class Variant { Undirected, Directed, Generalized, GeneralizedUndirected };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::Undirected: return "undirected";
    case Variant::Directed: return "directed";
    case Variant::Generalized: return "generalized";
    case Variant::GeneralizedUndirected: return "generalized-undirected";
  }
  return "unknown";
}

inline Variant parse_variant(const std::string& name) {
  if (name == "undirected") return Variant::Undirected;
  if (name == "directed") return Variant::Directed;
  if (name == "generalized") return Variant::Generalized;
  if (name == "generalized-undirected") return Variant::GeneralizedUndirected;
  throw Error(ErrorKind::InvalidArgument, "unknown model '" + name + "'");
}

/// Packed parameter vector. Layout per variant:
///   Undirected             [b_0 .. b_{n-1}]
///   Directed               [a_0 .. a_{n-1}, b_0 .. b_{n-2}]        (b_{n-1} = 0)
///   Generalized            [a_0' .. a_{n-1}', b_0' .. b_{n-2}']     (K-blocks, b_{n-1} = 0)
///   GeneralizedUndirected  [b_0' .. b_{n-1}']                       (K-blocks)
using ParameterVector = Eigen::VectorXd;

struct ModelSpec {
  Variant variant = Variant::Undirected;
  int n = 0;
  int K = 1;

  static ModelSpec undirected(int n) { return {Variant::Undirected, n, 1}; }
  static ModelSpec directed(int n) { return {Variant::Directed, n, 1}; }
  static ModelSpec generalized(int n, int K) { return {Variant::Generalized, n, K}; }
  static ModelSpec generalized_undirected(int n, int K) { return {Variant::GeneralizedUndirected, n, K}; }

  /// Directed-data variants carry separate sender and receiver coefficients.
  bool directed() const { return variant == Variant::Directed || variant == Variant::Generalized; }
  bool generalized() const { return variant == Variant::Generalized || variant == Variant::GeneralizedUndirected; }

  int num_params() const { return directed() ? (2 * n - 1) * K : n * K; }

  /// Position of sender coefficient (i,k); for undirected variants the node coefficient.
  int sender_index(int i, int k) const { return i * K + k; }
  /// Position of receiver coefficient (i,k), i < n-1; directed variants only.
  int receiver_index(int i, int k) const { return (n + i) * K + k; }

  /// Human-readable label of each packed parameter.
  std::vector<std::string> parameter_labels() const {
    std::vector<std::string> labels;
    const char* first = directed() ? "alpha" : "beta";
    auto label = [&](const char* name, int i, int k) {
      return generalized() ? std::string(name) + "[" + std::to_string(i) + "," + std::to_string(k) + "]"
                           : std::string(name) + "[" + std::to_string(i) + "]";
    };
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < K; ++k) labels.push_back(label(first, i, k));
    if (directed()) {
      for (int i = 0; i + 1 < n; ++i)
        for (int k = 0; k < K; ++k) labels.push_back(label("beta", i, k));
    }
    return labels;
  }
};

/// Sender and receiver coefficient rows (n x K); the receiver row of the last
/// node is zero in directed variants, and receiver == sender in undirected ones.
struct Coefficients {
  Eigen::MatrixXd sender;
  Eigen::MatrixXd receiver;
};

inline void check_theta(const ModelSpec& spec, const ParameterVector& theta) {
  if (theta.size() != spec.num_params()) {
    throw Error(ErrorKind::ShapeMismatch, "parameter vector has length " + std::to_string(theta.size()) +
                                              ", model needs " + std::to_string(spec.num_params()));
  }
}

inline Coefficients unpack(const ModelSpec& spec, const ParameterVector& theta) {
  check_theta(spec, theta);
  Coefficients c;
  c.sender.resize(spec.n, spec.K);
  for (int i = 0; i < spec.n; ++i)
    for (int k = 0; k < spec.K; ++k) c.sender(i, k) = theta(spec.sender_index(i, k));
  if (spec.directed()) {
    c.receiver = Eigen::MatrixXd::Zero(spec.n, spec.K);
    for (int i = 0; i + 1 < spec.n; ++i)
      for (int k = 0; k < spec.K; ++k) c.receiver(i, k) = theta(spec.receiver_index(i, k));
  } else {
    c.receiver = c.sender;
  }
  return c;
}

inline ParameterVector pack(const ModelSpec& spec, const Coefficients& c) {
  ParameterVector theta(spec.num_params());
  for (int i = 0; i < spec.n; ++i)
    for (int k = 0; k < spec.K; ++k) theta(spec.sender_index(i, k)) = c.sender(i, k);
  if (spec.directed()) {
    for (int i = 0; i + 1 < spec.n; ++i)
      for (int k = 0; k < spec.K; ++k) theta(spec.receiver_index(i, k)) = c.receiver(i, k) - c.receiver(spec.n - 1, k);
    // Shift so that the last receiver row is zero; p is invariant under it.
    for (int i = 0; i < spec.n; ++i)
      for (int k = 0; k < spec.K; ++k) theta(spec.sender_index(i, k)) += c.receiver(spec.n - 1, k);
  }
  return theta;
}

inline void check_compatible(const ModelSpec& spec, const PanelObservations& data) {
  if (data.graphs.empty()) throw Error(ErrorKind::ShapeMismatch, "panel has no graphs");
  if (data.n() != spec.n) {
    throw Error(ErrorKind::ShapeMismatch, "data has " + std::to_string(data.n()) + " nodes, model expects " +
                                              std::to_string(spec.n));
  }
  if (data.directed() != spec.directed()) {
    throw Error(ErrorKind::ShapeMismatch, "model '" + to_string(spec.variant) + "' needs " +
                                              (spec.directed() ? "directed" : "undirected") + " data");
  }
  if (data.design.dim() != spec.K || data.design.num_graphs() != data.num_graphs()) {
    throw Error(ErrorKind::ShapeMismatch, "covariate design is " + std::to_string(data.design.num_graphs()) + "x" +
                                              std::to_string(data.design.dim()) + ", model expects K=" +
                                              std::to_string(spec.K) + " and " +
                                              std::to_string(data.num_graphs()) + " graphs");
  }
  if (!spec.generalized() && spec.K != 1) throw Error(ErrorKind::ShapeMismatch, "non-generalized models have K=1");
}

/// Probability of an (i -> j) edge under covariates x (x = [1] for the
/// non-generalized variants).
inline double edge_probability(const ModelSpec& spec, const ParameterVector& theta, int i, int j,
                               const Eigen::VectorXd& x) {
  if (i == j) throw Error(ErrorKind::SelfLoop, "edge probability requested for node " + std::to_string(i) + " with itself");
  if (x.size() != spec.K) throw Error(ErrorKind::ShapeMismatch, "covariate vector must have length K");
  if (i < 0 || j < 0 || i >= spec.n || j >= spec.n) throw Error(ErrorKind::ShapeMismatch, "node index out of range");
  const Coefficients c = unpack(spec, theta);
  return sigmoid(c.sender.row(i).dot(x) + c.receiver.row(j).dot(x));
}

inline double edge_probability(const ModelSpec& spec, const ParameterVector& theta, int i, int j) {
  return edge_probability(spec, theta, i, j, Eigen::VectorXd::Ones(1));
}

/// Linear predictors of one graph: eta(i,j) = sender_i'x + receiver_j'x.
inline Eigen::MatrixXd linear_predictor(const Coefficients& c, const Eigen::VectorXd& x) {
  const Eigen::VectorXd a = c.sender * x;
  const Eigen::VectorXd b = c.receiver * x;
  return a.replicate(1, b.size()) + b.transpose().replicate(a.size(), 1);
}

/// Expected success counts trials(i,j) * p(i,j) of one graph.
inline Eigen::MatrixXd expected_counts(const Coefficients& c, const GraphObservations& g, const Eigen::VectorXd& x) {
  const Eigen::MatrixXd eta = linear_predictor(c, x);
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(g.n, g.n);
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      if (i != j && g.trials(i, j) > 0) e(i, j) = static_cast<double>(g.trials(i, j)) * sigmoid(eta(i, j));
  return e;
}

/// Log of the likelihood kernel (binomial coefficients omitted).
inline double log_likelihood_kernel(const ModelSpec& spec, const ParameterVector& theta,
                                    const PanelObservations& data) {
  check_compatible(spec, data);
  const Coefficients c = unpack(spec, theta);
  double total = 0.0;
  for (int l = 0; l < data.num_graphs(); ++l) {
    const GraphObservations& g = data.graphs[l];
    const Eigen::VectorXd x = data.design.x.row(l).transpose();
    const Eigen::MatrixXd eta = linear_predictor(c, x);
    for (int i = 0; i < g.n; ++i) {
      // Undirected dyads are scored once, on the authoritative upper triangle.
      for (int j = spec.directed() ? 0 : i + 1; j < g.n; ++j) {
        if (i == j || g.trials(i, j) == 0) continue;
        total += static_cast<double>(g.y(i, j)) * eta(i, j) -
                 static_cast<double>(g.trials(i, j)) * log1p_exp(eta(i, j));
      }
    }
  }
  return total;
}

inline double log_likelihood_kernel(const ModelSpec& spec, const ParameterVector& theta,
                                    const GraphObservations& data) {
  return log_likelihood_kernel(spec, theta, PanelObservations::single(data));
}

/// Observed minus expected sufficient statistics, one entry per free parameter;
/// equals the gradient of the kernel and vanishes at the MLE.
inline Eigen::VectorXd moment_residual(const ModelSpec& spec, const ParameterVector& theta,
                                       const PanelObservations& data) {
  check_compatible(spec, data);
  const Coefficients c = unpack(spec, theta);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(spec.num_params());
  for (int l = 0; l < data.num_graphs(); ++l) {
    const GraphObservations& g = data.graphs[l];
    const Eigen::VectorXd x = data.design.x.row(l).transpose();
    const Eigen::MatrixXd e = expected_counts(c, g, x);
    const Eigen::VectorXd out_res = g.y.rowwise().sum().cast<double>() - e.rowwise().sum();
    const Eigen::VectorXd in_res = g.y.colwise().sum().transpose().cast<double>() - e.colwise().sum().transpose();
    for (int i = 0; i < spec.n; ++i)
      for (int k = 0; k < spec.K; ++k) r(spec.sender_index(i, k)) += x(k) * out_res(i);
    if (spec.directed()) {
      for (int i = 0; i + 1 < spec.n; ++i)
        for (int k = 0; k < spec.K; ++k) r(spec.receiver_index(i, k)) += x(k) * in_res(i);
    }
  }
  return r;
}

inline Eigen::VectorXd moment_residual(const ModelSpec& spec, const ParameterVector& theta,
                                       const GraphObservations& data) {
  return moment_residual(spec, theta, PanelObservations::single(data));
}

}  // namespace betagraph
