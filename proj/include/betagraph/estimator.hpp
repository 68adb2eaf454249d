#pragma once

// Maximum-likelihood estimation by fixed-point iteration.
//
// fit_undirected and fit_directed iterate the closed-form maps
//   z_i <- log d_i - log sum_j N_ij / (e^{-z_j} + e^{z_i})
// (and the sender/receiver pair of such maps for directed data).
// fit_generalized solves, for every coefficient slot (i,k) independently,
//   sum_l x_lk (d_il - e^{x_lk (g - z_ik)} S_il(z)) = 0
// where S_il(z) is the expected degree of node i in graph l at the previous
// iterate. The left side is strictly decreasing in g, so a bracketed
// bisection always finds the unique root when one exists.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "betagraph/error.hpp"
#include "betagraph/graph_data.hpp"
#include "betagraph/models.hpp"
#include "betagraph/numeric.hpp"

namespace betagraph {

struct FitOptions {
  double tol = 1e-4;         // threshold on the Euclidean norm of one update
  int max_iter = 10000;
  double root_tol = 1e-10;   // bracket width for the 1-D slot solves
  std::optional<ParameterVector> init;  // zeros when empty
  bool require_convergence = true;      // throw NotConverged instead of returning
};

inline void validate(const FitOptions& opts) {
  if (!(opts.tol > 0.0) || opts.max_iter < 1 || !(opts.root_tol > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "fit options need tol > 0, max_iter >= 1, root_tol > 0");
  }
}

struct FitResult {
  ParameterVector theta_hat;
  int iterations = 0;
  bool converged = false;
  double final_step_norm = std::numeric_limits<double>::infinity();
  double moment_residual_norm = std::numeric_limits<double>::infinity();  // infinity norm
  double log_likelihood = -std::numeric_limits<double>::infinity();
};

struct ExistenceCheck {
  bool ok = true;
  std::string detail;
  explicit operator bool() const { return ok; }
};

/// Necessary condition for a finite MLE: no degree statistic at 0 or at its maximum.
///
/// Applied to generalized variants only when K = 1 and the covariate is
/// constant; otherwise it passes and the solver reports failure.
inline ExistenceCheck check_existence(const ModelSpec& spec, const PanelObservations& data) {
  check_compatible(spec, data);
  if (spec.K != 1) return {};
  const double c = data.design.x(0, 0);
  if (c == 0.0 || (data.design.x.array() != c).any()) return {};

  const GraphObservations merged = merge_graphs(data.graphs);
  const CountVector out_deg = merged.y.rowwise().sum();
  const CountVector out_max = merged.trials.rowwise().sum();
  const CountVector in_deg = merged.y.colwise().sum().transpose();
  const CountVector in_max = merged.trials.colwise().sum().transpose();
  const char* out_name = spec.directed() ? "out-degree" : "degree";
  for (int i = 0; i < spec.n; ++i) {
    if (out_deg(i) == 0 || out_deg(i) == out_max(i)) {
      return {false, std::string(out_name) + " of node " + std::to_string(i) + " is " + std::to_string(out_deg(i)) +
                         (out_deg(i) == 0 ? " (zero)" : " (saturated)")};
    }
  }
  if (spec.directed()) {
    for (int i = 0; i + 1 < spec.n; ++i) {
      if (in_deg(i) == 0 || in_deg(i) == in_max(i)) {
        return {false, "in-degree of node " + std::to_string(i) + " is " + std::to_string(in_deg(i)) +
                           (in_deg(i) == 0 ? " (zero)" : " (saturated)")};
      }
    }
  }
  return {};
}

inline void require_existence(const ModelSpec& spec, const PanelObservations& data) {
  if (auto check = check_existence(spec, data); !check) {
    throw Error(ErrorKind::NonexistentMLE, "no finite ML estimate: " + check.detail);
  }
}

namespace detail {

// log sum_j N_ij / (e^{-r_j} + e^{s_i}) for one row of the undirected or directed map.
inline double log_scaled_sum(const CountMatrix& trials, int i, bool transpose, double s_i,
                             const Eigen::VectorXd& other) {
  double acc = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < trials.rows(); ++j) {
    const Count t = transpose ? trials(j, i) : trials(i, j);
    if (j == i || t == 0) continue;
    acc = log_add_exp(acc, std::log(static_cast<double>(t)) - log_add_exp(-other(j), s_i));
  }
  return acc;
}

template <typename Map>
FitResult iterate_fixed_point(const ModelSpec& spec, const PanelObservations& data, const FitOptions& opts,
                              Map&& phi) {
  validate(opts);
  FitResult result;
  ParameterVector z = opts.init ? *opts.init : ParameterVector::Zero(spec.num_params());
  check_theta(spec, z);
  for (int m = 1; m <= opts.max_iter; ++m) {
    ParameterVector next = phi(z);
    if (!next.allFinite()) {
      throw Error(ErrorKind::NotConverged, "iterate became non-finite at iteration " + std::to_string(m));
    }
    result.final_step_norm = (next - z).norm();
    result.iterations = m;
    z = std::move(next);
    // A small step alone can hide a slowly contracting map; also require the
    // first-order conditions to hold to 10 tol.
    if (result.final_step_norm < opts.tol &&
        moment_residual(spec, z, data).lpNorm<Eigen::Infinity>() < 10.0 * opts.tol) {
      result.converged = true;
      break;
    }
  }
  if (!result.converged && opts.require_convergence) {
    throw Error(ErrorKind::NotConverged, "no convergence after " + std::to_string(opts.max_iter) +
                                             " iterations (last step norm " + std::to_string(result.final_step_norm) + ")");
  }
  result.theta_hat = std::move(z);
  result.moment_residual_norm = moment_residual(spec, result.theta_hat, data).lpNorm<Eigen::Infinity>();
  result.log_likelihood = log_likelihood_kernel(spec, result.theta_hat, data);
  return result;
}

}  // namespace detail

inline FitResult fit_undirected(const GraphObservations& data, const FitOptions& opts = {}) {
  validate(data);
  const ModelSpec spec = ModelSpec::undirected(data.n);
  const PanelObservations panel = PanelObservations::single(data);
  require_existence(spec, panel);
  Eigen::VectorXd log_deg = data.y.rowwise().sum().cast<double>().array().log();
  return detail::iterate_fixed_point(spec, panel, opts, [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd next(data.n);
    for (int i = 0; i < data.n; ++i) next(i) = log_deg(i) - detail::log_scaled_sum(data.trials, i, false, z(i), z);
    return next;
  });
}

inline FitResult fit_directed(const GraphObservations& data, const FitOptions& opts = {}) {
  validate(data);
  if (!data.directed) throw Error(ErrorKind::ShapeMismatch, "fit_directed needs directed data");
  const int n = data.n;
  const ModelSpec spec = ModelSpec::directed(n);
  const PanelObservations panel = PanelObservations::single(data);
  require_existence(spec, panel);
  const Eigen::VectorXd log_out = data.y.rowwise().sum().cast<double>().array().log();
  const Eigen::VectorXd log_in = data.y.colwise().sum().transpose().cast<double>().array().log();
  return detail::iterate_fixed_point(spec, panel, opts, [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd alpha = z.head(n);
    Eigen::VectorXd beta(n);
    beta.head(n - 1) = z.tail(n - 1);
    beta(n - 1) = 0.0;
    Eigen::VectorXd next(2 * n - 1);
    for (int i = 0; i < n; ++i) next(i) = log_out(i) - detail::log_scaled_sum(data.trials, i, false, alpha(i), beta);
    for (int i = 0; i + 1 < n; ++i)
      next(n + i) = log_in(i) - detail::log_scaled_sum(data.trials, i, true, beta(i), alpha);
    return next;
  });
}

namespace detail {

// Root in delta of f(delta) = sum_l x_l (d_l - e^{x_l delta} s_l); f is nonincreasing.
inline double solve_slot(const std::vector<double>& x, const std::vector<double>& d, const std::vector<double>& s,
                         double root_tol, const std::string& slot_name) {
  std::vector<std::size_t> active;
  for (std::size_t l = 0; l < x.size(); ++l)
    if (x[l] != 0.0) active.push_back(l);
  if (active.empty()) return 0.0;  // covariate identically zero: slot is not identified

  // Closed form when all nonzero covariates share one value c (intercepts, indicators).
  const double c = x[active.front()];
  bool common = true;
  for (std::size_t l : active) common = common && x[l] == c;
  if (common) {
    double sd = 0.0, ss = 0.0;
    for (std::size_t l : active) {
      sd += d[l];
      ss += s[l];
    }
    if (ss == 0.0) return 0.0;
    if (sd == 0.0) throw Error(ErrorKind::BracketFailure, "slot " + slot_name + " has zero degree statistic");
    return std::log(sd / ss) / c;
  }

  auto f = [&](double delta) {
    double v = 0.0;
    for (std::size_t l : active) {
      v += x[l] * d[l];
      if (s[l] != 0.0) v -= x[l] * std::exp(x[l] * delta) * s[l];
    }
    return v;
  };
  const double f0 = f(0.0);
  if (f0 == 0.0) return 0.0;
  double lo = 0.0, hi = 0.0;
  const double dir = f0 > 0.0 ? 1.0 : -1.0;
  double step = 1.0;
  bool found = false;
  for (int doubling = 0; doubling <= 60; ++doubling, step *= 2.0) {
    const double probe = dir * step;
    if ((f(probe) > 0.0) != (f0 > 0.0)) {
      lo = std::min(0.0, probe);
      hi = std::max(0.0, probe);
      if (doubling > 0) (dir > 0 ? lo : hi) = dir * step / 2.0;
      found = true;
      break;
    }
  }
  if (!found) throw Error(ErrorKind::BracketFailure, "no sign change for slot " + slot_name + " within 60 doublings");
  double f_lo = f(lo);
  while (hi - lo > root_tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = f(mid);
    if ((f_mid > 0.0) == (f_lo > 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Fixed-point fit of the generalized (or generalized undirected) model.
/// Accepts the non-generalized variants as their K = 1 instances.
inline FitResult fit_generalized(const PanelObservations& data, const ModelSpec& spec, const FitOptions& opts = {}) {
  validate(data);
  check_compatible(spec, data);
  require_existence(spec, data);
  const int n = spec.n, K = spec.K, L = data.num_graphs();

  std::vector<Eigen::VectorXd> out_deg(L), in_deg(L);
  for (int l = 0; l < L; ++l) {
    out_deg[l] = data.graphs[l].y.rowwise().sum().cast<double>();
    in_deg[l] = data.graphs[l].y.colwise().sum().transpose().cast<double>();
  }

  return detail::iterate_fixed_point(spec, data, opts, [&](const ParameterVector& z) {
    const Coefficients c = unpack(spec, z);
    // Expected successes of one node in graph l, given that node's coefficient row.
    auto node_expectation = [&](int l, int node, bool receiver, const Eigen::VectorXd& own) {
      const GraphObservations& g = data.graphs[l];
      const Eigen::VectorXd x = data.design.x.row(l).transpose();
      const Eigen::MatrixXd& others = receiver ? c.sender : c.receiver;
      const double own_eta = own.dot(x);
      double s = 0.0;
      for (int j = 0; j < n; ++j) {
        const Count trials = receiver ? g.trials(j, node) : g.trials(node, j);
        if (j == node || trials == 0) continue;
        s += static_cast<double>(trials) * sigmoid(own_eta + others.row(j).dot(x));
      }
      return s;
    };
    ParameterVector next = z;
    std::vector<double> x(L), d(L), s(L);
    // Slots of one node are solved in turn, each against the node's freshest row;
    // different nodes are solved against the previous iterate.
    auto update_node = [&](int node, bool receiver) {
      Eigen::VectorXd own = (receiver ? c.receiver : c.sender).row(node).transpose();
      for (int k = 0; k < K; ++k) {
        for (int l = 0; l < L; ++l) {
          x[l] = data.design.x(l, k);
          d[l] = receiver ? in_deg[l](node) : out_deg[l](node);
          s[l] = node_expectation(l, node, receiver, own);
        }
        const std::string name = std::string(receiver ? "receiver" : "sender") + "(" + std::to_string(node) + "," +
                                 std::to_string(k) + ")";
        own(k) += detail::solve_slot(x, d, s, opts.root_tol, name);
        next(receiver ? spec.receiver_index(node, k) : spec.sender_index(node, k)) = own(k);
      }
    };
    for (int i = 0; i < n; ++i) update_node(i, false);
    if (spec.directed()) {
      for (int i = 0; i + 1 < n; ++i) update_node(i, true);
    }
    return next;
  });
}

/// Dispatches to the iteration matching the model variant.
inline FitResult fit(const ModelSpec& spec, const PanelObservations& data, const FitOptions& opts = {}) {
  const bool plain = data.num_graphs() == 1 && data.design.dim() == 1 && data.design.x(0, 0) == 1.0;
  if (spec.variant == Variant::Undirected && plain) {
    check_compatible(spec, data);
    return fit_undirected(data.graphs.front(), opts);
  }
  if (spec.variant == Variant::Directed && plain) {
    check_compatible(spec, data);
    return fit_directed(data.graphs.front(), opts);
  }
  return fit_generalized(data, spec, opts);
}

}  // namespace betagraph
