#pragma once

// Fisher information, its inverse (the Cramer-Rao bound), and the closed-form
// inverses of the homogeneous special cases.

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "betagraph/error.hpp"
#include "betagraph/graph_data.hpp"
#include "betagraph/models.hpp"
#include "betagraph/numeric.hpp"

namespace betagraph {

struct FimResult {
  Eigen::MatrixXd fim;
  Eigen::MatrixXd inverse;
  Eigen::VectorXd crb_diag;
  std::vector<std::string> ordering;
};

struct FimInverse {
  Eigen::MatrixXd inverse;
  Eigen::VectorXd crb_diag;
};

inline constexpr double kPivotFloor = 1e-12;

/// Inverts a symmetric positive-definite information matrix through a pivoted
/// LDL' factorization. Throws SingularFim when the smallest pivot is below
/// 1e-12 times the largest.
inline FimInverse invert_fim(const Eigen::MatrixXd& fim) {
  if (fim.rows() != fim.cols() || fim.rows() == 0) throw Error(ErrorKind::ShapeMismatch, "FIM must be square and nonempty");
  const Eigen::MatrixXd sym = 0.5 * (fim + fim.transpose());
  Eigen::LDLT<Eigen::MatrixXd> ldlt(sym);
  const Eigen::VectorXd pivots = ldlt.vectorD();
  const double largest = pivots.cwiseAbs().maxCoeff();
  const double smallest = pivots.minCoeff();
  if (ldlt.info() != Eigen::Success || !(largest > 0.0) || smallest < kPivotFloor * largest) {
    throw Error(ErrorKind::SingularFim, "information matrix is singular (pivot ratio " +
                                            std::to_string(smallest / largest) + ")");
  }
  FimInverse out;
  out.inverse = ldlt.solve(Eigen::MatrixXd::Identity(fim.rows(), fim.cols()));
  out.inverse = 0.5 * (out.inverse + out.inverse.transpose()).eval();
  out.crb_diag = out.inverse.diagonal();
  return out;
}

namespace detail {

inline FimResult finish(Eigen::MatrixXd fim, std::vector<std::string> ordering) {
  FimResult r;
  FimInverse inv = invert_fim(fim);
  r.fim = std::move(fim);
  r.inverse = std::move(inv.inverse);
  r.crb_diag = std::move(inv.crb_diag);
  r.ordering = std::move(ordering);
  return r;
}

// N_ij p_ij (1 - p_ij) for every ordered pair of one graph.
inline Eigen::MatrixXd binomial_variances(const Coefficients& c, const GraphObservations& g, const Eigen::VectorXd& x) {
  const Eigen::MatrixXd eta = linear_predictor(c, x);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(g.n, g.n);
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      if (i != j) w(i, j) = static_cast<double>(g.trials(i, j)) * logistic_variance(eta(i, j));
  return w;
}

}  // namespace detail

/// Information matrix of the undirected model: diagonal sum_q N_iq p(1-p),
/// off-diagonal N_ij p(1-p).
inline Eigen::MatrixXd fisher_information_undirected(const ParameterVector& theta, const GraphObservations& data) {
  const ModelSpec spec = ModelSpec::undirected(data.n);
  const Eigen::MatrixXd w = detail::binomial_variances(unpack(spec, theta), data, Eigen::VectorXd::Ones(1));
  Eigen::MatrixXd fim = w;
  fim.diagonal() = w.rowwise().sum();
  return fim;
}

/// Information matrix of the directed model in [alpha | beta_{0..n-2}] blocks.
inline Eigen::MatrixXd fisher_information_directed(const ParameterVector& theta, const GraphObservations& data) {
  const int n = data.n;
  const ModelSpec spec = ModelSpec::directed(n);
  const Eigen::MatrixXd w = detail::binomial_variances(unpack(spec, theta), data, Eigen::VectorXd::Ones(1));
  Eigen::MatrixXd fim = Eigen::MatrixXd::Zero(2 * n - 1, 2 * n - 1);
  fim.topLeftCorner(n, n).diagonal() = w.rowwise().sum();
  fim.bottomRightCorner(n - 1, n - 1).diagonal() = w.colwise().sum().head(n - 1).transpose();
  fim.topRightCorner(n, n - 1) = w.leftCols(n - 1);
  fim.bottomLeftCorner(n - 1, n) = w.leftCols(n - 1).transpose();
  return fim;
}

/// Information matrix of a generalized (or generalized undirected) model;
/// also valid for the K = 1 variants.
inline Eigen::MatrixXd fisher_information(const ModelSpec& spec, const ParameterVector& theta,
                                          const PanelObservations& data) {
  check_compatible(spec, data);
  const Coefficients c = unpack(spec, theta);
  const int n = spec.n, K = spec.K;
  Eigen::MatrixXd fim = Eigen::MatrixXd::Zero(spec.num_params(), spec.num_params());
  for (int l = 0; l < data.num_graphs(); ++l) {
    const Eigen::VectorXd x = data.design.x.row(l).transpose();
    const Eigen::MatrixXd xx = x * x.transpose();
    const Eigen::MatrixXd w = detail::binomial_variances(c, data.graphs[l], x);
    const Eigen::VectorXd out_w = w.rowwise().sum();
    const Eigen::VectorXd in_w = w.colwise().sum().transpose();
    for (int i = 0; i < n; ++i) {
      fim.block(spec.sender_index(i, 0), spec.sender_index(i, 0), K, K) += out_w(i) * xx;
    }
    if (spec.directed()) {
      for (int i = 0; i + 1 < n; ++i) {
        fim.block(spec.receiver_index(i, 0), spec.receiver_index(i, 0), K, K) += in_w(i) * xx;
      }
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j + 1 < n; ++j) {
          if (i == j) continue;
          fim.block(spec.sender_index(i, 0), spec.receiver_index(j, 0), K, K) += w(i, j) * xx;
          fim.block(spec.receiver_index(j, 0), spec.sender_index(i, 0), K, K) += w(i, j) * xx;
        }
      }
    } else {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (i != j) fim.block(spec.sender_index(i, 0), spec.sender_index(j, 0), K, K) += w(i, j) * xx;
    }
  }
  return fim;
}

inline FimResult fim_undirected(const ParameterVector& theta, const GraphObservations& data) {
  check_theta(ModelSpec::undirected(data.n), theta);
  return detail::finish(fisher_information_undirected(theta, data), ModelSpec::undirected(data.n).parameter_labels());
}

inline FimResult fim_directed(const ParameterVector& theta, const GraphObservations& data) {
  if (!data.directed) throw Error(ErrorKind::ShapeMismatch, "fim_directed needs directed data");
  check_theta(ModelSpec::directed(data.n), theta);
  return detail::finish(fisher_information_directed(theta, data), ModelSpec::directed(data.n).parameter_labels());
}

inline FimResult fim_generalized(const ParameterVector& theta, const PanelObservations& data, const ModelSpec& spec) {
  return detail::finish(fisher_information(spec, theta, data), spec.parameter_labels());
}

/// FIM and CRB for any variant, evaluated at theta.
inline FimResult fim_for(const ModelSpec& spec, const ParameterVector& theta, const PanelObservations& data) {
  const bool plain = data.num_graphs() == 1 && data.design.dim() == 1 && data.design.x(0, 0) == 1.0;
  check_compatible(spec, data);
  if (spec.variant == Variant::Undirected && plain) return fim_undirected(theta, data.graphs.front());
  if (spec.variant == Variant::Directed && plain) return fim_directed(theta, data.graphs.front());
  return fim_generalized(theta, data, spec);
}

// ---------------------------------------------------------------------------
// Closed forms for the homogeneous special cases

inline Eigen::MatrixXd kronecker(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// (a I_n + b 1_n)^{-1} = I_n / a - (b / a) / (a + b n) 1_n, with 1_n the all-ones matrix.
inline Eigen::MatrixXd sherman_morrison_inverse(double a, double b, int n) {
  if (n < 1 || a == 0.0 || a + b * n == 0.0) {
    throw Error(ErrorKind::DegenerateInput, "a I + b 1 is singular for a=" + std::to_string(a) +
                                                ", b=" + std::to_string(b) + ", n=" + std::to_string(n));
  }
  return Eigen::MatrixXd::Identity(n, n) / a - Eigen::MatrixXd::Constant(n, n, b / a / (a + b * n));
}

namespace detail {

inline void check_special_case(int n, double trials, double p) {
  if (n <= 2) throw Error(ErrorKind::InvalidSpecialCase, "closed forms need n > 2");
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::InvalidSpecialCase, "closed forms need 0 < p < 1");
  if (!(trials >= 1.0)) throw Error(ErrorKind::InvalidSpecialCase, "closed forms need N >= 1");
}

// The directed inverse FIM with the 1 / (N p (1-p)) factor removed.
inline Eigen::MatrixXd directed_inverse_pattern(int n) {
  const double nd = n;
  const int m = n - 1;
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(2 * n - 1, 2 * n - 1);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(m, m);
  // alpha block
  P.topLeftCorner(m, m) = (nd - 1) / (nd * (nd - 2)) * (I + (nd * nd - 3 * nd + 1) / ((nd - 1) * (nd - 1)) * ones);
  P.block(0, m, m, 1).setConstant(1.0 / (nd - 1));
  P.block(m, 0, 1, m).setConstant(1.0 / (nd - 1));
  P(m, m) = (2 * nd - 3) / ((nd - 1) * (nd - 2));
  // alpha-beta block
  Eigen::MatrixXd ab(n, m);
  ab.topRows(m) = (nd - 1) * ones - I;
  ab.bottomRows(1).setConstant(nd);
  ab *= -1.0 / (nd * (nd - 2));
  P.topRightCorner(n, m) = ab;
  P.bottomLeftCorner(m, n) = ab.transpose();
  // beta block
  P.bottomRightCorner(m, m) = (nd - 1) / (nd * (nd - 2)) * (I + ones);
  return P;
}

inline Eigen::MatrixXd covariate_information(const CovariateDesign& design, const Eigen::VectorXd& coef, double scale) {
  if (coef.size() != design.dim()) throw Error(ErrorKind::ShapeMismatch, "coefficient length must equal K");
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(design.dim(), design.dim());
  for (int l = 0; l < design.num_graphs(); ++l) {
    const Eigen::VectorXd x = design.x.row(l).transpose();
    info += logistic_variance(scale * coef.dot(x)) * x * x.transpose();
  }
  return info;
}

inline Eigen::MatrixXd invert_covariate_information(const Eigen::MatrixXd& info) {
  try {
    return invert_fim(info).inverse;
  } catch (const Error&) {
    throw Error(ErrorKind::InvalidSpecialCase, "covariate information is singular (need L >= K and full-rank design)");
  }
}

}  // namespace detail

/// Inverse FIM of the undirected model with N_ij = N and all beta_i equal.
inline Eigen::MatrixXd closed_form_crb_undirected(int n, double trials, double p) {
  detail::check_special_case(n, trials, p);
  return sherman_morrison_inverse(n - 2.0, 1.0, n) / (trials * p * (1.0 - p));
}

/// Inverse FIM of the directed model with N_ij = N, all alpha_i equal and beta = 0.
inline Eigen::MatrixXd closed_form_crb_directed(int n, double trials, double p) {
  detail::check_special_case(n, trials, p);
  return detail::directed_inverse_pattern(n) / (trials * p * (1.0 - p));
}

/// Inverse FIM of the generalized model with N_ij,l = N, alpha_i = alpha for
/// all i and beta = 0: (1/N) [directed pattern] kron Ix^{-1},
/// Ix = sum_l p(x_l)(1 - p(x_l)) x_l x_l'.
inline Eigen::MatrixXd closed_form_crb_generalized(int n, double trials, const CovariateDesign& design,
                                                   const Eigen::VectorXd& alpha) {
  detail::check_special_case(n, trials, 0.5);
  const Eigen::MatrixXd ix = detail::covariate_information(design, alpha, 1.0);
  return kronecker(detail::directed_inverse_pattern(n) / trials, detail::invert_covariate_information(ix));
}

/// Generalized undirected analogue with beta_i = beta for all i; its FIM is
/// N((n-2) I + 1) kron Ix with p(x) = sigmoid(2 beta'x).
inline Eigen::MatrixXd closed_form_crb_generalized_undirected(int n, double trials, const CovariateDesign& design,
                                                              const Eigen::VectorXd& beta) {
  detail::check_special_case(n, trials, 0.5);
  const Eigen::MatrixXd ix = detail::covariate_information(design, beta, 2.0);
  return kronecker(sherman_morrison_inverse(n - 2.0, 1.0, n) / trials, detail::invert_covariate_information(ix));
}

/// Per-parameter variance bound of the homogeneous undirected model.
inline double scalar_crb_undirected(int n, double trials, double p) {
  detail::check_special_case(n, trials, p);
  const double nd = n;
  return (2 * nd - 3) / (2 * (nd - 1) * (nd - 2)) / (trials * p * (1 - p));
}

struct DirectedScalarCrb {
  double alpha_i;  // i < n
  double alpha_n;  // last node
  double beta_i;   // i < n
};

inline DirectedScalarCrb scalar_crb_directed(int n, double trials, double p) {
  detail::check_special_case(n, trials, p);
  const double nd = n;
  const double s = 1.0 / (trials * p * (1 - p));
  return {s * (2 * nd - 1) / (nd * (nd - 1)), s * (2 * nd - 3) / ((nd - 1) * (nd - 2)),
          s * 2 * (nd - 1) / (nd * (nd - 2))};
}

}  // namespace betagraph
