#pragma once

// Generalized likelihood ratio tests: significance of one covariate and
// directionality of a directed graph, with Wilks and parametric-bootstrap
// p-values.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "betagraph/error.hpp"
#include "betagraph/estimator.hpp"
#include "betagraph/graph_data.hpp"
#include "betagraph/models.hpp"
#include "betagraph/numeric.hpp"
#include "betagraph/simulation.hpp"

namespace betagraph {

inline constexpr double kLambdaNoiseFloor = 1e-8;

struct TestOptions {
  FitOptions fit = [] {
    FitOptions f;
    f.tol = 1e-8;
    return f;
  }();
  int bootstrap_sims = 0;  // 0 disables the bootstrap p-value
  std::uint64_t seed = 0;
  int threads = 1;
};

struct TestResult {
  double lambda_log = 0.0;  // -2 log Lambda
  int df = 0;
  double p_wilks = 1.0;
  std::optional<double> p_bootstrap;
  int num_sims = 0;
  int discarded = 0;
  FitResult fit_null;
  FitResult fit_alt;
};

/// H0: every coefficient of covariate `covariate` is zero.
struct SignificanceTest {
  PanelObservations data;
  Variant variant = Variant::GeneralizedUndirected;
  int covariate = 0;
};

/// H0: alpha_i = beta_i for all i (the graph is undirected).
struct DirectionalityTest {
  GraphObservations data;
};

using HypothesisTest = std::variant<SignificanceTest, DirectionalityTest>;

struct BootstrapResult {
  double p_value = 1.0;
  int num_sims = 0;
  int discarded = 0;
};

namespace detail {

inline double clamp_lambda(double lambda) {
  // Values a little below zero are optimizer noise; the null space lies in the alternative.
  return lambda < 0.0 ? 0.0 : lambda;
}

inline FitResult fit_or_fail(const ModelSpec& spec, const PanelObservations& data, const FitOptions& opts,
                             const char* side) {
  try {
    return fit(spec, data, opts);
  } catch (const Error& e) {
    if (!is_numerical(e.kind())) throw;
    throw Error(ErrorKind::FitFailed, std::string(side) + " fit failed: " + e.what());
  }
}

inline ModelSpec significance_alt_spec(const SignificanceTest& t) {
  if (t.variant != Variant::Generalized && t.variant != Variant::GeneralizedUndirected) {
    throw Error(ErrorKind::InvalidArgument, "significance tests need a generalized model");
  }
  const ModelSpec spec{t.variant, t.data.n(), t.data.design.dim()};
  if (t.covariate < 0 || t.covariate >= spec.K) {
    throw Error(ErrorKind::InvalidArgument, "covariate index " + std::to_string(t.covariate) + " out of range");
  }
  return spec;
}

}  // namespace detail

/// Alternative-layout parameters equal to `theta_null` with zeros in the
/// slots of the removed covariate.
inline ParameterVector expand_null_theta(const ModelSpec& alt, const ParameterVector& theta_null, int covariate) {
  ParameterVector out = ParameterVector::Zero(alt.num_params());
  if (alt.K == 1) return out;
  const ModelSpec null_spec{alt.variant, alt.n, alt.K - 1};
  const int rows = alt.directed() ? 2 * alt.n - 1 : alt.n;
  for (int r = 0; r < rows; ++r) {
    for (int k = 0, kn = 0; k < alt.K; ++k) {
      if (k == covariate) continue;
      out(r * alt.K + k) = theta_null(r * null_spec.K + kn++);
    }
  }
  return out;
}

inline TestResult glrt_significance(const PanelObservations& data, Variant variant, int covariate,
                                    const TestOptions& opts = {}) {
  validate(data);
  const SignificanceTest test{data, variant, covariate};
  const ModelSpec alt = detail::significance_alt_spec(test);

  TestResult r;
  r.fit_alt = detail::fit_or_fail(alt, data, opts.fit, "alternative");
  if (alt.K == 1) {
    // Nothing left under H0: every edge has probability 1/2.
    r.fit_null.theta_hat = ParameterVector(0);
    r.fit_null.converged = true;
    r.fit_null.final_step_norm = 0.0;
    r.fit_null.log_likelihood = log_likelihood_kernel(alt, ParameterVector::Zero(alt.num_params()), data);
    r.fit_null.moment_residual_norm = 0.0;
  } else {
    PanelObservations reduced{data.graphs, data.design.without_column(covariate)};
    r.fit_null = detail::fit_or_fail(ModelSpec{variant, alt.n, alt.K - 1}, reduced, opts.fit, "null");
  }
  r.lambda_log = detail::clamp_lambda(2.0 * (r.fit_alt.log_likelihood - r.fit_null.log_likelihood));
  r.df = alt.directed() ? 2 * alt.n - 1 : alt.n;
  r.p_wilks = chi_square_sf(r.lambda_log, r.df);
  return r;
}

inline TestResult glrt_directionality(const GraphObservations& data, const TestOptions& opts = {}) {
  validate(data);
  if (!data.directed) throw Error(ErrorKind::InvalidArgument, "directionality test needs directed data");
  const int n = data.n;
  const ModelSpec directed = ModelSpec::directed(n);
  const PanelObservations panel = PanelObservations::single(data);

  TestResult r;
  r.fit_alt = detail::fit_or_fail(directed, panel, opts.fit, "alternative");
  r.fit_null = detail::fit_or_fail(ModelSpec::undirected(n), PanelObservations::single(symmetrize(data)), opts.fit,
                                   "null");
  // Score the null estimate on the ordered pairs: p_ij = sigmoid(b_i + b_j).
  const Coefficients null_coef{r.fit_null.theta_hat, r.fit_null.theta_hat};
  const double null_ll = log_likelihood_kernel(directed, pack(directed, null_coef), panel);
  r.lambda_log = detail::clamp_lambda(2.0 * (r.fit_alt.log_likelihood - null_ll));
  r.df = n - 1;
  r.p_wilks = chi_square_sf(r.lambda_log, r.df);
  return r;
}

/// Test statistic without the bootstrap.
inline TestResult run_statistic(const HypothesisTest& test, const TestOptions& opts) {
  return std::visit(
      [&](const auto& t) -> TestResult {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, SignificanceTest>) {
          return glrt_significance(t.data, t.variant, t.covariate, opts);
        } else {
          return glrt_directionality(t.data, opts);
        }
      },
      test);
}

/// Replaces the observations of `test` with a draw from its fitted null model.
inline HypothesisTest simulate_null(const HypothesisTest& test, const TestResult& observed, Rng& rng) {
  return std::visit(
      [&](const auto& t) -> HypothesisTest {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, SignificanceTest>) {
          const ModelSpec alt = detail::significance_alt_spec(t);
          const ParameterVector theta = expand_null_theta(alt, observed.fit_null.theta_hat, t.covariate);
          return SignificanceTest{sample_panel(alt, theta, t.data, rng), t.variant, t.covariate};
        } else {
          const ModelSpec directed = ModelSpec::directed(t.data.n);
          const Coefficients coef{observed.fit_null.theta_hat, observed.fit_null.theta_hat};
          return DirectionalityTest{sample_graph(directed, pack(directed, coef), t.data.trials, rng)};
        }
      },
      test);
}

/// Parametric-bootstrap p-value (1 + #{sim >= observed}) / (valid + 1).
///
/// Replicates with a degenerate degree or a failed fit are discarded and
/// counted. Replicate k draws from stream (seed, k).
inline BootstrapResult bootstrap_pvalue(const HypothesisTest& test, const TestResult& observed, int num_sims,
                                        std::uint64_t seed, const TestOptions& opts = {}) {
  if (num_sims < 100) throw Error(ErrorKind::InvalidArgument, "bootstrap needs at least 100 simulations");
  std::vector<double> stats(num_sims, 0.0);
  std::vector<char> valid(num_sims, 0);
  TestOptions inner = opts;
  inner.bootstrap_sims = 0;
  parallel_for(num_sims, opts.threads, [&](std::size_t k) {
    Rng rng = Rng::stream(seed, k);
    const HypothesisTest sim = simulate_null(test, observed, rng);
    const bool degenerate = std::visit(
        [](const auto& t) { return has_degenerate_degrees(t.data); }, sim);
    if (degenerate) return;
    try {
      stats[k] = run_statistic(sim, inner).lambda_log;
      valid[k] = 1;
    } catch (const Error&) {
    }
  });
  BootstrapResult out;
  out.num_sims = num_sims;
  int exceed = 0, count = 0;
  for (int k = 0; k < num_sims; ++k) {
    if (!valid[k]) continue;
    ++count;
    if (stats[k] >= observed.lambda_log) ++exceed;
  }
  out.discarded = num_sims - count;
  if (2 * out.discarded > num_sims) {
    throw Error(ErrorKind::TooFewValidSims, std::to_string(out.discarded) + " of " + std::to_string(num_sims) +
                                                " bootstrap replicates were discarded");
  }
  out.p_value = (1.0 + exceed) / (count + 1.0);
  return out;
}

/// Statistic plus, when opts.bootstrap_sims > 0, the bootstrap p-value.
inline TestResult run_test(const HypothesisTest& test, const TestOptions& opts = {}) {
  TestResult r = run_statistic(test, opts);
  if (opts.bootstrap_sims > 0) {
    const BootstrapResult b = bootstrap_pvalue(test, r, opts.bootstrap_sims, opts.seed, opts);
    r.p_bootstrap = b.p_value;
    r.num_sims = b.num_sims;
    r.discarded = b.discarded;
  }
  return r;
}

}  // namespace betagraph
