#include <gtest/gtest.h>

#include <random>

#include "betagraph/experiments.hpp"
#include "betagraph/hypothesis.hpp"
#include "oracles.hpp"

using namespace betagraph;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::InvalidArgument;
}

// Directed graph drawn under alpha_i = beta_i ~ U(-rho, rho); resampled until the degree screen passes.
GraphObservations null_directed(int n, Count trials, double rho, Rng& rng) {
  const ModelSpec spec = ModelSpec::directed(n);
  for (;;) {
    const ParameterVector theta = draw_directionality_theta(n, rho, true, rng);
    GraphObservations g = sample_graph(spec, theta, GraphObservations::uniform_trials(n, true, trials).trials, rng);
    if (!has_degenerate_degrees(g)) return g;
  }
}

double ks_uniform(std::vector<double> v) {
  return ks_statistic(v, [](double x) { return std::clamp(x, 0.0, 1.0); });
}

}  // namespace

TEST(ChiSquare, ReferenceValues) {
  EXPECT_EQ(chi_square_sf(0.0, 1), 1.0);
  EXPECT_EQ(chi_square_sf(0.0, 9), 1.0);
  EXPECT_NEAR(chi_square_sf(2.0 * std::log(20.0), 2), 0.05, 1e-15);
  for (double x : {0.1, 1.0, 3.0, 7.5, 20.0}) EXPECT_NEAR(chi_square_sf(x, 2), std::exp(-x / 2), 1e-15);
  // Frozen from an independent statistical library.
  EXPECT_NEAR(chi_square_sf(3.841458820694124, 1), 0.05, 1e-12);
  EXPECT_NEAR(chi_square_sf(16.918977604620448, 9), 0.05, 1e-12);
  EXPECT_NEAR(chi_square_sf(0.5, 1), 0.47950012218695337, 1e-12);
  EXPECT_NEAR(chi_square_sf(100.0, 10), 5.4497019829205215e-17, 1e-26);
}

TEST(ChiSquare, MatchesQuadratureOracle) {
  for (double x : {0.5, 2.0, 9.0, 16.0, 30.0}) {
    EXPECT_NEAR(chi_square_sf(x, 9), oracle::chi_square_survival(x, 9), 1e-8) << x;
    EXPECT_NEAR(chi_square_pdf(x, 9), oracle::chi_square_density(x, 9), 1e-14);
  }
  EXPECT_NEAR(chi_square_sf(9.0, 9), 0.43727418891386693, 1e-12);
}

TEST(Significance, IdenticalModelsGiveZero) {
  // A zero covariate column leaves the alternative equal to the null.
  Rng rng(1);
  const ModelSpec spec = ModelSpec::generalized_undirected(5, 2);
  PanelObservations layout;
  layout.design = CovariateDesign{(Eigen::MatrixXd(2, 2) << 1, 0, 1, 0).finished()};
  layout.graphs.assign(2, GraphObservations::uniform_trials(5, false, 10));
  const PanelObservations p = sample_panel(spec, ParameterVector::Zero(10), layout, rng);
  const TestResult r = glrt_significance(p, Variant::GeneralizedUndirected, 1);
  EXPECT_EQ(r.lambda_log, 0.0);
  EXPECT_EQ(r.p_wilks, 1.0);
  EXPECT_EQ(r.df, 5);
}

TEST(Significance, DegreesOfFreedomAndNullExpansion) {
  Rng rng(2);
  const ModelSpec spec = ModelSpec::generalized(4, 2);
  PanelObservations layout;
  layout.design = CovariateDesign{(Eigen::MatrixXd(3, 2) << 1, 0, 1, 1, 1, 0.5).finished()};
  layout.graphs.assign(3, GraphObservations::uniform_trials(4, true, 15));
  const PanelObservations p = sample_panel(spec, ParameterVector::Zero(spec.num_params()), layout, rng);
  const TestResult r = glrt_significance(p, Variant::Generalized, 1);
  EXPECT_EQ(r.df, 2 * 4 - 1);
  EXPECT_GE(r.lambda_log, 0.0);
  const ParameterVector expanded = expand_null_theta(spec, r.fit_null.theta_hat, 1);
  EXPECT_NEAR(log_likelihood_kernel(spec, expanded, p), r.fit_null.log_likelihood, 1e-10);
  for (int s = 1; s < spec.num_params(); s += 2) EXPECT_EQ(expanded(s), 0.0);
}

TEST(Significance, SingleCovariateNullIsHalf) {
  Rng rng(3);
  const ModelSpec spec = ModelSpec::generalized_undirected(4, 1);
  PanelObservations layout;
  layout.design = CovariateDesign::intercept_only(2);
  layout.graphs.assign(2, GraphObservations::uniform_trials(4, false, 10));
  const PanelObservations p = sample_panel(spec, ParameterVector::Constant(4, 0.4), layout, rng);
  const TestResult r = glrt_significance(p, Variant::GeneralizedUndirected, 0);
  EXPECT_EQ(r.fit_null.theta_hat.size(), 0);
  EXPECT_NEAR(r.fit_null.log_likelihood, -2 * 6 * 10 * std::log(2.0), 1e-9);
}

TEST(Significance, PValuesUnderNullLookUniform) {
  Rng rng(4);
  const ModelSpec spec = ModelSpec::generalized_undirected(6, 2);
  PanelObservations layout;
  layout.design = CovariateDesign{(Eigen::MatrixXd(2, 2) << 1, 1, 1, 0).finished()};
  layout.graphs.assign(2, GraphObservations::uniform_trials(6, false, 10));
  std::vector<double> pv;
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::mt19937 gen(5);
  while (pv.size() < 300) {
    Coefficients c{Eigen::MatrixXd::Zero(6, 2), Eigen::MatrixXd::Zero(6, 2)};
    for (int i = 0; i < 6; ++i) c.sender(i, 0) = u(gen);
    c.receiver = c.sender;
    const PanelObservations p = sample_panel(spec, pack(spec, c), layout, rng);
    if (has_degenerate_degrees(p)) continue;
    pv.push_back(glrt_significance(p, Variant::GeneralizedUndirected, 1).p_wilks);
  }
  EXPECT_LT(ks_uniform(pv), 0.1);
}

TEST(Directionality, SymmetricDataGivesZero) {
  Rng rng(6);
  const GraphObservations u = sample_graph(ModelSpec::undirected(6), ParameterVector::Constant(6, 0.1),
                                           GraphObservations::uniform_trials(6, false, 10).trials, rng);
  GraphObservations d = u;
  d.directed = true;
  const TestResult r = glrt_directionality(d);
  EXPECT_LT(r.lambda_log, 1e-8);
  EXPECT_NEAR(r.p_wilks, 1.0, 1e-6);
  EXPECT_EQ(r.df, 5);
}

TEST(Directionality, StronglyAsymmetricInstance) {
  GraphObservations g = GraphObservations::uniform_trials(3, true, 10);
  g.y << 0, 10, 5, 0, 0, 5, 5, 5, 0;
  const TestResult r = glrt_directionality(g);
  EXPECT_GT(r.lambda_log, 9.21034037197618);
  // Cross-check both likelihood maxima with the brute-force maximizer.
  const auto alt = oracle::maximize({Variant::Directed, 3, 1}, PanelObservations::single(g), Eigen::VectorXd::Zero(5));
  const auto null = oracle::maximize({Variant::Undirected, 3, 1}, PanelObservations::single(symmetrize(g)), Eigen::VectorXd::Zero(3));
  Eigen::VectorXd null_directed(5);
  null_directed << null.arg(0) + null.arg(2), null.arg(1) + null.arg(2), 2 * null.arg(2), null.arg(0) - null.arg(2),
      null.arg(1) - null.arg(2);
  const double expected = 2.0 * (alt.value - oracle::log_likelihood({Variant::Directed, 3, 1}, null_directed, PanelObservations::single(g)));
  EXPECT_NEAR(r.lambda_log, expected, 1e-6);
}

TEST(Directionality, RelabelingInvariance) {
  Rng rng(7);
  const ModelSpec spec = ModelSpec::directed(5);
  const GraphObservations g = sample_graph(spec, draw_directionality_theta(5, 0.8, false, rng),
                                           GraphObservations::uniform_trials(5, true, 10).trials, rng);
  const int perm[] = {2, 4, 0, 1, 3};
  GraphObservations h = GraphObservations::empty(5, true);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      h.y(perm[i], perm[j]) = g.y(i, j);
      h.trials(perm[i], perm[j]) = g.trials(i, j);
    }
  EXPECT_NEAR(glrt_directionality(g).lambda_log, glrt_directionality(h).lambda_log, 1e-7);
}

TEST(Bootstrap, ZeroStatisticGivesOne) {
  Rng rng(8);
  const GraphObservations u = sample_graph(ModelSpec::undirected(5), ParameterVector::Zero(5),
                                           GraphObservations::uniform_trials(5, false, 10).trials, rng);
  GraphObservations d = u;
  d.directed = true;
  TestOptions o;
  o.bootstrap_sims = 100;
  o.seed = 3;
  const TestResult r = run_test(DirectionalityTest{d}, o);
  ASSERT_TRUE(r.p_bootstrap);
  EXPECT_NEAR(*r.p_bootstrap, 1.0, 1e-12);
  EXPECT_EQ(r.num_sims, 100);
  o.bootstrap_sims = 50;
  EXPECT_EQ(kind_of([&] { run_test(DirectionalityTest{d}, o); }), ErrorKind::InvalidArgument);
}

TEST(Bootstrap, DeterministicAcrossThreadCounts) {
  Rng rng(9);
  const GraphObservations g = null_directed(6, 10, 0.4, rng);
  TestOptions o;
  o.bootstrap_sims = 120;
  o.seed = 77;
  const TestResult a = run_test(DirectionalityTest{g}, o);
  o.threads = 3;
  const TestResult b = run_test(DirectionalityTest{g}, o);
  EXPECT_EQ(*a.p_bootstrap, *b.p_bootstrap);
  EXPECT_EQ(a.discarded, b.discarded);
  o.seed = 78;
  EXPECT_NO_THROW(run_test(DirectionalityTest{g}, o));
}

TEST(Bootstrap, AgreesWithWilksAtModerateSize) {
  Rng rng(10);
  const GraphObservations g = null_directed(10, 10, 0.4, rng);
  TestOptions o;
  o.bootstrap_sims = 5000;
  o.seed = 11;
  const TestResult r = run_test(DirectionalityTest{g}, o);
  EXPECT_NEAR(*r.p_bootstrap, r.p_wilks, 0.03) << "lambda " << r.lambda_log;
}

TEST(Bootstrap, PValuesUnderNullLookUniform) {
  Rng rng(12);
  std::vector<double> pv;
  TestOptions o;
  o.bootstrap_sims = 200;
  for (int rep = 0; rep < 500; ++rep) {
    const GraphObservations g = null_directed(5, 10, 0.4, rng);
    o.seed = 1000 + rep;
    pv.push_back(*run_test(DirectionalityTest{g}, o).p_bootstrap);
  }
  EXPECT_LT(ks_uniform(pv), 0.08);
}
