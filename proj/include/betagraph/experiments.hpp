#pragma once

// Simulation studies (RMSE against the CRB, directionality ROC, Wilks
// histogram) and the contact-data case study.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "betagraph/error.hpp"
#include "betagraph/estimator.hpp"
#include "betagraph/fisher.hpp"
#include "betagraph/graph_data.hpp"
#include "betagraph/hypothesis.hpp"
#include "betagraph/models.hpp"
#include "betagraph/numeric.hpp"
#include "betagraph/simulation.hpp"

namespace betagraph {

/// Covariates of the generalized RMSE study: x_1 = [1 0], x_2 = [1 1].
inline CovariateDesign two_graph_design() {
  Eigen::MatrixXd x(2, 2);
  x << 1, 0, 1, 1;
  return CovariateDesign{x};
}

// ---------------------------------------------------------------------------
// RMSE against the CRB

struct RmseConfig {
  Variant variant = Variant::Undirected;
  int n = 10;
  Count trials = 10;
  std::vector<double> p_grid{0.5};  // p, or the average edge probability for generalized variants
  int num_sims = 2000;
  std::uint64_t seed = 1;
  int threads = 1;
  CovariateDesign design = two_graph_design();  // generalized variants only
  FitOptions fit;
};

struct RmseRow {
  double p = 0.0;
  double rmse = 0.0;
  double crb = 0.0;  // square root of the variance bound
  int valid = 0;
  int discarded = 0;
};

/// Homogeneous parameters and layout for one grid value of the RMSE study.
struct HomogeneousCase {
  ModelSpec spec;
  ParameterVector theta;
  PanelObservations layout;  // trials and design; y is zero
  int coordinate = 0;        // designated parameter
  Eigen::MatrixXd crb;       // closed-form inverse FIM
};

namespace detail {

// Scale s with mean_l sigmoid(factor * s * sum_k x_lk) = target.
inline double solve_scale_for_mean_probability(const CovariateDesign& design, double factor, double target) {
  auto mean_p = [&](double s) {
    double acc = 0.0;
    for (int l = 0; l < design.num_graphs(); ++l) acc += sigmoid(factor * s * design.x.row(l).sum());
    return acc / design.num_graphs();
  };
  double lo = -50.0, hi = 50.0;
  if (!(mean_p(lo) < target && mean_p(hi) > target)) {
    throw Error(ErrorKind::InvalidArgument, "average edge probability " + std::to_string(target) + " not reachable");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_p(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

inline HomogeneousCase homogeneous_case(const RmseConfig& cfg, double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::InvalidArgument, "grid values must lie in (0,1)");
  HomogeneousCase hc;
  const int n = cfg.n;
  const bool directed = cfg.variant == Variant::Directed || cfg.variant == Variant::Generalized;
  switch (cfg.variant) {
    case Variant::Undirected:
      hc.spec = ModelSpec::undirected(n);
      hc.theta = ParameterVector::Constant(n, 0.5 * logit(p));
      hc.layout = PanelObservations::single(GraphObservations::uniform_trials(n, false, cfg.trials));
      hc.crb = closed_form_crb_undirected(n, cfg.trials, p);
      break;
    case Variant::Directed:
      hc.spec = ModelSpec::directed(n);
      hc.theta = ParameterVector::Zero(2 * n - 1);
      hc.theta.head(n).setConstant(logit(p));
      hc.layout = PanelObservations::single(GraphObservations::uniform_trials(n, true, cfg.trials));
      hc.crb = closed_form_crb_directed(n, cfg.trials, p);
      break;
    case Variant::Generalized:
    case Variant::GeneralizedUndirected: {
      const int K = cfg.design.dim();
      const double factor = directed ? 1.0 : 2.0;
      const double s = detail::solve_scale_for_mean_probability(cfg.design, factor, p);
      const Eigen::VectorXd coef = Eigen::VectorXd::Constant(K, s);
      hc.spec = ModelSpec{cfg.variant, n, K};
      Coefficients c;
      c.sender = coef.transpose().replicate(n, 1);
      c.receiver = directed ? Eigen::MatrixXd::Zero(n, K) : c.sender;
      hc.theta = pack(hc.spec, c);
      hc.layout.design = cfg.design;
      hc.layout.graphs.assign(cfg.design.num_graphs(), GraphObservations::uniform_trials(n, directed, cfg.trials));
      hc.crb = directed ? closed_form_crb_generalized(n, cfg.trials, cfg.design, coef)
                        : closed_form_crb_generalized_undirected(n, cfg.trials, cfg.design, coef);
      break;
    }
  }
  hc.coordinate = 0;
  return hc;
}

inline std::vector<RmseRow> rmse_vs_crb(const RmseConfig& cfg) {
  if (cfg.num_sims < 1 || cfg.p_grid.empty()) throw Error(ErrorKind::InvalidArgument, "need num_sims >= 1 and a grid");
  std::vector<RmseRow> rows;
  for (std::size_t g = 0; g < cfg.p_grid.size(); ++g) {
    const HomogeneousCase hc = homogeneous_case(cfg, cfg.p_grid[g]);
    std::vector<double> sq(cfg.num_sims, 0.0);
    std::vector<char> ok(cfg.num_sims, 0);
    parallel_for(cfg.num_sims, cfg.threads, [&](std::size_t r) {
      Rng rng = Rng::stream(cfg.seed, r, g);
      const PanelObservations sim = sample_panel(hc.spec, hc.theta, hc.layout, rng);
      if (has_degenerate_degrees(sim)) return;
      try {
        const FitResult f = fit(hc.spec, sim, cfg.fit);
        const double e = f.theta_hat(hc.coordinate) - hc.theta(hc.coordinate);
        sq[r] = e * e;
        ok[r] = 1;
      } catch (const Error&) {
      }
    });
    RmseRow row;
    row.p = cfg.p_grid[g];
    double sum = 0.0;
    for (int r = 0; r < cfg.num_sims; ++r) {
      if (!ok[r]) continue;
      sum += sq[r];
      ++row.valid;
    }
    row.discarded = cfg.num_sims - row.valid;
    if (2 * row.discarded > cfg.num_sims) {
      throw Error(ErrorKind::TooFewValidSims, "more than half of the replicates discarded at p=" + std::to_string(row.p));
    }
    row.rmse = std::sqrt(sum / row.valid);
    row.crb = std::sqrt(hc.crb(hc.coordinate, hc.coordinate));
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Directionality ROC and the Wilks check

struct RocPoint {
  double threshold = 0.0;  // reject H0 when -2 log Lambda >= threshold
  double false_positive_rate = 0.0;
  double true_positive_rate = 0.0;
};

struct RocCurve {
  double rho = 0.0;
  std::vector<RocPoint> points;  // thresholds descending, from (0,0) to (1,1)
  double auc = 0.0;
  int discarded = 0;
};

/// Empirical ROC of "reject when score >= threshold", swept over every observed score.
inline RocCurve roc_curve(std::vector<double> positives, std::vector<double> negatives) {
  if (positives.empty() || negatives.empty()) throw Error(ErrorKind::InvalidArgument, "ROC needs both classes");
  std::sort(positives.begin(), positives.end(), std::greater<>());
  std::sort(negatives.begin(), negatives.end(), std::greater<>());
  std::vector<double> thresholds(positives);
  thresholds.insert(thresholds.end(), negatives.begin(), negatives.end());
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  RocCurve curve;
  const double np = positives.size(), nn = negatives.size();
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t ip = 0, in = 0;
  for (double t : thresholds) {
    while (ip < positives.size() && positives[ip] >= t) ++ip;
    while (in < negatives.size() && negatives[in] >= t) ++in;
    curve.points.push_back({t, in / nn, ip / np});
  }
  curve.points.push_back({-std::numeric_limits<double>::infinity(), 1.0, 1.0});
  for (std::size_t k = 1; k < curve.points.size(); ++k) {
    const auto& a = curve.points[k - 1];
    const auto& b = curve.points[k];
    curve.auc += (b.false_positive_rate - a.false_positive_rate) * 0.5 * (a.true_positive_rate + b.true_positive_rate);
  }
  return curve;
}

struct DirectionalityConfig {
  int n = 10;
  Count trials = 10;
  std::vector<double> rho_grid{0.1, 0.2, 0.3, 0.4};
  int num_sims = 2000;
  std::uint64_t seed = 1;
  int threads = 1;
  int bins = 30;  // histogram only
  TestOptions test;
};

/// Directed parameters with alpha_i, beta_i ~ U(-rho, rho) (beta_n = 0), or,
/// under H0, beta_i = alpha_i for all i.
inline ParameterVector draw_directionality_theta(int n, double rho, bool symmetric, Rng& rng) {
  const ModelSpec spec = ModelSpec::directed(n);
  Coefficients c;
  c.sender.resize(n, 1);
  c.receiver.resize(n, 1);
  for (int i = 0; i < n; ++i) c.sender(i, 0) = rng.uniform(-rho, rho);
  if (symmetric) {
    c.receiver = c.sender;
  } else {
    for (int i = 0; i + 1 < n; ++i) c.receiver(i, 0) = rng.uniform(-rho, rho);
    c.receiver(n - 1, 0) = 0.0;
  }
  return pack(spec, c);
}

namespace detail {

// -2 log Lambda for num_sims directed replicates; NaN marks a discarded one.
inline std::vector<double> directionality_statistics(const DirectionalityConfig& cfg, double rho, bool symmetric,
                                                     std::uint64_t tag) {
  const ModelSpec spec = ModelSpec::directed(cfg.n);
  const CountMatrix trials = GraphObservations::uniform_trials(cfg.n, true, cfg.trials).trials;
  std::vector<double> stats(cfg.num_sims, std::numeric_limits<double>::quiet_NaN());
  parallel_for(cfg.num_sims, cfg.threads, [&](std::size_t r) {
    Rng rng = Rng::stream(cfg.seed, r, tag);
    const ParameterVector theta = draw_directionality_theta(cfg.n, rho, symmetric, rng);
    const GraphObservations g = sample_graph(spec, theta, trials, rng);
    if (has_degenerate_degrees(g)) return;
    try {
      stats[r] = glrt_directionality(g, cfg.test).lambda_log;
    } catch (const Error&) {
    }
  });
  return stats;
}

inline std::vector<double> drop_nan(const std::vector<double>& v, int& discarded) {
  std::vector<double> out;
  for (double s : v)
    if (!std::isnan(s)) out.push_back(s);
  discarded += static_cast<int>(v.size() - out.size());
  return out;
}

}  // namespace detail

inline std::vector<RocCurve> roc_directionality(const DirectionalityConfig& cfg) {
  if (cfg.num_sims < 1 || cfg.rho_grid.empty()) throw Error(ErrorKind::InvalidArgument, "need num_sims >= 1 and a rho grid");
  std::vector<RocCurve> curves;
  for (std::size_t g = 0; g < cfg.rho_grid.size(); ++g) {
    const double rho = cfg.rho_grid[g];
    if (!(rho > 0.0)) throw Error(ErrorKind::InvalidArgument, "rho must be positive");
    int discarded = 0;
    auto pos = detail::drop_nan(detail::directionality_statistics(cfg, rho, false, 2 * g + 1), discarded);
    auto neg = detail::drop_nan(detail::directionality_statistics(cfg, rho, true, 2 * g), discarded);
    if (discarded > cfg.num_sims) throw Error(ErrorKind::TooFewValidSims, "more than half of the ROC replicates discarded");
    RocCurve c = roc_curve(std::move(pos), std::move(neg));
    c.rho = rho;
    c.discarded = discarded;
    curves.push_back(std::move(c));
  }
  return curves;
}

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  double mass = 0.0;
  double chi2_pdf_at_center = 0.0;
};

struct WilksResult {
  std::vector<double> statistics;
  std::vector<HistogramBin> histogram;
  double ks_statistic = 0.0;
  double mean = 0.0;
  int df = 0;
  int discarded = 0;
};

/// -2 log Lambda of the directionality test under H0 (alpha_i = beta_i ~ U(-rho, rho)).
inline WilksResult wilks_histogram(const DirectionalityConfig& cfg) {
  if (cfg.num_sims < 1 || cfg.rho_grid.empty() || cfg.bins < 1) throw Error(ErrorKind::InvalidArgument, "bad Wilks config");
  WilksResult w;
  w.df = cfg.n - 1;
  w.statistics = detail::drop_nan(detail::directionality_statistics(cfg, cfg.rho_grid.front(), true, 0), w.discarded);
  if (2 * w.discarded > cfg.num_sims) throw Error(ErrorKind::TooFewValidSims, "more than half of the replicates discarded");
  w.mean = std::accumulate(w.statistics.begin(), w.statistics.end(), 0.0) / w.statistics.size();
  const int df = w.df;
  w.ks_statistic = ks_statistic(w.statistics, [df](double x) { return chi_square_cdf(x, df); });
  const double top = *std::max_element(w.statistics.begin(), w.statistics.end());
  const double width = top > 0.0 ? top / cfg.bins : 1.0;
  w.histogram.resize(cfg.bins);
  for (int b = 0; b < cfg.bins; ++b) {
    w.histogram[b].left = b * width;
    w.histogram[b].right = (b + 1) * width;
    w.histogram[b].chi2_pdf_at_center = chi_square_pdf((b + 0.5) * width, df);
  }
  for (double s : w.statistics) {
    const int b = std::min(cfg.bins - 1, static_cast<int>(s / width));
    w.histogram[b].mass += 1.0 / w.statistics.size();
  }
  return w;
}

// ---------------------------------------------------------------------------
// Case study on contact data

struct CaseStudyOptions {
  std::vector<std::string> whitelist;      // empty: every node in the windows
  std::vector<std::int64_t> day_starts;    // time of the first window on each day
  std::int64_t window_seconds = 3600;
  int windows_per_day = 3;
  bool day_tests = true;                   // one indicator test per day (needs at least 2 days)
  TestOptions test;                        // bootstrap_sims > 0 adds simulated p-values
  FitOptions fit;                          // regression fit
};

struct CaseStudyTest {
  std::string label;
  TestResult result;
};

struct CaseStudyReport {
  std::vector<std::string> node_ids;
  double edge_ratio = 0.0;  // sum Y / sum N over all windows
  std::vector<CaseStudyTest> tests;
  ModelSpec regression_spec;
  FitResult regression;
  Eigen::VectorXd crb_std;
  Eigen::VectorXd coefficient_means;  // per covariate, averaged over nodes
};

namespace detail {

inline BinningSpec case_windows(const CaseStudyOptions& o, auto&& graph_of) {
  BinningSpec spec;
  if (!o.whitelist.empty()) spec.node_whitelist = o.whitelist;
  for (std::size_t d = 0; d < o.day_starts.size(); ++d) {
    for (int h = 0; h < o.windows_per_day; ++h) {
      const std::int64_t start = o.day_starts[d] + h * o.window_seconds;
      spec.windows.push_back({start, start + o.window_seconds, graph_of(static_cast<int>(d), h)});
    }
  }
  return spec;
}

}  // namespace detail

/// Time-of-day and day-of-week covariate analysis of a contact list.
inline CaseStudyReport case_study(const std::vector<ContactRecord>& records, const CaseStudyOptions& o) {
  if (o.day_starts.empty() || o.windows_per_day < 1 || o.window_seconds < 1) {
    throw Error(ErrorKind::NoWindows, "case study needs day starts and a positive window layout");
  }
  CaseStudyReport report;
  const ContactPanel pooled = ingest_contacts(records, detail::case_windows(o, [](int, int) { return 0; }));
  report.node_ids = pooled.node_ids;
  report.edge_ratio = static_cast<double>(pooled.graphs[0].total_successes()) / pooled.graphs[0].total_trials();

  Eigen::MatrixXd indicator_design(2, 2);
  indicator_design << 1, 1, 1, 0;
  auto indicator_test = [&](const std::string& label, auto&& selected) {
    const ContactPanel cp = ingest_contacts(
        records, detail::case_windows(o, [&](int d, int h) { return selected(d, h) ? 0 : 1; }));
    PanelObservations panel{cp.graphs, CovariateDesign{indicator_design}};
    const HypothesisTest test = SignificanceTest{panel, Variant::GeneralizedUndirected, 1};
    TestOptions topts = o.test;
    topts.seed = o.test.seed + report.tests.size();
    report.tests.push_back({label, run_test(test, topts)});
  };
  for (int h = 0; h < o.windows_per_day; ++h) {
    indicator_test("time-slot-" + std::to_string(h), [h](int, int hh) { return hh == h; });
  }
  if (o.day_tests && o.day_starts.size() > 1) {
    for (int d = 0; d < static_cast<int>(o.day_starts.size()); ++d) {
      indicator_test("day-" + std::to_string(d), [d](int dd, int) { return dd == d; });
    }
  }

  // Simultaneous regression on all time slots: x_h = [1, e_h], slot 0 as baseline.
  const int K = o.windows_per_day;
  const ContactPanel by_slot = ingest_contacts(records, detail::case_windows(o, [](int, int h) { return h; }));
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(K, K);
  x.col(0).setOnes();
  for (int h = 1; h < K; ++h) x(h, h) = 1.0;
  const PanelObservations panel{by_slot.graphs, CovariateDesign{x}};
  report.regression_spec = ModelSpec::generalized_undirected(static_cast<int>(report.node_ids.size()), K);
  report.regression = fit(report.regression_spec, panel, o.fit);
  const FimResult fim = fim_for(report.regression_spec, report.regression.theta_hat, panel);
  report.crb_std = fim.crb_diag.cwiseSqrt();
  const Coefficients c = unpack(report.regression_spec, report.regression.theta_hat);
  report.coefficient_means = c.sender.colwise().mean().transpose();
  return report;
}

}  // namespace betagraph
