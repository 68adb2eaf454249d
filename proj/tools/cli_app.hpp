#pragma once

// Command-line front end. run() is separate from main() so tests can drive it
// with captured streams.

#include "CLI11.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "betagraph.hpp"

namespace betagraph::cli {

enum ExitCode { kOk = 0, kUsage = 2, kData = 3, kNumerical = 4 };

namespace detail {

inline Json fit_to_json(const ModelSpec& spec, const FitResult& f) {
  return Json{{"model", to_string(spec.variant)},
              {"n", spec.n},
              {"K", spec.K},
              {"labels", spec.parameter_labels()},
              {"theta_hat", vector_to_json(f.theta_hat)},
              {"converged", f.converged},
              {"iterations", f.iterations},
              {"final_step_norm", f.final_step_norm},
              {"moment_residual_norm", f.moment_residual_norm},
              {"log_likelihood", f.log_likelihood}};
}

inline Json fim_to_json(const FimResult& r) {
  return Json{{"ordering", r.ordering},
              {"crb_diag", vector_to_json(r.crb_diag)},
              {"fim", matrix_to_json(r.fim)},
              {"inverse", matrix_to_json(r.inverse)}};
}

inline Json test_to_json(const std::string& name, const TestResult& r) {
  Json j{{"test", name},
         {"lambda_log", r.lambda_log},
         {"df", r.df},
         {"p_wilks", r.p_wilks},
         {"p_bootstrap", r.p_bootstrap ? Json(*r.p_bootstrap) : Json(nullptr)},
         {"num_sims", r.num_sims},
         {"discarded", r.discarded},
         {"theta_null", vector_to_json(r.fit_null.theta_hat)},
         {"theta_alt", vector_to_json(r.fit_alt.theta_hat)},
         {"log_likelihood_null", r.fit_null.log_likelihood},
         {"log_likelihood_alt", r.fit_alt.log_likelihood}};
  return j;
}

inline PanelObservations load_panel(const std::string& data_path, const std::string& covariates_path,
                                    bool covariates_header) {
  PanelFile pf = read_panel(data_path);
  PanelObservations panel;
  panel.graphs = std::move(pf.graphs);
  if (!covariates_path.empty()) {
    panel.design = read_covariates_csv(betagraph::detail::read_text(covariates_path), covariates_header, covariates_path);
  } else if (pf.design) {
    panel.design = *pf.design;
  } else {
    panel.design = CovariateDesign::intercept_only(static_cast<int>(panel.graphs.size()));
  }
  validate(panel);
  return panel;
}

inline std::vector<double> read_number_list(const Json& j, const char* key, const std::string& where) {
  const Json& v = betagraph::detail::require_field(j, key, where);
  if (!v.is_array() || v.empty()) throw Error(ErrorKind::SchemaError, where + ": '" + key + "' must be a nonempty array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw Error(ErrorKind::SchemaError, where + ": '" + key + "' must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

template <typename T>
T value_or(const Json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return betagraph::detail::field_as<T>(j, key, where);
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  betagraph::detail::write_text(path, text);
}

inline std::string csv_row(std::initializer_list<double> values) {
  std::string s;
  bool first = true;
  for (double v : values) {
    if (!first) s += ',';
    first = false;
    s += format_number(v);
  }
  return s + "\n";
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Estimation, Cramer-Rao bounds and likelihood ratio tests for beta-models of random graphs",
               "betagraph"};
  app.require_subcommand(1);
  bool json_errors = false;
  app.add_flag("--json-errors", json_errors, "Report errors as JSON on stderr");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Maximum-likelihood fit; prints the FitResult as JSON");
  std::string model, data_path, covariates_path;
  bool covariates_header = false;
  double tol = FitOptions{}.tol;
  int max_iter = FitOptions{}.max_iter;
  fit_cmd->add_option("--model", model, "undirected | directed | generalized | generalized-undirected")->required();
  fit_cmd->add_option("--data", data_path, "Graph or panel file (.json edge counts or .csv dense)")->required();
  fit_cmd->add_option("--covariates", covariates_path, "Covariate CSV, one row per graph");
  fit_cmd->add_flag("--covariates-header", covariates_header, "Covariate CSV has a header line");
  fit_cmd->add_option("--tol", tol, "Stopping tolerance on the step norm")->capture_default_str();
  fit_cmd->add_option("--max-iter", max_iter, "Iteration cap")->capture_default_str();

  // crb
  auto* crb_cmd = app.add_subcommand("crb", "Fisher information and Cramer-Rao bounds; prints the FimResult as JSON");
  std::string params_path;
  bool closed_form = false;
  int cf_n = 0;
  double cf_trials = 0.0, cf_p = 0.5;
  std::vector<double> cf_coef;
  crb_cmd->add_option("--model", model, "Model variant")->required();
  crb_cmd->add_option("--params", params_path, "Parameter JSON (array or {\"theta\": [...]}); default: fit --data");
  crb_cmd->add_option("--data", data_path, "Graph or panel file supplying the trial counts");
  crb_cmd->add_option("--covariates", covariates_path, "Covariate CSV");
  crb_cmd->add_flag("--covariates-header", covariates_header, "Covariate CSV has a header line");
  crb_cmd->add_flag("--closed-form", closed_form, "Use the homogeneous closed form instead of assembling the FIM");
  crb_cmd->add_option("--n", cf_n, "Closed form: node count");
  crb_cmd->add_option("--trials", cf_trials, "Closed form: trials per dyad");
  crb_cmd->add_option("--p", cf_p, "Closed form: edge probability (undirected, directed)");
  crb_cmd->add_option("--coef", cf_coef, "Closed form: common coefficient vector (generalized variants)");

  // test
  auto* test_cmd = app.add_subcommand("test", "Generalized likelihood ratio tests; prints the TestResult as JSON");
  test_cmd->require_subcommand(1);
  int bootstrap = 0, threads = 1;
  double test_tol = TestOptions{}.fit.tol;
  std::uint64_t seed = 0;
  auto add_test_common = [&](CLI::App* c) {
    c->add_option("--data", data_path, "Graph or panel file")->required();
    c->add_option("--bootstrap", bootstrap, "Parametric bootstrap replicates (0 disables, else >= 100)");
    c->add_option("--seed", seed, "Bootstrap seed");
    c->add_option("--threads", threads, "Bootstrap worker threads");
    c->add_option("--tol", test_tol, "Fit tolerance")->capture_default_str();
  };
  auto* sig_cmd = test_cmd->add_subcommand("significance", "H0: the coefficients of one covariate are all zero");
  int covariate = 0;
  std::string sig_model;
  add_test_common(sig_cmd);
  sig_cmd->add_option("--covariate", covariate, "0-based covariate column")->required();
  sig_cmd->add_option("--model", sig_model, "generalized | generalized-undirected (default: from the data)");
  sig_cmd->add_option("--covariates", covariates_path, "Covariate CSV");
  sig_cmd->add_flag("--covariates-header", covariates_header, "Covariate CSV has a header line");
  auto* dir_cmd = test_cmd->add_subcommand("directionality", "H0: alpha_i = beta_i for every node");
  add_test_common(dir_cmd);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Simulation studies; writes CSV tables");
  sim_cmd->require_subcommand(1);
  std::string config_path, out_dir;
  std::optional<int> num_sims_override;
  auto add_sim_common = [&](CLI::App* c) {
    c->add_option("--config", config_path, "Experiment config JSON")->required();
    c->add_option("--seed", seed, "RNG seed");
    c->add_option("--out", out_dir, "Output directory")->required();
    c->add_option("--threads", threads, "Replicate worker threads");
    c->add_option("--num-sims", num_sims_override, "Override num_sims from the config");
  };
  auto* rmse_cmd = sim_cmd->add_subcommand("rmse", "RMSE of one coordinate against its Cramer-Rao bound");
  auto* roc_cmd = sim_cmd->add_subcommand("roc", "ROC of the directionality test");
  auto* wilks_cmd = sim_cmd->add_subcommand("wilks", "Null distribution of the directionality statistic");
  for (auto* c : {rmse_cmd, roc_cmd, wilks_cmd}) add_sim_common(c);

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Bin a contact list into a panel JSON");
  std::string contacts_path, windows_path, whitelist_path, ingest_out;
  int trials_per_window = 1;
  ingest_cmd->add_option("--contacts", contacts_path, "Contact file: 't i j ...' per line")->required();
  ingest_cmd->add_option("--windows", windows_path, "Window file: 'start end graph' per line")->required();
  ingest_cmd->add_option("--whitelist", whitelist_path, "Node ids to keep, in index order");
  ingest_cmd->add_option("--trials-per-window", trials_per_window, "Bernoulli trials per window")->capture_default_str();
  ingest_cmd->add_option("--out", ingest_out, "Output panel JSON (default: stdout)");

  // case-study
  auto* case_cmd = app.add_subcommand("case-study", "Time-of-day and day covariate analysis of a contact list");
  std::vector<std::int64_t> day_starts;
  std::int64_t window_seconds = 3600;
  int windows_per_day = 3;
  int case_bootstrap = 1000;
  case_cmd->add_option("--contacts", contacts_path, "Contact file")->required();
  case_cmd->add_option("--out", out_dir, "Output directory for report.json")->required();
  case_cmd->add_option("--whitelist", whitelist_path, "Node ids to keep");
  case_cmd->add_option("--day-starts", day_starts, "Start time of the first window on each day")->required();
  case_cmd->add_option("--window-seconds", window_seconds, "Window length")->capture_default_str();
  case_cmd->add_option("--windows-per-day", windows_per_day, "Windows per day (time-of-day categories)")
      ->capture_default_str();
  case_cmd->add_option("--bootstrap", case_bootstrap, "Bootstrap replicates per test (0 disables)")->capture_default_str();
  case_cmd->add_option("--seed", seed, "Bootstrap seed");
  case_cmd->add_option("--threads", threads, "Bootstrap worker threads");

  auto report = [&](int code, const std::string& kind, const std::string& message) {
    if (json_errors) {
      err << dump_json(Json{{"error", kind}, {"message", message}, {"exit_code", code}}, -1) << "\n";
    } else {
      err << "error: " << message << "\n";
    }
    return code;
  };

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    return report(kUsage, "UsageError", e.what());
  }

  try {
    if (*fit_cmd) {
      const PanelObservations panel = detail::load_panel(data_path, covariates_path, covariates_header);
      const Variant v = parse_variant(model);
      const ModelSpec spec{v, panel.n(), panel.design.dim()};
      FitOptions opts;
      opts.tol = tol;
      opts.max_iter = max_iter;
      out << dump_json(detail::fit_to_json(spec, fit(spec, panel, opts))) << "\n";
    } else if (*crb_cmd) {
      const Variant v = parse_variant(model);
      if (closed_form) {
        if (cf_n < 2 || !(cf_trials > 0.0)) return report(kUsage, "UsageError", "--closed-form needs --n >= 2 and --trials > 0");
        Eigen::MatrixXd inv;
        if (v == Variant::Undirected) {
          inv = closed_form_crb_undirected(cf_n, cf_trials, cf_p);
        } else if (v == Variant::Directed) {
          inv = closed_form_crb_directed(cf_n, cf_trials, cf_p);
        } else {
          if (covariates_path.empty()) return report(kUsage, "UsageError", "generalized closed form needs --covariates");
          const CovariateDesign d =
              read_covariates_csv(betagraph::detail::read_text(covariates_path), covariates_header, covariates_path);
          const Eigen::VectorXd coef = Eigen::Map<const Eigen::VectorXd>(cf_coef.data(), cf_coef.size());
          if (coef.size() != d.dim()) return report(kUsage, "UsageError", "--coef needs one value per covariate");
          inv = v == Variant::Generalized ? closed_form_crb_generalized(cf_n, cf_trials, d, coef)
                                          : closed_form_crb_generalized_undirected(cf_n, cf_trials, d, coef);
        }
        const int K = v == Variant::Generalized || v == Variant::GeneralizedUndirected ? static_cast<int>(cf_coef.size()) : 1;
        out << dump_json(Json{{"ordering", ModelSpec{v, cf_n, K}.parameter_labels()},
                              {"crb_diag", vector_to_json(inv.diagonal())},
                              {"inverse", matrix_to_json(inv)}})
            << "\n";
        return kOk;
      }
      if (data_path.empty()) return report(kUsage, "UsageError", "crb needs --data (trial counts) or --closed-form");
      const PanelObservations panel = detail::load_panel(data_path, covariates_path, covariates_header);
      const ModelSpec spec{v, panel.n(), panel.design.dim()};
      check_compatible(spec, panel);
      ParameterVector theta;
      if (!params_path.empty()) {
        theta = params_from_json(parse_json(betagraph::detail::read_text(params_path), params_path), params_path);
        check_theta(spec, theta);
      } else {
        theta = fit(spec, panel, FitOptions{}).theta_hat;
      }
      out << dump_json(detail::fim_to_json(fim_for(spec, theta, panel))) << "\n";
    } else if (*test_cmd) {
      TestOptions opts;
      opts.fit.tol = test_tol;
      opts.bootstrap_sims = bootstrap;
      opts.seed = seed;
      opts.threads = threads;
      if (*sig_cmd) {
        const PanelObservations panel = detail::load_panel(data_path, covariates_path, covariates_header);
        const Variant v = sig_model.empty() ? (panel.directed() ? Variant::Generalized : Variant::GeneralizedUndirected)
                                            : parse_variant(sig_model);
        const TestResult r = run_test(SignificanceTest{panel, v, covariate}, opts);
        out << dump_json(detail::test_to_json("significance", r)) << "\n";
      } else {
        const PanelFile pf = read_panel(data_path);
        if (pf.graphs.size() != 1) return report(kData, "SchemaError", "directionality test takes a single graph");
        const TestResult r = run_test(DirectionalityTest{pf.graphs[0]}, opts);
        out << dump_json(detail::test_to_json("directionality", r)) << "\n";
      }
    } else if (*sim_cmd) {
      const Json cfg = parse_json(betagraph::detail::read_text(config_path), config_path);
      const std::string& where = config_path;
      std::filesystem::create_directories(out_dir);
      const std::filesystem::path dir(out_dir);
      const int num_sims = num_sims_override.value_or(detail::value_or<int>(cfg, "num_sims", 2000, where));
      if (*rmse_cmd) {
        RmseConfig rc;
        rc.variant = parse_variant(detail::value_or<std::string>(cfg, "variant", "undirected", where));
        rc.n = detail::value_or<int>(cfg, "n", rc.n, where);
        rc.trials = detail::value_or<Count>(cfg, "trials", rc.trials, where);
        rc.p_grid = detail::read_number_list(cfg, "p_grid", where);
        if (cfg.contains("covariates")) rc.design = design_from_json(cfg.at("covariates"), where);
        rc.num_sims = num_sims;
        rc.seed = seed;
        rc.threads = threads;
        const auto rows = rmse_vs_crb(rc);
        std::string csv = "p,rmse,crb,valid,discarded\n";
        for (const auto& r : rows) csv += detail::csv_row({r.p, r.rmse, r.crb, double(r.valid), double(r.discarded)});
        detail::write_file(dir / "rmse.csv", csv);
        out << csv;
      } else {
        DirectionalityConfig dc;
        dc.n = detail::value_or<int>(cfg, "n", dc.n, where);
        dc.trials = detail::value_or<Count>(cfg, "trials", dc.trials, where);
        dc.rho_grid = cfg.contains("rho_grid") ? detail::read_number_list(cfg, "rho_grid", where) : dc.rho_grid;
        dc.bins = detail::value_or<int>(cfg, "bins", dc.bins, where);
        dc.num_sims = num_sims;
        dc.seed = seed;
        dc.threads = threads;
        if (*roc_cmd) {
          const auto curves = roc_directionality(dc);
          std::string roc = "rho,threshold,fpr,tpr\n", auc = "rho,auc,discarded\n";
          for (const auto& c : curves) {
            for (const auto& p : c.points)
              roc += detail::csv_row({c.rho, p.threshold, p.false_positive_rate, p.true_positive_rate});
            auc += detail::csv_row({c.rho, c.auc, double(c.discarded)});
          }
          detail::write_file(dir / "roc.csv", roc);
          detail::write_file(dir / "auc.csv", auc);
          out << auc;
        } else {
          const WilksResult w = wilks_histogram(dc);
          std::string hist = "bin_left,bin_right,mass,chi2_pdf_at_center\n";
          for (const auto& b : w.histogram) hist += detail::csv_row({b.left, b.right, b.mass, b.chi2_pdf_at_center});
          detail::write_file(dir / "histogram.csv", hist);
          const std::string summary = dump_json(Json{{"df", w.df},
                                                     {"ks_statistic", w.ks_statistic},
                                                     {"mean", w.mean},
                                                     {"valid", w.statistics.size()},
                                                     {"discarded", w.discarded}});
          detail::write_file(dir / "wilks.json", summary + "\n");
          out << summary << "\n";
        }
      }
    } else if (*ingest_cmd) {
      BinningSpec spec;
      spec.windows = read_windows(windows_path);
      if (!whitelist_path.empty()) spec.node_whitelist = read_whitelist(whitelist_path);
      const ContactPanel cp = ingest_contacts(read_contacts(contacts_path), spec, trials_per_window);
      const std::string text = dump_json(panel_to_json(cp.graphs, cp.node_ids)) + "\n";
      if (ingest_out.empty()) {
        out << text;
      } else {
        detail::write_file(ingest_out, text);
      }
    } else if (*case_cmd) {
      CaseStudyOptions o;
      if (!whitelist_path.empty()) o.whitelist = read_whitelist(whitelist_path);
      o.day_starts = day_starts;
      o.window_seconds = window_seconds;
      o.windows_per_day = windows_per_day;
      o.test.bootstrap_sims = case_bootstrap;
      o.test.seed = seed;
      o.test.threads = threads;
      const CaseStudyReport rep = case_study(read_contacts(contacts_path), o);
      Json tests = Json::array();
      for (const auto& t : rep.tests) tests.push_back(detail::test_to_json(t.label, t.result));
      const Eigen::VectorXd lower = rep.regression.theta_hat - rep.crb_std;
      const Eigen::VectorXd upper = rep.regression.theta_hat + rep.crb_std;
      const Json j{{"node_ids", rep.node_ids},
                   {"edge_ratio", rep.edge_ratio},
                   {"tests", tests},
                   {"regression",
                    {{"labels", rep.regression_spec.parameter_labels()},
                     {"theta_hat", vector_to_json(rep.regression.theta_hat)},
                     {"crb_std", vector_to_json(rep.crb_std)},
                     {"lower", vector_to_json(lower)},
                     {"upper", vector_to_json(upper)},
                     {"coefficient_means", vector_to_json(rep.coefficient_means)},
                     {"converged", rep.regression.converged},
                     {"iterations", rep.regression.iterations}}}};
      std::filesystem::create_directories(out_dir);
      const std::string text = dump_json(j) + "\n";
      detail::write_file(std::filesystem::path(out_dir) / "report.json", text);
      out << text;
    }
  } catch (const Error& e) {
    return report(is_numerical(e.kind()) ? kNumerical : kData, std::string(to_string(e.kind())), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return report(kData, "IoError", e.what());
  }
  return kOk;
}

}  // namespace betagraph::cli
