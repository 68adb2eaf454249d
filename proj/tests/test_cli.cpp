#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli_app.hpp"

using namespace betagraph;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "betagraph_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::string write(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p.string();
}

std::string symmetric_n3() {
  return write("sym3.json", R"({"n": 3, "directed": false, "counts": [
    {"i": 0, "j": 1, "y": 1, "trials": 2}, {"i": 0, "j": 2, "y": 1, "trials": 2}, {"i": 1, "j": 2, "y": 1, "trials": 2}]})");
}

}  // namespace

TEST(Cli, FitSymmetricInstance) {
  const CliRun r = run({"fit", "--model", "undirected", "--data", symmetric_n3()});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = parse_json(r.out);
  EXPECT_TRUE(j["converged"].get<bool>());
  for (const auto& t : j["theta_hat"]) EXPECT_EQ(t.get<double>(), 0.0);
}

TEST(Cli, FitNonexistentMleExitsFour) {
  const std::string path = write("ones.json", R"({"n": 3, "directed": false, "counts": [
    {"i": 0, "j": 1, "y": 1, "trials": 1}, {"i": 0, "j": 2, "y": 1, "trials": 1}, {"i": 1, "j": 2, "y": 1, "trials": 1}]})");
  const CliRun r = run({"fit", "--model", "undirected", "--data", path});
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("NonexistentMLE"), std::string::npos);
  const CliRun j = run({"--json-errors", "fit", "--model", "undirected", "--data", path});
  EXPECT_EQ(parse_json(j.err)["error"], "NonexistentMLE");
  EXPECT_EQ(parse_json(j.err)["exit_code"], 4);
}

TEST(Cli, CrbAtZeroParameters) {
  GraphObservations g = GraphObservations::uniform_trials(10, false, 10);
  const std::string data = (scratch() / "n10.json").string();
  write_graph(data, g);
  const std::string params = write("zeros.json", "[0,0,0,0,0,0,0,0,0,0]");
  const CliRun r = run({"crb", "--model", "undirected", "--params", params, "--data", data});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = parse_json(r.out);
  for (const auto& v : j["crb_diag"]) EXPECT_NEAR(v.get<double>(), 0.047222222222222221, 1e-12);
  const CliRun c = run({"crb", "--model", "undirected", "--closed-form", "--n", "10", "--trials", "10", "--p", "0.5"});
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_NEAR(parse_json(c.out)["crb_diag"][0].get<double>(), 0.047222222222222221, 1e-15);
}

TEST(Cli, UsageErrorsAndHelp) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"fit", "--model", "undirected", "--data", symmetric_n3(), "--bogus"}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  for (const char* sub : {"fit", "crb", "test", "simulate", "ingest", "case-study"}) {
    const CliRun h = run({sub, "--help"});
    EXPECT_EQ(h.code, 0) << sub;
    EXPECT_NE(h.out.find("--"), std::string::npos) << sub;
  }
  const CliRun fit_help = run({"fit", "--help"});
  for (const char* flag : {"--model", "--data", "--covariates", "--tol", "--max-iter"})
    EXPECT_NE(fit_help.out.find(flag), std::string::npos) << flag;
}

TEST(Cli, DataErrorsExitThree) {
  const std::string bad = write("bad.json", "{\"n\": 3, ");
  EXPECT_EQ(run({"fit", "--model", "undirected", "--data", bad}).code, 3);
  EXPECT_EQ(run({"fit", "--model", "undirected", "--data", (scratch() / "missing.json").string()}).code, 3);
  EXPECT_EQ(run({"fit", "--model", "directed", "--data", symmetric_n3()}).code, 3);
  const std::string short_csv = write("short.csv", "3,false\n0/0,1/2,1/2\n1/2,0/0,1/2\n");
  const CliRun r = run({"fit", "--model", "undirected", "--data", short_csv});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("SchemaError"), std::string::npos);
}

TEST(Cli, TestSubcommands) {
  Rng rng(3);
  const GraphObservations g = sample_graph(ModelSpec::directed(6), draw_directionality_theta(6, 0.5, false, rng),
                                           GraphObservations::uniform_trials(6, true, 10).trials, rng);
  const std::string data = (scratch() / "dir6.json").string();
  write_graph(data, g);
  const CliRun d = run({"test", "directionality", "--data", data, "--bootstrap", "100", "--seed", "4"});
  ASSERT_EQ(d.code, 0) << d.err;
  const Json j = parse_json(d.out);
  EXPECT_EQ(j["df"], 5);
  EXPECT_TRUE(j["p_bootstrap"].is_number());
  EXPECT_EQ(run({"test", "directionality", "--data", data, "--bootstrap", "100", "--seed", "4"}).out, d.out);

  const ModelSpec spec = ModelSpec::generalized_undirected(5, 2);
  PanelObservations layout;
  layout.design = CovariateDesign{(Eigen::MatrixXd(2, 2) << 1, 1, 1, 0).finished()};
  layout.graphs.assign(2, GraphObservations::uniform_trials(5, false, 10));
  const PanelObservations p = sample_panel(spec, ParameterVector::Zero(10), layout, rng);
  const std::string panel = write("panel.json", dump_json(panel_to_json(p.graphs, {})));
  const std::string cov = write("cov.csv", "x0,x1\n1,1\n1,0\n");
  const CliRun s = run({"test", "significance", "--data", panel, "--covariates", cov, "--covariates-header", "--covariate", "1"});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_EQ(parse_json(s.out)["df"], 5);
  EXPECT_TRUE(parse_json(s.out)["p_bootstrap"].is_null());
}

TEST(Cli, SimulateWritesTables) {
  const std::string cfg = write("rmse.json", R"({"variant": "undirected", "n": 10, "trials": 10, "p_grid": [0.5, 0.7]})");
  const fs::path out = scratch() / "sim";
  const CliRun r = run({"simulate", "rmse", "--config", cfg, "--seed", "1", "--out", out.string(), "--num-sims", "100"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(out / "rmse.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "p,rmse,crb,valid,discarded");
  const CliRun again = run({"simulate", "rmse", "--config", cfg, "--seed", "1", "--out", out.string(), "--num-sims", "100", "--threads", "2"});
  EXPECT_EQ(again.out, r.out);

  const std::string dcfg = write("dir.json", R"({"n": 6, "trials": 10, "rho_grid": [0.2, 0.6], "bins": 10})");
  const CliRun roc = run({"simulate", "roc", "--config", dcfg, "--seed", "2", "--out", out.string(), "--num-sims", "50"});
  ASSERT_EQ(roc.code, 0) << roc.err;
  EXPECT_TRUE(fs::exists(out / "roc.csv"));
  const CliRun w = run({"simulate", "wilks", "--config", dcfg, "--seed", "2", "--out", out.string(), "--num-sims", "50"});
  ASSERT_EQ(w.code, 0) << w.err;
  EXPECT_EQ(parse_json(w.out)["df"], 5);
  EXPECT_TRUE(fs::exists(out / "histogram.csv"));
}

TEST(Cli, IngestAndCaseStudy) {
  std::string contacts;
  Rng rng(8);
  for (int d = 0; d < 3; ++d)
    for (int h = 0; h < 3; ++h)
      for (int i = 0; i < 5; ++i)
        for (int j = i + 1; j < 5; ++j)
          if (rng.uniform() < 0.5)
            contacts += std::to_string(d * 86400 + h * 3600 + 20 * (i + j)) + "\t" + std::to_string(i + 1) + "\t" +
                        std::to_string(j + 1) + "\tX\tY\n";
  const std::string cpath = write("contacts.dat", contacts);
  const std::string wpath = write("windows.txt", "0 3600 0\n3600 7200 1\n7200 10800 2\n");
  const std::string lpath = write("whitelist.txt", "1 2 3 4 5\n");
  const std::string opath = (scratch() / "panel_out.json").string();
  const CliRun ing = run({"ingest", "--contacts", cpath, "--windows", wpath, "--whitelist", lpath, "--out", opath});
  ASSERT_EQ(ing.code, 0) << ing.err;
  const PanelFile pf = read_panel(opath);
  EXPECT_EQ(pf.graphs.size(), 3u);
  EXPECT_EQ(pf.node_ids.front(), "1");

  const fs::path out = scratch() / "case";
  const CliRun cs = run({"case-study", "--contacts", cpath, "--out", out.string(), "--whitelist", lpath, "--day-starts", "0",
                      "86400", "172800", "--bootstrap", "0"});
  if (cs.code == 0) {
    const Json rep = parse_json(cs.out);
    EXPECT_EQ(rep["tests"].size(), 6u);
    EXPECT_TRUE(fs::exists(out / "report.json"));
  } else {
    // Small synthetic days can make a per-day fit degenerate; that must surface as a numerical failure.
    EXPECT_EQ(cs.code, 4) << cs.err;
  }
  EXPECT_EQ(run({"ingest", "--contacts", cpath, "--windows", write("empty.txt", "\n")}).code, 3);
}
