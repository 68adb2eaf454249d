#pragma once

// File formats: edge-count JSON, dense CSV, covariate CSV, contact lists,
// window and whitelist files, and 17-digit JSON/CSV number rendering.

#include "json.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "betagraph/error.hpp"
#include "betagraph/graph_data.hpp"

namespace betagraph {

using Json = nlohmann::ordered_json;

/// %.17g; non-finite values render as the JSON-safe strings "inf", "-inf", "nan".
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline void dump_json(const Json& j, int indent, int depth, std::string& out) {
  const std::string pad = indent > 0 ? "\n" + std::string(indent * (depth + 1), ' ') : "";
  const std::string close = indent > 0 ? "\n" + std::string(indent * depth, ' ') : "";
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += '{';
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) out += ',';
      first = false;
      out += pad + Json(it.key()).dump() + (indent > 0 ? ": " : ":");
      dump_json(it.value(), indent, depth + 1, out);
    }
    out += close + '}';
  } else if (j.is_array()) {
    if (j.empty()) {
      out += "[]";
      return;
    }
    out += '[';
    bool first = true;
    for (const auto& v : j) {
      if (!first) out += ',';
      first = false;
      out += pad;
      dump_json(v, indent, depth + 1, out);
    }
    out += close + ']';
  } else if (j.is_number_float()) {
    const double v = j.get<double>();
    out += std::isfinite(v) ? format_number(v) : "\"" + format_number(v) + "\"";
  } else {
    out += j.dump();
  }
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path.string());
  out << text;
}

}  // namespace detail

/// JSON text with every floating-point number at 17 significant digits.
inline std::string dump_json(const Json& j, int indent = 2) {
  std::string out;
  detail::dump_json(j, indent, 0, out);
  return out;
}

/// Parses JSON, reporting failures as ParseError with line and column.
inline Json parse_json(const std::string& text, const std::string& source = "<input>") {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorKind::ParseError, source + ": line " + std::to_string(line) + ", column " + std::to_string(col) +
                                           " (offset " + std::to_string(e.byte) + "): " + e.what());
  }
}

namespace detail {

inline const Json& require_field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorKind::SchemaError, where + ": missing field '" + key + "'");
  return j.at(key);
}

template <typename T>
T field_as(const Json& j, const char* key, const std::string& where) {
  const Json& v = require_field(j, key, where);
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::SchemaError, where + ": field '" + key + "' has the wrong type");
  }
}

inline GraphObservations graph_from_counts(int n, bool directed, const Json& counts, const std::string& where) {
  if (n < 2) throw Error(ErrorKind::SchemaError, where + ": n must be >= 2");
  if (!counts.is_array()) throw Error(ErrorKind::SchemaError, where + ": 'counts' must be an array");
  GraphObservations g = GraphObservations::empty(n, directed);
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const std::string at = where + ": counts[" + std::to_string(k) + "]";
    const int i = field_as<int>(counts[k], "i", at);
    const int j = field_as<int>(counts[k], "j", at);
    const Count y = field_as<Count>(counts[k], "y", at);
    const Count t = field_as<Count>(counts[k], "trials", at);
    if (i < 0 || j < 0 || i >= n || j >= n) throw Error(ErrorKind::SchemaError, at + ": index out of range");
    if (i == j) {
      g.y(i, i) = y;
      g.trials(i, i) = t;
    } else {
      g.set(i, j, y, t);
    }
  }
  return g;
}

inline Json counts_to_json(const GraphObservations& g) {
  Json counts = Json::array();
  for (int i = 0; i < g.n; ++i) {
    for (int j = g.directed ? 0 : i + 1; j < g.n; ++j) {
      if (i == j || (g.y(i, j) == 0 && g.trials(i, j) == 0)) continue;
      counts.push_back({{"i", i}, {"j", j}, {"y", g.y(i, j)}, {"trials", g.trials(i, j)}});
    }
  }
  return counts;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Graphs

inline Json graph_to_json(const GraphObservations& g) {
  return Json{{"n", g.n}, {"directed", g.directed}, {"counts", detail::counts_to_json(g)}};
}

inline GraphObservations graph_from_json(const Json& j, const std::string& where = "graph") {
  const int n = detail::field_as<int>(j, "n", where);
  const bool directed = detail::field_as<bool>(j, "directed", where);
  GraphObservations g = detail::graph_from_counts(n, directed, detail::require_field(j, "counts", where), where);
  validate(g);
  return g;
}

/// Dense CSV: a header line "n,directed" (e.g. "3,false") followed by n rows
/// of n cells "y/trials".
inline std::string graph_to_csv(const GraphObservations& g) {
  std::string out = std::to_string(g.n) + "," + (g.directed ? "true" : "false") + "\n";
  for (int i = 0; i < g.n; ++i) {
    for (int j = 0; j < g.n; ++j) {
      if (j) out += ',';
      out += std::to_string(g.y(i, j)) + "/" + std::to_string(g.trials(i, j));
    }
    out += '\n';
  }
  return out;
}

inline GraphObservations graph_from_csv(const std::string& text, const std::string& where = "graph.csv") {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& what) {
    throw Error(ErrorKind::ParseError, where + ": line " + std::to_string(line_no) + ": " + what);
  };
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line()) throw Error(ErrorKind::SchemaError, where + ": missing header 'n,directed'");
  const auto comma = line.find(',');
  if (comma == std::string::npos) fail("header must be 'n,directed'");
  int n = 0;
  try {
    std::size_t used = 0;
    n = std::stoi(line.substr(0, comma), &used);
  } catch (const std::exception&) {
    fail("bad node count");
  }
  const std::string flag = line.substr(comma + 1);
  if (flag != "true" && flag != "false") fail("directed flag must be 'true' or 'false'");
  if (n < 2) fail("n must be >= 2");
  GraphObservations g = GraphObservations::empty(n, flag == "true");
  for (int i = 0; i < n; ++i) {
    if (!next_line()) {
      throw Error(ErrorKind::SchemaError, where + ": expected " + std::to_string(n) + " rows, found " + std::to_string(i));
    }
    std::istringstream row(line);
    std::string cell;
    int j = 0;
    while (std::getline(row, cell, ',')) {
      if (j >= n) fail("too many cells");
      const auto slash = cell.find('/');
      if (slash == std::string::npos) fail("cell '" + cell + "' is not 'y/trials'");
      try {
        std::size_t u1 = 0, u2 = 0;
        const std::string ys = cell.substr(0, slash), ts = cell.substr(slash + 1);
        g.y(i, j) = std::stoll(ys, &u1);
        g.trials(i, j) = std::stoll(ts, &u2);
        if (u1 != ys.size() || u2 != ts.size()) fail("cell '" + cell + "' is not 'y/trials'");
      } catch (const std::logic_error&) {
        fail("cell '" + cell + "' is not 'y/trials'");
      }
      ++j;
    }
    if (j != n) throw Error(ErrorKind::SchemaError, where + ": row " + std::to_string(i) + " has " + std::to_string(j) + " cells, expected " + std::to_string(n));
  }
  if (next_line()) fail("unexpected extra row");
  validate(g);
  return g;
}

enum class GraphFormat { Json, Csv };

inline GraphFormat format_for(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? GraphFormat::Csv : GraphFormat::Json;
}

inline void write_graph(const std::filesystem::path& path, const GraphObservations& g) {
  detail::write_text(path, format_for(path) == GraphFormat::Csv ? graph_to_csv(g) : dump_json(graph_to_json(g)) + "\n");
}

inline GraphObservations read_graph(const std::filesystem::path& path) {
  const std::string text = detail::read_text(path);
  if (format_for(path) == GraphFormat::Csv) return graph_from_csv(text, path.string());
  return graph_from_json(parse_json(text, path.string()), path.string());
}

// ---------------------------------------------------------------------------
// Panels: {"n", "directed", "node_ids"?, "graphs": [{"counts": [...]}, ...], "covariates"?: [[...], ...]}

struct PanelFile {
  std::vector<GraphObservations> graphs;
  std::vector<std::string> node_ids;
  std::optional<CovariateDesign> design;
};

inline Json design_to_json(const CovariateDesign& d) {
  Json rows = Json::array();
  for (int l = 0; l < d.num_graphs(); ++l) {
    Json row = Json::array();
    for (int k = 0; k < d.dim(); ++k) row.push_back(d.x(l, k));
    rows.push_back(row);
  }
  return rows;
}

inline CovariateDesign design_from_json(const Json& rows, const std::string& where) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
    throw Error(ErrorKind::SchemaError, where + ": covariates must be a nonempty array of rows");
  }
  CovariateDesign d;
  d.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t l = 0; l < rows.size(); ++l) {
    if (!rows[l].is_array() || rows[l].size() != rows[0].size()) {
      throw Error(ErrorKind::SchemaError, where + ": covariate rows differ in length");
    }
    for (std::size_t k = 0; k < rows[l].size(); ++k) {
      if (!rows[l][k].is_number()) throw Error(ErrorKind::SchemaError, where + ": covariates must be numbers");
      d.x(l, k) = rows[l][k].get<double>();
    }
  }
  validate(d);
  return d;
}

inline Json panel_to_json(const std::vector<GraphObservations>& graphs, const std::vector<std::string>& node_ids,
                          const CovariateDesign* design = nullptr) {
  if (graphs.empty()) throw Error(ErrorKind::InvalidArgument, "panel has no graphs");
  Json j{{"n", graphs[0].n}, {"directed", graphs[0].directed}};
  if (!node_ids.empty()) j["node_ids"] = node_ids;
  Json gs = Json::array();
  for (const auto& g : graphs) gs.push_back(Json{{"counts", detail::counts_to_json(g)}});
  j["graphs"] = gs;
  if (design) j["covariates"] = design_to_json(*design);
  return j;
}

/// Reads either a single-graph document or a panel document.
inline PanelFile panel_from_json(const Json& j, const std::string& where = "panel") {
  PanelFile pf;
  if (!j.contains("graphs")) {
    pf.graphs.push_back(graph_from_json(j, where));
  } else {
    const int n = detail::field_as<int>(j, "n", where);
    const bool directed = detail::field_as<bool>(j, "directed", where);
    const Json& gs = j.at("graphs");
    if (!gs.is_array() || gs.empty()) throw Error(ErrorKind::SchemaError, where + ": 'graphs' must be a nonempty array");
    for (std::size_t l = 0; l < gs.size(); ++l) {
      const std::string at = where + ": graphs[" + std::to_string(l) + "]";
      GraphObservations g = detail::graph_from_counts(n, directed, detail::require_field(gs[l], "counts", at), at);
      validate(g);
      pf.graphs.push_back(std::move(g));
    }
  }
  if (j.contains("node_ids")) pf.node_ids = detail::field_as<std::vector<std::string>>(j, "node_ids", where);
  if (j.contains("covariates")) pf.design = design_from_json(j.at("covariates"), where);
  return pf;
}

inline PanelFile read_panel(const std::filesystem::path& path) {
  if (format_for(path) == GraphFormat::Csv) return PanelFile{{read_graph(path)}, {}, std::nullopt};
  return panel_from_json(parse_json(detail::read_text(path), path.string()), path.string());
}

// ---------------------------------------------------------------------------
// Covariate CSV: L rows of K numbers, optionally preceded by a header line.

inline CovariateDesign read_covariates_csv(const std::string& text, bool has_header, const std::string& where = "covariates") {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  int line_no = 0;
  bool header_pending = has_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::logic_error&) {
        throw Error(ErrorKind::ParseError, where + ": line " + std::to_string(line_no) + ": '" + cell + "' is not a number");
      }
    }
    if (!rows.empty() && row.size() != rows[0].size()) {
      throw Error(ErrorKind::SchemaError, where + ": line " + std::to_string(line_no) + " has " + std::to_string(row.size()) +
                                              " columns, expected " + std::to_string(rows[0].size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorKind::SchemaError, where + ": no covariate rows");
  CovariateDesign d;
  d.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t l = 0; l < rows.size(); ++l)
    for (std::size_t k = 0; k < rows[l].size(); ++k) d.x(l, k) = rows[l][k];
  validate(d);
  return d;
}

inline std::string covariates_to_csv(const CovariateDesign& d) {
  std::string out;
  for (int l = 0; l < d.num_graphs(); ++l) {
    for (int k = 0; k < d.dim(); ++k) {
      if (k) out += ',';
      out += format_number(d.x(l, k));
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Contact lists, windows and whitelists

namespace detail {

// Calls row(line_no, tokens) for each nonblank, non-comment line.
template <typename Row>
void for_each_token_line(const std::string& text, Row&& row) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tokens;
    for (std::string tok; ls >> tok;) tokens.push_back(tok);
    if (!tokens.empty()) row(line_no, tokens);
  }
}

inline std::int64_t parse_int(const std::string& tok, const std::string& where, int line_no) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(tok, &used);
    if (used == tok.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw Error(ErrorKind::ParseError, where + ": line " + std::to_string(line_no) + ": '" + tok + "' is not an integer");
}

}  // namespace detail

/// Whitespace-delimited "t i j [extra columns...]".
inline std::vector<ContactRecord> parse_contacts(const std::string& text, const std::string& where = "contacts") {
  std::vector<ContactRecord> records;
  detail::for_each_token_line(text, [&](int line_no, const std::vector<std::string>& tok) {
    if (tok.size() < 3) {
      throw Error(ErrorKind::ParseError, where + ": line " + std::to_string(line_no) + ": expected 't i j'");
    }
    ContactRecord r{detail::parse_int(tok[0], where, line_no), tok[1], tok[2]};
    if (r.a == r.b) throw Error(ErrorKind::SelfLoop, where + ": line " + std::to_string(line_no) + ": contact of a node with itself");
    records.push_back(std::move(r));
  });
  return records;
}

/// "start end graph" per line.
inline std::vector<TimeWindow> parse_windows(const std::string& text, const std::string& where = "windows") {
  std::vector<TimeWindow> windows;
  detail::for_each_token_line(text, [&](int line_no, const std::vector<std::string>& tok) {
    if (tok.size() != 3) throw Error(ErrorKind::ParseError, where + ": line " + std::to_string(line_no) + ": expected 'start end graph'");
    windows.push_back({detail::parse_int(tok[0], where, line_no), detail::parse_int(tok[1], where, line_no),
                       static_cast<int>(detail::parse_int(tok[2], where, line_no))});
  });
  if (windows.empty()) throw Error(ErrorKind::NoWindows, where + ": no windows");
  return windows;
}

/// Node ids separated by whitespace, in index order.
inline std::vector<std::string> parse_whitelist(const std::string& text) {
  std::vector<std::string> ids;
  detail::for_each_token_line(text, [&](int, const std::vector<std::string>& tok) {
    ids.insert(ids.end(), tok.begin(), tok.end());
  });
  return ids;
}

inline std::vector<ContactRecord> read_contacts(const std::filesystem::path& path) {
  return parse_contacts(detail::read_text(path), path.string());
}

inline std::vector<TimeWindow> read_windows(const std::filesystem::path& path) {
  return parse_windows(detail::read_text(path), path.string());
}

inline std::vector<std::string> read_whitelist(const std::filesystem::path& path) {
  return parse_whitelist(detail::read_text(path));
}

/// Parameter file: a JSON array, or an object with a "theta" array.
inline Eigen::VectorXd params_from_json(const Json& j, const std::string& where = "params") {
  const Json& arr = j.is_object() ? detail::require_field(j, "theta", where) : j;
  if (!arr.is_array()) throw Error(ErrorKind::SchemaError, where + ": parameters must be an array");
  Eigen::VectorXd theta(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t k = 0; k < arr.size(); ++k) {
    if (!arr[k].is_number()) throw Error(ErrorKind::SchemaError, where + ": parameters must be numbers");
    theta(k) = arr[k].get<double>();
  }
  return theta;
}

inline Json vector_to_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

inline Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_to_json(m.row(r).transpose()));
  return rows;
}

}  // namespace betagraph
