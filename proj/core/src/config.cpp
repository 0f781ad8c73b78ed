#include "invfilt/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "invfilt/error.hpp"

namespace invfilt {

namespace {

using nlohmann::json;

[[noreturn]] void semantic(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::SemanticError, path + ": " + what);
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) semantic(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) semantic(path, "must be finite");
  return v;
}

Index count(const json& j, const std::string& path, Index min_value) {
  if (!j.is_number_integer()) semantic(path, "expected an integer");
  const auto v = j.get<std::int64_t>();
  if (v < min_value) semantic(path, "must be >= " + std::to_string(min_value));
  return static_cast<Index>(v);
}

// Nested arrays, row-major. An empty array is a matrix with `rows_if_empty`
// rows and no columns.
Matrix matrix(const json& j, const std::string& path, Index rows_if_empty = 0) {
  if (!j.is_array()) semantic(path, "expected an array of rows");
  if (j.empty()) return Matrix::Zero(rows_if_empty, 0);
  const auto nr = static_cast<Index>(j.size());
  Index nc = -1;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array()) semantic(path, "row " + std::to_string(i) + " is not an array");
    if (nc < 0) nc = static_cast<Index>(j[i].size());
    if (static_cast<Index>(j[i].size()) != nc) semantic(path, "rows have different lengths");
  }
  Matrix m(nr, nc);
  for (Index r = 0; r < nr; ++r) {
    for (Index c = 0; c < nc; ++c) {
      m(r, c) = number(j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)],
                       path + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
  }
  return m;
}

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  if (m.cols() == 0) return json::array();
  return rows;
}

Signal signal(const json& j, const std::string& path) {
  if (!j.is_object()) semantic(path, "expected an object");
  if (!j.contains("kind") || !j["kind"].is_string()) semantic(path + ".kind", "expected a string");
  const auto kind = parse_signal_kind(j["kind"].get<std::string>());
  if (!kind) semantic(path + ".kind", "unknown signal kind '" + j["kind"].get<std::string>() + "'");
  Signal s;
  s.kind = *kind;
  s.channel = j.contains("channel") ? count(j["channel"], path + ".channel", 0) : 0;
  switch (s.kind) {
    case Signal::Kind::Step:
    case Signal::Kind::Ramp: {
      const char* key = s.kind == Signal::Kind::Step ? "amplitude" : "slope";
      if (!j.contains(key)) semantic(path + "." + key, "missing");
      s.amplitude = number(j[key], path + "." + key);
      s.start = j.contains("start") ? count(j["start"], path + ".start", 0) : 0;
      break;
    }
    case Signal::Kind::Samples: {
      if (!j.contains("values") || !j["values"].is_array()) semantic(path + ".values", "expected an array");
      for (std::size_t i = 0; i < j["values"].size(); ++i) {
        s.samples.push_back(number(j["values"][i], path + ".values[" + std::to_string(i) + "]"));
      }
      break;
    }
    case Signal::Kind::Zero: break;
  }
  return s;
}

json to_json(const Signal& s) {
  json j{{"kind", std::string(to_string(s.kind))}, {"channel", s.channel}};
  if (s.kind == Signal::Kind::Step) j["amplitude"] = s.amplitude;
  if (s.kind == Signal::Kind::Ramp) j["slope"] = s.amplitude;
  if (s.kind == Signal::Kind::Step || s.kind == Signal::Kind::Ramp) j["start"] = s.start;
  if (s.kind == Signal::Kind::Samples) j["values"] = s.samples;
  return j;
}

std::vector<Signal> signals(const json& root, const char* key) {
  std::vector<Signal> out;
  if (!root.contains(key)) return out;
  const json& arr = root[key];
  if (!arr.is_array()) semantic(key, "expected an array of signals");
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(signal(arr[i], std::string(key) + "[" + std::to_string(i) + "]"));
  return out;
}

Complex pole(const json& j, const std::string& path) {
  if (j.is_number()) return {number(j, path), 0.0};
  if (j.is_array() && j.size() == 2) return {number(j[0], path + "[0]"), number(j[1], path + "[1]")};
  semantic(path, "a pole is a number or a [re, im] pair");
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

FaultLtiSystem SystemConfig::fault_system() const {
  if (!L) throw Error(ErrorCode::InvalidArgument, "configuration has no fault channel");
  return {system, *L, *E};
}

DesignOptions SystemConfig::design_options() const {
  DesignOptions d;
  d.kind = kind;
  d.horizon = horizon;
  d.rotation = rotation;
  d.poles = poles;
  return d;
}

bool operator==(const SystemConfig& a, const SystemConfig& b) {
  auto same_opt = [](const std::optional<Matrix>& x, const std::optional<Matrix>& y) {
    return x.has_value() == y.has_value() && (!x || *x == *y);
  };
  auto same_signals = [](const std::vector<Signal>& x, const std::vector<Signal>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i].kind != y[i].kind || x[i].channel != y[i].channel || x[i].amplitude != y[i].amplitude ||
          x[i].start != y[i].start || x[i].samples != y[i].samples) {
        return false;
      }
    }
    return true;
  };
  auto same_rotation = [](const RotationStrategy& x, const RotationStrategy& y) {
    if (x.obs_margin != y.obs_margin || x.mode.index() != y.mode.index()) return false;
    if (const auto* p = std::get_if<PlaneAngle>(&x.mode)) {
      const auto& q = std::get<PlaneAngle>(y.mode);
      return p->i == q.i && p->j == q.j && p->theta == q.theta;
    }
    const auto& p = std::get<RandomSeeded>(x.mode);
    const auto& q = std::get<RandomSeeded>(y.mode);
    return p.seed == q.seed && p.retry_budget == q.retry_budget;
  };
  return a.system.A == b.system.A && a.system.B == b.system.B && a.system.C == b.system.C &&
         a.system.D == b.system.D && same_opt(a.L, b.L) && same_opt(a.E, b.E) && a.horizon == b.horizon &&
         a.kind == b.kind && same_rotation(a.rotation, b.rotation) && a.poles == b.poles &&
         same_signals(a.inputs, b.inputs) && same_signals(a.faults, b.faults) &&
         a.x0.has_value() == b.x0.has_value() && (!a.x0 || *a.x0 == *b.x0) && a.steps == b.steps &&
         a.tolerance == b.tolerance;
}

SystemConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
  }
  if (!root.is_object()) semantic("<root>", "expected an object");
  if (!root.contains("system") || !root["system"].is_object()) semantic("system", "missing system object");
  const json& sys = root["system"];

  SystemConfig cfg;
  for (const char* key : {"A", "C"}) {
    if (!sys.contains(key)) semantic(std::string("system.") + key, "missing");
  }
  cfg.system.A = matrix(sys["A"], "system.A");
  const Index n = cfg.system.A.rows();
  cfg.system.C = matrix(sys["C"], "system.C");
  const Index l = cfg.system.C.rows();
  cfg.system.B = sys.contains("B") ? matrix(sys["B"], "system.B", n) : Matrix::Zero(n, 0);
  cfg.system.D = sys.contains("D") ? matrix(sys["D"], "system.D", l) : Matrix::Zero(l, cfg.system.B.cols());
  if (sys.contains("L")) {
    cfg.L = matrix(sys["L"], "system.L", n);
    cfg.E = sys.contains("E") ? matrix(sys["E"], "system.E", l) : Matrix::Zero(l, cfg.L->cols());
  } else if (sys.contains("E")) {
    semantic("system.E", "given without L");
  }
  try {
    if (cfg.L) cfg.fault_system().check_dimensions();
    else cfg.system.check_dimensions();
  } catch (const Error& e) {
    // check_dimensions names the matrix first: "DimensionMismatch: B is 3x1, ...".
    std::string what = e.what();
    const auto colon = what.find(": ");
    std::string detail = colon == std::string::npos ? what : what.substr(colon + 2);
    std::string field = detail.substr(0, detail.find(' '));
    if (field.size() != 1 || std::string("ABCDLE").find(field[0]) == std::string::npos) field = "<dims>";
    throw Error(ErrorCode::SemanticError, "system." + field + ": " + detail);
  }

  if (root.contains("horizon")) cfg.horizon = count(root["horizon"], "horizon", 1);
  if (root.contains("filter")) {
    const json& f = root["filter"];
    if (!f.is_object()) semantic("filter", "expected an object");
    if (f.contains("kind")) {
      if (!f["kind"].is_string()) semantic("filter.kind", "expected a string");
      const auto k = parse_filter_kind(f["kind"].get<std::string>());
      if (!k) semantic("filter.kind", "unknown filter kind '" + f["kind"].get<std::string>() + "'");
      cfg.kind = *k;
    }
    if (f.contains("rotation")) {
      const json& r = f["rotation"];
      if (!r.is_object() || !r.contains("type") || !r["type"].is_string()) {
        semantic("filter.rotation.type", "expected \"plane\" or \"random\"");
      }
      const std::string type = r["type"].get<std::string>();
      if (type == "plane") {
        PlaneAngle p;
        p.i = r.contains("i") ? count(r["i"], "filter.rotation.i", 0) : 0;
        p.j = r.contains("j") ? count(r["j"], "filter.rotation.j", 0) : 1;
        if (!r.contains("theta")) semantic("filter.rotation.theta", "missing");
        p.theta = number(r["theta"], "filter.rotation.theta");
        cfg.rotation.mode = p;
      } else if (type == "random") {
        RandomSeeded s;
        if (r.contains("seed")) {
          if (!r["seed"].is_number_unsigned()) semantic("filter.rotation.seed", "expected a non-negative integer");
          s.seed = r["seed"].get<std::uint64_t>();
        }
        if (r.contains("retries")) s.retry_budget = static_cast<int>(count(r["retries"], "filter.rotation.retries", 1));
        cfg.rotation.mode = s;
      } else {
        semantic("filter.rotation.type", "expected \"plane\" or \"random\"");
      }
      if (r.contains("obs_margin")) cfg.rotation.obs_margin = number(r["obs_margin"], "filter.rotation.obs_margin");
    }
    if (f.contains("poles")) {
      if (!f["poles"].is_array()) semantic("filter.poles", "expected an array");
      Spectrum p;
      for (std::size_t i = 0; i < f["poles"].size(); ++i) {
        p.push_back(pole(f["poles"][i], "filter.poles[" + std::to_string(i) + "]"));
      }
      cfg.poles = std::move(p);
    }
  }
  if (cfg.L.has_value() != is_fault_kind(cfg.kind)) {
    semantic("filter.kind", cfg.L ? "fault systems need FaultStep or FaultRamp" : "FaultStep/FaultRamp need system.L");
  }
  cfg.inputs = signals(root, "inputs");
  cfg.faults = signals(root, "faults");
  for (std::size_t i = 0; i < cfg.inputs.size(); ++i) {
    if (cfg.inputs[i].channel >= cfg.system.inputs()) semantic("inputs[" + std::to_string(i) + "].channel", "out of range");
  }
  for (std::size_t i = 0; i < cfg.faults.size(); ++i) {
    if (!cfg.L || cfg.faults[i].channel >= cfg.L->cols()) semantic("faults[" + std::to_string(i) + "].channel", "out of range");
  }
  if (root.contains("x0")) {
    const json& x = root["x0"];
    if (!x.is_array() || static_cast<Index>(x.size()) != n) semantic("x0", "expected " + std::to_string(n) + " numbers");
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = number(x[static_cast<std::size_t>(i)], "x0[" + std::to_string(i) + "]");
    cfg.x0 = std::move(v);
  }
  if (root.contains("steps")) cfg.steps = count(root["steps"], "steps", 1);
  if (root.contains("tolerance")) {
    cfg.tolerance = number(root["tolerance"], "tolerance");
    if (!(cfg.tolerance > 0.0)) semantic("tolerance", "must be positive");
  }
  return cfg;
}

SystemConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

std::string serialize_config(const SystemConfig& cfg) {
  json root;
  json& sys = root["system"];
  sys["A"] = to_json(cfg.system.A);
  sys["B"] = to_json(cfg.system.B);
  sys["C"] = to_json(cfg.system.C);
  sys["D"] = to_json(cfg.system.D);
  if (cfg.L) {
    sys["L"] = to_json(*cfg.L);
    sys["E"] = to_json(*cfg.E);
  }
  if (cfg.horizon) root["horizon"] = *cfg.horizon;
  json& f = root["filter"];
  f["kind"] = std::string(to_string(cfg.kind));
  if (const auto* p = std::get_if<PlaneAngle>(&cfg.rotation.mode)) {
    f["rotation"] = {{"type", "plane"}, {"i", p->i}, {"j", p->j}, {"theta", p->theta}};
  } else {
    const auto& s = std::get<RandomSeeded>(cfg.rotation.mode);
    f["rotation"] = {{"type", "random"}, {"seed", s.seed}, {"retries", s.retry_budget}};
  }
  f["rotation"]["obs_margin"] = cfg.rotation.obs_margin;
  if (cfg.poles) {
    json p = json::array();
    for (const Complex& z : *cfg.poles) {
      if (z.imag() == 0.0) p.push_back(z.real());
      else p.push_back(json::array({z.real(), z.imag()}));
    }
    f["poles"] = std::move(p);
  }
  root["inputs"] = json::array();
  for (const Signal& s : cfg.inputs) root["inputs"].push_back(to_json(s));
  root["faults"] = json::array();
  for (const Signal& s : cfg.faults) root["faults"].push_back(to_json(s));
  if (cfg.x0) root["x0"] = std::vector<double>(cfg.x0->data(), cfg.x0->data() + cfg.x0->size());
  root["steps"] = cfg.steps;
  root["tolerance"] = cfg.tolerance;
  return root.dump(2) + "\n";
}

std::string trace_to_csv(const SimTrace& t) {
  std::string out = "k";
  const Index ny = t.y.empty() ? 0 : t.y.front().size();
  const Index nq = t.truth.empty() ? 0 : t.truth.front().size();
  for (Index i = 1; i <= ny; ++i) out += ",y_" + std::to_string(i);
  for (const char* col : {"truth_", "est_", "abs_err_"}) {
    for (Index i = 1; i <= nq; ++i) out += "," + std::string(col) + std::to_string(i);
  }
  out += '\n';
  for (std::size_t r = 0; r < t.k.size(); ++r) {
    out += std::to_string(t.k[r]);
    for (const Vector* v : {&t.y[r], &t.truth[r], &t.estimate[r], &t.abs_err[r]}) {
      for (Index i = 0; i < v->size(); ++i) out += "," + fmt((*v)(i));
    }
    out += '\n';
  }
  return out;
}

void write_trace_csv(const SimTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << trace_to_csv(trace);
  if (!out) throw Error(ErrorCode::IoError, "write to " + path.string() + " failed");
}

SimTrace parse_trace_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.rfind("k", 0) != 0) throw Error(ErrorCode::ParseError, "missing CSV header");
  Index ny = 0, nq = 0;
  std::istringstream hs(line);
  for (std::string col; std::getline(hs, col, ',');) {
    if (col.rfind("y_", 0) == 0) ++ny;
    if (col.rfind("truth_", 0) == 0) ++nq;
  }
  SimTrace t;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> vals;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
      vals.push_back(v);
    }
    if (static_cast<Index>(vals.size()) != 1 + ny + 3 * nq) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": wrong number of columns");
    }
    t.k.push_back(static_cast<Index>(vals[0]));
    auto take = [&](Index offset, Index len) { return Eigen::Map<Vector>(vals.data() + offset, len).eval(); };
    t.y.push_back(take(1, ny));
    t.truth.push_back(take(1 + ny, nq));
    t.estimate.push_back(take(1 + ny + nq, nq));
    t.abs_err.push_back(take(1 + ny + 2 * nq, nq));
  }
  return t;
}

SimTrace read_trace_csv(const std::filesystem::path& path) { return parse_trace_csv(read_file(path)); }

}  // namespace invfilt
