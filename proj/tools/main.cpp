#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <sstream>

#include "invfilt/cases.hpp"
#include "invfilt/config.hpp"
#include "invfilt/error.hpp"

namespace {

using namespace invfilt;

enum Exit { kOk = 0, kInput = 2, kDesign = 3, kRuntime = 4 };

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::ParseError:
    case ErrorCode::SemanticError:
    case ErrorCode::IoError:
      return kInput;
    case ErrorCode::WindowNotReady:
    case ErrorCode::Diverged:
      return kRuntime;
    default:
      return kDesign;
  }
}

struct Globals {
  std::optional<double> tol;
  std::optional<Index> steps;
  std::optional<std::uint64_t> seed;
};

// Flag beats INVFILT_SEED, which beats the config file.
std::optional<std::uint64_t> effective_seed(const Globals& g) {
  if (g.seed) return g.seed;
  if (const char* env = std::getenv("INVFILT_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::InvalidArgument, std::string("INVFILT_SEED is not an unsigned integer: ") + env);
  }
  return std::nullopt;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt(Complex z) {
  if (z.imag() == 0.0) return fmt(z.real());
  return fmt(z.real()) + (z.imag() < 0 ? "-" : "+") + fmt(std::abs(z.imag())) + "i";
}

std::string fmt(const Spectrum& s) {
  std::string out = "{";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? ", " : "") + fmt(s[i]);
  return out + "}";
}

void print_matrix(const std::string& name, const Matrix& m) {
  static const Eigen::IOFormat f(6, 0, ", ", "\n", "  [", "]");
  std::cout << name << " (" << m.rows() << "x" << m.cols() << "):\n";
  if (m.size() == 0) std::cout << "  []\n";
  else std::cout << m.format(f) << "\n";
}

// "0.1,-0.1,0.2:0.3" -- a pole is a real number or re:im.
Spectrum parse_poles(const std::string& text) {
  Spectrum out;
  std::stringstream ss(text);
  for (std::string tok; std::getline(ss, tok, ',');) {
    const auto colon = tok.find(':');
    try {
      std::size_t used = 0;
      if (colon == std::string::npos) {
        out.emplace_back(std::stod(tok, &used), 0.0);
        if (used != tok.size()) throw std::invalid_argument(tok);
      } else {
        const std::string re = tok.substr(0, colon), im = tok.substr(colon + 1);
        std::size_t u1 = 0, u2 = 0;
        out.emplace_back(std::stod(re, &u1), std::stod(im, &u2));
        if (u1 != re.size() || u2 != im.size()) throw std::invalid_argument(tok);
      }
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::InvalidArgument, "bad pole '" + tok + "' (use re or re:im)");
    }
  }
  return out;
}

struct DesignOverrides {
  std::optional<double> theta_deg;
  std::optional<std::string> poles;
};

void apply_overrides(SystemConfig& cfg, const Globals& g, const DesignOverrides& o) {
  if (o.theta_deg) {
    PlaneAngle p;
    if (const auto* cur = std::get_if<PlaneAngle>(&cfg.rotation.mode)) p = *cur;
    p.theta = *o.theta_deg * std::numbers::pi / 180.0;
    cfg.rotation.mode = p;
  } else if (const auto seed = effective_seed(g)) {
    RandomSeeded r;
    if (const auto* cur = std::get_if<RandomSeeded>(&cfg.rotation.mode)) r = *cur;
    // An explicit --seed switches a plane-rotation config to seeded rotations;
    // the environment variable only replaces a seed the config already uses.
    if (g.seed || std::holds_alternative<RandomSeeded>(cfg.rotation.mode)) {
      r.seed = *seed;
      cfg.rotation.mode = r;
    }
  }
  if (o.poles) cfg.poles = parse_poles(*o.poles);
  if (g.tol) cfg.tolerance = *g.tol;
  if (g.steps) cfg.steps = *g.steps;
}

FilterDesign design_from(const SystemConfig& cfg) {
  return cfg.has_faults() ? design(cfg.fault_system(), cfg.design_options())
                          : design(cfg.system, cfg.design_options());
}

int cmd_zeros(const SystemConfig& cfg) {
  const ZeroReport r = cfg.has_faults() ? fault_zeros(cfg.fault_system()) : invariant_zeros(cfg.system);
  std::cout << "zeros: " << fmt(r.zeros) << "\n";
  std::cout << "classification: " << to_string(r.classification) << "\n";
  std::cout << "on_unit_circle: " << fmt(r.on_unit_circle) << "\n";
  std::cout << "at_one: " << (r.at_one ? "yes" : "no") << "\n";
  return kOk;
}

int cmd_check(const SystemConfig& cfg) {
  const ValidationReport v = cfg.has_faults() ? validate(cfg.fault_system()) : validate(cfg.system);
  std::cout << "states: " << v.states << "\n";
  std::cout << "observability_rank: " << v.observability_rank << (v.observable ? " (observable)" : " (unobservable)")
            << "\n";
  std::cout << "rank_condition: " << (v.rank_condition ? "ok" : "violated") << "\n";
  std::cout << "enough_outputs: " << (v.enough_outputs ? "ok" : "violated") << "\n";
  for (const std::string& msg : v.violations) std::cout << "violation: " << msg << "\n";
  const ZeroReport z = cfg.has_faults() ? fault_zeros(cfg.fault_system()) : invariant_zeros(cfg.system);
  std::cout << "zeros: " << fmt(z.zeros) << " (" << to_string(z.classification) << ")\n";
  if (!v.ok()) return kDesign;
  try {
    const FilterDesign d = design_from(cfg);
    std::cout << "rotation: accepted, PBH margin " << fmt(d.rotation_margin) << "\n";
  } catch (const Error& e) {
    std::cout << "rotation: rejected, " << e.what() << "\n";
    return exit_code(e.code());
  }
  return kOk;
}

int cmd_design(const SystemConfig& cfg) {
  const FilterDesign d = design_from(cfg);
  std::cout << "kind: " << to_string(d.kind) << "\n";
  std::cout << "horizon: " << d.horizon << "\n";
  std::cout << "delay: " << d.delay() << "\n";
  print_matrix("C2M", d.stacked.C2M);
  print_matrix("K1", d.K1);
  print_matrix("Ph", d.Ph);
  print_matrix("Pc", d.Pc);
  if (d.kind != FilterKind::MinPhase) {
    print_matrix("Atilde", d.Atilde);
    if (d.R) print_matrix("R", *d.R);
    print_matrix("PhNew", d.PhNew);
    print_matrix("PcNew", d.PcNew);
    print_matrix("open_loop", d.open_loop);
    if (d.K2) print_matrix("K2", *d.K2);
  }
  print_matrix("closed_loop", d.closed_loop);
  print_matrix("input_matrix", d.input_matrix);
  std::cout << "closed_loop_spectrum: " << fmt(eigenvalues(d.closed_loop)) << "\n";
  if (d.kind != FilterKind::MinPhase) {
    std::cout << "placed_poles: " << fmt(d.placed_poles) << "\n";
    std::cout << "gain_norm: " << fmt(d.gain_norm()) << "\n";
    std::cout << "rotation_margin: " << fmt(d.rotation_margin) << "\n";
  }
  return kOk;
}

void print_trace_summary(const SimTrace& t) {
  std::cout << "delay: " << t.delay << "\n";
  std::cout << "estimates: " << t.k.size() << "\n";
  std::cout << "steady_state_err: " << fmt(t.steady_state_err) << "\n";
  std::cout << "convergence_step: " << (t.convergence_step ? std::to_string(*t.convergence_step) : "none") << "\n";
}

int cmd_simulate(const SystemConfig& cfg, const std::string& out) {
  const FilterDesign d = design_from(cfg);
  const Vector x0 = cfg.x0.value_or(Vector::Zero(cfg.system.states()));
  const Trajectory traj = cfg.has_faults() ? simulate(cfg.fault_system(), x0, cfg.inputs, cfg.faults, cfg.steps)
                                           : simulate(cfg.system, x0, cfg.inputs, cfg.steps);
  const SimTrace t = run_filter(d, traj, cfg.tolerance, "simulate");
  write_trace_csv(t, out);
  print_trace_summary(t);
  std::cout << "wrote: " << out << "\n";
  return kOk;
}

int cmd_case(int id, const Globals& g, const std::string& out_dir) {
  CaseOptions o;
  o.steps = g.steps;
  o.tolerance = g.tol;
  o.seed = effective_seed(g);
  const CaseResult r = run_case(id, o);
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir + ": " + ec.message());
  }
  for (const CaseRun& run : r.runs) {
    std::cout << "[" << run.label << "] kind " << to_string(run.design.kind) << ", gain_norm "
              << fmt(run.design.gain_norm()) << ", " << fmt(run.seconds) << " s\n";
    print_trace_summary(run.trace);
    if (!out_dir.empty()) {
      const auto path = std::filesystem::path(out_dir) / (run.label + ".csv");
      write_trace_csv(run.trace, path);
      std::cout << "wrote: " << path.string() << "\n";
    }
  }
  return kOk;
}

int cmd_sweep(SystemConfig cfg, double from, double to, int steps) {
  if (steps < 1) throw Error(ErrorCode::InvalidArgument, "--steps must be >= 1");
  PlaneAngle base;
  if (const auto* cur = std::get_if<PlaneAngle>(&cfg.rotation.mode)) base = *cur;
  std::cout << "theta_deg,pbh_margin,gain_norm,status\n";
  int accepted = 0;
  for (int s = 0; s < steps; ++s) {
    const double deg = steps == 1 ? from : from + (to - from) * s / (steps - 1);
    PlaneAngle p = base;
    p.theta = deg * std::numbers::pi / 180.0;
    cfg.rotation.mode = p;
    try {
      const FilterDesign d = design_from(cfg);
      std::cout << fmt(deg) << "," << fmt(d.rotation_margin) << "," << fmt(d.gain_norm()) << ",ok\n";
      ++accepted;
    } catch (const Error& e) {
      if (exit_code(e.code()) != kDesign) throw;
      std::cout << fmt(deg) << ",,," << to_string(e.code()) << "\n";
    }
  }
  return accepted > 0 ? kOk : kDesign;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unbiased inversion-based input and fault estimation for discrete-time LTI systems"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--tol", g.tol, "Convergence tolerance for trace metrics")->check(CLI::PositiveNumber);
  app.add_option("--steps", g.steps, "Simulation length in samples")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Rotation seed (overrides INVFILT_SEED and the config)");

  std::string config;
  DesignOverrides over;

  auto* zeros = app.add_subcommand("zeros", "Print the transmission zeros and their classification");
  zeros->add_option("config", config, "JSON config")->required();

  auto* check = app.add_subcommand("check", "Check the design assumptions and rotation observability");
  check->add_option("config", config, "JSON config")->required();

  auto* des = app.add_subcommand("design", "Design the filter and print its matrices");
  des->add_option("config", config, "JSON config")->required();
  des->add_option("--theta", over.theta_deg, "Plane rotation angle in degrees");
  des->add_option("--poles", over.poles, "Comma-separated poles; complex as re:im");

  std::string out;
  auto* sim = app.add_subcommand("simulate", "Simulate the configured scenario and write a CSV trace");
  sim->add_option("config", config, "JSON config")->required();
  sim->add_option("--out", out, "Output CSV path")->required();
  sim->add_option("--theta", over.theta_deg, "Plane rotation angle in degrees");
  sim->add_option("--poles", over.poles, "Comma-separated poles; complex as re:im");

  int case_id = 0;
  std::string out_dir;
  auto* cas = app.add_subcommand("case", "Run one of the built-in example cases");
  cas->add_option("id", case_id, "Case number")->required()->check(CLI::Range(1, 4));
  cas->add_option("--out-dir", out_dir, "Directory for per-run CSV traces");

  double from = 1.0, to = 89.0;
  int sweep_steps = 45;
  auto* sweep = app.add_subcommand("sweep-theta", "Tabulate PBH margin and gain norm against the rotation angle");
  sweep->add_option("config", config, "JSON config")->required();
  sweep->add_option("--from", from, "First angle in degrees")->capture_default_str();
  sweep->add_option("--to", to, "Last angle in degrees")->capture_default_str();
  sweep->add_option("--steps", sweep_steps, "Number of angles")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInput;
  }
  if (over.theta_deg && g.seed) {
    std::cerr << "error: --theta and --seed select different rotations; give one\n";
    return kInput;
  }

  try {
    if (*cas) return cmd_case(case_id, g, out_dir);
    SystemConfig cfg = load_config(config);
    apply_overrides(cfg, g, over);
    if (*zeros) return cmd_zeros(cfg);
    if (*check) return cmd_check(cfg);
    if (*des) return cmd_design(cfg);
    if (*sim) return cmd_simulate(cfg, out);
    if (*sweep) return cmd_sweep(cfg, from, to, sweep_steps);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::InvalidArgument ? kInput : exit_code(e.code());
  }
  return kOk;
}
