#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "invfilt/design.hpp"
#include "invfilt/simulation.hpp"

namespace invfilt {

/// A plant, a filter request, and a simulation scenario, as read from JSON.
struct SystemConfig {
  LtiSystem system;
  std::optional<Matrix> L;
  std::optional<Matrix> E;
  std::optional<Index> horizon;

  FilterKind kind = FilterKind::Step;
  RotationStrategy rotation;
  std::optional<Spectrum> poles;

  std::vector<Signal> inputs;
  std::vector<Signal> faults;
  std::optional<Vector> x0;
  Index steps = 100;
  /// Convergence tolerance for trace metrics.
  double tolerance = 1e-6;

  bool has_faults() const { return L.has_value(); }
  FaultLtiSystem fault_system() const;
  DesignOptions design_options() const;

  friend bool operator==(const SystemConfig& a, const SystemConfig& b);
};

/// Throws ParseError ("line L, column C: ...") for malformed JSON and
/// SemanticError naming the offending field for well-formed but invalid input.
SystemConfig parse_config(std::string_view text);
SystemConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const SystemConfig& cfg);

std::string trace_to_csv(const SimTrace& trace);
/// Throws IoError when the file cannot be written.
void write_trace_csv(const SimTrace& trace, const std::filesystem::path& path);
/// Reads the columns written by trace_to_csv back (metrics are recomputed by the caller).
SimTrace parse_trace_csv(std::string_view text);
SimTrace read_trace_csv(const std::filesystem::path& path);

}  // namespace invfilt
