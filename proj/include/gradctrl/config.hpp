#pragma once

#include <filesystem>
#include <optional>

#include "gradctrl/kkt.hpp"

namespace gradctrl {

/// Config rejected by schema validation; the message names the field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Where a command obtains a control: inline constant, CSV file, or zero.
struct ControlSource {
  enum class Kind { Zero, Constant, File };
  Kind kind = Kind::Zero;
  double value = 0.0;
  std::filesystem::path path;

  Control realize(const ProblemSpec& spec) const;
};

struct GradCheckOptions {
  int directions = 10;
  double epsilon = 1e-4;
  double tolerance = 1e-5;
};

/// Parsed and schema-validated run configuration.
struct RunConfig {
  ProblemSpec spec;
  unsigned seed = 42;
  ControlSource run_control;
  GradCheckOptions grad_check;
  KKTTolerances kkt_tolerances;
  std::optional<std::vector<double>> blowup_values;  // Kawohl lambda grid
  ControlSource slater_u_bar;
  ControlSource slater_u_hat;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace gradctrl
