#pragma once

#include <filesystem>
#include <string>

#include "gradctrl/kkt.hpp"
#include "gradctrl/state_solver.hpp"

namespace gradctrl {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

std::string trajectory_csv(const Trajectory& traj);
Trajectory parse_trajectory_csv(const std::string& text);

std::string control_csv(const Control& u, const Vector& times);
Control parse_control_csv(const std::string& text);

std::string multipliers_csv(const MultiplierSet& ms, const Vector& times);
MultiplierSet parse_multipliers_csv(const std::string& text, ConstraintKind kind);

std::string history_csv(const std::vector<IterationRecord>& history);

void write_file(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace gradctrl
