#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tpiston/classical_cd.hpp"

namespace tpiston {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NumericsConfig {
  int basis_size = 0;          ///< 0: default_basis_size()
  double dt = 0.0;             ///< 0: default_time_step() (quantum) or classical_dt
  int lambda_grid = 2001;
  int q_grid_points = 2001;
  int sample_stride = 1;
  std::vector<double> snapshot_times;
  bool convergence_checks = true;
  double classical_dt = 0.0;   ///< 0: T(E0) / 2000 at lambda_start
  int classical_sample_stride = 10;
};

struct RunConfig {
  PistonParams params;
  /// Defaults to the compression protocol L: 25 -> 15 at rate -0.5.
  DrivingCase driving{Parameter::Length, -0.5, 25.0, 15.0, 0.0};
  /// 1-based initial level; 0 picks the level nearest target_energy at lambda_start.
  int n_init = 0;
  double target_energy = 80.0;
  bool with_cd = true;
  /// Classical runs start at q = 0 with this energy; 0 falls back to target_energy.
  double initial_energy = 0.0;
  std::vector<double> sweep_hbars{1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0};
  /// Optional explicit levels, one per sweep_hbars entry.
  std::vector<int> sweep_levels;
  NumericsConfig numerics;
  std::filesystem::path output_dir = "out";

  /// Throws ConfigError on any non-positive numeric field or an unreachable
  /// lambda_end.
  void validate() const;
};

/// Parses the JSON document (sections physics, protocol, numerics, output).
/// Unknown keys and type mismatches are ConfigError.
RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace tpiston
