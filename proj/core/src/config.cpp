#include "tpiston/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace tpiston {

namespace {

using nlohmann::json;

const json& section(const json& root, const char* name) {
  static const json empty = json::object();
  if (!root.contains(name)) return empty;
  const json& s = root.at(name);
  if (!s.is_object()) throw ConfigError(std::string("section '") + name + "' must be an object");
  return s;
}

void reject_unknown(const json& s, const char* name, std::set<std::string> known) {
  for (const auto& [key, value] : s.items()) {
    if (!known.count(key)) throw ConfigError(std::string("unknown key '") + name + "." + key + "'");
  }
}

template <class T>
void read(const json& s, const char* section_name, const char* key, T& out) {
  if (!s.contains(key)) return;
  try {
    out = s.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for '") + section_name + "." + key + "'");
  }
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be positive");
}

}  // namespace

void RunConfig::validate() const {
  require_positive(params.mass, "physics.mass");
  require_positive(params.hbar, "physics.hbar");
  require_positive(params.slope, "physics.slope");
  require_positive(params.length, "physics.length");
  try {
    driving.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("protocol: ") + e.what());
  }
  if (n_init < 0) throw ConfigError("protocol.initial_level must be >= 1 (or 0 to select by energy)");
  require_positive(target_energy, "protocol.target_energy");
  if (initial_energy < 0.0) throw ConfigError("protocol.initial_energy must be positive");
  if (sweep_hbars.empty()) throw ConfigError("protocol.hbar_sweep must not be empty");
  for (double h : sweep_hbars) require_positive(h, "protocol.hbar_sweep entries");
  if (!sweep_levels.empty() && sweep_levels.size() != sweep_hbars.size()) {
    throw ConfigError("protocol.sweep_levels must match protocol.hbar_sweep in length");
  }
  for (int n : sweep_levels) {
    if (n < 1) throw ConfigError("protocol.sweep_levels entries must be >= 1");
  }
  if (numerics.basis_size < 0) throw ConfigError("numerics.basis_size must be positive (or 0 for the default)");
  if (numerics.basis_size > 0 && n_init > numerics.basis_size) {
    throw ConfigError("protocol.initial_level exceeds numerics.basis_size");
  }
  if (numerics.dt < 0.0 || !std::isfinite(numerics.dt)) throw ConfigError("numerics.dt must be positive (or 0 for the default)");
  if (numerics.lambda_grid < 2) throw ConfigError("numerics.lambda_grid must be >= 2");
  if (numerics.q_grid_points < 2) throw ConfigError("numerics.q_grid_points must be >= 2");
  if (numerics.sample_stride < 1) throw ConfigError("numerics.sample_stride must be >= 1");
  if (numerics.classical_sample_stride < 1) throw ConfigError("numerics.classical_sample_stride must be >= 1");
  if (numerics.classical_dt < 0.0 || !std::isfinite(numerics.classical_dt)) {
    throw ConfigError("numerics.classical_dt must be positive (or 0 for the default)");
  }
  const double duration = driving.duration();
  for (double t : numerics.snapshot_times) {
    if (t < 0.0 || t > duration) throw ConfigError("numerics.snapshot_times must lie inside the protocol");
  }
  if (output_dir.empty()) throw ConfigError("output.directory must not be empty");
}

RunConfig parse_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be an object");
  reject_unknown(root, "", {"physics", "protocol", "numerics", "output"});

  RunConfig c;
  const json& phys = section(root, "physics");
  reject_unknown(phys, "physics", {"mass", "hbar", "slope", "length"});
  read(phys, "physics", "mass", c.params.mass);
  read(phys, "physics", "hbar", c.params.hbar);
  read(phys, "physics", "slope", c.params.slope);
  read(phys, "physics", "length", c.params.length);

  const json& prot = section(root, "protocol");
  reject_unknown(prot, "protocol",
                 {"parameter", "lambda_start", "lambda_end", "rate", "duration", "initial_level",
                  "target_energy", "with_cd", "initial_energy", "hbar_sweep", "sweep_levels"});
  std::string which = "length";
  read(prot, "protocol", "parameter", which);
  try {
    c.driving.which = parameter_from_string(which);
  } catch (const std::invalid_argument&) {
    throw ConfigError("protocol.parameter must be 'slope' or 'length'");
  }
  c.driving.lambda_start = c.params.get(c.driving.which);
  read(prot, "protocol", "lambda_start", c.driving.lambda_start);
  read(prot, "protocol", "lambda_end", c.driving.lambda_end);
  read(prot, "protocol", "rate", c.driving.rate);
  read(prot, "protocol", "duration", c.driving.hold_duration);
  if (c.driving.rate != 0.0 && prot.contains("duration")) {
    throw ConfigError("protocol.duration applies only to rate 0");
  }
  if (c.driving.rate == 0.0) c.driving.lambda_end = c.driving.lambda_start;
  c.params = c.params.with(c.driving.which, c.driving.lambda_start);
  read(prot, "protocol", "initial_level", c.n_init);
  read(prot, "protocol", "target_energy", c.target_energy);
  read(prot, "protocol", "with_cd", c.with_cd);
  read(prot, "protocol", "initial_energy", c.initial_energy);
  read(prot, "protocol", "hbar_sweep", c.sweep_hbars);
  read(prot, "protocol", "sweep_levels", c.sweep_levels);

  const json& num = section(root, "numerics");
  reject_unknown(num, "numerics",
                 {"basis_size", "dt", "lambda_grid", "q_grid_points", "sample_stride", "snapshot_times",
                  "convergence_checks", "classical_dt", "classical_sample_stride"});
  read(num, "numerics", "basis_size", c.numerics.basis_size);
  read(num, "numerics", "dt", c.numerics.dt);
  read(num, "numerics", "lambda_grid", c.numerics.lambda_grid);
  read(num, "numerics", "q_grid_points", c.numerics.q_grid_points);
  read(num, "numerics", "sample_stride", c.numerics.sample_stride);
  read(num, "numerics", "snapshot_times", c.numerics.snapshot_times);
  read(num, "numerics", "convergence_checks", c.numerics.convergence_checks);
  read(num, "numerics", "classical_dt", c.numerics.classical_dt);
  read(num, "numerics", "classical_sample_stride", c.numerics.classical_sample_stride);

  const json& out = section(root, "output");
  reject_unknown(out, "output", {"directory"});
  std::string dir = c.output_dir.string();
  read(out, "output", "directory", dir);
  c.output_dir = dir;

  if (c.driving.rate == 0.0 && !prot.contains("duration")) {
    throw ConfigError("protocol.duration is required when rate is 0");
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

}  // namespace tpiston
