// tpiston: command-line runner for the tilted-piston driving simulations.
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tpiston/config.hpp"
#include "tpiston/csv.hpp"
#include "tpiston/scenarios.hpp"

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kNumericalFailure = 2, kValidationFailure = 3 };

struct Overrides {
  std::string config;
  std::string out;
  bool no_cd = false;
  std::optional<double> dt;
  std::optional<int> basis_size;
};

tpiston::RunConfig resolve(const Overrides& o) {
  tpiston::RunConfig c = o.config.empty() ? tpiston::RunConfig{} : tpiston::load_config(o.config);
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.no_cd) c.with_cd = false;
  if (o.dt) c.numerics.dt = *o.dt;
  if (o.basis_size) c.numerics.basis_size = *o.basis_size;
  c.validate();
  return c;
}

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON config (sections physics, protocol, numerics, output)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "Output directory (overrides output.directory)");
  cmd->add_flag("--no-cd", o.no_cd, "Run without the counterdiabatic term");
  cmd->add_option("--dt", o.dt, "Time step (overrides numerics.dt)");
  cmd->add_option("--basis-size", o.basis_size, "Number of sine modes (overrides numerics.basis_size)");
}

using tpiston::format_double;

int quantum(const Overrides& o) {
  const auto r = tpiston::run_quantum(resolve(o));
  std::cout << "n=" << r.n_init << " E=" << format_double(r.initial_energy) << " N=" << r.basis_size
            << " dt=" << format_double(r.dt) << " with_cd=" << r.with_cd << " f_min=" << format_double(r.f_min)
            << " norm_drift=" << format_double(r.max_norm_drift) << '\n';
  return kOk;
}

int sweep(const Overrides& o) {
  const auto report = tpiston::run_hbar_sweep(resolve(o));
  std::cout << "hbar,n,f_min_wcd,f_min_wocd\n";
  for (const auto& row : report.rows) {
    std::cout << format_double(row.hbar) << ',' << row.n << ',' << format_double(row.f_min_wcd) << ','
              << format_double(row.f_min_wocd);
    if (row.error) std::cout << "  (failed: " << *row.error << ')';
    std::cout << '\n';
  }
  std::cout << "elapsed " << format_double(report.seconds) << " s\n";
  return report.all_rows_ok() ? kOk : kNumericalFailure;
}

int classical(const Overrides& o) {
  const auto r = tpiston::run_classical(resolve(o));
  std::cout << "with_cd=" << r.with_cd << " E0=" << format_double(r.initial_energy) << " dt=" << format_double(r.dt)
            << " max_action_drift=" << format_double(r.max_relative_action_drift)
            << " wall_events=" << r.wall_events << '\n';
  return kOk;
}

int validate(const Overrides& o) {
  const auto report = tpiston::run_validate(resolve(o));
  for (const auto& c : report.checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " value=" << format_double(c.value)
              << " threshold=" << format_double(c.threshold) << "  " << c.detail << '\n';
  }
  return report.passed() ? kOk : kValidationFailure;
}

int spectrum(const Overrides& o) {
  const auto conv = tpiston::run_spectrum(resolve(o));
  std::cout << "E=" << format_double(conv.energy) << " N=" << conv.size
            << " relative_change=" << format_double(conv.relative_change) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterdiabatic driving of a particle in a tilted piston"};
  app.require_subcommand(1);
  Overrides o;
  struct Entry {
    const char* name;
    const char* help;
    int (*run)(const Overrides&);
  };
  const Entry entries[] = {
      {"quantum", "Propagate one initial eigenstate through the protocol", quantum},
      {"classical", "Integrate a classical trajectory and track the action", classical},
      {"sweep-hbar", "F_min with and without CD across hbar values", sweep},
      {"validate", "Operator identity and oracle checks", validate},
      {"spectrum", "Eigenvalues at the protocol start", spectrum},
  };
  for (const auto& e : entries) add_common(app.add_subcommand(e.name, e.help), o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    for (const auto& e : entries) {
      if (app.got_subcommand(e.name)) return e.run(o);
    }
  } catch (const tpiston::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  }
  return kConfigError;
}
