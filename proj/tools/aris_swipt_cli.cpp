// Command-line front end for the sweeps, single runs, CSV summaries and timing probes.
//
// Exit codes: 0 success (per-row optimizer failures included), 1 bad configuration or
// arguments, 2 I/O error, 3 malformed input CSV, 4 internal error.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aris/ao_driver.hpp"
#include "aris/experiment.hpp"

namespace {

using namespace aris;

struct SweepArgs {
  std::string config;
  int trials = -1;
  std::uint64_t seed = 1;
  std::string schemes = "active,passive,none";
  std::string out;
  int parallel = 1;
  std::string dump_channels;
  bool no_timing = false;
  bool quiet = false;
  std::vector<double> grid;
  double p_total_dbm = std::numeric_limits<double>::quiet_NaN();
};

std::vector<Scheme> parse_schemes(const std::string& list) {
  std::vector<Scheme> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const Scheme s = parse_scheme(item);
    if (std::find(out.begin(), out.end(), s) != out.end()) throw ConfigError("scheme '" + item + "' listed twice");
    out.push_back(s);
  }
  if (out.empty()) throw ConfigError("no schemes selected");
  return out;
}

void add_sweep_options(CLI::App* cmd, SweepArgs& a) {
  cmd->add_option("--config", a.config, "scenario file (key = value lines)");
  cmd->add_option("--trials", a.trials, "Monte-Carlo trials per grid value");
  cmd->add_option("--seed", a.seed, "master seed");
  cmd->add_option("--schemes", a.schemes, "comma-separated subset of active,passive,none");
  cmd->add_option("--out", a.out, "output CSV (stdout when omitted)");
  cmd->add_option("--parallel", a.parallel, "worker threads");
  cmd->add_option("--dump-channels", a.dump_channels, "directory receiving one channel file per (value, trial)");
  cmd->add_flag("--no-timing", a.no_timing, "write runtime_ms as 0 for byte-reproducible output");
  cmd->add_flag("--quiet", a.quiet, "no progress on stderr");
}

int run_sweep_command(SweepKind kind, const SweepArgs& a) {
  SweepSpec spec;
  spec.kind = kind;
  spec.base = a.config.empty() ? default_scenario() : load_scenario(a.config);
  if (!std::isnan(a.p_total_dbm)) spec.base.p_total = dbm_to_watt(a.p_total_dbm);
  spec.grid = a.grid.empty() ? default_grid(kind) : a.grid;
  if (kind == SweepKind::single) spec.grid = {watt_to_dbm(spec.base.p_total)};
  spec.trials = a.trials >= 0 ? a.trials : (kind == SweepKind::single ? 1 : 50);
  spec.schemes = parse_schemes(a.schemes);
  spec.master_seed = a.seed;
  spec.parallel = a.parallel;
  spec.record_timing = !a.no_timing;
  spec.dump_channels = a.dump_channels;
  spec.validate();

  std::function<void(std::size_t, std::size_t)> progress;
  if (!a.quiet)
    progress = [](std::size_t done, std::size_t total) {
      std::fprintf(stderr, "\r%zu/%zu trials", done, total);
      if (done == total) std::fprintf(stderr, "\n");
    };
  const auto rows = run_sweep(spec, progress);
  if (a.out.empty()) std::cout << format_csv(rows);
  else write_csv(rows, a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active-RIS SWIPT weighted-sum-rate optimizer and experiment runner"};
  app.require_subcommand(1);

  SweepArgs power_args, location_args, elements_args, single_args;
  auto* power = app.add_subcommand("power", "sweep total power (grid in dBm)");
  add_sweep_options(power, power_args);
  power->add_option("--grid", power_args.grid, "P_total values in dBm")->delimiter(',');

  auto* location = app.add_subcommand("location", "sweep the RIS x coordinate (grid in m)");
  add_sweep_options(location, location_args);
  location->add_option("--grid", location_args.grid, "RIS x values in m")->delimiter(',');
  location->add_option("--p-total-dbm", location_args.p_total_dbm, "fixed total power");

  auto* elements = app.add_subcommand("elements", "sweep the RIS element count");
  add_sweep_options(elements, elements_args);
  elements->add_option("--grid", elements_args.grid, "element counts")->delimiter(',');
  elements->add_option("--p-total-dbm", elements_args.p_total_dbm, "fixed total power");

  auto* single = app.add_subcommand("single", "run the configured scenario");
  add_sweep_options(single, single_args);
  single->add_option("--p-total-dbm", single_args.p_total_dbm, "total power");

  std::string summary_in, summary_out;
  auto* summarize_cmd = app.add_subcommand("summarize", "aggregate a result CSV per (scheme, sweep value)");
  summarize_cmd->add_option("input", summary_in, "result CSV")->required();
  summarize_cmd->add_option("--out", summary_out, "output CSV (stdout when omitted)");

  std::string probe_config;
  std::vector<int> probe_elements{10, 20, 40};
  int probe_iters = 3;
  std::uint64_t probe_seed = 1;
  auto* probe = app.add_subcommand("probe", "time the subproblem solves for several element counts");
  probe->add_option("--config", probe_config, "scenario file");
  probe->add_option("--elements", probe_elements, "element counts")->delimiter(',');
  probe->add_option("--iterations", probe_iters, "AO iterations per size");
  probe->add_option("--seed", probe_seed, "channel seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*power) return run_sweep_command(SweepKind::power, power_args);
    if (*location) return run_sweep_command(SweepKind::ris_location, location_args);
    if (*elements) return run_sweep_command(SweepKind::elements, elements_args);
    if (*single) return run_sweep_command(SweepKind::single, single_args);
    if (*summarize_cmd) {
      const std::string text = format_summary(summarize(read_csv(summary_in)));
      if (summary_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream out(summary_out, std::ios::binary);
        if (!out || !(out << text)) throw IoError("cannot write " + summary_out);
      }
      return 0;
    }
    if (*probe) {
      const Scenario base = probe_config.empty() ? default_scenario() : load_scenario(probe_config);
      std::vector<ProbeSize> sizes;
      for (int l : probe_elements) sizes.push_back({base.antennas, l, base.num_ir});
      std::cout << "antennas,elements,num_ir,iterations,bf_ms,ris_ms,status\n";
      for (const auto& r : complexity_probe(sizes, base, probe_seed, probe_iters))
        std::cout << r.size.antennas << "," << r.size.elements << "," << r.size.num_ir << "," << r.iterations << ","
                  << r.bf_ms << "," << r.ris_ms << "," << r.status << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 4;
}
