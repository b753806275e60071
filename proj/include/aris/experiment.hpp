#pragma once

// Monte-Carlo sweeps over total power, RIS location and element count, with a
// stable CSV result format and per-(scheme, value) aggregation.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "aris/ao_driver.hpp"
#include "aris/channel.hpp"
#include "aris/model.hpp"
#include "aris/scenario.hpp"

namespace aris {

enum class SweepKind { power, ris_location, elements, single };

inline std::string to_string(SweepKind k) {
  switch (k) {
    case SweepKind::power:
      return "power";
    case SweepKind::ris_location:
      return "ris_location";
    case SweepKind::elements:
      return "elements";
    case SweepKind::single:
      return "single";
  }
  return "unknown";
}

inline SweepKind parse_sweep_kind(const std::string& s) {
  if (s == "power") return SweepKind::power;
  if (s == "ris_location" || s == "location") return SweepKind::ris_location;
  if (s == "elements") return SweepKind::elements;
  if (s == "single") return SweepKind::single;
  throw FormatError("unknown sweep kind '" + s + "'");
}

/// Default grids: P_total in dBm, RIS x in meters, element counts.
inline std::vector<double> default_grid(SweepKind k) {
  std::vector<double> g;
  switch (k) {
    case SweepKind::power:
      for (int v = 20; v <= 40; v += 2) g.push_back(v);
      break;
    case SweepKind::ris_location:
      for (int v = 5; v <= 30; v += 5) g.push_back(v);
      break;
    case SweepKind::elements:
      for (int v = 10; v <= 80; v += 10) g.push_back(v);
      break;
    case SweepKind::single:
      g.push_back(0.0);
      break;
  }
  return g;
}

struct SweepSpec {
  SweepKind kind = SweepKind::power;
  std::vector<double> grid;
  int trials = 50;
  std::vector<Scheme> schemes{Scheme::active, Scheme::passive, Scheme::none};
  std::uint64_t master_seed = 1;
  Scenario base = default_scenario();
  int parallel = 1;
  bool record_timing = true;  // runtime_ms is written as 0 when false
  std::string dump_channels;  // directory; empty disables

  void validate() const {
    if (grid.empty()) throw ConfigError("sweep grid is empty");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (schemes.empty()) throw ConfigError("no schemes selected");
    if (parallel < 1) throw ConfigError("parallel must be >= 1");
    if (kind == SweepKind::single && grid.size() != 1) throw ConfigError("single run takes one grid value");
    for (double v : grid) {
      if (!std::isfinite(v)) throw ConfigError("grid values must be finite");
      if (kind == SweepKind::elements && (v < 0.0 || v != std::floor(v)))
        throw ConfigError("element counts must be nonnegative integers");
    }
  }
};

/// Scenario for one grid value (scheme left as in the base).
inline Scenario scenario_at(const SweepSpec& spec, double value) {
  Scenario s = spec.base;
  switch (spec.kind) {
    case SweepKind::power:
      s.p_total = dbm_to_watt(value);
      break;
    case SweepKind::ris_location:
      s.ris.x = value;
      break;
    case SweepKind::elements:
      s.elements = static_cast<int>(value);
      break;
    case SweepKind::single:
      break;
  }
  s.validate();
  return s;
}

struct ResultRow {
  Scheme scheme = Scheme::active;
  int trial = 0;
  std::uint64_t seed = 0;
  SweepKind sweep_kind = SweepKind::power;
  double sweep_value = 0.0;
  int iterations = 0;
  AoStatus status = AoStatus::solver_failure;
  double wsr_bits = 0.0;
  std::vector<double> rates;      // per IR, bits/s/Hz
  std::vector<double> harvested;  // per ER, watts
  double bs_power_used = 0.0;
  double ris_power_used = 0.0;
  double runtime_ms = 0.0;
  std::vector<double> eta;  // per ER harvesting efficiency used for the run
};

/// Runs the optimizer for one scheme on fixed channels and packs the outcome.
inline ResultRow run_one(const Scenario& base, Scheme scheme, const ChannelSet& cs, std::uint64_t seed) {
  Scenario s = base;
  s.scheme = scheme;
  AoOptions opts;
  opts.init_seed = seed;
  AoTrace tr;
  try {
    tr = run(cs, s, opts);
  } catch (const Error& e) {
    tr = AoTrace{};
    tr.status = AoStatus::solver_failure;
    tr.message = e.what();
  }
  ResultRow row;
  row.scheme = scheme;
  row.seed = seed;
  row.iterations = tr.outer_iterations();
  row.status = tr.status;
  row.runtime_ms = tr.runtime_ms;
  row.rates.assign(static_cast<std::size_t>(cs.num_ir()), 0.0);
  row.harvested.assign(static_cast<std::size_t>(cs.num_er()), 0.0);
  row.eta = s.eta;
  if (!tr.iterations.empty()) {
    const RVec g = sinrs(s, cs, tr.design, tr.reflection);
    const RVec e = harvested_powers(s, cs, tr.design, tr.reflection);
    double acc = 0.0;
    for (Index k = 0; k < g.size(); ++k) {
      row.rates[static_cast<std::size_t>(k)] = rate_from_sinr(g(k));
      acc += s.weights[static_cast<std::size_t>(k)] * row.rates[static_cast<std::size_t>(k)];
    }
    row.wsr_bits = acc;
    for (Index i = 0; i < e.size(); ++i) row.harvested[static_cast<std::size_t>(i)] = e(i);
    row.bs_power_used = bs_power(tr.design);
    row.ris_power_used = ris_power(s, cs, tr.design, tr.reflection);
  }
  return row;
}

/// One row per (grid value, trial, scheme), in that nesting order. Every scheme of a
/// trial sees the same channel realization. Trials run on `spec.parallel` threads.
inline std::vector<ResultRow> run_sweep(const SweepSpec& spec,
                                        const std::function<void(std::size_t, std::size_t)>& progress = {}) {
  spec.validate();
  std::vector<Scenario> scenarios;
  for (double v : spec.grid) scenarios.push_back(scenario_at(spec, v));
  if (!spec.dump_channels.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(spec.dump_channels, ec);
    if (ec) throw IoError("cannot create " + spec.dump_channels + ": " + ec.message());
  }

  const std::size_t nv = spec.grid.size(), nt = static_cast<std::size_t>(spec.trials), ns = spec.schemes.size();
  const std::size_t jobs = nv * nt;
  std::vector<ResultRow> rows(jobs * ns);
  std::atomic<std::size_t> next{0}, done{0};
  std::mutex err_mutex, progress_mutex;
  std::exception_ptr error;

  auto worker = [&] {
    while (true) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs) return;
      try {
        const std::size_t vi = j / nt, t = j % nt;
        const std::uint64_t seed = trial_seed(spec.master_seed, t);
        const ChannelSet cs = synth_channels(scenarios[vi], seed);
        if (!spec.dump_channels.empty()) {
          const auto path = std::filesystem::path(spec.dump_channels) /
                            ("channels_v" + std::to_string(vi) + "_t" + std::to_string(t) + ".bin");
          save_channels(cs, path.string());
        }
        for (std::size_t si = 0; si < ns; ++si) {
          ResultRow row = run_one(scenarios[vi], spec.schemes[si], cs, seed);
          row.trial = static_cast<int>(t);
          row.sweep_kind = spec.kind;
          row.sweep_value = spec.grid[vi];
          if (!spec.record_timing) row.runtime_ms = 0.0;
          rows[j * ns + si] = std::move(row);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!error) error = std::current_exception();
        next.store(jobs);
        return;
      }
      const std::size_t finished = done.fetch_add(1) + 1;
      if (progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        progress(finished, jobs);
      }
    }
  };
  const int threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(spec.parallel), jobs));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  return rows;
}

// ---------------------------------------------------------------------------
// CSV. Schema version 1: fixed leading columns, then rate_1..rate_K, harvested_1..harvested_KE,
// the power and timing columns, and eta_1..eta_KE. K and K_E are read back from the header.

inline constexpr int kCsvSchemaVersion = 1;

namespace detail {

inline std::string csv_number(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double csv_double(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  if (v == "nan") return std::numeric_limits<double>::quiet_NaN();
  throw FormatError("line " + std::to_string(line) + ": bad number '" + v + "'");
}

inline long long csv_int(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    const long long d = std::stoll(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw FormatError("line " + std::to_string(line) + ": bad integer '" + v + "'");
}

inline std::uint64_t csv_uint(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    if (!v.empty() && v[0] != '-') {
      const unsigned long long d = std::stoull(v, &pos);
      if (pos == v.size()) return d;
    }
  } catch (const std::exception&) {
  }
  throw FormatError("line " + std::to_string(line) + ": bad seed '" + v + "'");
}

}  // namespace detail

inline std::string csv_header(int num_ir, int num_er) {
  std::string h = "scheme,trial,seed,sweep_kind,sweep_value,iterations,status,wsr_bits";
  for (int k = 1; k <= num_ir; ++k) h += ",rate_" + std::to_string(k);
  for (int i = 1; i <= num_er; ++i) h += ",harvested_" + std::to_string(i);
  h += ",bs_power_used,ris_power_used,runtime_ms";
  for (int i = 1; i <= num_er; ++i) h += ",eta_" + std::to_string(i);
  return h;
}

inline std::string format_csv(const std::vector<ResultRow>& rows) {
  using detail::csv_number;
  const int kir = rows.empty() ? 0 : static_cast<int>(rows.front().rates.size());
  const int ker = rows.empty() ? 0 : static_cast<int>(rows.front().harvested.size());
  std::string out = csv_header(kir, ker) + "\n";
  for (const auto& r : rows) {
    if (static_cast<int>(r.rates.size()) != kir || static_cast<int>(r.harvested.size()) != ker ||
        static_cast<int>(r.eta.size()) != ker)
      throw DimensionError("rows disagree on receiver counts");
    out += to_string(r.scheme) + "," + std::to_string(r.trial) + "," + std::to_string(r.seed) + "," +
           to_string(r.sweep_kind) + "," + csv_number(r.sweep_value) + "," + std::to_string(r.iterations) + "," +
           to_string(r.status) + "," + csv_number(r.wsr_bits);
    for (double v : r.rates) out += "," + csv_number(v);
    for (double v : r.harvested) out += "," + csv_number(v);
    out += "," + csv_number(r.bs_power_used) + "," + csv_number(r.ris_power_used) + "," + csv_number(r.runtime_ms);
    for (double v : r.eta) out += "," + csv_number(v);
    out += "\n";
  }
  return out;
}

inline void write_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << format_csv(rows);
  if (!out) throw IoError("write failed: " + path);
}

inline std::vector<ResultRow> parse_csv(const std::string& text) {
  using namespace detail;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  const std::vector<std::string> lead = {"scheme", "trial", "seed", "sweep_kind", "sweep_value",
                                         "iterations", "status", "wsr_bits"};
  const std::vector<std::string> power = {"bs_power_used", "ris_power_used", "runtime_ms"};
  if (header.size() < lead.size() + power.size()) throw FormatError("CSV header is missing columns");
  for (std::size_t i = 0; i < lead.size(); ++i)
    if (header[i] != lead[i]) throw FormatError("expected column '" + lead[i] + "', found '" + header[i] + "'");
  std::size_t col = lead.size();
  int kir = 0, ker = 0;
  while (col < header.size() && header[col] == "rate_" + std::to_string(kir + 1)) ++kir, ++col;
  while (col < header.size() && header[col] == "harvested_" + std::to_string(ker + 1)) ++ker, ++col;
  for (const auto& name : power) {
    if (col >= header.size() || header[col] != name)
      throw FormatError("expected column '" + name + "'" + (col < header.size() ? ", found '" + header[col] + "'" : ""));
    ++col;
  }
  for (int i = 1; i <= ker; ++i, ++col)
    if (col >= header.size() || header[col] != "eta_" + std::to_string(i))
      throw FormatError("expected column 'eta_" + std::to_string(i) + "'");
  if (col != header.size()) throw FormatError("unexpected column '" + header[col] + "'");

  std::vector<ResultRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw FormatError("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                        " fields, found " + std::to_string(cells.size()));
    ResultRow r;
    try {
      r.scheme = parse_scheme(cells[0]);
    } catch (const ConfigError& e) {
      throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
    }
    r.trial = static_cast<int>(csv_int(cells[1], lineno));
    r.seed = csv_uint(cells[2], lineno);
    r.sweep_kind = parse_sweep_kind(cells[3]);
    r.sweep_value = csv_double(cells[4], lineno);
    r.iterations = static_cast<int>(csv_int(cells[5], lineno));
    r.status = parse_ao_status(cells[6]);
    r.wsr_bits = csv_double(cells[7], lineno);
    std::size_t c = lead.size();
    for (int k = 0; k < kir; ++k) r.rates.push_back(csv_double(cells[c++], lineno));
    for (int i = 0; i < ker; ++i) r.harvested.push_back(csv_double(cells[c++], lineno));
    r.bs_power_used = csv_double(cells[c++], lineno);
    r.ris_power_used = csv_double(cells[c++], lineno);
    r.runtime_ms = csv_double(cells[c++], lineno);
    for (int i = 0; i < ker; ++i) r.eta.push_back(csv_double(cells[c++], lineno));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::vector<ResultRow> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

// ---------------------------------------------------------------------------
// Aggregation. Only converged rows enter the mean and median; the rest count as failures.

struct SummaryRow {
  Scheme scheme = Scheme::active;
  SweepKind sweep_kind = SweepKind::power;
  double sweep_value = 0.0;
  int trials = 0;
  int failures = 0;
  double mean_wsr = std::numeric_limits<double>::quiet_NaN();
  double median_wsr = std::numeric_limits<double>::quiet_NaN();
};

/// Groups by (scheme, sweep value); schemes in order of first appearance, values ascending.
inline std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  std::vector<Scheme> order;
  std::map<std::pair<int, double>, std::vector<const ResultRow*>> groups;
  for (const auto& r : rows) {
    if (std::find(order.begin(), order.end(), r.scheme) == order.end()) order.push_back(r.scheme);
    groups[{static_cast<int>(r.scheme), r.sweep_value}].push_back(&r);
  }
  std::vector<SummaryRow> out;
  for (Scheme sc : order) {
    for (const auto& [key, members] : groups) {
      if (key.first != static_cast<int>(sc)) continue;
      SummaryRow s;
      s.scheme = sc;
      s.sweep_kind = members.front()->sweep_kind;
      s.sweep_value = key.second;
      s.trials = static_cast<int>(members.size());
      std::vector<double> ok;
      for (const auto* r : members) {
        if (r->status == AoStatus::converged) ok.push_back(r->wsr_bits);
        else ++s.failures;
      }
      if (!ok.empty()) {
        double acc = 0.0;
        for (double v : ok) acc += v;
        s.mean_wsr = acc / static_cast<double>(ok.size());
        std::sort(ok.begin(), ok.end());
        const std::size_t m = ok.size() / 2;
        s.median_wsr = ok.size() % 2 ? ok[m] : 0.5 * (ok[m - 1] + ok[m]);
      }
      out.push_back(s);
    }
  }
  return out;
}

inline std::string format_summary(const std::vector<SummaryRow>& rows) {
  using detail::csv_number;
  std::string out = "scheme,sweep_kind,sweep_value,trials,failures,mean_wsr_bits,median_wsr_bits\n";
  for (const auto& s : rows)
    out += to_string(s.scheme) + "," + to_string(s.sweep_kind) + "," + csv_number(s.sweep_value) + "," +
           std::to_string(s.trials) + "," + std::to_string(s.failures) + "," + csv_number(s.mean_wsr) + "," +
           csv_number(s.median_wsr) + "\n";
  return out;
}

}  // namespace aris
