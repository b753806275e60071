#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "aris/common.hpp"

namespace aris {

enum class Scheme { active, passive, none };

inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::active:
      return "active";
    case Scheme::passive:
      return "passive";
    case Scheme::none:
      return "none";
  }
  return "unknown";
}

inline Scheme parse_scheme(const std::string& name) {
  if (name == "active") return Scheme::active;
  if (name == "passive") return Scheme::passive;
  if (name == "none") return Scheme::none;
  throw ConfigError("unknown scheme '" + name + "'");
}

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Path-loss exponents of the five link classes.
struct PathLossExponents {
  double bs_ris = 2.3;  // Q
  double ris_er = 2.3;  // h_r
  double ris_ir = 2.5;  // g_r
  double bs_ir = 3.2;   // g_d
  double bs_er = 2.8;   // h_d
};

/// Per-element / per-antenna hardware consumption, watts.
struct HardwarePowers {
  double p_c = 0.0;   // switch and control circuit, per RIS element
  double p_dc = 0.0;  // DC bias, per active element
  double p_t = 0.0;   // dissipation per relay antenna
};

/// Complete experiment description. All powers in watts, distances in meters.
struct Scenario {
  int antennas = 4;  // N
  int elements = 20;  // L
  int num_ir = 4;
  int num_er = 4;

  Point bs{0.0, 0.0};
  Point ris{10.0, 10.0};
  Point ir_center{30.0, 0.0};
  double ir_radius = 5.0;
  Point er_center{20.0, 0.0};
  double er_radius = 5.0;

  PathLossExponents alpha;
  double rician_kappa = 5.0;  // linear LoS/NLoS power ratio

  double noise_ris = 1e-11;
  double noise_ir = 1e-11;
  double noise_er = 1e-11;

  std::vector<double> eta;           // per ER
  std::vector<double> weights;       // per IR
  std::vector<double> p_thresholds;  // per ER

  double p_total = 1.0;
  HardwarePowers hw;

  double epsilon = 1e-3;
  int t_max = 100;
  Scheme scheme = Scheme::active;

  // When false, receiver drops come from `position_seed` and only fading is redrawn per trial.
  bool redraw_positions = true;
  std::uint64_t position_seed = 0;

  /// RIS thermal-noise power entering the signal model (zero without amplifiers).
  double ris_noise() const { return scheme == Scheme::active ? noise_ris : 0.0; }

  /// Number of RIS elements seen by the optimizer (zero when no RIS is deployed).
  int active_elements() const { return scheme == Scheme::none ? 0 : elements; }

  void validate() const {
    auto positive = [](double v, const char* what) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be positive");
    };
    if (antennas < 1) throw ConfigError("antennas must be >= 1");
    if (elements < 0) throw ConfigError("elements must be >= 0");
    if (num_ir < 1) throw ConfigError("num_ir must be >= 1");
    if (num_er < 0) throw ConfigError("num_er must be >= 0");
    positive(ir_radius, "ir_radius");
    positive(er_radius, "er_radius");
    positive(alpha.bs_ris, "alpha_bs_ris");
    positive(alpha.ris_er, "alpha_ris_er");
    positive(alpha.ris_ir, "alpha_ris_ir");
    positive(alpha.bs_ir, "alpha_bs_ir");
    positive(alpha.bs_er, "alpha_bs_er");
    positive(rician_kappa, "rician_kappa");
    positive(noise_ris, "noise_ris");
    positive(noise_ir, "noise_ir");
    positive(noise_er, "noise_er");
    positive(p_total, "p_total");
    positive(hw.p_c, "p_c");
    positive(hw.p_dc, "p_dc");
    positive(hw.p_t, "p_t");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0,1)");
    if (t_max < 1) throw ConfigError("t_max must be >= 1");
    if (static_cast<int>(weights.size()) != num_ir) throw ConfigError("weights must have num_ir entries");
    if (static_cast<int>(eta.size()) != num_er) throw ConfigError("eta must have num_er entries");
    if (static_cast<int>(p_thresholds.size()) != num_er)
      throw ConfigError("p_thresholds must have num_er entries");
    for (double w : weights) positive(w, "weights");
    for (double e : eta) positive(e, "eta");
    for (double p : p_thresholds)
      if (!(p >= 0.0) || !std::isfinite(p)) throw ConfigError("p_thresholds must be nonnegative");
  }

  /// Resizes the per-receiver vectors after a count change, broadcasting the first entry.
  void resize_receivers(int ir, int er) {
    auto fit = [](std::vector<double>& v, int n, double fallback) {
      const double fill = v.empty() ? fallback : v.front();
      v.assign(static_cast<std::size_t>(n), fill);
    };
    num_ir = ir;
    num_er = er;
    fit(weights, ir, 1.0);
    fit(eta, er, 0.8);
    fit(p_thresholds, er, 1e-6);
  }
};

/// The reference deployment: N=4, L=20, four IRs around (30,0), four ERs around (20,0).
inline Scenario default_scenario() {
  Scenario s;
  s.hw.p_c = dbm_to_watt(-10.0);
  s.hw.p_dc = dbm_to_watt(-5.0);
  s.hw.p_t = dbm_to_watt(10.0);
  s.noise_ris = dbm_to_watt(-80.0);
  s.noise_ir = dbm_to_watt(-80.0);
  s.noise_er = dbm_to_watt(-80.0);
  s.weights.assign(4, 1.0);
  s.eta.assign(4, 0.8);
  s.p_thresholds.assign(4, 1e-6);
  return s;
}

/// Power caps handed to the optimizer.
struct Budget {
  double p_bs = 0.0;
  double p_ris = 0.0;
};

/// Fixed hardware overhead of a scheme, watts.
inline double hardware_overhead(Scheme scheme, int elements, const HardwarePowers& hw) {
  switch (scheme) {
    case Scheme::active:
      return elements * (hw.p_c + hw.p_dc);
    case Scheme::passive:
      return elements * hw.p_c;
    case Scheme::none:
      return 0.0;
  }
  return 0.0;
}

/// Total consumption implied by a budget under the scheme's power model.
inline double total_power(Scheme scheme, const Budget& b, int elements, const HardwarePowers& hw) {
  return b.p_bs + b.p_ris + hardware_overhead(scheme, elements, hw);
}

/// Splits P_total into BS and RIS caps. The active scheme gives BS and RIS equal shares.
inline Budget split_budget(const Scenario& s) {
  const double overhead = hardware_overhead(s.scheme, s.elements, s.hw);
  if (overhead >= s.p_total) throw InfeasibleBudget("hardware overhead exceeds total power");
  Budget b;
  switch (s.scheme) {
    case Scheme::active:
      b.p_bs = 0.5 * (s.p_total - overhead);
      b.p_ris = s.p_total - overhead - b.p_bs;
      break;
    case Scheme::passive:
    case Scheme::none:
      b.p_bs = s.p_total - overhead;
      b.p_ris = 0.0;
      break;
  }
  return b;
}

/// Accounting for an amplify-and-forward relay with `antennas` antennas (BS and relay share equally).
struct RelayBudget {
  double p_bs = 0.0;
  double p_relay = 0.0;
};

inline RelayBudget split_relay_budget(double p_total, int antennas, const HardwarePowers& hw) {
  const double overhead = antennas * hw.p_t;
  if (overhead >= p_total) throw InfeasibleBudget("relay overhead exceeds total power");
  RelayBudget r;
  r.p_bs = 0.5 * (p_total - overhead);
  r.p_relay = p_total - overhead - r.p_bs;
  return r;
}

inline double relay_total_power(const RelayBudget& r, int antennas, const HardwarePowers& hw) {
  return r.p_bs + r.p_relay + antennas * hw.p_t;
}

/// SplitMix64 finalizer; a bijection on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Per-trial stream seed. Injective in `trial_index` for a fixed master seed.
inline std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t trial_index) {
  return mix64(mix64(master_seed) + trial_index);
}

// ---------------------------------------------------------------------------
// Config file: one `key = value` per line, `#` starts a comment. Lists are comma
// separated; a single list value is broadcast to every receiver. Power keys take
// watts (`*_w`); each also has a `*_dbm` alias.

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (trim(v.substr(pos)).empty()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("bad number for '" + key + "': " + v);
}

inline long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long d = std::stoll(v, &pos);
    if (trim(v.substr(pos)).empty()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("bad integer for '" + key + "': " + v);
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  if (out.empty()) throw ConfigError("empty list for '" + key + "'");
  return out;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline std::string format_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_double(v[i]);
  }
  return out;
}

}  // namespace detail

/// Applies `key = value` pairs from `text` on top of `base`. Unknown keys are rejected.
inline Scenario parse_scenario(const std::string& text, Scenario base = default_scenario()) {
  using namespace detail;
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (kv.count(key)) throw ConfigError("duplicate key '" + key + "'");
    kv[key] = trim(line.substr(eq + 1));
  }

  Scenario s = base;
  // Receiver counts first; lists broadcast to the final sizes.
  int ir = s.num_ir, er = s.num_er;
  if (auto it = kv.find("num_ir"); it != kv.end()) ir = static_cast<int>(parse_int(it->first, it->second));
  if (auto it = kv.find("num_er"); it != kv.end()) er = static_cast<int>(parse_int(it->first, it->second));
  if (ir != s.num_ir || er != s.num_er) s.resize_receivers(ir, er);

  auto per_receiver = [](const std::string& key, const std::string& v, int n) {
    auto list = parse_list(key, v);
    if (list.size() == 1) return std::vector<double>(static_cast<std::size_t>(n), list[0]);
    if (static_cast<int>(list.size()) != n) throw ConfigError("'" + key + "' has wrong length");
    return list;
  };
  auto watts = [&](const std::string& key, const std::string& v) {
    return key.size() > 4 && key.compare(key.size() - 4, 4, "_dbm") == 0 ? dbm_to_watt(parse_double(key, v))
                                                                           : parse_double(key, v);
  };

  for (const auto& [key, v] : kv) {
    if (key == "num_ir" || key == "num_er") continue;
    if (key == "antennas") s.antennas = static_cast<int>(parse_int(key, v));
    else if (key == "elements") s.elements = static_cast<int>(parse_int(key, v));
    else if (key == "bs_x") s.bs.x = parse_double(key, v);
    else if (key == "bs_y") s.bs.y = parse_double(key, v);
    else if (key == "ris_x") s.ris.x = parse_double(key, v);
    else if (key == "ris_y") s.ris.y = parse_double(key, v);
    else if (key == "ir_center_x") s.ir_center.x = parse_double(key, v);
    else if (key == "ir_center_y") s.ir_center.y = parse_double(key, v);
    else if (key == "ir_radius") s.ir_radius = parse_double(key, v);
    else if (key == "er_center_x") s.er_center.x = parse_double(key, v);
    else if (key == "er_center_y") s.er_center.y = parse_double(key, v);
    else if (key == "er_radius") s.er_radius = parse_double(key, v);
    else if (key == "alpha_bs_ris") s.alpha.bs_ris = parse_double(key, v);
    else if (key == "alpha_ris_er") s.alpha.ris_er = parse_double(key, v);
    else if (key == "alpha_ris_ir") s.alpha.ris_ir = parse_double(key, v);
    else if (key == "alpha_bs_ir") s.alpha.bs_ir = parse_double(key, v);
    else if (key == "alpha_bs_er") s.alpha.bs_er = parse_double(key, v);
    else if (key == "rician_kappa") s.rician_kappa = parse_double(key, v);
    else if (key == "noise_ris_w" || key == "noise_ris_dbm") s.noise_ris = watts(key, v);
    else if (key == "noise_ir_w" || key == "noise_ir_dbm") s.noise_ir = watts(key, v);
    else if (key == "noise_er_w" || key == "noise_er_dbm") s.noise_er = watts(key, v);
    else if (key == "eta") s.eta = per_receiver(key, v, s.num_er);
    else if (key == "weights") s.weights = per_receiver(key, v, s.num_ir);
    else if (key == "p_threshold_w") s.p_thresholds = per_receiver(key, v, s.num_er);
    else if (key == "p_threshold_dbm") {
      s.p_thresholds = per_receiver(key, v, s.num_er);
      for (double& p : s.p_thresholds) p = dbm_to_watt(p);
    } else if (key == "p_total_w" || key == "p_total_dbm") s.p_total = watts(key, v);
    else if (key == "p_c_w" || key == "p_c_dbm") s.hw.p_c = watts(key, v);
    else if (key == "p_dc_w" || key == "p_dc_dbm") s.hw.p_dc = watts(key, v);
    else if (key == "p_t_w" || key == "p_t_dbm") s.hw.p_t = watts(key, v);
    else if (key == "epsilon") s.epsilon = parse_double(key, v);
    else if (key == "t_max") s.t_max = static_cast<int>(parse_int(key, v));
    else if (key == "scheme") s.scheme = parse_scheme(v);
    else if (key == "redraw_positions") {
      if (v == "true" || v == "1") s.redraw_positions = true;
      else if (v == "false" || v == "0") s.redraw_positions = false;
      else throw ConfigError("redraw_positions must be true or false");
    } else if (key == "position_seed") s.position_seed = static_cast<std::uint64_t>(parse_int(key, v));
    else throw ConfigError("unknown config key '" + key + "'");
  }
  s.validate();
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

/// Writes every key; `parse_scenario(format_scenario(s))` reproduces `s` exactly.
inline std::string format_scenario(const Scenario& s) {
  using detail::format_double;
  using detail::format_list;
  std::ostringstream os;
  os << "antennas = " << s.antennas << "\n"
     << "elements = " << s.elements << "\n"
     << "num_ir = " << s.num_ir << "\n"
     << "num_er = " << s.num_er << "\n"
     << "bs_x = " << format_double(s.bs.x) << "\n"
     << "bs_y = " << format_double(s.bs.y) << "\n"
     << "ris_x = " << format_double(s.ris.x) << "\n"
     << "ris_y = " << format_double(s.ris.y) << "\n"
     << "ir_center_x = " << format_double(s.ir_center.x) << "\n"
     << "ir_center_y = " << format_double(s.ir_center.y) << "\n"
     << "ir_radius = " << format_double(s.ir_radius) << "\n"
     << "er_center_x = " << format_double(s.er_center.x) << "\n"
     << "er_center_y = " << format_double(s.er_center.y) << "\n"
     << "er_radius = " << format_double(s.er_radius) << "\n"
     << "alpha_bs_ris = " << format_double(s.alpha.bs_ris) << "\n"
     << "alpha_ris_er = " << format_double(s.alpha.ris_er) << "\n"
     << "alpha_ris_ir = " << format_double(s.alpha.ris_ir) << "\n"
     << "alpha_bs_ir = " << format_double(s.alpha.bs_ir) << "\n"
     << "alpha_bs_er = " << format_double(s.alpha.bs_er) << "\n"
     << "rician_kappa = " << format_double(s.rician_kappa) << "\n"
     << "noise_ris_w = " << format_double(s.noise_ris) << "\n"
     << "noise_ir_w = " << format_double(s.noise_ir) << "\n"
     << "noise_er_w = " << format_double(s.noise_er) << "\n"
     << "eta = " << format_list(s.eta) << "\n"
     << "weights = " << format_list(s.weights) << "\n"
     << "p_threshold_w = " << format_list(s.p_thresholds) << "\n"
     << "p_total_w = " << format_double(s.p_total) << "\n"
     << "p_c_w = " << format_double(s.hw.p_c) << "\n"
     << "p_dc_w = " << format_double(s.hw.p_dc) << "\n"
     << "p_t_w = " << format_double(s.hw.p_t) << "\n"
     << "epsilon = " << format_double(s.epsilon) << "\n"
     << "t_max = " << s.t_max << "\n"
     << "scheme = " << to_string(s.scheme) << "\n"
     << "redraw_positions = " << (s.redraw_positions ? "true" : "false") << "\n"
     << "position_seed = " << s.position_seed << "\n";
  return os.str();
}

}  // namespace aris
