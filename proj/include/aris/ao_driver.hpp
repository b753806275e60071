#pragma once

// Alternating optimization: auxiliaries, transmit design, reflection vector.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "aris/bf_stage.hpp"
#include "aris/channel.hpp"
#include "aris/fp_core.hpp"
#include "aris/model.hpp"
#include "aris/ris_stage.hpp"
#include "aris/scenario.hpp"

namespace aris {

enum class AoStatus { converged, max_iters, infeasible_start, solver_failure };

inline std::string to_string(AoStatus s) {
  switch (s) {
    case AoStatus::converged:
      return "converged";
    case AoStatus::max_iters:
      return "max_iters";
    case AoStatus::infeasible_start:
      return "infeasible_start";
    case AoStatus::solver_failure:
      return "solver_failure";
  }
  return "unknown";
}

inline AoStatus parse_ao_status(const std::string& s) {
  if (s == "converged") return AoStatus::converged;
  if (s == "max_iters") return AoStatus::max_iters;
  if (s == "infeasible_start") return AoStatus::infeasible_start;
  if (s == "solver_failure") return AoStatus::solver_failure;
  throw FormatError("unknown status '" + s + "'");
}

struct AoIteration {
  int t = 0;
  double wsr = 0.0;
  double fc = 0.0;  // full surrogate after both solves at this iteration's auxiliaries, bits
  bool feasible = false;
  double max_violation = 0.0;  // largest relative residual (<= 0 when strictly feasible)
  conic::Status bf_status = conic::Status::optimal;
  conic::Status ris_status = conic::Status::optimal;
  double bf_ms = 0.0;
  double ris_ms = 0.0;
  double wall_ms = 0.0;
};

struct AoTrace {
  std::vector<AoIteration> iterations;  // entry 0 is the initial point
  AoStatus status = AoStatus::solver_failure;
  std::string message;
  Budget budget;
  TxDesign design;
  ReflectionVector reflection;
  int repair_rounds = 0;
  double runtime_ms = 0.0;

  double wsr() const { return iterations.empty() ? 0.0 : iterations.back().wsr; }
  /// Completed outer iterations (the initial point does not count).
  int outer_iterations() const { return iterations.empty() ? 0 : static_cast<int>(iterations.size()) - 1; }
};

struct AoOptions {
  std::uint64_t init_seed = 0;
  int repair_rounds = 20;
  BfOptions bf;
  RisOptions ris;
};

struct InitialPoint {
  TxDesign design;
  ReflectionVector reflection;
  int repair_rounds = 0;
};

namespace detail {

inline double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

inline double min_harvest_ratio(const Scenario& s, const RVec& e) {
  double r = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < e.size(); ++i) {
    const double p = s.p_thresholds[static_cast<std::size_t>(i)];
    if (p > 0.0) r = std::min(r, e(i) / p);
  }
  return r;
}

inline double max_violation(const Scenario& s, const Metrics& m, const Budget& b) {
  double v = m.residual_bs / b.p_bs;
  if (s.scheme == Scheme::active && b.p_ris > 0.0) v = std::max(v, m.residual_ris / b.p_ris);
  for (Index i = 0; i < m.residual_er.size(); ++i) {
    const double p = s.p_thresholds[static_cast<std::size_t>(i)];
    if (p > 0.0) v = std::max(v, m.residual_er(i) / p);
  }
  return v;
}

inline TxDesign matched_beams(const ChannelSet& cs, const ReflectionVector& r, const Budget& b) {
  const auto eff = effective_channels(cs, r);
  const Index n = cs.antennas();
  const int kir = cs.num_ir();
  TxDesign d = TxDesign::zero(n, kir);
  const double per_beam = 0.5 * b.p_bs / kir;
  for (int k = 0; k < kir; ++k) {
    const double nrm = eff.g.col(k).norm();
    d.w.col(k) = nrm > 0.0 ? CVec(std::sqrt(per_beam) * eff.g.col(k) / nrm) : CVec(CVec::Zero(n));
  }
  d.v = CMat::Identity(n, n) * ((b.p_bs - d.w.squaredNorm()) / static_cast<double>(n));
  return d;
}

}  // namespace detail

/// Feasible starting point: random-phase reflection vector, matched beams at half the BS
/// budget with an isotropic energy covariance, then up to `repair_rounds` rounds of
/// max-min harvested-power repair. Throws InfeasibleStart when the thresholds stay out of reach.
inline InitialPoint initialize(const ChannelSet& cs, const Budget& budget, const Scenario& s,
                               const AoOptions& opts = {}) {
  cs.check();
  const Index l = cs.elements();
  InitialPoint ip;
  std::mt19937_64 rng(opts.init_seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  CVec dir(l);
  for (Index i = 0; i < l; ++i) dir(i) = std::polar(1.0, phase(rng));

  switch (s.scheme) {
    case Scheme::none:
      ip.reflection = ReflectionVector::zero(l);
      ip.design = detail::matched_beams(cs, ip.reflection, budget);
      break;
    case Scheme::passive:
      ip.reflection = {dir};
      ip.design = detail::matched_beams(cs, ip.reflection, budget);
      break;
    case Scheme::active: {
      // The beams depend on the amplitude through the effective channels; a few
      // fixed-point passes settle the common amplitude.
      ip.reflection = ReflectionVector::zero(l);
      for (int pass = 0; pass < 4; ++pass) {
        ip.design = detail::matched_beams(cs, ip.reflection, budget);
        const double unit = ris_power(s, cs, ip.design, ReflectionVector{dir});
        const double amp = unit > 0.0 ? std::sqrt(0.9 * budget.p_ris / unit) : 0.0;
        ip.reflection = {dir * amp};
      }
      ip.design = detail::matched_beams(cs, ip.reflection, budget);
      const double pw = ris_power(s, cs, ip.design, ip.reflection);
      if (pw > 0.0) ip.reflection.u *= std::sqrt(0.9 * budget.p_ris / pw);
      break;
    }
  }

  auto ratio = [&] { return detail::min_harvest_ratio(s, harvested_powers(s, cs, ip.design, ip.reflection)); };
  double current = ratio();
  if (!(current < 1.0)) return ip;

  AuxVars aux;
  aux.gamma_tilde = RVec::Zero(cs.num_ir());
  aux.rho = CVec::Zero(cs.num_ir());
  for (int round = 0; round < opts.repair_rounds; ++round) {
    ++ip.repair_rounds;
    try {
      const auto bd = build_bf(cs, aux, ip.reflection, budget, s, ip.design);
      ip.design = repair_bf(bd, budget, opts.bf).design;
      if (s.scheme != Scheme::none && ratio() < 1.0) {
        const auto rd = build_ris(cs, aux, ip.design, budget, s, ip.reflection);
        ip.reflection = repair_ris(rd, opts.ris).reflection;
      }
    } catch (const Error& e) {
      throw InfeasibleStart(std::string("feasibility repair failed: ") + e.what());
    }
    const double next = ratio();
    if (next >= 1.0) {
      if (!residuals(s, cs, ip.design, ip.reflection, budget).feasible)
        throw InfeasibleStart("repaired point violates the power budgets");
      return ip;
    }
    if (next < current * (1.0 + 1e-4)) break;  // stagnated
    current = next;
  }
  throw InfeasibleStart("harvested-power thresholds unreachable (best ratio " + std::to_string(current) + ")");
}

/// Runs the alternating optimization until the relative WSR change drops below epsilon
/// or t_max outer iterations have been performed.
inline AoTrace run(const ChannelSet& cs, const Scenario& s, const AoOptions& opts = {}) {
  const auto start = std::chrono::steady_clock::now();
  AoTrace trace;
  try {
    trace.budget = split_budget(s);
  } catch (const InfeasibleBudget& e) {
    trace.status = AoStatus::infeasible_start;
    trace.message = e.what();
    return trace;
  }
  const Budget& b = trace.budget;

  try {
    const InitialPoint ip = initialize(cs, b, s, opts);
    trace.design = ip.design;
    trace.reflection = ip.reflection;
    trace.repair_rounds = ip.repair_rounds;
  } catch (const InfeasibleStart& e) {
    trace.status = AoStatus::infeasible_start;
    trace.message = e.what();
    trace.runtime_ms = detail::elapsed_ms(start);
    return trace;
  }

  auto record = [&](int t, const AuxVars* aux, conic::Status bs, conic::Status rs, double bf_ms, double ris_ms,
                    std::chrono::steady_clock::time_point t0) {
    const Metrics m = residuals(s, cs, trace.design, trace.reflection, b);
    AoIteration it;
    it.t = t;
    it.wsr = m.wsr;
    it.fc = aux ? fp_constant(s, aux->gamma_tilde) + eval_fc(s, cs, trace.design, trace.reflection, *aux) : m.wsr;
    it.feasible = m.feasible;
    it.max_violation = detail::max_violation(s, m, b);
    it.bf_status = bs;
    it.ris_status = rs;
    it.bf_ms = bf_ms;
    it.ris_ms = ris_ms;
    it.wall_ms = detail::elapsed_ms(t0);
    trace.iterations.push_back(it);
  };
  record(0, nullptr, conic::Status::optimal, conic::Status::optimal, 0.0, 0.0, start);

  trace.status = AoStatus::max_iters;
  for (int t = 1; t <= s.t_max; ++t) {
    const auto t0 = std::chrono::steady_clock::now();
    const double prev = trace.iterations.back().wsr;
    const AuxVars aux = update_aux(s, cs, trace.design, trace.reflection);
    TxDesign design = trace.design;
    ReflectionVector refl = trace.reflection;
    conic::Status bs = conic::Status::optimal, rs = conic::Status::optimal;
    double bf_ms = 0.0, ris_ms = 0.0;
    // A block update is kept only if it does not lower the surrogate.
    try {
      double fc_prev = eval_fc(s, cs, design, refl, aux);
      auto ts = std::chrono::steady_clock::now();
      const auto bd = build_bf(cs, aux, refl, b, s, design);
      const auto br = solve_bf(bd, cs, refl, b, s, opts.bf);
      bf_ms = detail::elapsed_ms(ts);
      bs = br.status;
      const double fc_bf = eval_fc(s, cs, br.design, refl, aux);
      if (fc_bf >= fc_prev) {
        design = br.design;
        fc_prev = fc_bf;
      }
      if (s.scheme != Scheme::none) {
        ts = std::chrono::steady_clock::now();
        const auto rd = build_ris(cs, aux, design, b, s, refl);
        const auto rr = solve_ris(rd, b, opts.ris);
        ris_ms = detail::elapsed_ms(ts);
        rs = rr.status;
        if (eval_fc(s, cs, design, rr.reflection, aux) >= fc_prev) refl = rr.reflection;
      }
    } catch (const Error& e) {
      trace.status = AoStatus::solver_failure;
      trace.message = "iteration " + std::to_string(t) + ": " + e.what();
      break;
    }
    if (!residuals(s, cs, design, refl, b).feasible) {
      trace.status = AoStatus::solver_failure;
      trace.message = "iteration " + std::to_string(t) + ": iterate violates the constraints";
      break;
    }
    trace.design = design;
    trace.reflection = refl;
    record(t, &aux, bs, rs, bf_ms, ris_ms, t0);
    const double now = trace.iterations.back().wsr;
    if (now > 0.0 && std::abs(now - prev) / now < s.epsilon) {
      trace.status = AoStatus::converged;
      break;
    }
  }
  trace.runtime_ms = detail::elapsed_ms(start);
  return trace;
}

struct ProbeSize {
  int antennas = 4;
  int elements = 20;
  int num_ir = 4;
};

struct ProbeRow {
  ProbeSize size;
  int iterations = 0;
  double bf_ms = 0.0;   // mean per iteration
  double ris_ms = 0.0;  // mean per iteration
  std::string status;
};

/// Times a few AO iterations per problem size on the given base scenario (K_E = K_I).
inline std::vector<ProbeRow> complexity_probe(const std::vector<ProbeSize>& sizes, const Scenario& base,
                                              std::uint64_t seed = 1, int iterations = 3) {
  std::vector<ProbeRow> rows;
  for (const auto& sz : sizes) {
    Scenario s = base;
    s.antennas = sz.antennas;
    s.elements = sz.elements;
    s.resize_receivers(sz.num_ir, sz.num_ir);
    s.t_max = iterations;
    s.epsilon = 1e-12;
    ProbeRow row;
    row.size = sz;
    const ChannelSet cs = synth_channels(s, seed);
    const AoTrace tr = run(cs, s);
    row.status = to_string(tr.status);
    row.iterations = tr.outer_iterations();
    for (std::size_t i = 1; i < tr.iterations.size(); ++i) {
      row.bf_ms += tr.iterations[i].bf_ms;
      row.ris_ms += tr.iterations[i].ris_ms;
    }
    if (row.iterations > 0) {
      row.bf_ms /= row.iterations;
      row.ris_ms /= row.iterations;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace aris
