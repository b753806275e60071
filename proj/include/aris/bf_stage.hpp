#pragma once

// Transmit-side subproblem: information beams W and energy covariance V for fixed
// auxiliaries and reflection vector. The harvested-power constraint is linearized
// around an anchor (W(t), V(t)).

#include <cmath>
#include <vector>

#include "aris/conic.hpp"
#include "aris/embedding.hpp"
#include "aris/fp_core.hpp"
#include "aris/model.hpp"

namespace aris {

struct BfSubproblemData {
  CVec b;                  // stacked linear term, length N K_I
  CMat a1;                 // I (x) sum_i |rho_i|^2 g_i g_i^H
  CMat b_ris;              // I (x) Q^H Phi^H Phi Q
  double p_ris_hat = 0.0;  // p_ris - delta_r^2 ||u||^2
  std::vector<CMat> d;     // I (x) h_i h_i^H
  RVec p_prime;            // P_i / eta_i - delta_r^2 ||h_{r,i}^H Phi||^2
  RVec p_dprime;           // p_prime + W(t)^H D_i W(t)
  TxDesign anchor;

  // Per-user blocks kept for the conic assembly.
  CMat g;        // effective IR channels, N x K_I
  CMat h;        // effective ER channels, N x K_E
  CMat g_sum;    // sum_i |rho_i|^2 g_i g_i^H
  CMat ris_gram; // Q^H Phi^H Phi Q
  RVec p_over_eta;
  bool ris_constraint = false;
};

struct BfOptions {
  bool energy_beam = true;  // false forces V = 0
  double tol = 1e-7;
};

struct BfResult {
  TxDesign design;
  conic::Status status = conic::Status::numerical_limit;
  double objective = 0.0;  // value of the convex program (without constants)
  double repair_level = 0.0;
  int newton_steps = 0;
};

namespace detail {

inline CMat kron_identity(int copies, const CMat& m) {
  const Index r = m.rows(), c = m.cols();
  CMat out = CMat::Zero(copies * r, copies * c);
  for (int k = 0; k < copies; ++k) out.block(k * r, k * c, r, c) = m;
  return out;
}

inline CVec vec_of(const CMat& w) { return Eigen::Map<const CVec>(w.data(), w.size()); }

}  // namespace detail

inline BfSubproblemData build_bf(const ChannelSet& cs, const AuxVars& aux, const ReflectionVector& r,
                                 const Budget& budget, const Scenario& s, const TxDesign& anchor) {
  detail::check_design(cs, anchor);
  const int kir = cs.num_ir(), ker = cs.num_er();
  const Index n = cs.antennas();
  if (aux.rho.size() != kir || aux.gamma_tilde.size() != kir) throw DimensionError("auxiliaries must have K_I entries");
  const auto eff = effective_channels(cs, r);

  BfSubproblemData d;
  d.anchor = anchor;
  d.g = eff.g;
  d.h = eff.h;
  d.b.resize(n * kir);
  d.g_sum = CMat::Zero(n, n);
  for (int k = 0; k < kir; ++k) {
    const double a = s.weights[static_cast<std::size_t>(k)] * (1.0 + aux.gamma_tilde(k));
    d.b.segment(k * n, n) = 2.0 * std::sqrt(a) * aux.rho(k) * eff.g.col(k);
    d.g_sum += std::norm(aux.rho(k)) * eff.g.col(k) * eff.g.col(k).adjoint();
  }
  d.a1 = detail::kron_identity(kir, d.g_sum);

  const bool zero = detail::is_zero_reflection(r.u);
  d.ris_gram = zero ? CMat(CMat::Zero(n, n)) : CMat(cs.q.adjoint() * r.u.cwiseAbs2().asDiagonal() * cs.q);
  d.b_ris = detail::kron_identity(kir, d.ris_gram);
  d.ris_constraint = s.scheme == Scheme::active;
  d.p_ris_hat = budget.p_ris - s.ris_noise() * (zero ? 0.0 : r.u.squaredNorm());
  if (d.ris_constraint && d.p_ris_hat < 0.0) throw InfeasibleBudget("RIS noise amplification exceeds the RIS budget");

  const CVec w0 = detail::vec_of(anchor.w);
  d.d.resize(static_cast<std::size_t>(ker));
  d.p_prime.resize(ker);
  d.p_dprime.resize(ker);
  d.p_over_eta.resize(ker);
  for (int i = 0; i < ker; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    d.d[iu] = detail::kron_identity(kir, eff.h.col(i) * eff.h.col(i).adjoint());
    d.p_over_eta(i) = s.p_thresholds[iu] / s.eta[iu];
    d.p_prime(i) = d.p_over_eta(i) - s.ris_noise() * eff.er_ris_noise_gain(i);
    d.p_dprime(i) = d.p_prime(i) + (w0.adjoint() * d.d[iu] * w0)(0, 0).real();
  }
  return d;
}

namespace detail {

enum class BfMode { wsr, repair };

struct BfProgram {
  conic::ConicProgram prog;
  RVec start;  // the anchor: zero steps, slack epigraph and repair variables
  Index ow = 0, ov = -1, ot = -1, oth = -1;
  RVec w_anchor;  // scaled anchor [Re w; Im w] / sqrt(p)
  RVec v_anchor;  // scaled anchor V parameters / p (empty without energy beam)
};

// Variables are steps from the anchor, scaled by p_bs: W' = (W0 + dW) / sqrt(p), V' = (V0 + dV) / p.
// Layout: [Re dw; Im dw] (2 N K), dV parameters (N^2, optional), tau, theta (repair).
// Working with steps keeps the objective equal to the improvement over the anchor, so the
// solver tolerance is not swamped by the large constant of the surrogate.
inline BfProgram bf_program(const BfSubproblemData& data, const Budget& budget, const BfOptions& opts, BfMode mode) {
  const Index n = data.g.rows();
  const int kir = static_cast<int>(data.g.cols());
  const int ker = static_cast<int>(data.h.cols());
  const Index nw = 2 * n * kir;
  const double p = budget.p_bs;
  const double sp = std::sqrt(p);
  const embed::HermitianParam vp(n);

  conic::ProgramBuilder pb;
  BfProgram out;
  out.ow = pb.add_variables("dW", nw);
  out.ov = opts.energy_beam ? pb.add_variables("dV", vp.size()) : -1;
  out.ot = mode == BfMode::wsr ? pb.add_variables("tau", 1) : -1;
  out.oth = mode == BfMode::repair ? pb.add_variables("theta", 1) : -1;
  const Index ow = out.ow, ov = out.ov, ot = out.ot, oth = out.oth;
  const Index nv = pb.num_vars();

  const CVec w0 = vec_of(data.anchor.w);
  out.w_anchor = embed::to_real(w0) / sp;
  out.v_anchor = ov >= 0 ? RVec(vp.from_matrix(data.anchor.v) / p) : RVec();
  const RVec& xw0 = out.w_anchor;

  auto v_coef = [&](const CMat& a) {
    RVec c = RVec::Zero(nv);
    if (ov >= 0) c.segment(ov, vp.size()) = vp.trace_coef(a);
    return c;
  };
  auto anchor_value = [&](const RVec& coef) {  // coef^T x at the anchor
    double acc = coef.segment(ow, nw).dot(xw0);
    if (ov >= 0) acc += coef.segment(ov, vp.size()).dot(out.v_anchor);
    return acc;
  };
  auto w_rows = [&](const CMat& m) {  // real rows of M vec(W), M acting on vec(W)
    RMat rows = RMat::Zero(2 * m.rows(), nv);
    rows.middleCols(ow, nw) = embed::real_map(m);
    return rows;
  };

  RVec c = RVec::Zero(nv);
  if (mode == BfMode::wsr) {
    // maximize sqrt(p) Re{b^H w'} - p ||C^H W'||^2 - p Tr(G V') relative to the anchor;
    // tau bounds p ||C^H dW'||^2 and the cross term is linear in the step.
    const CMat cf = embed::psd_factor(data.g_sum);
    RVec lin = RVec::Zero(nv);
    lin.segment(ow, nw) = sp * embed::re_inner(data.b);
    if (cf.cols() > 0) {
      const RMat f = w_rows(kron_identity(kir, CMat(cf.adjoint())));
      const RVec fw0 = f.middleCols(ow, nw) * xw0;
      lin -= 2.0 * p * (f.transpose() * fw0);
      RVec coef = RVec::Zero(nv);
      coef(ot) = 1.0;
      pb.add_quadratic_le(sp * f, RVec::Zero(f.rows()), coef, 0.0, 1.0);
    } else {
      pb.add_nonneg(RVec::Unit(nv, ot), 0.0);
    }
    c = -lin + p * v_coef(data.g_sum);
    c(ot) = 1.0;
  } else {
    c(oth) = -1.0;
    pb.add_nonneg(-RVec::Unit(nv, oth), 2.0);
  }
  pb.set_objective(c);

  // BS power: ||W'||^2 + Tr V' <= 1.
  {
    RMat f = RMat::Zero(nw, nv);
    f.middleCols(ow, nw) = RMat::Identity(nw, nw);
    const RVec tr = v_coef(CMat::Identity(n, n));
    pb.add_quadratic_le(f, xw0, -tr, 1.0 - anchor_value(tr), 1.0);
  }

  // RIS power: p (||E^H W'||^2 + Tr(B V')) <= p_ris_hat.
  if (data.ris_constraint) {
    const CMat ef = embed::psd_factor(data.ris_gram);
    const double scale = std::max(data.p_ris_hat, 1e-300);
    if (ef.cols() > 0) {
      const RMat f = sp * w_rows(kron_identity(kir, CMat(ef.adjoint())));
      const RVec tr = p * v_coef(data.ris_gram);
      pb.add_quadratic_le(f, f.middleCols(ow, nw) * xw0, -tr, data.p_ris_hat - anchor_value(tr), scale);
    } else if (data.p_ris_hat <= 0.0) {
      throw InfeasibleBudget("RIS budget exhausted");
    }
  }

  // Linearized harvested power, divided by P_i / eta_i.
  for (int i = 0; i < ker; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    const double ref = data.p_over_eta(i);
    if (!(ref > 0.0)) continue;
    const CVec a = data.d[iu] * w0;
    RVec coef = RVec::Zero(nv);
    coef.segment(ow, nw) = 2.0 * sp * embed::re_inner(a);
    coef += p * v_coef(data.h.col(i) * data.h.col(i).adjoint());
    double constant = 0.0;
    if (mode == BfMode::wsr) {
      constant = -data.p_dprime(i);
    } else {
      constant = data.p_over_eta(i) - data.p_prime(i) - (w0.adjoint() * data.d[iu] * w0)(0, 0).real();
      coef(oth) = -ref;
    }
    pb.add_nonneg(coef / ref, (constant + anchor_value(coef)) / ref);
  }

  if (ov >= 0) {
    RMat rows = RMat::Zero(conic::svec_size(2 * n), nv);
    rows.middleCols(ov, vp.size()) = vp.psd_rows();
    pb.add_psd(2 * n, rows, rows.middleCols(ov, vp.size()) * out.v_anchor);
  }

  out.prog = pb.build();

  RVec x0 = RVec::Zero(nv);
  if (ot >= 0) x0(ot) = 1.0;
  if (oth >= 0) {
    double lo = 2.0;
    for (int i = 0; i < ker; ++i) {
      const CVec hv = data.h.col(i);
      const double lin = (hv.adjoint() * data.anchor.w).cwiseAbs2().sum() +
                         (hv.adjoint() * data.anchor.v * hv)(0, 0).real() + data.p_over_eta(i) - data.p_prime(i);
      if (data.p_over_eta(i) > 0.0) lo = std::min(lo, lin / data.p_over_eta(i));
    }
    x0(oth) = lo - 1.0;
  }
  out.start = x0;
  return out;
}

inline BfResult solve_bf_impl(const BfSubproblemData& data, const Budget& budget, const BfOptions& opts,
                              BfMode mode) {
  const Index n = data.g.rows();
  const int kir = static_cast<int>(data.g.cols());
  const double p = budget.p_bs;
  const double sp = std::sqrt(p);
  const embed::HermitianParam vp(n);
  const BfProgram bp = bf_program(data, budget, opts, mode);
  const Index nv = bp.prog.num_vars(), ow = bp.ow, ov = bp.ov, oth = bp.oth, nw = 2 * n * kir;
  conic::SolveOptions so;
  so.tol = opts.tol;
  so.start = bp.start;  // used only when strictly feasible
  const auto sol = conic::solve(bp.prog, so);

  BfResult out;
  out.status = sol.status;
  out.newton_steps = sol.newton_steps;
  if (sol.status == conic::Status::infeasible) throw InfeasibleSubproblem("beamforming subproblem infeasible");
  if (sol.x.size() != nv || (sol.status != conic::Status::optimal && sol.status != conic::Status::numerical_limit))
    throw SolverFailure("beamforming subproblem: " + conic::to_string(sol.status));
  const CVec w = sp * embed::to_complex(bp.w_anchor + sol.x.segment(ow, nw));
  out.design.w = Eigen::Map<const CMat>(w.data(), n, kir);
  out.design.v = ov >= 0 ? CMat(p * vp.to_matrix(bp.v_anchor + sol.x.segment(ov, vp.size()))) : CMat(CMat::Zero(n, n));
  out.objective = -sol.objective;
  if (oth >= 0) out.repair_level = sol.x(oth);
  return out;
}

}  // namespace detail

/// Value of the convex program at (W, V): Re{b^H w} - w^H A1 w - Tr(G V).
inline double bf_objective(const BfSubproblemData& data, const TxDesign& d) {
  const CVec w = detail::vec_of(d.w);
  return (data.b.adjoint() * w)(0, 0).real() - (w.adjoint() * data.a1 * w)(0, 0).real() -
         (data.g_sum * d.v).trace().real();
}

/// Solves the beamforming program and checks the result against the original constraints.
inline BfResult solve_bf(const BfSubproblemData& data, const ChannelSet& cs, const ReflectionVector& r,
                         const Budget& budget, const Scenario& s, const BfOptions& opts = {}) {
  BfResult res = detail::solve_bf_impl(data, budget, opts, detail::BfMode::wsr);
  res.objective = bf_objective(data, res.design);
  const Metrics m = residuals(s, cs, res.design, r, budget);
  if (!m.feasible) throw SolverFailure("beamforming solution violates the original constraints");
  return res;
}

/// Feasibility repair: maximizes the smallest linearized harvested-power ratio
/// E_i / P_i (capped at 2) over (W, V).
inline BfResult repair_bf(const BfSubproblemData& data, const Budget& budget, const BfOptions& opts = {}) {
  return detail::solve_bf_impl(data, budget, opts, detail::BfMode::repair);
}

}  // namespace aris
