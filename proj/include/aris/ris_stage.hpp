#pragma once

// Reflection subproblem over phi = conj(u) for fixed auxiliaries and transmit design.
// Harvested power is linearized around the anchor phi(t).

#include <cmath>
#include <vector>

#include "aris/conic.hpp"
#include "aris/embedding.hpp"
#include "aris/fp_core.hpp"
#include "aris/model.hpp"

namespace aris {

struct RisSubproblemData {
  CVec e;               // linear term
  CMat f;               // objective quadratic form
  CMat j;               // RIS power form (diagonal)
  std::vector<CMat> r_mat;  // R_i
  std::vector<CVec> r_vec;  // r_i
  RVec p_tilde;         // P_i / eta_i minus the phi-free harvested power
  RVec p_tilde_prime;   // p_tilde + phi(t)^H R_i phi(t)
  RVec p_over_eta;
  CVec anchor;          // phi(t)
  CMat energy_factors;  // columns v_m with V = sum v_m v_m^H
  double p_ris = 0.0;
  bool passive = false;  // |phi_l| <= 1 instead of the power constraint
};

struct RisOptions {
  double tol = 1e-7;
};

struct RisResult {
  ReflectionVector reflection;
  conic::Status status = conic::Status::numerical_limit;
  double objective = 0.0;
  double repair_level = 0.0;
  int newton_steps = 0;
};

/// Energy beams v_m of V from its eigendecomposition; eigenvalues below rel_cut * Tr V are dropped.
inline CMat energy_factors(const CMat& v, double rel_cut = 1e-10) {
  const CMat herm = 0.5 * (v + v.adjoint());
  const double tr = herm.trace().real();
  if (v.size() == 0 || !(tr > 0.0)) return CMat(v.rows(), 0);
  Eigen::SelfAdjointEigenSolver<CMat> es(herm);
  std::vector<Index> keep;
  for (Index i = es.eigenvalues().size() - 1; i >= 0; --i)
    if (es.eigenvalues()(i) > rel_cut * tr) keep.push_back(i);
  CMat out(v.rows(), static_cast<Index>(keep.size()));
  for (std::size_t m = 0; m < keep.size(); ++m)
    out.col(static_cast<Index>(m)) = es.eigenvectors().col(keep[m]) * std::sqrt(es.eigenvalues()(keep[m]));
  return out;
}

inline RisSubproblemData build_ris(const ChannelSet& cs, const AuxVars& aux, const TxDesign& d, const Budget& budget,
                                   const Scenario& s, const ReflectionVector& anchor) {
  detail::check_design(cs, d);
  const Index l = cs.elements();
  if (anchor.u.size() != l) throw DimensionError("anchor reflection vector length != L");
  const int kir = cs.num_ir(), ker = cs.num_er();
  if (aux.rho.size() != kir || aux.gamma_tilde.size() != kir) throw DimensionError("auxiliaries must have K_I entries");
  const double dr = s.ris_noise();

  RisSubproblemData out;
  out.passive = s.scheme == Scheme::passive;
  out.p_ris = budget.p_ris;
  out.anchor = anchor.column();
  out.energy_factors = energy_factors(d.v);

  const CMat sw = d.w * d.w.adjoint() + d.v;  // sum_k w_k w_k^H + V
  out.e = CVec::Zero(l);
  out.f = CMat::Zero(l, l);
  for (int k = 0; k < kir; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const CMat m = cs.g_r[ku].conjugate().asDiagonal() * cs.q;  // diag(g_r^*) Q
    const double a = s.weights[ku] * (1.0 + aux.gamma_tilde(k));
    const double r2 = std::norm(aux.rho(k));
    out.e += 2.0 * std::sqrt(a) * std::conj(aux.rho(k)) * (m * d.w.col(k));
    out.e -= 2.0 * r2 * (m * (sw * cs.g_d[ku]));
    out.f += r2 * (m * sw * m.adjoint());
    out.f.diagonal() += r2 * dr * cs.g_r[ku].cwiseAbs2().cast<Complex>();
  }

  RVec jd = RVec::Constant(l, dr);
  const CMat qw = cs.q * d.w;
  const CMat qv = cs.q * out.energy_factors;
  for (Index i = 0; i < l; ++i) jd(i) += qw.row(i).squaredNorm() + qv.row(i).squaredNorm();
  out.j = jd.cast<Complex>().asDiagonal();

  out.r_mat.resize(static_cast<std::size_t>(ker));
  out.r_vec.resize(static_cast<std::size_t>(ker));
  out.p_tilde.resize(ker);
  out.p_tilde_prime.resize(ker);
  out.p_over_eta.resize(ker);
  for (int i = 0; i < ker; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    const CMat m = cs.h_r[iu].conjugate().asDiagonal() * cs.q;
    CMat rm = m * sw * m.adjoint();
    rm.diagonal() += dr * cs.h_r[iu].cwiseAbs2().cast<Complex>();
    out.r_mat[iu] = rm;
    out.r_vec[iu] = m * (sw * cs.h_d[iu]);
    const double direct = (cs.h_d[iu].adjoint() * d.w).cwiseAbs2().sum() + (cs.h_d[iu].adjoint() * d.v * cs.h_d[iu])(0, 0).real();
    out.p_over_eta(i) = s.p_thresholds[iu] / s.eta[iu];
    out.p_tilde(i) = out.p_over_eta(i) - direct;
    out.p_tilde_prime(i) = out.p_tilde(i) + (out.anchor.adjoint() * rm * out.anchor)(0, 0).real();
  }
  return out;
}

/// Re{phi^H e} - phi^H F phi.
inline double ris_objective(const RisSubproblemData& data, const CVec& phi) {
  return (data.e.adjoint() * phi)(0, 0).real() - (phi.adjoint() * data.f * phi)(0, 0).real();
}

/// Exact phi-dependent harvested power 2 Re{phi^H r_i} + phi^H R_i phi (in units of E_i / eta_i).
inline double ris_harvest_part(const RisSubproblemData& data, const CVec& phi, int i) {
  const auto iu = static_cast<std::size_t>(i);
  return 2.0 * (phi.adjoint() * data.r_vec[iu])(0, 0).real() + (phi.adjoint() * data.r_mat[iu] * phi)(0, 0).real();
}

namespace detail {

enum class RisMode { wsr, repair };

inline RisResult solve_ris_impl(const RisSubproblemData& data, const RisOptions& opts, RisMode mode) {
  const Index l = data.e.size();
  const int ker = static_cast<int>(data.r_vec.size());
  const RVec jd = data.j.diagonal().real();
  double sc = 1.0;
  if (!data.passive) {
    if (!(data.p_ris > 0.0)) throw InfeasibleBudget("RIS budget must be positive for the active scheme");
    sc = std::sqrt(data.p_ris / jd.sum());
  }

  // Variables are the step from the anchor: phi = sc (x0 + dx).
  const RVec x0 = embed::to_real(data.anchor / sc);
  conic::ProgramBuilder pb;
  const Index ox = pb.add_variables("dphi", 2 * l);
  const Index ot = mode == RisMode::wsr ? pb.add_variables("tau", 1) : -1;
  const Index oth = mode == RisMode::repair ? pb.add_variables("theta", 1) : -1;
  const Index nv = pb.num_vars();

  auto x_rows = [&](const CMat& m) {
    RMat rows = RMat::Zero(2 * m.rows(), nv);
    rows.middleCols(ox, 2 * l) = embed::real_map(m);
    return rows;
  };

  RVec c = RVec::Zero(nv);
  if (mode == RisMode::wsr) {
    const CMat ff = embed::psd_factor(data.f);
    RVec lin = RVec::Zero(nv);
    lin.segment(ox, 2 * l) = sc * embed::re_inner(data.e);
    if (ff.cols() > 0) {
      const RMat f = x_rows(ff.adjoint());
      lin -= 2.0 * sc * sc * (f.transpose() * (f.middleCols(ox, 2 * l) * x0));
      pb.add_quadratic_le(f, RVec::Zero(f.rows()), RVec::Unit(nv, ot), 0.0, 1.0);
    } else {
      pb.add_nonneg(RVec::Unit(nv, ot), 0.0);
    }
    c = -lin;
    c(ot) = sc * sc;
  } else {
    c(oth) = -1.0;
    pb.add_nonneg(-RVec::Unit(nv, oth), 2.0);
  }
  pb.set_objective(c);

  if (data.passive) {
    for (Index i = 0; i < l; ++i) {
      RMat rows = RMat::Zero(3, nv);
      rows(1, ox + i) = 1.0;
      rows(2, ox + l + i) = 1.0;
      pb.add_soc(rows, (RVec(3) << 1.0, x0(i), x0(l + i)).finished());
    }
  } else {
    const CMat jf = (jd.cwiseSqrt() * (sc / std::sqrt(data.p_ris))).cast<Complex>().asDiagonal();
    const RMat rows = x_rows(jf);
    pb.add_quadratic_le(rows, rows.middleCols(ox, 2 * l) * x0, RVec::Zero(nv), 1.0, 1.0);
  }

  for (int i = 0; i < ker; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    const double ref = data.p_over_eta(i);
    if (!(ref > 0.0)) continue;
    const CVec a = data.r_vec[iu] + data.r_mat[iu] * data.anchor;
    RVec coef = RVec::Zero(nv);
    coef.segment(ox, 2 * l) = 2.0 * sc * embed::re_inner(a);
    double constant = -data.p_tilde_prime(i);
    if (mode == RisMode::repair) {
      // const + 2 Re{phi^H a} - phi_t^H R phi_t >= theta P_i / eta_i
      constant = ref - data.p_tilde_prime(i);
      coef(oth) = -ref;
    }
    constant += coef.segment(ox, 2 * l).dot(x0);
    pb.add_nonneg(coef / ref, constant / ref);
  }

  const conic::ConicProgram prog = pb.build();
  conic::SolveOptions so;
  so.tol = opts.tol;
  {
    RVec start = RVec::Zero(nv);
    if (ot >= 0) start(ot) = 1.0;
    if (oth >= 0) {
      double lo = 2.0;
      for (int i = 0; i < ker; ++i) {
        const double ref = data.p_over_eta(i);
        if (!(ref > 0.0)) continue;
        const double have = ref - data.p_tilde(i) + ris_harvest_part(data, data.anchor, i);
        lo = std::min(lo, have / ref);
      }
      start(oth) = lo - 1.0;
    }
    so.start = start;
  }
  const auto sol = conic::solve(prog, so);

  RisResult out;
  out.status = sol.status;
  out.newton_steps = sol.newton_steps;
  if (sol.status == conic::Status::infeasible) throw InfeasibleSubproblem("reflection subproblem infeasible");
  if (sol.x.size() != nv || (sol.status != conic::Status::optimal && sol.status != conic::Status::numerical_limit))
    throw SolverFailure("reflection subproblem: " + conic::to_string(sol.status));
  const CVec phi = sc * embed::to_complex(x0 + sol.x.segment(ox, 2 * l));
  out.reflection = ReflectionVector::from_column(phi);
  out.objective = ris_objective(data, phi);
  if (oth >= 0) out.repair_level = sol.x(oth);
  return out;
}

}  // namespace detail

/// Checks the true (non-linearized) constraints of the reflection subproblem.
inline bool ris_feasible(const RisSubproblemData& data, const CVec& phi, double tol = kFeasibilityTol) {
  if (data.passive) {
    if (phi.size() && phi.cwiseAbs().maxCoeff() > 1.0 + 1e-9) return false;
  } else {
    const double pw = (phi.adjoint() * data.j * phi)(0, 0).real();
    if (pw > data.p_ris * (1.0 + tol)) return false;
  }
  for (int i = 0; i < static_cast<int>(data.r_vec.size()); ++i) {
    const double ref = data.p_over_eta(i);
    if (!(ref > 0.0)) continue;
    if (ris_harvest_part(data, phi, i) < data.p_tilde(i) - tol * ref) return false;
  }
  return true;
}

inline RisResult solve_ris(const RisSubproblemData& data, const Budget& budget, const RisOptions& opts = {}) {
  if (!data.passive && std::abs(budget.p_ris - data.p_ris) > 1e-12 * std::max(1.0, budget.p_ris))
    throw DimensionError("budget does not match the subproblem data");
  RisResult res = detail::solve_ris_impl(data, opts, detail::RisMode::wsr);
  if (!ris_feasible(data, res.reflection.column()))
    throw SolverFailure("reflection solution violates the original constraints");
  return res;
}

/// Feasibility repair over phi: maximizes the smallest linearized harvested-power ratio (capped at 2).
inline RisResult repair_ris(const RisSubproblemData& data, const RisOptions& opts = {}) {
  return detail::solve_ris_impl(data, opts, detail::RisMode::repair);
}

}  // namespace aris
