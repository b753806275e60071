#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "aris/channel.hpp"
#include "aris/common.hpp"
#include "aris/scenario.hpp"

namespace aris {

/// Information beams (columns of `w`, N x K_I) and the energy-signal covariance `v` (N x N).
struct TxDesign {
  CMat w;
  CMat v;

  static TxDesign zero(Index antennas, int num_ir) {
    return {CMat::Zero(antennas, num_ir), CMat::Zero(antennas, antennas)};
  }
};

/// Per-element RIS gains u_l = a_l e^{j phi_l}; the reflection matrix is diag(u).
struct ReflectionVector {
  CVec u;

  static ReflectionVector zero(Index elements) { return {CVec::Zero(elements)}; }

  /// Column form used by the reflection subproblem: the elementwise conjugate of u.
  CVec column() const { return u.conjugate(); }
  static ReflectionVector from_column(const CVec& phi) { return {phi.conjugate()}; }
};

enum class ReceiverKind { information, energy };

struct Receiver {
  ReceiverKind kind;
  int index;
};

namespace detail {

inline bool is_zero_reflection(const CVec& u) { return u.size() == 0 || u.isZero(0.0); }

inline void check_reflection(const ChannelSet& cs, const ReflectionVector& r) {
  if (r.u.size() != 0 && r.u.size() != cs.elements()) throw DimensionError("reflection vector length != L");
}

inline void check_design(const ChannelSet& cs, const TxDesign& d) {
  if (d.w.rows() != cs.antennas() || d.w.cols() != cs.num_ir()) throw DimensionError("W must be N x K_I");
  if (d.v.rows() != cs.antennas() || d.v.cols() != cs.antennas()) throw DimensionError("V must be N x N");
}

}  // namespace detail

/// g_k = g_{d,k} + Q^H diag(u)^H g_{r,k} (or h_i analogously).
inline CVec effective_channel(const ChannelSet& cs, const ReflectionVector& r, Receiver rx) {
  detail::check_reflection(cs, r);
  const bool info = rx.kind == ReceiverKind::information;
  const auto& direct = info ? cs.g_d : cs.h_d;
  const auto& reflected = info ? cs.g_r : cs.h_r;
  if (rx.index < 0 || rx.index >= static_cast<int>(direct.size())) throw DimensionError("receiver index out of range");
  const CVec& d = direct[static_cast<std::size_t>(rx.index)];
  if (detail::is_zero_reflection(r.u)) return d;
  const CVec& ref = reflected[static_cast<std::size_t>(rx.index)];
  return d + cs.q.adjoint() * r.u.conjugate().cwiseProduct(ref);
}

/// All effective channels of one reflection state, as N x K matrices.
struct EffectiveChannels {
  CMat g;                  // N x K_I
  CMat h;                  // N x K_E
  RVec ir_ris_noise_gain;  // ||g_{r,k}^H diag(u)||^2
  RVec er_ris_noise_gain;  // ||h_{r,i}^H diag(u)||^2
};

inline EffectiveChannels effective_channels(const ChannelSet& cs, const ReflectionVector& r) {
  detail::check_reflection(cs, r);
  EffectiveChannels e;
  const Index n = cs.antennas();
  e.g.resize(n, cs.num_ir());
  e.h.resize(n, cs.num_er());
  e.ir_ris_noise_gain = RVec::Zero(cs.num_ir());
  e.er_ris_noise_gain = RVec::Zero(cs.num_er());
  const bool zero = detail::is_zero_reflection(r.u);
  const RVec u2 = zero ? RVec() : RVec(r.u.cwiseAbs2());
  for (int k = 0; k < cs.num_ir(); ++k) {
    e.g.col(k) = effective_channel(cs, r, {ReceiverKind::information, k});
    if (!zero) e.ir_ris_noise_gain(k) = cs.g_r[static_cast<std::size_t>(k)].cwiseAbs2().dot(u2);
  }
  for (int i = 0; i < cs.num_er(); ++i) {
    e.h.col(i) = effective_channel(cs, r, {ReceiverKind::energy, i});
    if (!zero) e.er_ris_noise_gain(i) = cs.h_r[static_cast<std::size_t>(i)].cwiseAbs2().dot(u2);
  }
  return e;
}

/// Quantities shared by the SINR and the fractional-programming surrogates.
struct LinkTerms {
  CVec signal;       // g_k^H w_k
  RVec interference; // sum_{i != k} |g_k^H w_i|^2
  RVec energy;       // g_k^H V g_k
  RVec ris_noise;    // delta_r^2 ||g_{r,k}^H Phi||^2
  RVec noise;        // delta_IR^2

  /// Full denominator including the k-th signal term.
  double total(Index k) const { return std::norm(signal(k)) + interference(k) + energy(k) + ris_noise(k) + noise(k); }
  double sinr(Index k) const { return std::norm(signal(k)) / (interference(k) + energy(k) + ris_noise(k) + noise(k)); }
};

inline LinkTerms link_terms(const Scenario& s, const ChannelSet& cs, const TxDesign& d, const ReflectionVector& r) {
  detail::check_design(cs, d);
  const auto eff = effective_channels(cs, r);
  const Index k_ir = cs.num_ir();
  LinkTerms t;
  const CMat gw = eff.g.adjoint() * d.w;  // (k, i) = g_k^H w_i
  t.signal = gw.diagonal();
  t.interference.resize(k_ir);
  t.energy.resize(k_ir);
  t.ris_noise = s.ris_noise() * eff.ir_ris_noise_gain;
  t.noise = RVec::Constant(k_ir, s.noise_ir);
  for (Index k = 0; k < k_ir; ++k) {
    t.interference(k) = gw.row(k).cwiseAbs2().sum() - std::norm(gw(k, k));
    t.energy(k) = std::max(0.0, (eff.g.col(k).adjoint() * d.v * eff.g.col(k))(0, 0).real());
  }
  return t;
}

inline double sinr(const Scenario& s, const ChannelSet& cs, const TxDesign& d, const ReflectionVector& r, int k) {
  return link_terms(s, cs, d, r).sinr(k);
}

inline RVec sinrs(const Scenario& s, const ChannelSet& cs, const TxDesign& d, const ReflectionVector& r) {
  const auto t = link_terms(s, cs, d, r);
  RVec out(t.signal.size());
  for (Index k = 0; k < out.size(); ++k) out(k) = t.sinr(k);
  return out;
}

inline double rate_from_sinr(double gamma) { return std::log2(1.0 + gamma); }

inline double weighted_sum(const std::vector<double>& weights, const RVec& rates) {
  double acc = 0.0;
  for (Index k = 0; k < rates.size(); ++k) acc += weights[static_cast<std::size_t>(k)] * rates(k);
  return acc;
}

inline double wsr(const Scenario& s, const ChannelSet& cs, const TxDesign& d, const ReflectionVector& r) {
  const RVec g = sinrs(s, cs, d, r);
  return weighted_sum(s.weights, g.unaryExpr([](double x) { return rate_from_sinr(x); }));
}

/// eta_i (sum_k |h_i^H w_k|^2 + h_i^H V h_i + delta_r^2 ||h_{r,i}^H Phi||^2), receiver noise excluded.
inline RVec harvested_powers(const Scenario& s, const ChannelSet& cs, const TxDesign& d, const ReflectionVector& r) {
  detail::check_design(cs, d);
  const auto eff = effective_channels(cs, r);
  RVec out(cs.num_er());
  for (int i = 0; i < cs.num_er(); ++i) {
    const CVec& h = eff.h.col(i);
    const double beams = (h.adjoint() * d.w).cwiseAbs2().sum();
    const double energy = std::max(0.0, (h.adjoint() * d.v * h)(0, 0).real());
    out(i) = s.eta[static_cast<std::size_t>(i)] * (beams + energy + s.ris_noise() * eff.er_ris_noise_gain(i));
  }
  return out;
}

inline double harvested_power(const Scenario& s, const ChannelSet& cs, const TxDesign& d, const ReflectionVector& r,
                              int i) {
  return harvested_powers(s, cs, d, r)(i);
}

/// Expected RIS output power: sum_k ||Phi Q w_k||^2 + Tr(Phi Q V Q^H Phi^H) + delta_r^2 ||u||^2.
inline double ris_power(const Scenario& s, const ChannelSet& cs, const TxDesign& d, const ReflectionVector& r) {
  detail::check_design(cs, d);
  detail::check_reflection(cs, r);
  if (detail::is_zero_reflection(r.u)) return 0.0;
  const CMat qw = r.u.asDiagonal() * (cs.q * d.w);
  const CMat phi_q = r.u.asDiagonal() * cs.q;
  const double energy = (phi_q * d.v * phi_q.adjoint()).trace().real();
  return qw.squaredNorm() + std::max(0.0, energy) + s.ris_noise() * r.u.squaredNorm();
}

/// sum_k ||w_k||^2 + Tr(V).
inline double bs_power(const TxDesign& d) { return d.w.squaredNorm() + d.v.trace().real(); }

inline double min_hermitian_eigenvalue(const CMat& m) {
  if (m.size() == 0) return 0.0;
  const CMat herm = 0.5 * (m + m.adjoint());
  return Eigen::SelfAdjointEigenSolver<CMat>(herm, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

/// Everything reported about a candidate design, including constraint residuals
/// (positive residual = violation).
struct Metrics {
  RVec sinr;
  RVec rate;
  double wsr = 0.0;
  RVec harvested;
  double bs_power = 0.0;
  double ris_power = 0.0;
  double residual_ris = 0.0;  // ris_power - p_ris (active only)
  double residual_bs = 0.0;   // bs_power - p_bs
  RVec residual_er;           // P_i - E_i
  double min_eig_v = 0.0;
  bool reflection_ok = true;  // scheme-specific limits on u
  bool feasible = false;
};

inline constexpr double kFeasibilityTol = 1e-6;

inline Metrics residuals(const Scenario& s, const ChannelSet& cs, const TxDesign& d, const ReflectionVector& r,
                         const Budget& b, double tol = kFeasibilityTol) {
  Metrics m;
  m.sinr = sinrs(s, cs, d, r);
  m.rate = m.sinr.unaryExpr([](double x) { return rate_from_sinr(x); });
  m.wsr = weighted_sum(s.weights, m.rate);
  m.harvested = harvested_powers(s, cs, d, r);
  m.bs_power = bs_power(d);
  m.ris_power = ris_power(s, cs, d, r);
  m.residual_bs = m.bs_power - b.p_bs;
  m.residual_ris = s.scheme == Scheme::active ? m.ris_power - b.p_ris : 0.0;
  m.residual_er.resize(cs.num_er());
  for (int i = 0; i < cs.num_er(); ++i) m.residual_er(i) = s.p_thresholds[static_cast<std::size_t>(i)] - m.harvested(i);
  m.min_eig_v = min_hermitian_eigenvalue(d.v);

  switch (s.scheme) {
    case Scheme::passive:
      m.reflection_ok = r.u.size() == 0 || r.u.cwiseAbs().maxCoeff() <= 1.0 + 1e-9;
      break;
    case Scheme::none:
      m.reflection_ok = detail::is_zero_reflection(r.u);
      break;
    case Scheme::active:
      m.reflection_ok = r.u.allFinite();
      break;
  }

  const double herm_err = (d.v - d.v.adjoint()).cwiseAbs().maxCoeff();
  bool ok = m.reflection_ok && herm_err <= 1e-10 * std::max(1.0, d.v.cwiseAbs().maxCoeff());
  ok = ok && m.residual_bs <= tol * b.p_bs;
  if (s.scheme == Scheme::active) ok = ok && m.residual_ris <= tol * b.p_ris;
  for (int i = 0; i < cs.num_er(); ++i)
    ok = ok && m.residual_er(i) <= tol * s.p_thresholds[static_cast<std::size_t>(i)];
  ok = ok && m.min_eig_v >= -tol * b.p_bs;
  m.feasible = ok;
  return m;
}

}  // namespace aris
