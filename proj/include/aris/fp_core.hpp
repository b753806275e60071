#pragma once

#include <cmath>

#include "aris/model.hpp"

namespace aris {

// Fractional-programming surrogates of the weighted sum rate. Every surrogate is
// expressed in bits (natural-log terms divided by ln 2), so each one equals the
// WSR at its stationary point.

struct AuxVars {
  RVec gamma_tilde;
  CVec rho;
};

/// Closed-form maximizer of f_a over gamma_tilde: the current SINRs.
inline RVec update_gamma(const Scenario& s, const ChannelSet& cs, const TxDesign& d, const ReflectionVector& r) {
  return sinrs(s, cs, d, r);
}

/// Closed-form maximizer of f_c over rho. The denominator includes the k-th signal.
inline CVec update_rho(const Scenario& s, const ChannelSet& cs, const TxDesign& d, const ReflectionVector& r,
                       const RVec& gamma_tilde) {
  const auto t = link_terms(s, cs, d, r);
  CVec rho(t.signal.size());
  for (Index k = 0; k < rho.size(); ++k) {
    const double a = s.weights[static_cast<std::size_t>(k)] * (1.0 + gamma_tilde(k));
    rho(k) = std::sqrt(a) * t.signal(k) / t.total(k);
  }
  return rho;
}

inline AuxVars update_aux(const Scenario& s, const ChannelSet& cs, const TxDesign& d, const ReflectionVector& r) {
  AuxVars aux;
  aux.gamma_tilde = update_gamma(s, cs, d, r);
  aux.rho = update_rho(s, cs, d, r, aux.gamma_tilde);
  return aux;
}

/// sum_k alpha_k (1 + gt_k) |g_k^H w_k|^2 / D_k, in bits.
inline double eval_fb(const Scenario& s, const ChannelSet& cs, const TxDesign& d, const ReflectionVector& r,
                      const RVec& gamma_tilde) {
  const auto t = link_terms(s, cs, d, r);
  double acc = 0.0;
  for (Index k = 0; k < t.signal.size(); ++k) {
    const double a = s.weights[static_cast<std::size_t>(k)] * (1.0 + gamma_tilde(k));
    acc += a * std::norm(t.signal(k)) / t.total(k);
  }
  return acc / kLn2;
}

/// Design-independent part of f_a, sum_k alpha_k (log(1 + gt_k) - gt_k), in bits.
inline double fp_constant(const Scenario& s, const RVec& gamma_tilde) {
  double acc = 0.0;
  for (Index k = 0; k < gamma_tilde.size(); ++k) {
    const double alpha = s.weights[static_cast<std::size_t>(k)];
    acc += alpha * std::log2(1.0 + gamma_tilde(k)) - alpha * gamma_tilde(k) / kLn2;
  }
  return acc;
}

inline double eval_fa(const Scenario& s, const ChannelSet& cs, const TxDesign& d, const ReflectionVector& r,
                      const RVec& gamma_tilde) {
  return fp_constant(s, gamma_tilde) + eval_fb(s, cs, d, r, gamma_tilde);
}

inline double eval_fc(const Scenario& s, const ChannelSet& cs, const TxDesign& d, const ReflectionVector& r,
                      const AuxVars& aux) {
  const auto t = link_terms(s, cs, d, r);
  double acc = 0.0;
  for (Index k = 0; k < t.signal.size(); ++k) {
    const double a = s.weights[static_cast<std::size_t>(k)] * (1.0 + aux.gamma_tilde(k));
    acc += 2.0 * std::sqrt(a) * (std::conj(aux.rho(k)) * t.signal(k)).real() - std::norm(aux.rho(k)) * t.total(k);
  }
  return acc / kLn2;
}

}  // namespace aris
