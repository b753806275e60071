#include <gtest/gtest.h>

#include <random>

#include "aris/fp_core.hpp"
#include "oracles.hpp"

using namespace aris;

namespace {

aris_test::SmallInstance instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> n(1, 4), l(1, 8), k(1, 3);
  const Scheme schemes[] = {Scheme::active, Scheme::passive, Scheme::none};
  const int nn = n(rng), ll = l(rng), ki = k(rng), ke = k(rng);
  return aris_test::random_small_instance(rng, nn, ll, ki, ke, schemes[seed % 3]);
}

struct UnitInstance {
  Scenario s;
  ChannelSet cs;
  TxDesign d;
  ReflectionVector r;
};

UnitInstance unit_instance() {
  UnitInstance x;
  x.s = default_scenario();
  x.s.antennas = 1;
  x.s.elements = 1;
  x.s.resize_receivers(1, 1);
  x.s.noise_ir = 1.0;
  x.cs.q = CMat::Zero(1, 1);
  x.cs.g_d = {CVec::Ones(1)};
  x.cs.h_d = {CVec::Ones(1)};
  x.cs.g_r = {CVec::Zero(1)};
  x.cs.h_r = {CVec::Zero(1)};
  x.cs.ir_positions = {{0, 0}};
  x.cs.er_positions = {{0, 0}};
  x.d = TxDesign::zero(1, 1);
  x.d.w(0, 0) = 1.0;
  x.r = ReflectionVector::zero(1);
  return x;
}

}  // namespace

TEST(UpdateGamma, UnitInstance) {
  const auto x = unit_instance();
  const RVec g = update_gamma(x.s, x.cs, x.d, x.r);
  EXPECT_NEAR(g(0), 1.0, 1e-15);
}

TEST(UpdateGamma, Idempotent) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = instance(seed);
    const RVec a = update_gamma(inst.scenario, inst.channels, inst.design, inst.reflection);
    const RVec b = update_gamma(inst.scenario, inst.channels, inst.design, inst.reflection);
    EXPECT_EQ(a, b);
  }
}

TEST(UpdateGamma, SurrogateEqualsWsrAtSinr) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto inst = instance(seed);
    const auto& [s, cs, d, r] = inst;
    const RVec g = update_gamma(s, cs, d, r);
    EXPECT_NEAR(eval_fa(s, cs, d, r, g), wsr(s, cs, d, r), 1e-10) << seed;
  }
}

TEST(UpdateRho, UnitInstanceHandValue) {
  const auto x = unit_instance();
  const CVec rho = update_rho(x.s, x.cs, x.d, x.r, RVec::Ones(1));
  EXPECT_NEAR(std::abs(rho(0) - Complex(std::sqrt(2.0) / 2.0, 0.0)), 0.0, 1e-15);
}

TEST(UpdateRho, ZeroBeamGivesZero) {
  auto inst = instance(4);
  inst.design.w.col(0).setZero();
  const auto& [s, cs, d, r] = inst;
  const CVec rho = update_rho(s, cs, d, r, update_gamma(s, cs, d, r));
  EXPECT_EQ(rho(0), Complex(0.0, 0.0));
}

TEST(EvalFc, ZeroRhoIsZero) {
  const auto inst = instance(5);
  const auto& [s, cs, d, r] = inst;
  AuxVars aux = update_aux(s, cs, d, r);
  aux.rho.setZero();
  EXPECT_EQ(eval_fc(s, cs, d, r, aux), 0.0);
}

TEST(EvalFc, TightAtOptimalRho) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto inst = instance(seed);
    const auto& [s, cs, d, r] = inst;
    const AuxVars aux = update_aux(s, cs, d, r);
    EXPECT_NEAR(eval_fc(s, cs, d, r, aux), eval_fb(s, cs, d, r, aux.gamma_tilde), 1e-10) << seed;
    EXPECT_NEAR(fp_constant(s, aux.gamma_tilde) + eval_fc(s, cs, d, r, aux), wsr(s, cs, d, r), 1e-10) << seed;
  }
}

TEST(EvalFc, PerturbingRhoDecreasesSurrogate) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = instance(seed);
    const auto& [s, cs, d, r] = inst;
    const AuxVars aux = update_aux(s, cs, d, r);
    const double best = eval_fc(s, cs, d, r, aux);
    std::mt19937_64 rng(seed);
    for (int trial = 0; trial < 5; ++trial) {
      AuxVars p = aux;
      p.rho += aris_test::random_cvec(rng, p.rho.size(), 0.1 * (1.0 + p.rho.cwiseAbs().maxCoeff()));
      EXPECT_LT(eval_fc(s, cs, d, r, p), best);
    }
  }
}

TEST(EvalFa, SinrMaximizesOverGamma) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = instance(seed);
    const auto& [s, cs, d, r] = inst;
    const RVec g = update_gamma(s, cs, d, r);
    const double best = eval_fa(s, cs, d, r, g);
    for (double f : {0.5, 0.9, 1.1, 2.0}) EXPECT_LT(eval_fa(s, cs, d, r, f * g), best);
  }
}

TEST(Stationarity, FiniteDifferencesVanish) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = instance(seed);
    const auto& [s, cs, d, r] = inst;
    const AuxVars aux = update_aux(s, cs, d, r);
    for (Index k = 0; k < aux.gamma_tilde.size(); ++k) {
      const double h = 1e-5 * std::max(1.0, aux.gamma_tilde(k));
      const double grad = aris_test::central_difference(
          [&](double t) {
            RVec g = aux.gamma_tilde;
            g(k) = t;
            return eval_fa(s, cs, d, r, g);
          },
          aux.gamma_tilde(k), h);
      EXPECT_LE(std::abs(grad), 1e-6) << seed;
      for (Complex dir : {Complex(1, 0), Complex(0, 1)}) {
        const double hr = 1e-5 * std::max(1.0, std::abs(aux.rho(k)));
        const double grad_rho = aris_test::central_difference(
            [&](double t) {
              AuxVars p = aux;
              p.rho(k) += t * dir;
              return eval_fc(s, cs, d, r, p);
            },
            0.0, hr);
        EXPECT_LE(std::abs(grad_rho), 1e-6) << seed;
      }
    }
  }
}
