#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "aris/bf_stage.hpp"
#include "oracles.hpp"

namespace {

using namespace aris;
using aris_test::SmallInstance;

SmallInstance feasible_instance(std::uint64_t seed, Scheme scheme, Budget& budget, double p_bs = 1.0) {
  std::mt19937_64 rng(seed);
  SmallInstance inst = aris_test::random_small_instance(rng, 3, 4, 2, 2, scheme);
  budget = aris_test::make_feasible(inst, 0.5, p_bs);
  return inst;
}

TEST(BuildBf, ZeroReflectionHasNoRisCoupling) {
  Budget b;
  SmallInstance inst = feasible_instance(1, Scheme::active, b);
  const ReflectionVector r0 = ReflectionVector::zero(inst.channels.elements());
  const AuxVars aux = update_aux(inst.scenario, inst.channels, inst.design, r0);
  const auto d = build_bf(inst.channels, aux, r0, b, inst.scenario, inst.design);
  EXPECT_TRUE(d.b_ris.isZero(0.0));
  EXPECT_EQ(d.p_ris_hat, b.p_ris);
}

TEST(BuildBf, LinearTermHandValue) {
  Scenario s = default_scenario();
  s.antennas = 3;
  s.resize_receivers(1, 0);
  ChannelSet cs;
  cs.q = CMat::Zero(0, 3);
  cs.g_d.push_back(CVec::Unit(3, 0));
  cs.g_r.push_back(CVec(0));
  cs.ir_positions.push_back({});
  AuxVars aux{RVec::Zero(1), CVec::Ones(1)};
  s.elements = 0;
  Budget b{1.0, 0.0};
  const auto d = build_bf(cs, aux, ReflectionVector::zero(0), b, s, TxDesign::zero(3, 1));
  EXPECT_TRUE(d.b.isApprox(2.0 * CVec::Unit(3, 0)));
}

TEST(BuildBf, ZeroRhoGivesZeroA1) {
  Budget b;
  SmallInstance inst = feasible_instance(2, Scheme::active, b);
  AuxVars aux = update_aux(inst.scenario, inst.channels, inst.design, inst.reflection);
  aux.rho.setZero();
  const auto d = build_bf(inst.channels, aux, inst.reflection, b, inst.scenario, inst.design);
  EXPECT_TRUE(d.a1.isZero(0.0));
}

TEST(BuildBf, QuadraticFormsArePsd) {
  Budget b;
  SmallInstance inst = feasible_instance(3, Scheme::active, b);
  const AuxVars aux = update_aux(inst.scenario, inst.channels, inst.design, inst.reflection);
  const auto d = build_bf(inst.channels, aux, inst.reflection, b, inst.scenario, inst.design);
  EXPECT_GE(min_hermitian_eigenvalue(d.a1), -1e-9);
  EXPECT_GE(min_hermitian_eigenvalue(d.b_ris), -1e-9);
  for (const auto& di : d.d) EXPECT_GE(min_hermitian_eigenvalue(di), -1e-9);
}

TEST(BuildBf, RisNoiseAboveBudgetThrows) {
  Budget b;
  SmallInstance inst = feasible_instance(4, Scheme::active, b);
  const AuxVars aux = update_aux(inst.scenario, inst.channels, inst.design, inst.reflection);
  b.p_ris = 0.5 * inst.scenario.noise_ris * inst.reflection.u.squaredNorm();
  EXPECT_THROW(build_bf(inst.channels, aux, inst.reflection, b, inst.scenario, inst.design), InfeasibleBudget);
}

TEST(BfStage, FirstOrderLowerBound) {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 50; ++rep) {
    const CVec h = aris_test::random_cvec(rng, 6);
    const CMat d = h * h.adjoint();
    const CVec w0 = aris_test::random_cvec(rng, 6), w = aris_test::random_cvec(rng, 6);
    const double lhs = (w.adjoint() * d * w)(0, 0).real();
    const double rhs = 2.0 * (w0.adjoint() * d * w)(0, 0).real() - (w0.adjoint() * d * w0)(0, 0).real();
    EXPECT_GE(lhs, rhs - 1e-12);
  }
}

class BfRandom : public ::testing::TestWithParam<int> {};

TEST_P(BfRandom, FeasibleAndAscending) {
  const int seed = GetParam();
  const Scheme scheme = seed % 3 == 0 ? Scheme::passive : (seed % 3 == 1 ? Scheme::active : Scheme::none);
  const double p_bs[] = {1.0, 0.05, 30.0};
  Budget b;
  SmallInstance inst = feasible_instance(100 + seed, scheme, b, p_bs[(seed / 3) % 3]);
  const Scenario& s = inst.scenario;
  const AuxVars aux = update_aux(s, inst.channels, inst.design, inst.reflection);
  const auto data = build_bf(inst.channels, aux, inst.reflection, b, s, inst.design);
  const auto res = solve_bf(data, inst.channels, inst.reflection, b, s);
  const Metrics m = residuals(s, inst.channels, res.design, inst.reflection, b);
  EXPECT_TRUE(m.feasible);
  EXPECT_GE(m.min_eig_v, -1e-8 * b.p_bs);
  EXPECT_GE(res.objective, bf_objective(data, inst.design) - 1e-6);
  const double fc_new = eval_fc(s, inst.channels, res.design, inst.reflection, aux);
  const double fc_old = eval_fc(s, inst.channels, inst.design, inst.reflection, aux);
  EXPECT_GE(fc_new, fc_old - 1e-6);
}

INSTANTIATE_TEST_SUITE_P(Seeds, BfRandom, ::testing::Range(0, 12));

// Single user without energy receivers: alternating the auxiliaries and the
// beamformer converges to full-power matched filtering.
TEST(BfStage, ConvergesToMrt) {
  std::mt19937_64 rng(21);
  SmallInstance inst = aris_test::random_small_instance(rng, 3, 2, 1, 0, Scheme::none);
  inst.reflection = ReflectionVector::zero(2);
  const Budget b{1.0, 0.0};
  TxDesign d{aris_test::random_cmat(rng, 3, 1, 0.1), CMat::Zero(3, 3)};
  BfOptions o;
  o.energy_beam = false;
  for (int it = 0; it < 30; ++it) {
    const AuxVars aux = update_aux(inst.scenario, inst.channels, d, inst.reflection);
    const auto data = build_bf(inst.channels, aux, inst.reflection, b, inst.scenario, d);
    d = solve_bf(data, inst.channels, inst.reflection, b, inst.scenario, o).design;
  }
  const CVec g = inst.channels.g_d[0];
  const CVec mrt = std::sqrt(b.p_bs) * g / g.norm();
  const Complex phase = (mrt.adjoint() * d.w.col(0))(0, 0);
  const CVec aligned = d.w.col(0) * std::polar(1.0, -std::arg(phase));
  EXPECT_LE((aligned - mrt).norm(), 1e-4);
  EXPECT_TRUE(d.v.isZero(0.0));
}

// N = 2, K_I = 1, K_E = 1, u = 0: compare against a parameterized search over
// w (4 reals) and V = L L^H (4 reals), with power normalization folded in.
TEST(BfStage, TinyInstanceMatchesBruteForce) {
  std::mt19937_64 rng(77);
  const double budgets[] = {1.0, 0.2, 7.0};
  for (int rep = 0; rep < 3; ++rep) {
    SmallInstance inst = aris_test::random_small_instance(rng, 2, 1, 1, 1, Scheme::none);
    inst.reflection = ReflectionVector::zero(1);
    const Budget b = aris_test::make_feasible(inst, 0.6, budgets[rep]);
    const Scenario& s = inst.scenario;
    const AuxVars aux = update_aux(s, inst.channels, inst.design, inst.reflection);
    const auto data = build_bf(inst.channels, aux, inst.reflection, b, s, inst.design);
    const auto res = solve_bf(data, inst.channels, inst.reflection, b, s);

    const CVec w0 = inst.design.w.col(0);
    const CVec h = data.h.col(0);
    auto design_of = [&](const std::vector<double>& x) {
      TxDesign d;
      d.w = CMat(2, 1);
      d.w << Complex(x[0], x[1]), Complex(x[2], x[3]);
      CMat l = CMat::Zero(2, 2);
      l(0, 0) = x[4];
      l(1, 0) = Complex(x[5], x[6]);
      l(1, 1) = x[7];
      d.v = l * l.adjoint();
      const double pw = bs_power(d);
      if (pw > b.p_bs) {
        d.w *= std::sqrt(b.p_bs / pw);
        d.v *= b.p_bs / pw;
      }
      return d;
    };
    auto neg = [&](const std::vector<double>& x) {
      const TxDesign d = design_of(x);
      const double lin = 2.0 * (std::conj((h.adjoint() * w0)(0, 0)) * (h.adjoint() * d.w.col(0))(0, 0)).real() +
                         (h.adjoint() * d.v * h)(0, 0).real();
      const double viol = std::max(0.0, data.p_dprime(0) - lin);
      return -bf_objective(data, d) + 1e4 * viol / data.p_dprime(0);
    };
    std::vector<double> best;
    double fbest = 1e300;
    std::uniform_real_distribution<double> ud(-std::sqrt(b.p_bs), std::sqrt(b.p_bs));
    for (int start = 0; start < 40; ++start) {
      std::vector<double> x(8);
      for (auto& v : x) v = ud(rng);
      if (start == 0) x = {w0(0).real(), w0(0).imag(), w0(1).real(), w0(1).imag(), 0.1, 0, 0, 0.1};
      x = aris_test::refine(neg, x, 0.2 * std::sqrt(b.p_bs), 5);
      if (neg(x) < fbest) {
        fbest = neg(x);
        best = x;
      }
    }
    EXPECT_NEAR(res.objective, -fbest, 1e-3 * (1.0 + std::abs(fbest)));
    EXPECT_GE(res.objective, -fbest - 1e-6);
  }
}

TEST(BfStage, RepairRaisesHarvestRatio) {
  Budget b;
  SmallInstance inst = feasible_instance(55, Scheme::active, b);
  // Push thresholds above what the anchor delivers.
  const RVec e = harvested_powers(inst.scenario, inst.channels, inst.design, inst.reflection);
  for (int i = 0; i < e.size(); ++i) inst.scenario.p_thresholds[static_cast<std::size_t>(i)] = 1.5 * e(i);
  const AuxVars aux = update_aux(inst.scenario, inst.channels, inst.design, inst.reflection);
  const auto data = build_bf(inst.channels, aux, inst.reflection, b, inst.scenario, inst.design);
  const auto res = repair_bf(data, b);
  const RVec e2 = harvested_powers(inst.scenario, inst.channels, res.design, inst.reflection);
  double ratio = 1e300;
  for (int i = 0; i < e2.size(); ++i) ratio = std::min(ratio, e2(i) / inst.scenario.p_thresholds[static_cast<std::size_t>(i)]);
  EXPECT_GE(ratio, res.repair_level - 1e-9);
  EXPECT_GT(res.repair_level, 1.0 / 1.5);
  EXPECT_LE(bs_power(res.design), b.p_bs * (1 + 1e-9));
}

}  // namespace
