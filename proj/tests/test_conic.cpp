#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "aris/conic.hpp"
#include "conformance_suite.hpp"
#include "oracles.hpp"

namespace {

using namespace aris;
using aris::conic::Status;

class Conformance : public ::testing::TestWithParam<std::size_t> {};

TEST_P(Conformance, MatchesKnownOptimum) {
  const auto suite = aris_test::conformance_suite();
  const auto& tc = suite.at(GetParam());
  const auto sol = conic::solve(tc.program, 1e-7);
  ASSERT_EQ(conic::to_string(sol.status), conic::to_string(tc.expected_status)) << tc.name;
  if (tc.expected_status == Status::optimal) {
    EXPECT_NEAR(sol.objective, tc.expected_objective, 1e-6 * (1.0 + std::abs(tc.expected_objective))) << tc.name;
    EXPECT_LE(sol.primal_residual, 1e-7) << tc.name;
    EXPECT_LE(sol.dual_residual, 1e-7) << tc.name;
  }
}

// Dual of min c'x s.t. Ax = b, Gx + s = h, s in K:
//   max -h'z - b'y  s.t.  G'z + A'y + c = 0,  z in K.
conic::ConicProgram dualize(const conic::ConicProgram& p) {
  const Index m = p.g.rows(), me = p.a.rows(), n = p.num_vars();
  conic::ConicProgram d;
  d.c.resize(m + me);
  d.c << p.h, p.b;
  d.a.resize(n, m + me);
  d.a << p.g.transpose(), p.a.transpose();
  d.b = -p.c;
  d.g = RMat::Zero(m, m + me);
  d.g.leftCols(m) = -RMat::Identity(m, m);
  d.h = RVec::Zero(m);
  d.cones = p.cones;
  return d;
}

TEST_P(Conformance, DualValueMatches) {
  const auto suite = aris_test::conformance_suite();
  const auto& tc = suite.at(GetParam());
  if (tc.expected_status != Status::optimal) GTEST_SKIP();
  const auto dual = conic::solve(dualize(tc.program), 1e-7);
  ASSERT_EQ(dual.status, Status::optimal) << tc.name;
  EXPECT_NEAR(-dual.objective, tc.expected_objective, 1e-6 * (1.0 + std::abs(tc.expected_objective))) << tc.name;
}

INSTANTIATE_TEST_SUITE_P(Suite, Conformance,
                         ::testing::Range<std::size_t>(0, aris_test::conformance_suite().size()),
                         [](const auto& info) { return aris_test::conformance_suite()[info.param].name; });

TEST(Conic, SuiteHasEnoughCases) { EXPECT_GE(aris_test::conformance_suite().size(), 12u); }

TEST(Conic, DeterministicSolve) {
  for (const auto& tc : aris_test::conformance_suite()) {
    const auto a = conic::solve(tc.program, 1e-7);
    const auto b = conic::solve(tc.program, 1e-7);
    EXPECT_EQ(a.status, b.status);
    if (a.x.size()) {
      EXPECT_EQ(a.x, b.x) << tc.name;
    }
  }
}

TEST(Conic, MalformedProgramThrows) {
  conic::ConicProgram p;
  p.c = RVec::Ones(2);
  p.g = RMat::Ones(3, 2);
  p.h = RVec::Ones(3);
  p.cones.nonneg = 2;
  EXPECT_THROW(conic::solve(p), DimensionError);
  p.cones.nonneg = 3;
  p.h(0) = std::nan("");
  EXPECT_THROW(conic::solve(p), DomainError);
}

TEST(Conic, StartPointIsUsedWhenInterior) {
  const auto suite = aris_test::conformance_suite();
  conic::SolveOptions o;
  o.start = aris_test::vec({10.0});
  const auto sol = conic::solve(suite[1].program, o);
  ASSERT_EQ(sol.status, Status::optimal);
  EXPECT_NEAR(sol.objective, 5.0, 1e-6);
}

TEST(Conic, SvecRoundTrip) {
  RMat m(3, 3);
  m << 1, 2, 3, 2, 4, 5, 3, 5, 6;
  const RVec v = conic::mat_to_svec(m);
  EXPECT_NEAR(v.dot(v), (m * m).trace(), 1e-12);
  EXPECT_TRUE(conic::svec_to_mat(v, 3).isApprox(m, 1e-15));
}

TEST(EmbedHermitian, IdentityMapsToIdentity) {
  EXPECT_TRUE(conic::embed_hermitian(CMat::Identity(2, 2)).isApprox(RMat::Identity(4, 4)));
}

TEST(EmbedHermitian, EigenvaluesAreDoubled) {
  CMat h(2, 2);
  h << Complex(0, 0), Complex(0, 1), Complex(0, -1), Complex(0, 0);
  const RMat e = conic::embed_hermitian(h);
  RVec ev = Eigen::SelfAdjointEigenSolver<RMat>(e).eigenvalues();
  std::sort(ev.data(), ev.data() + ev.size());
  EXPECT_NEAR(ev(0), -1.0, 1e-12);
  EXPECT_NEAR(ev(1), -1.0, 1e-12);
  EXPECT_NEAR(ev(2), 1.0, 1e-12);
  EXPECT_NEAR(ev(3), 1.0, 1e-12);
}

TEST(EmbedHermitian, TraceDoublesAndPsdPreserved) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const CMat f = aris_test::random_cmat(rng, 4, 4);
    const CMat h = f + f.adjoint();
    EXPECT_NEAR(conic::embed_hermitian(h).trace(), 2.0 * h.trace().real(), 1e-12);
    const CMat p = f * f.adjoint();
    const double emin = Eigen::SelfAdjointEigenSolver<RMat>(conic::embed_hermitian(p)).eigenvalues().minCoeff();
    EXPECT_GE(emin, -1e-10);
  }
}

TEST(EmbedHermitian, RejectsBadInput) {
  EXPECT_THROW(conic::embed_hermitian(CMat::Zero(2, 3)), DimensionError);
  CMat h = CMat::Identity(2, 2);
  h(0, 1) = 1.0;
  EXPECT_THROW(conic::embed_hermitian(h), DomainError);
}

TEST(Dump, RoundTripIsExact) {
  for (const auto& tc : aris_test::conformance_suite()) {
    const std::string text = conic::dump_program(tc.program);
    const auto back = conic::parse_program(text);
    EXPECT_EQ(back.c, tc.program.c) << tc.name;
    EXPECT_EQ(back.g, tc.program.g) << tc.name;
    EXPECT_EQ(back.h, tc.program.h) << tc.name;
    EXPECT_EQ(back.a, tc.program.a) << tc.name;
    EXPECT_EQ(back.b, tc.program.b) << tc.name;
    EXPECT_EQ(back.cones.soc, tc.program.cones.soc) << tc.name;
    EXPECT_EQ(back.cones.psd, tc.program.cones.psd) << tc.name;
    EXPECT_EQ(conic::dump_program(back), text);
  }
}

TEST(Dump, MalformedTextThrows) {
  EXPECT_THROW(conic::parse_program("hello"), FormatError);
  EXPECT_THROW(conic::parse_program("conic-program 1\nvars 1 eq 0 ineq 1\ncones nonneg 2 soc 0 psd 0\n"), FormatError);
  EXPECT_THROW(conic::parse_program("conic-program 1\nvars 1 eq 0 ineq 1\ncones nonneg 1 soc 0 psd 0\nG 5 0 1\n"),
               FormatError);
}

// min ||F x + f||^2 + q'x via the epigraph, against Nelder-Mead on the smooth objective.
TEST(QuadraticEpigraph, MatchesNelderMead) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int rep = 0; rep < 6; ++rep) {
    const Index n = 2 + rep % 2;
    RMat f(n + 1, n);
    RVec f0(n + 1), q(n);
    for (Index i = 0; i < f.size(); ++i) f.data()[i] = nd(rng);
    for (Index i = 0; i < f0.size(); ++i) f0(i) = nd(rng);
    for (Index i = 0; i < n; ++i) q(i) = nd(rng);

    conic::ProgramBuilder b;
    b.add_variables("x", n);
    const Index tau = b.add_variables("tau", 1);
    RMat fe = RMat::Zero(n + 1, n + 1);
    fe.leftCols(n) = f;
    RVec coef = RVec::Zero(n + 1);
    coef(tau) = 1.0;
    b.add_quadratic_le(fe, f0, coef, 0.0, 1.0);
    RVec c(n + 1);
    c << q, 1.0;
    b.set_objective(c);
    const auto sol = conic::solve(b.build(), 1e-7);
    ASSERT_EQ(sol.status, Status::optimal);

    auto obj = [&](const std::vector<double>& x) {
      const RVec xv = Eigen::Map<const RVec>(x.data(), n);
      return (f * xv + f0).squaredNorm() + q.dot(xv);
    };
    const auto best = aris_test::refine(obj, std::vector<double>(static_cast<std::size_t>(n), 0.0), 1.0);
    EXPECT_NEAR(sol.objective, obj(best), 1e-4 * (1.0 + std::abs(obj(best))));
  }
}

// min q'x s.t. ||F x + f||^2 <= 1, against a polar grid over the feasible ellipse boundary.
TEST(QuadraticEpigraph, ConstrainedMatchesGrid) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int rep = 0; rep < 4; ++rep) {
    RMat f(2, 2);
    f << 1.0 + std::abs(nd(rng)), 0.3 * nd(rng), 0.3 * nd(rng), 1.0 + std::abs(nd(rng));
    const RVec f0 = RVec::Constant(2, 0.1 * nd(rng));
    const RVec q(aris_test::vec({nd(rng), nd(rng)}));
    conic::ProgramBuilder b;
    b.add_variables("x", 2);
    b.add_quadratic_le(f, f0, RVec::Zero(2), 1.0, 1.0);
    b.set_objective(q);
    const auto sol = conic::solve(b.build(), 1e-7);
    ASSERT_EQ(sol.status, Status::optimal);
    // Boundary points: F x + f = (cos a, sin a).
    const RMat finv = f.inverse();
    double best = 1e300;
    auto at = [&](double a) { return q.dot(finv * (RVec(aris_test::vec({std::cos(a), std::sin(a)})) - f0)); };
    double arg = 0.0;
    for (int k = 0; k < 20000; ++k) {
      const double a = 2.0 * M_PI * k / 20000.0;
      if (at(a) < best) {
        best = at(a);
        arg = a;
      }
    }
    const auto fine = aris_test::refine([&](const std::vector<double>& v) { return at(v[0]); }, {arg}, 1e-3);
    best = std::min(best, at(fine[0]));
    EXPECT_NEAR(sol.objective, best, 1e-4);
  }
}

}  // namespace
