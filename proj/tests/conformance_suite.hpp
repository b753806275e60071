#pragma once

// Hand-verifiable conic programs with known optimal values.

#include <cmath>
#include <string>
#include <vector>

#include "aris/conic.hpp"

namespace aris_test {
using namespace aris;

struct ConformanceCase {
  std::string name;
  conic::ConicProgram program;
  conic::Status expected_status;
  double expected_objective;  // ignored unless optimal
};

inline RVec vec(std::initializer_list<double> v) {
  RVec out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline RMat mat(Index r, Index c, std::initializer_list<double> v) {
  RMat m(r, c);
  auto it = v.begin();
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = *it++;
  return m;
}

inline std::vector<ConformanceCase> conformance_suite() {
  using conic::ProgramBuilder;
  using conic::Status;
  std::vector<ConformanceCase> out;

  {  // min x s.t. x >= 1
    ProgramBuilder b;
    b.add_variables("x", 1);
    b.add_nonneg(vec({1.0}), -1.0);
    b.set_objective(vec({1.0}));
    out.push_back({"halfline", b.build(), Status::optimal, 1.0});
  }
  {  // min t s.t. (t, 3, 4) in SOC
    ProgramBuilder b;
    b.add_variables("t", 1);
    b.add_soc(mat(3, 1, {1, 0, 0}), vec({0, 3, 4}));
    b.set_objective(vec({1.0}));
    out.push_back({"euclidean_norm", b.build(), Status::optimal, 5.0});
  }
  {  // min t s.t. [[t,1],[1,t]] PSD
    ProgramBuilder b;
    b.add_variables("t", 1);
    const double r2 = std::sqrt(2.0);
    b.add_psd(2, mat(3, 1, {1, 0, 1}), vec({0, r2, 0}));
    b.set_objective(vec({1.0}));
    out.push_back({"psd_2x2", b.build(), Status::optimal, 1.0});
  }
  {  // LP: min -x - y, x + 2y <= 4, 3x + y <= 6, x, y >= 0  -> (1.6, 1.2)
    ProgramBuilder b;
    b.add_variables("xy", 2);
    b.add_nonneg(vec({-1, -2}), 4.0);
    b.add_nonneg(vec({-3, -1}), 6.0);
    b.add_nonneg(vec({1, 0}), 0.0);
    b.add_nonneg(vec({0, 1}), 0.0);
    b.set_objective(vec({-1, -1}));
    out.push_back({"lp_vertex", b.build(), Status::optimal, -2.8});
  }
  {  // min t s.t. ||(x, y)|| <= t, x + y = 2  -> sqrt(2)
    ProgramBuilder b;
    b.add_variables("v", 3);
    b.add_soc(mat(3, 3, {0, 0, 1, 1, 0, 0, 0, 1, 0}), vec({0, 0, 0}));
    b.add_equality(vec({1, 1, 0}), 2.0);
    b.set_objective(vec({0, 0, 1}));
    out.push_back({"norm_on_line", b.build(), Status::optimal, std::sqrt(2.0)});
  }
  {  // min tau - 2x s.t. x^2 <= tau  -> -1
    ProgramBuilder b;
    b.add_variables("v", 2);
    b.add_quadratic_le(mat(1, 2, {1, 0}), vec({0}), vec({0, 1}), 0.0, 1.0);
    b.set_objective(vec({-2, 1}));
    out.push_back({"quadratic_epigraph", b.build(), Status::optimal, -1.0});
  }
  {  // lambda_max([[2,1],[1,2]]) = 3
    ProgramBuilder b;
    b.add_variables("t", 1);
    const double r2 = std::sqrt(2.0);
    b.add_psd(2, mat(3, 1, {1, 0, 1}), vec({-2, -r2, -2}));
    b.set_objective(vec({1.0}));
    out.push_back({"max_eigenvalue", b.build(), Status::optimal, 3.0});
  }
  {  // lambda_max of Hermitian [[1, i], [-i, 1]] via real embedding = 2
    ProgramBuilder b;
    b.add_variables("t", 1);
    CMat hm(2, 2);
    hm << Complex(1, 0), Complex(0, 1), Complex(0, -1), Complex(1, 0);
    const RVec hv = conic::mat_to_svec(conic::embed_hermitian(hm));
    const RVec iv = conic::mat_to_svec(RMat::Identity(4, 4));
    b.add_psd(4, iv, -hv);
    b.set_objective(vec({1.0}));
    out.push_back({"hermitian_embedding", b.build(), Status::optimal, 2.0});
  }
  {  // min ||x - (3,4)|| s.t. ||x|| <= 1  -> 4
    ProgramBuilder b;
    b.add_variables("v", 3);  // x1, x2, t
    b.add_soc(mat(3, 3, {0, 0, 1, -1, 0, 0, 0, -1, 0}), vec({0, 3, 4}));
    b.add_soc(mat(3, 3, {0, 0, 0, 1, 0, 0, 0, 1, 0}), vec({1, 0, 0}));
    b.set_objective(vec({0, 0, 1}));
    out.push_back({"ball_projection", b.build(), Status::optimal, 4.0});
  }
  {  // min Tr X s.t. X PSD, X_12 = 1  -> 2
    ProgramBuilder b;
    b.add_variables("svecX", 3);
    b.add_psd(2, RMat::Identity(3, 3), vec({0, 0, 0}));
    b.add_equality(vec({0, 1.0 / std::sqrt(2.0), 0}), 1.0);
    b.set_objective(vec({1, 0, 1}));
    out.push_back({"trace_min_sdp", b.build(), Status::optimal, 2.0});
  }
  {  // max s s.t. s^2 <= x y, x + y <= 2  -> 1 (rotated cone)
    ProgramBuilder b;
    b.add_variables("v", 3);  // s, x, y
    b.add_soc(mat(3, 3, {0, 1, 1, 2, 0, 0, 0, 1, -1}), vec({0, 0, 0}));
    b.add_nonneg(vec({0, -1, -1}), 2.0);
    b.set_objective(vec({-1, 0, 0}));
    out.push_back({"geometric_mean", b.build(), Status::optimal, -1.0});
  }
  {  // min -x s.t. [[1, x], [x, 1]] PSD  -> -1
    ProgramBuilder b;
    b.add_variables("x", 1);
    b.add_psd(2, mat(3, 1, {0, std::sqrt(2.0), 0}), vec({1, 0, 1}));
    b.set_objective(vec({-1.0}));
    out.push_back({"psd_offdiagonal", b.build(), Status::optimal, -1.0});
  }
  {  // mixed: min x + y + t, ||(x - 1, y - 2)|| <= t, x >= 2, y = 0 -> 2 + 0 + sqrt(1 + 4)
    ProgramBuilder b;
    b.add_variables("v", 3);
    b.add_soc(mat(3, 3, {0, 0, 1, 1, 0, 0, 0, 1, 0}), vec({0, -1, -2}));
    b.add_nonneg(vec({1, 0, 0}), -2.0);
    b.add_equality(vec({0, 1, 0}), 0.0);
    b.set_objective(vec({1, 1, 1}));
    out.push_back({"mixed_cones", b.build(), Status::optimal, 2.0 + std::sqrt(5.0)});
  }
  {  // badly scaled LP: min 1e-6 x s.t. 1e4 x >= 3e4  -> 3e-6
    ProgramBuilder b;
    b.add_variables("x", 1);
    b.add_nonneg(vec({1e4}), -3e4);
    b.set_objective(vec({1e-6}));
    out.push_back({"scaled_lp", b.build(), Status::optimal, 3e-6});
  }
  {  // x >= 1 and x <= 0
    ProgramBuilder b;
    b.add_variables("x", 1);
    b.add_nonneg(vec({1.0}), -1.0);
    b.add_nonneg(vec({-1.0}), 0.0);
    b.set_objective(vec({1.0}));
    out.push_back({"infeasible_interval", b.build(), Status::infeasible, 0.0});
  }
  {  // ||(x, 1)|| <= 0.5 is empty
    ProgramBuilder b;
    b.add_variables("x", 1);
    b.add_soc(mat(3, 1, {0, 1, 0}), vec({0.5, 0, 1}));
    b.set_objective(vec({1.0}));
    out.push_back({"infeasible_soc", b.build(), Status::infeasible, 0.0});
  }
  {  // min -x s.t. x >= 1
    ProgramBuilder b;
    b.add_variables("x", 1);
    b.add_nonneg(vec({1.0}), -1.0);
    b.set_objective(vec({-1.0}));
    out.push_back({"unbounded_ray", b.build(), Status::unbounded, 0.0});
  }
  return out;
}

}  // namespace aris_test
