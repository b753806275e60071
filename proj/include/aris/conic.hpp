#pragma once

// Real-valued conic programs
//
//     minimize    c^T x
//     subject to  A x = b
//                 G x + s = h,   s in K = R+^l x Q^{q_1} x ... x S+^{p_1} x ...
//
// solved with a primal log-barrier interior-point method. Second-order cones are
// {(s0, s1) : s0 >= ||s1||}. PSD blocks are stored as svec: lower triangle,
// column-major, off-diagonal entries scaled by sqrt(2): <svec(X), svec(Y)> = Tr(XY).
// Iterates stay strictly inside K.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "aris/common.hpp"

namespace aris::conic {

inline Index svec_size(Index order) { return order * (order + 1) / 2; }

/// Cone layout of the inequality rows: nonnegative rows first, then each SOC, then each PSD block.
struct Cones {
  Index nonneg = 0;
  std::vector<Index> soc;
  std::vector<Index> psd;  // matrix orders

  Index rows() const {
    Index r = nonneg;
    for (Index d : soc) r += d;
    for (Index p : psd) r += svec_size(p);
    return r;
  }

  /// Barrier parameter nu: 1 per nonneg row, 2 per SOC, p per PSD block of order p.
  double degree() const {
    double nu = static_cast<double>(nonneg) + 2.0 * static_cast<double>(soc.size());
    for (Index p : psd) nu += static_cast<double>(p);
    return nu;
  }
};

/// Named slice of the variable vector (for diagnostics and dumps).
struct VarBlock {
  std::string name;
  Index offset = 0;
  Index size = 0;
};

struct ConicProgram {
  RVec c;
  RMat a;
  RVec b;
  RMat g;
  RVec h;
  Cones cones;
  std::vector<VarBlock> blocks;

  Index num_vars() const { return c.size(); }

  void validate() const {
    const Index n = c.size();
    if (a.cols() != n && a.rows() != 0) throw DimensionError("A has wrong column count");
    if (a.rows() != b.size()) throw DimensionError("A and b disagree");
    if (g.cols() != n && g.rows() != 0) throw DimensionError("G has wrong column count");
    if (g.rows() != h.size()) throw DimensionError("G and h disagree");
    if (cones.rows() != h.size()) throw DimensionError("cone dimensions do not cover G");
    if (cones.nonneg < 0) throw DimensionError("negative nonneg count");
    for (Index d : cones.soc)
      if (d < 1) throw DimensionError("SOC dimension must be >= 1");
    for (Index p : cones.psd)
      if (p < 1) throw DimensionError("PSD order must be >= 1");
    if (!c.allFinite() || !a.allFinite() || !b.allFinite() || !g.allFinite() || !h.allFinite())
      throw DomainError("conic program data must be finite");
    for (const auto& blk : blocks)
      if (blk.offset < 0 || blk.size < 0 || blk.offset + blk.size > n) throw DimensionError("bad variable block");
  }
};

enum class Status { optimal, infeasible, unbounded, numerical_limit };

inline std::string to_string(Status s) {
  switch (s) {
    case Status::optimal:
      return "optimal";
    case Status::infeasible:
      return "infeasible";
    case Status::unbounded:
      return "unbounded";
    case Status::numerical_limit:
      return "numerical_limit";
  }
  return "unknown";
}

struct ConicSolution {
  Status status = Status::numerical_limit;
  RVec x;  // primal point (strictly feasible whenever non-empty)
  RVec s;  // slack h - G x
  RVec z;  // cone dual
  RVec y;  // equality dual
  double objective = std::numeric_limits<double>::quiet_NaN();
  double primal_residual = std::numeric_limits<double>::infinity();
  double dual_residual = std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();
  int newton_steps = 0;
};

struct SolveOptions {
  double tol = 1e-7;
  int max_newton = 4000;
  /// Optional starting point; used when it satisfies A x = b and lies strictly inside K.
  RVec start;
};

// ---------------------------------------------------------------------------
// svec helpers

inline RMat svec_to_mat(const Eigen::Ref<const RVec>& v, Index order) {
  RMat m(order, order);
  Index k = 0;
  for (Index j = 0; j < order; ++j)
    for (Index i = j; i < order; ++i, ++k) {
      const double val = i == j ? v(k) : v(k) / std::numbers::sqrt2;
      m(i, j) = val;
      m(j, i) = val;
    }
  return m;
}

inline RVec mat_to_svec(const RMat& m) {
  const Index order = m.rows();
  RVec v(svec_size(order));
  Index k = 0;
  for (Index j = 0; j < order; ++j)
    for (Index i = j; i < order; ++i, ++k) v(k) = i == j ? m(i, j) : std::numbers::sqrt2 * 0.5 * (m(i, j) + m(j, i));
  return v;
}

/// Real symmetric embedding [[Re H, -Im H], [Im H, Re H]] of a Hermitian matrix.
inline RMat embed_hermitian(const CMat& hm) {
  if (hm.rows() != hm.cols()) throw DimensionError("embed_hermitian: matrix must be square");
  const double scale = std::max(1.0, hm.cwiseAbs().maxCoeff());
  if ((hm - hm.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale) throw DomainError("embed_hermitian: not Hermitian");
  const Index n = hm.rows();
  RMat e(2 * n, 2 * n);
  e.topLeftCorner(n, n) = hm.real();
  e.topRightCorner(n, n) = -hm.imag();
  e.bottomLeftCorner(n, n) = hm.imag();
  e.bottomRightCorner(n, n) = hm.real();
  return e;
}

namespace detail {

inline constexpr Index kDenseSocThreshold = 8;

// One cone block together with the columns of G it touches.
struct Block {
  enum Kind { nonneg, soc, psd } kind;
  Index offset;  // first row in G
  Index dim;     // number of rows
  Index order;   // PSD order
  std::vector<Index> cols;
  RMat gs;      // rows of the block restricted to `cols`
  RMat gram;    // SOC: Gbar^T Gbar - g0 g0^T on `cols` (large blocks only)
};

class Barrier {
 public:
  Barrier(const RMat& g, const Cones& cones) : n_(g.cols()) {
    Index off = 0;
    for (Index i = 0; i < cones.nonneg; ++i) add(g, Block::nonneg, off++, 1, 0);
    for (Index d : cones.soc) {
      add(g, Block::soc, off, d, 0);
      off += d;
    }
    for (Index p : cones.psd) {
      add(g, Block::psd, off, svec_size(p), p);
      off += svec_size(p);
    }
    nu_ = cones.degree();
  }

  double degree() const { return nu_; }

  /// Smallest "eigenvalue" of s with respect to the cone's identity element.
  double min_eig(const RVec& s) const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& b : blocks_) {
      auto seg = s.segment(b.offset, b.dim);
      switch (b.kind) {
        case Block::nonneg:
          m = std::min(m, seg(0));
          break;
        case Block::soc:
          m = std::min(m, seg(0) - seg.tail(b.dim - 1).norm());
          break;
        case Block::psd:
          m = std::min(m, Eigen::SelfAdjointEigenSolver<RMat>(svec_to_mat(seg, b.order), Eigen::EigenvaluesOnly)
                              .eigenvalues()
                              .minCoeff());
          break;
      }
    }
    return m;
  }

  /// Identity element of K.
  RVec identity(Index rows) const {
    RVec e = RVec::Zero(rows);
    for (const auto& b : blocks_) {
      if (b.kind == Block::psd) {
        Index k = 0;
        for (Index j = 0; j < b.order; ++j) {
          e(b.offset + k) = 1.0;
          k += b.order - j;
        }
      } else {
        e(b.offset) = 1.0;
      }
    }
    return e;
  }

  /// Barrier value; +inf outside the interior.
  double value(const RVec& s) const {
    double f = 0.0;
    for (const auto& b : blocks_) {
      auto seg = s.segment(b.offset, b.dim);
      switch (b.kind) {
        case Block::nonneg:
          if (!(seg(0) > 0.0)) return kInf;
          f -= std::log(seg(0));
          break;
        case Block::soc: {
          const double d = soc_det(seg);
          if (!(d > 0.0) || !(seg(0) > 0.0)) return kInf;
          f -= std::log(d);
          break;
        }
        case Block::psd: {
          Eigen::LLT<RMat> llt(svec_to_mat(seg, b.order));
          if (llt.info() != Eigen::Success) return kInf;
          const RMat& l = llt.matrixLLT();
          for (Index i = 0; i < b.order; ++i) {
            if (!(l(i, i) > 0.0)) return kInf;
            f -= 2.0 * std::log(l(i, i));
          }
          break;
        }
      }
    }
    return f;
  }

  bool interior(const RVec& s) const { return std::isfinite(value(s)); }

  /// Gradient of the barrier in s, and the Hessian pulled back through G (on the restricted columns).
  void derivatives(const RVec& s, RVec& grad, RMat& hess) const {
    grad.setZero(s.size());
    hess.setZero(n_, n_);
    for (const auto& b : blocks_) {
      auto seg = s.segment(b.offset, b.dim);
      const Index nc = static_cast<Index>(b.cols.size());
      if (nc == 0) {
        fill_grad(b, seg, grad);
        continue;
      }
      RMat local(nc, nc);
      switch (b.kind) {
        case Block::nonneg: {
          const double v = seg(0);
          grad(b.offset) = -1.0 / v;
          local.noalias() = b.gs.transpose() * b.gs / (v * v);
          break;
        }
        case Block::soc: {
          const double d = soc_det(seg);
          RVec js = seg;
          js.tail(b.dim - 1) *= -1.0;
          grad.segment(b.offset, b.dim) = -2.0 / d * js;
          const RVec gj = b.gs.transpose() * js;
          if (b.gram.size() != 0) {
            local = (2.0 / d) * b.gram;
          } else {
            RVec jdiag = RVec::Constant(b.dim, 1.0);
            jdiag(0) = -1.0;
            local.noalias() = (2.0 / d) * (b.gs.transpose() * jdiag.asDiagonal() * b.gs);
          }
          local.noalias() += (4.0 / (d * d)) * gj * gj.transpose();
          break;
        }
        case Block::psd: {
          const RMat sm = svec_to_mat(seg, b.order);
          const RMat sinv = sm.llt().solve(RMat::Identity(b.order, b.order));
          grad.segment(b.offset, b.dim) = -mat_to_svec(sinv);
          RMat hg(b.dim, nc);
          for (Index j = 0; j < nc; ++j) {
            const RMat mj = svec_to_mat(b.gs.col(j), b.order);
            hg.col(j) = mat_to_svec(sinv * mj * sinv);
          }
          local.noalias() = b.gs.transpose() * hg;
          break;
        }
      }
      for (Index i = 0; i < nc; ++i)
        for (Index j = 0; j < nc; ++j) hess(b.cols[i], b.cols[j]) += local(i, j);
    }
  }

  /// Negative barrier gradient; lies in the interior of the (self-dual) cone.
  RVec dual_direction(const RVec& s) const {
    RVec grad = RVec::Zero(s.size());
    for (const auto& b : blocks_) fill_grad(b, s.segment(b.offset, b.dim), grad);
    return -grad;
  }

  /// Barrier Hessian in s applied to v.
  RVec hess_apply(const RVec& s, const RVec& v) const {
    RVec out = RVec::Zero(s.size());
    for (const auto& b : blocks_) {
      auto seg = s.segment(b.offset, b.dim);
      auto vs = v.segment(b.offset, b.dim);
      switch (b.kind) {
        case Block::nonneg:
          out(b.offset) = vs(0) / (seg(0) * seg(0));
          break;
        case Block::soc: {
          const double d = soc_det(seg);
          RVec js = seg, jv = vs;
          js.tail(b.dim - 1) *= -1.0;
          jv.tail(b.dim - 1) *= -1.0;
          out.segment(b.offset, b.dim) = -2.0 / d * jv + 4.0 / (d * d) * js.dot(vs) * js;
          break;
        }
        case Block::psd: {
          const RMat sinv = svec_to_mat(seg, b.order).llt().solve(RMat::Identity(b.order, b.order));
          out.segment(b.offset, b.dim) = mat_to_svec(sinv * svec_to_mat(vs, b.order) * sinv);
          break;
        }
      }
    }
    return out;
  }

  /// How far s lies outside K (0 when inside).
  double violation(const RVec& s) const { return std::max(0.0, -min_eig(s)); }

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  static double soc_det(const Eigen::Ref<const RVec>& seg) {
    const double t = seg(0);
    const double r = seg.size() > 1 ? seg.tail(seg.size() - 1).norm() : 0.0;
    return (t - r) * (t + r);
  }

  static void fill_grad(const Block& b, const Eigen::Ref<const RVec>& seg, RVec& grad) {
    switch (b.kind) {
      case Block::nonneg:
        grad(b.offset) = -1.0 / seg(0);
        break;
      case Block::soc: {
        RVec js = seg;
        js.tail(b.dim - 1) *= -1.0;
        grad.segment(b.offset, b.dim) = -2.0 / soc_det(seg) * js;
        break;
      }
      case Block::psd: {
        const RMat sinv = svec_to_mat(seg, b.order).llt().solve(RMat::Identity(b.order, b.order));
        grad.segment(b.offset, b.dim) = -mat_to_svec(sinv);
        break;
      }
    }
  }

  void add(const RMat& g, Block::Kind kind, Index offset, Index dim, Index order) {
    Block b{kind, offset, dim, order, {}, {}, {}};
    for (Index j = 0; j < g.cols(); ++j)
      if (!g.block(offset, j, dim, 1).isZero(0.0)) b.cols.push_back(j);
    b.gs.resize(dim, static_cast<Index>(b.cols.size()));
    for (Index j = 0; j < static_cast<Index>(b.cols.size()); ++j) b.gs.col(j) = g.block(offset, b.cols[j], dim, 1);
    if (kind == Block::soc && dim > kDenseSocThreshold && !b.cols.empty()) {
      const RMat bar = b.gs.bottomRows(dim - 1);
      const RVec g0 = b.gs.row(0).transpose();
      b.gram = bar.transpose() * bar - g0 * g0.transpose();
    }
    blocks_.push_back(std::move(b));
  }

  Index n_;
  double nu_ = 0.0;
  std::vector<Block> blocks_;
};

// Equality handling: x = x_p + Z w with A x_p = b.
struct Affine {
  RVec particular;
  RMat basis;  // n x (n - rank); empty when there are no equalities
  bool consistent = true;
  bool has_equalities = false;
};

inline Affine affine_space(const RMat& a, const RVec& b, Index n) {
  Affine out;
  if (a.rows() == 0) {
    out.particular = RVec::Zero(n);
    return out;
  }
  out.has_equalities = true;
  Eigen::JacobiSVD<RMat> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const RVec& sv = svd.singularValues();
  const double cut = 1e-12 * std::max(1.0, sv.size() ? sv(0) : 0.0);
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cut) ++rank;
  RVec coeff = svd.matrixU().leftCols(rank).transpose() * b;
  for (Index i = 0; i < rank; ++i) coeff(i) /= sv(i);
  out.particular = svd.matrixV().leftCols(rank) * coeff;
  out.basis = svd.matrixV().rightCols(n - rank);
  out.consistent = (a * out.particular - b).norm() <= 1e-9 * (1.0 + b.norm());
  return out;
}

enum class CenterResult { converged, stopped_early, unbounded, stalled, budget };

// Minimizes t c^T x + phi(h - G x) over the affine set, from a strictly feasible x.
class Centering {
 public:
  Centering(const RVec& c, const RMat& g, const RVec& h, const Barrier& barrier, const Affine& aff)
      : c_(c), g_(g), h_(h), barrier_(barrier), aff_(aff) {}

  int steps = 0;
  RVec last_hdx;  // H dx of the final Newton system

  template <class StopFn>
  CenterResult run(RVec& x, double t, double dec_tol, int max_steps, StopFn&& stop_early) {
    RVec grad_s, s, g, dx;
    RMat hess;
    const double x_limit = 1e12 * (1.0 + x.lpNorm<Eigen::Infinity>());
    for (int it = 0; it < max_steps; ++it) {
      s = h_ - g_ * x;
      barrier_.derivatives(s, grad_s, hess);
      g = t * c_ - g_.transpose() * grad_s;
      if (!newton_direction(hess, g, dx)) return CenterResult::stalled;
      ++steps;
      const double lambda2 = -g.dot(dx);
      last_hdx = hess * dx;
      if (!(lambda2 >= -1e-300)) return CenterResult::stalled;
      if (lambda2 * 0.5 <= dec_tol) return CenterResult::converged;

      const RVec ds = g_ * dx;
      double alpha = 1.0;
      const double f0 = t * c_.dot(x) + barrier_.value(s);
      if (std::sqrt(lambda2) < 0.25) {
        while (!barrier_.interior(s - alpha * ds) && alpha > 1e-20) alpha *= 0.5;
      } else {
        while (alpha > 1e-20) {
          const double f1 = t * c_.dot(x + alpha * dx) + barrier_.value(s - alpha * ds);
          if (std::isfinite(f1) && f1 <= f0 - 0.01 * alpha * lambda2) break;
          alpha *= 0.5;
        }
      }
      if (alpha <= 1e-20) return CenterResult::stalled;
      x += alpha * dx;
      if (stop_early(x)) return CenterResult::stopped_early;
      if (x.lpNorm<Eigen::Infinity>() > x_limit) return CenterResult::unbounded;
    }
    return CenterResult::budget;
  }

  /// Newton step of the centering problem at x.
  bool direction(const RVec& x, double t, RVec& dx) const {
    RVec grad_s;
    RMat hess;
    barrier_.derivatives(h_ - g_ * x, grad_s, hess);
    return newton_direction(hess, t * c_ - g_.transpose() * grad_s, dx);
  }

 private:
  bool newton_direction(const RMat& hess, const RVec& g, RVec& dx) const {
    if (!aff_.has_equalities) return spd_solve(hess, -g, dx);
    const RMat& z = aff_.basis;
    if (z.cols() == 0) {
      dx = RVec::Zero(g.size());
      return true;
    }
    RVec w;
    if (!spd_solve(z.transpose() * hess * z, -(z.transpose() * g), w)) return false;
    dx = z * w;
    return true;
  }

  static bool spd_solve(const RMat& m, const RVec& rhs, RVec& out) {
    Eigen::LLT<RMat> llt(m);
    if (llt.info() == Eigen::Success) {
      out = llt.solve(rhs);
      if (out.allFinite()) return true;
    }
    const double reg = 1e-13 * std::max(1e-300, m.diagonal().cwiseAbs().maxCoeff());
    Eigen::LDLT<RMat> ldlt(m + reg * RMat::Identity(m.rows(), m.cols()));
    out = ldlt.solve(rhs);
    return out.allFinite();
  }

  const RVec& c_;
  const RMat& g_;
  const RVec& h_;
  const Barrier& barrier_;
  const Affine& aff_;
};

struct Scaling {
  RVec col;      // x = col .* x_scaled
  RVec eq_row;   // A_scaled = diag(eq_row) A diag(col)
  RVec cone_row; // G_scaled = diag(cone_row) G diag(col), block-constant on SOC/PSD blocks
  double obj = 1.0;
};

inline Scaling equilibrate(const ConicProgram& p) {
  const Index n = p.num_vars(), me = p.a.rows(), mc = p.g.rows();
  Scaling sc{RVec::Ones(n), RVec::Ones(me), RVec::Ones(mc), 1.0};
  // Block boundaries for the cone rows.
  std::vector<std::pair<Index, Index>> groups;
  Index off = 0;
  for (Index i = 0; i < p.cones.nonneg; ++i) groups.emplace_back(off++, 1);
  for (Index d : p.cones.soc) {
    groups.emplace_back(off, d);
    off += d;
  }
  for (Index q : p.cones.psd) {
    groups.emplace_back(off, svec_size(q));
    off += svec_size(q);
  }
  RMat a = p.a, g = p.g;
  for (int pass = 0; pass < 10; ++pass) {
    RVec cn = RVec::Zero(n);
    for (Index j = 0; j < n; ++j) {
      double m = 0.0;
      if (me) m = std::max(m, a.col(j).cwiseAbs().maxCoeff());
      if (mc) m = std::max(m, g.col(j).cwiseAbs().maxCoeff());
      cn(j) = m > 0.0 ? 1.0 / std::sqrt(m) : 1.0;
    }
    for (Index j = 0; j < n; ++j) {
      if (me) a.col(j) *= cn(j);
      if (mc) g.col(j) *= cn(j);
    }
    sc.col = sc.col.cwiseProduct(cn);
    for (Index i = 0; i < me; ++i) {
      const double m = a.row(i).cwiseAbs().maxCoeff();
      const double f = m > 0.0 ? 1.0 / std::sqrt(m) : 1.0;
      a.row(i) *= f;
      sc.eq_row(i) *= f;
    }
    for (const auto& [o, d] : groups) {
      const double m = g.middleRows(o, d).cwiseAbs().maxCoeff();
      const double f = m > 0.0 ? 1.0 / std::sqrt(m) : 1.0;
      g.middleRows(o, d) *= f;
      sc.cone_row.segment(o, d) *= f;
    }
  }
  const double cmax = p.c.cwiseProduct(sc.col).cwiseAbs().maxCoeff();
  sc.obj = cmax > 0.0 ? 1.0 / cmax : 1.0;
  return sc;
}

}  // namespace detail

namespace detail {
inline ConicSolution solve_once(const ConicProgram& prog, const SolveOptions& opts);
}

/// Solves a conic program. Never throws for infeasible/unbounded data; throws
/// DimensionError/DomainError for malformed programs. A start point near the cone
/// boundary can leave Phase II short of certification; such runs are repeated cold.
inline ConicSolution solve(const ConicProgram& prog, const SolveOptions& opts = {}) {
  ConicSolution sol = detail::solve_once(prog, opts);
  if (opts.start.size() == 0 || sol.status == Status::optimal || sol.status == Status::infeasible) return sol;
  SolveOptions cold = opts;
  cold.start = RVec();
  ConicSolution retry = detail::solve_once(prog, cold);
  retry.newton_steps += sol.newton_steps;
  return retry;
}

inline ConicSolution detail::solve_once(const ConicProgram& prog, const SolveOptions& opts) {
  using namespace detail;
  prog.validate();
  const Index n = prog.num_vars();
  const Index m = prog.g.rows();
  ConicSolution sol;

  // Scaled data.
  const Scaling sc = equilibrate(prog);
  const RVec c = sc.obj * prog.c.cwiseProduct(sc.col);
  const RMat a = m >= 0 && prog.a.rows() ? RMat(sc.eq_row.asDiagonal() * prog.a * sc.col.asDiagonal()) : RMat(0, n);
  const RVec b = prog.a.rows() ? RVec(sc.eq_row.cwiseProduct(prog.b)) : RVec(0);
  const RMat g = m ? RMat(sc.cone_row.asDiagonal() * prog.g * sc.col.asDiagonal()) : RMat(0, n);
  const RVec h = m ? RVec(sc.cone_row.cwiseProduct(prog.h)) : RVec(0);

  const Affine aff = affine_space(a, b, n);
  if (!aff.consistent) {
    sol.status = Status::infeasible;
    return sol;
  }

  auto finish = [&](const RVec& xs, double t, Status status, const Barrier& bar, const Centering* cen) {
    sol.status = status;
    sol.x = sc.col.cwiseProduct(xs);
    sol.s = prog.h - prog.g * sol.x;
    sol.objective = prog.c.dot(sol.x);
    // Dual estimate from the central path, z = -grad(phi)(s) / t, corrected by one Newton
    // step when that keeps z inside the cone. y by least squares.
    RVec zs = m ? RVec(bar.dual_direction(h - g * xs) / t) : RVec(0);
    RVec dx;
    if (m && cen && cen->direction(xs, t, dx)) {
      const RVec sx = h - g * xs;
      const RVec zc = zs + bar.hess_apply(sx, g * dx) / t;
      if (zc.allFinite() && bar.interior(zc)) zs = zc;
    }
    sol.z = m ? RVec(sc.cone_row.cwiseProduct(zs) / sc.obj) : RVec(0);
    RVec r = prog.c + (m ? RVec(prog.g.transpose() * sol.z) : RVec::Zero(n));
    if (prog.a.rows()) {
      sol.y = prog.a.transpose().colPivHouseholderQr().solve(-r);
      r += prog.a.transpose() * sol.y;
    } else {
      sol.y = RVec(0);
    }
    sol.dual_residual = r.lpNorm<Eigen::Infinity>() / (1.0 + prog.c.lpNorm<Eigen::Infinity>());
    double pres = 0.0;
    if (prog.a.rows())
      pres = (prog.a * sol.x - prog.b).lpNorm<Eigen::Infinity>() / (1.0 + prog.b.lpNorm<Eigen::Infinity>());
    if (m) {
      const Barrier raw(prog.g, prog.cones);
      pres = std::max(pres, raw.violation(sol.s) / (1.0 + prog.h.lpNorm<Eigen::Infinity>()));
    }
    sol.primal_residual = pres;
    sol.gap = m ? sol.s.dot(sol.z) : 0.0;
    if (cen) sol.newton_steps += cen->steps;
    return sol;
  };

  // No cone rows: a linear objective over an affine set.
  if (m == 0) {
    const RVec proj = aff.has_equalities ? RVec(aff.basis.transpose() * c) : c;
    const Barrier bar(g, prog.cones);
    if (proj.size() && proj.lpNorm<Eigen::Infinity>() > 1e-12) {
      sol.status = Status::unbounded;
      return sol;
    }
    return finish(aff.particular, 1.0, Status::optimal, bar, nullptr);
  }

  const Barrier barrier(g, prog.cones);
  const double nu = barrier.degree();
  RVec x;

  // Optional user-provided strictly feasible start.
  if (opts.start.size() == n) {
    RVec xs = opts.start.cwiseQuotient(sc.col);
    const bool eq_ok = !aff.has_equalities || (a * xs - b).norm() <= 1e-10 * (1.0 + b.norm());
    if (eq_ok && barrier.interior(h - g * xs)) x = xs;
  }

  // Phase I: minimize sigma subject to h - G x + sigma e in K, sigma >= -1.
  if (x.size() == 0) {
    const RVec e = barrier.identity(m);
    const RVec x0 = aff.particular;
    const double sigma0 = std::max(0.0, -barrier.min_eig(h - g * x0)) + 1.0;

    // Rows: sigma >= -1, nonneg rows, SOC rows, the ball ||x - x0|| <= radius, PSD rows.
    Cones cones1 = prog.cones;
    cones1.nonneg += 1;
    Index soc_end = prog.cones.nonneg;
    for (Index d : prog.cones.soc) soc_end += d;
    cones1.soc.push_back(n + 1);
    const Index m1 = m + 1 + n + 1;
    const double radius = 1e4 * (1.0 + x0.norm() + h.lpNorm<Eigen::Infinity>());
    RMat g1 = RMat::Zero(m1, n + 1);
    RVec h1 = RVec::Zero(m1);
    g1(0, n) = -1.0;
    h1(0) = 1.0;
    g1.block(1, 0, soc_end, n) = g.topRows(soc_end);
    g1.block(1, n, soc_end, 1) = -e.head(soc_end);
    h1.segment(1, soc_end) = h.head(soc_end);
    const Index ball = 1 + soc_end;
    h1(ball) = radius;
    g1.block(ball + 1, 0, n, n) = RMat::Identity(n, n);
    h1.segment(ball + 1, n) = x0;
    const Index tail = m - soc_end;
    g1.block(ball + n + 1, 0, tail, n) = g.bottomRows(tail);
    g1.block(ball + n + 1, n, tail, 1) = -e.tail(tail);
    h1.tail(tail) = h.tail(tail);
    RVec c1 = RVec::Zero(n + 1);
    c1(n) = 1.0;
    Affine aff1;
    aff1.has_equalities = aff.has_equalities;
    aff1.particular = RVec::Zero(n + 1);
    if (aff.has_equalities) {
      aff1.basis = RMat::Zero(n + 1, aff.basis.cols() + 1);
      aff1.basis.topLeftCorner(n, aff.basis.cols()) = aff.basis;
      aff1.basis(n, aff.basis.cols()) = 1.0;
    }
    const Barrier bar1(g1, cones1);
    Centering cen1(c1, g1, h1, bar1, aff1);
    RVec x1(n + 1);
    x1.head(n) = x0;
    x1(n) = sigma0;
    auto feasible = [&](const RVec& v) { return v(n) < 0.0; };
    double t = 1.0;
    const double nu1 = bar1.degree();
    bool found = false;
    while (true) {
      const auto res = cen1.run(x1, t, 1e-9, 200, feasible);
      if (res == CenterResult::stopped_early || x1(n) < 0.0) {
        found = true;
        break;
      }
      if (res == CenterResult::stalled || res == CenterResult::unbounded || cen1.steps > opts.max_newton) break;
      if (nu1 / t < 1e-10) break;
      t *= 20.0;
    }
    sol.newton_steps += cen1.steps;
    if (!found) {
      // sigma* >= 0: no strictly feasible point.
      sol.status = x1(n) > 1e-7 ? Status::infeasible : Status::numerical_limit;
      return sol;
    }
    x = x1.head(n);
  }

  // Phase II.
  Centering cen(c, g, h, barrier, aff);
  double t;
  {
    RVec grad_s;
    RMat hess;
    barrier.derivatives(h - g * x, grad_s, hess);
    RVec cz = c, gz = -(g.transpose() * grad_s);
    if (aff.has_equalities) {
      cz = aff.basis.transpose() * c;
      gz = aff.basis.transpose() * gz;
    }
    const double cc = cz.squaredNorm();
    t = cc > 0.0 ? -cz.dot(gz) / cc : 1.0;
    if (!std::isfinite(t) || t <= 0.0) t = 1.0;
    t = std::clamp(t, 1e-6, 1e6);
  }
  auto never = [](const RVec&) { return false; };
  const double target_rel = 0.1 * opts.tol;
  while (true) {
    const auto res = cen.run(x, t, 1e-10, 300, never);
    if (res == CenterResult::unbounded) {
      sol.status = Status::unbounded;
      sol.newton_steps += cen.steps;
      return sol;
    }
    if (res == CenterResult::stalled || res == CenterResult::budget || cen.steps > opts.max_newton) {
      const double gap = nu / t / sc.obj;
      const double objv = c.dot(x) / sc.obj;
      const Status st = gap <= opts.tol * (1.0 + std::abs(objv)) ? Status::optimal : Status::numerical_limit;
      finish(x, t, st, barrier, &cen);
      if (st == Status::optimal && (sol.dual_residual > 1e-7 || sol.primal_residual > 1e-7))
        sol.status = Status::numerical_limit;
      return sol;
    }
    const double gap_scaled = nu / t;
    const double obj_scaled = c.dot(x);
    if (gap_scaled <= target_rel * (sc.obj + std::abs(obj_scaled))) break;
    t *= 20.0;
  }
  // Polish the final centering so the dual estimate is accurate.
  cen.run(x, t, 1e-14, 30, never);
  finish(x, t, Status::optimal, barrier, &cen);
  if (sol.dual_residual > 1e-7 || sol.primal_residual > 1e-7) sol.status = Status::numerical_limit;
  return sol;
}

inline ConicSolution solve(const ConicProgram& prog, double tol) {
  SolveOptions o;
  o.tol = tol;
  return solve(prog, o);
}

// ---------------------------------------------------------------------------

/// Incremental assembly of a ConicProgram. Declare every variable before adding rows.
/// Each constraint is given as an affine expression `coef^T x + constant` whose value
/// must lie in the cone.
class ProgramBuilder {
 public:
  Index add_variables(const std::string& name, Index count) {
    if (frozen_) throw DimensionError("variables must be declared before constraints");
    const Index off = n_;
    blocks_.push_back({name, off, count});
    n_ += count;
    return off;
  }

  Index num_vars() const { return n_; }

  void set_objective(const RVec& c) {
    freeze();
    if (c.size() != n_) throw DimensionError("objective length");
    c_ = c;
  }

  void add_equality(const RVec& coef, double rhs) {
    freeze();
    eq_.push_back({coef, rhs});
  }

  /// coef^T x + constant >= 0
  void add_nonneg(const RVec& coef, double constant) {
    freeze();
    nonneg_.push_back({coef, constant});
  }

  /// rows * x + constants in SOC (row 0 is the scalar part).
  void add_soc(const RMat& rows, const RVec& constants) {
    freeze();
    if (rows.cols() != n_ || rows.rows() != constants.size()) throw DimensionError("SOC block shape");
    soc_.push_back({rows, constants});
  }

  /// svec(M(x)) = rows * x + constants with M(x) PSD of the given order.
  void add_psd(Index order, const RMat& rows, const RVec& constants) {
    freeze();
    if (rows.cols() != n_ || rows.rows() != svec_size(order) || constants.size() != svec_size(order))
      throw DimensionError("PSD block shape");
    psd_.push_back({rows, constants, order});
  }

  /// ||F x + f||^2 <= (coef^T x + constant), normalized by `scale` > 0.
  void add_quadratic_le(const RMat& f, const RVec& f0, const RVec& coef, double constant, double scale) {
    const Index r = f.rows();
    RMat rows(r + 2, n_);
    RVec k(r + 2);
    const double inv = 1.0 / scale, rt = 1.0 / std::sqrt(scale);
    rows.row(0) = inv * coef.transpose();
    k(0) = inv * constant + 1.0;
    rows.middleRows(1, r) = 2.0 * rt * f;
    k.segment(1, r) = 2.0 * rt * f0;
    rows.row(r + 1) = inv * coef.transpose();
    k(r + 1) = inv * constant - 1.0;
    add_soc(rows, k);
  }

  ConicProgram build() const {
    ConicProgram p;
    p.c = c_.size() ? c_ : RVec::Zero(n_);
    p.a.resize(static_cast<Index>(eq_.size()), n_);
    p.b.resize(static_cast<Index>(eq_.size()));
    for (std::size_t i = 0; i < eq_.size(); ++i) {
      p.a.row(static_cast<Index>(i)) = eq_[i].coef.transpose();
      p.b(static_cast<Index>(i)) = eq_[i].constant;
    }
    Index rows = static_cast<Index>(nonneg_.size());
    for (const auto& s : soc_) rows += s.rows.rows();
    for (const auto& s : psd_) rows += s.rows.rows();
    p.g.resize(rows, n_);
    p.h.resize(rows);
    Index r = 0;
    for (const auto& row : nonneg_) {
      p.g.row(r) = -row.coef.transpose();
      p.h(r++) = row.constant;
    }
    for (const auto& s : soc_) {
      p.g.middleRows(r, s.rows.rows()) = -s.rows;
      p.h.segment(r, s.rows.rows()) = s.constants;
      r += s.rows.rows();
      p.cones.soc.push_back(s.rows.rows());
    }
    for (const auto& s : psd_) {
      p.g.middleRows(r, s.rows.rows()) = -s.rows;
      p.h.segment(r, s.rows.rows()) = s.constants;
      r += s.rows.rows();
      p.cones.psd.push_back(s.order);
    }
    p.cones.nonneg = static_cast<Index>(nonneg_.size());
    p.blocks = blocks_;
    return p;
  }

 private:
  struct Row {
    RVec coef;
    double constant;
  };
  struct Multi {
    RMat rows;
    RVec constants;
    Index order = 0;
  };

  void freeze() { frozen_ = true; }

  Index n_ = 0;
  bool frozen_ = false;
  RVec c_;
  std::vector<VarBlock> blocks_;
  std::vector<Row> eq_;
  std::vector<Row> nonneg_;
  std::vector<Multi> soc_;
  std::vector<Multi> psd_;
};

// ---------------------------------------------------------------------------
// Text dump in sparse triplet form:
//
//   conic-program 1
//   vars <n> eq <p> ineq <m>
//   cones nonneg <l> soc <k> d1 .. dk psd <j> p1 .. pj
//   block <name> <offset> <size>
//   c <i> <v>
//   A <i> <j> <v>     b <i> <v>
//   G <i> <j> <v>     h <i> <v>
//
// Zero entries are omitted; values are printed with 17 significant digits.

inline std::string dump_program(const ConicProgram& p) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "conic-program 1\n";
  os << "vars " << p.num_vars() << " eq " << p.a.rows() << " ineq " << p.g.rows() << "\n";
  os << "cones nonneg " << p.cones.nonneg << " soc " << p.cones.soc.size();
  for (Index d : p.cones.soc) os << " " << d;
  os << " psd " << p.cones.psd.size();
  for (Index q : p.cones.psd) os << " " << q;
  os << "\n";
  for (const auto& b : p.blocks) os << "block " << b.name << " " << b.offset << " " << b.size << "\n";
  for (Index i = 0; i < p.c.size(); ++i)
    if (p.c(i) != 0.0) os << "c " << i << " " << p.c(i) << "\n";
  for (Index i = 0; i < p.a.rows(); ++i)
    for (Index j = 0; j < p.a.cols(); ++j)
      if (p.a(i, j) != 0.0) os << "A " << i << " " << j << " " << p.a(i, j) << "\n";
  for (Index i = 0; i < p.b.size(); ++i)
    if (p.b(i) != 0.0) os << "b " << i << " " << p.b(i) << "\n";
  for (Index i = 0; i < p.g.rows(); ++i)
    for (Index j = 0; j < p.g.cols(); ++j)
      if (p.g(i, j) != 0.0) os << "G " << i << " " << j << " " << p.g(i, j) << "\n";
  for (Index i = 0; i < p.h.size(); ++i)
    if (p.h(i) != 0.0) os << "h " << i << " " << p.h(i) << "\n";
  return os.str();
}

inline ConicProgram parse_program(const std::string& text) {
  std::istringstream in(text);
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "conic-program" || version != 1) throw FormatError("not a conic-program dump");
  Index n = 0, pe = 0, mi = 0;
  std::string w1, w2, w3;
  if (!(in >> w1 >> n >> w2 >> pe >> w3 >> mi) || w1 != "vars" || w2 != "eq" || w3 != "ineq" || n < 0 || pe < 0 ||
      mi < 0)
    throw FormatError("bad size line");
  ConicProgram p;
  p.c = RVec::Zero(n);
  p.a = RMat::Zero(pe, n);
  p.b = RVec::Zero(pe);
  p.g = RMat::Zero(mi, n);
  p.h = RVec::Zero(mi);
  std::size_t count = 0;
  if (!(in >> tag) || tag != "cones" || !(in >> w1 >> p.cones.nonneg) || w1 != "nonneg") throw FormatError("bad cones");
  if (!(in >> w1 >> count) || w1 != "soc") throw FormatError("bad soc list");
  p.cones.soc.resize(count);
  for (auto& d : p.cones.soc)
    if (!(in >> d)) throw FormatError("bad soc list");
  if (!(in >> w1 >> count) || w1 != "psd") throw FormatError("bad psd list");
  p.cones.psd.resize(count);
  for (auto& d : p.cones.psd)
    if (!(in >> d)) throw FormatError("bad psd list");
  auto check = [](bool ok) {
    if (!ok) throw FormatError("bad entry");
  };
  while (in >> tag) {
    Index i = 0, j = 0;
    double v = 0.0;
    if (tag == "block") {
      VarBlock b;
      check(static_cast<bool>(in >> b.name >> b.offset >> b.size));
      p.blocks.push_back(b);
    } else if (tag == "c") {
      check(static_cast<bool>(in >> i >> v) && i >= 0 && i < n);
      p.c(i) = v;
    } else if (tag == "A") {
      check(static_cast<bool>(in >> i >> j >> v) && i >= 0 && i < pe && j >= 0 && j < n);
      p.a(i, j) = v;
    } else if (tag == "b") {
      check(static_cast<bool>(in >> i >> v) && i >= 0 && i < pe);
      p.b(i) = v;
    } else if (tag == "G") {
      check(static_cast<bool>(in >> i >> j >> v) && i >= 0 && i < mi && j >= 0 && j < n);
      p.g(i, j) = v;
    } else if (tag == "h") {
      check(static_cast<bool>(in >> i >> v) && i >= 0 && i < mi);
      p.h(i) = v;
    } else {
      throw FormatError("unknown tag '" + tag + "'");
    }
  }
  try {
    p.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("inconsistent dump: ") + e.what());
  }
  return p;
}

}  // namespace aris::conic
