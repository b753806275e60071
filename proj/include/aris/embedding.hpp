#pragma once

// Real embeddings of complex-valued blocks used by the subproblem builders.
// A complex vector z of length n is stored as x = [Re z; Im z] (length 2n).

#include <algorithm>
#include <vector>

#include "aris/common.hpp"
#include "aris/conic.hpp"

namespace aris::embed {

/// Real matrix acting on [Re z; Im z] that produces [Re(M z); Im(M z)].
inline RMat real_map(const CMat& m) {
  const Index r = m.rows(), c = m.cols();
  RMat out(2 * r, 2 * c);
  out.topLeftCorner(r, c) = m.real();
  out.topRightCorner(r, c) = -m.imag();
  out.bottomLeftCorner(r, c) = m.imag();
  out.bottomRightCorner(r, c) = m.real();
  return out;
}

/// Coefficient vector of the real functional z -> Re{a^H z}.
inline RVec re_inner(const CVec& a) {
  RVec out(2 * a.size());
  out << a.real(), a.imag();
  return out;
}

inline RVec to_real(const CVec& z) { return re_inner(z); }

inline CVec to_complex(const Eigen::Ref<const RVec>& x) {
  const Index n = x.size() / 2;
  CVec z(n);
  for (Index i = 0; i < n; ++i) z(i) = Complex(x(i), x(n + i));
  return z;
}

/// Factor E (n x r) with E E^H = M for a Hermitian PSD M; eigenvalues below
/// rel_cut * largest are dropped.
inline CMat psd_factor(const CMat& m, double rel_cut = 1e-13) {
  const CMat herm = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(herm);
  const RVec& ev = es.eigenvalues();
  const double top = ev.size() ? std::max(0.0, ev.maxCoeff()) : 0.0;
  std::vector<Index> keep;
  for (Index i = 0; i < ev.size(); ++i)
    if (ev(i) > rel_cut * top && ev(i) > 0.0) keep.push_back(i);
  CMat f(m.rows(), static_cast<Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j)
    f.col(static_cast<Index>(j)) = es.eigenvectors().col(keep[j]) * std::sqrt(ev(keep[j]));
  return f;
}

/// Hermitian N x N matrix described by N^2 real parameters: the diagonal, then
/// Re and Im of the strictly lower triangle (column-major).
class HermitianParam {
 public:
  explicit HermitianParam(Index n) : n_(n) {}

  Index size() const { return n_ * n_; }
  Index order() const { return n_; }

  CMat to_matrix(const Eigen::Ref<const RVec>& v) const {
    CMat m = CMat::Zero(n_, n_);
    for (Index i = 0; i < n_; ++i) m(i, i) = v(i);
    Index k = n_;
    const Index off = (n_ * (n_ - 1)) / 2;
    for (Index j = 0; j < n_; ++j)
      for (Index i = j + 1; i < n_; ++i, ++k) {
        m(i, j) = Complex(v(k), v(k + off));
        m(j, i) = std::conj(m(i, j));
      }
    return m;
  }

  RVec from_matrix(const CMat& m) const {
    RVec v(size());
    for (Index i = 0; i < n_; ++i) v(i) = m(i, i).real();
    Index k = n_;
    const Index off = (n_ * (n_ - 1)) / 2;
    for (Index j = 0; j < n_; ++j)
      for (Index i = j + 1; i < n_; ++i, ++k) {
        const Complex z = 0.5 * (m(i, j) + std::conj(m(j, i)));
        v(k) = z.real();
        v(k + off) = z.imag();
      }
    return v;
  }

  /// Coefficients of v -> Tr(A V) for Hermitian A.
  RVec trace_coef(const CMat& a) const {
    RVec c(size());
    for (Index i = 0; i < n_; ++i) c(i) = a(i, i).real();
    Index k = n_;
    const Index off = (n_ * (n_ - 1)) / 2;
    for (Index j = 0; j < n_; ++j)
      for (Index i = j + 1; i < n_; ++i, ++k) {
        // Tr(AV) picks up A_ji V_ij + A_ij V_ji = 2 Re{conj(A_ij) V_ij}.
        c(k) = 2.0 * a(i, j).real();
        c(k + off) = 2.0 * a(i, j).imag();
      }
    return c;
  }

  /// svec of the 2N x 2N real embedding of V, as a linear map of v.
  RMat psd_rows() const {
    const Index order = 2 * n_;
    RMat rows(conic::svec_size(order), size());
    for (Index p = 0; p < size(); ++p) {
      RVec e = RVec::Zero(size());
      e(p) = 1.0;
      rows.col(p) = conic::mat_to_svec(conic::embed_hermitian(to_matrix(e)));
    }
    return rows;
  }

 private:
  Index n_;
};

}  // namespace aris::embed
