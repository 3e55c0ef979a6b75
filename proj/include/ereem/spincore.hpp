#pragma once

// Dense complex linear algebra for small spin Hilbert spaces.
//
// Everything here is header-only and templated on the real scalar type so the
// same code serves double (production) and long double (test oracles).

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <span>
#include <sstream>
#include <stdexcept>

#include "ereem/errors.hpp"

namespace ereem {

template <typename Real>
using ComplexMatrixT = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using ComplexVectorT = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;

using ComplexMatrix = ComplexMatrixT<double>;
using ComplexVector = ComplexVectorT<double>;

template <typename Real = double>
struct SpinOperators {
  double spin = 0;
  ComplexMatrixT<Real> sx, sy, sz;

  Eigen::Index dim() const { return sz.rows(); }
};

/// Angular-momentum matrices in the |s, m> basis ordered m = s, s-1, ..., -s.
/// Only s = 1/2 and s = 1 are supported.
template <typename Real = double>
SpinOperators<Real> spin_operators(double s) {
  if (s != 0.5 && s != 1.0) {
    std::ostringstream msg;
    msg << "spin_operators: unsupported spin quantum number " << s << " (expected 1/2 or 1)";
    throw std::invalid_argument(msg.str());
  }
  using C = std::complex<Real>;
  const auto n = static_cast<Eigen::Index>(std::lround(2 * s + 1));
  SpinOperators<Real> ops;
  ops.spin = s;
  ops.sx = ComplexMatrixT<Real>::Zero(n, n);
  ops.sy = ComplexMatrixT<Real>::Zero(n, n);
  ops.sz = ComplexMatrixT<Real>::Zero(n, n);
  const Real sr = static_cast<Real>(s);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Real m = sr - static_cast<Real>(i);
    ops.sz(i, i) = C(m, 0);
    if (i + 1 < n) {
      // <m|S+|m-1> = sqrt(s(s+1) - m(m-1))
      const Real raise = std::sqrt(sr * (sr + 1) - m * (m - 1));
      ops.sx(i, i + 1) = C(raise / 2, 0);
      ops.sx(i + 1, i) = C(raise / 2, 0);
      ops.sy(i, i + 1) = C(0, -raise / 2);
      ops.sy(i + 1, i) = C(0, raise / 2);
    }
  }
  return ops;
}

/// Kronecker product a (x) b of two square matrices.
template <typename DerivedA, typename DerivedB>
auto tensor_product(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.rows() != a.cols() || b.rows() != b.cols()) {
    throw std::invalid_argument("tensor_product: operands must be square");
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

template <typename Derived>
double hermiticity_error(const Eigen::MatrixBase<Derived>& h) {
  return static_cast<double>((h - h.adjoint()).cwiseAbs().maxCoeff());
}

template <typename Derived>
double unitarity_error(const Eigen::MatrixBase<Derived>& u) {
  using M = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const M product = u.adjoint() * u;
  return static_cast<double>((product - M::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff());
}

template <typename Real = double>
struct HermitianEigensystem {
  Eigen::Matrix<Real, Eigen::Dynamic, 1> eigenvalues;  // ascending
  ComplexMatrixT<Real> eigenvectors;                    // columns

  ComplexMatrixT<Real> reconstruct() const {
    return eigenvectors * eigenvalues.template cast<std::complex<Real>>().asDiagonal() *
           eigenvectors.adjoint();
  }
};

/// Eigendecomposition of a Hermitian matrix. Rejects inputs whose largest
/// anti-Hermitian entry exceeds `tolerance`.
template <typename Derived>
auto hermitian_eigensystem(const Eigen::MatrixBase<Derived>& h, double tolerance = 1e-9) {
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  if (h.rows() != h.cols()) throw std::invalid_argument("hermitian_eigensystem: matrix must be square");
  const double err = hermiticity_error(h);
  if (!(err <= tolerance)) {
    std::ostringstream msg;
    msg << "hermitian_eigensystem: matrix is not Hermitian (max|H - H^dag| = " << err
        << " > " << tolerance << ")";
    throw std::invalid_argument(msg.str());
  }
  const ComplexMatrixT<Real> hm = h.template cast<std::complex<Real>>();
  Eigen::SelfAdjointEigenSolver<ComplexMatrixT<Real>> solver(hm);
  if (solver.info() != Eigen::Success) throw NumericalError("hermitian_eigensystem: solver failed");
  return HermitianEigensystem<Real>{solver.eigenvalues(), solver.eigenvectors()};
}

/// exp(-i H t) for a fixed Hermitian H, evaluated through one cached
/// eigendecomposition so that many times t are cheap.
template <typename Real = double>
class HermitianPropagator {
 public:
  explicit HermitianPropagator(const ComplexMatrixT<Real>& h) : system_(hermitian_eigensystem(h)) {}
  explicit HermitianPropagator(HermitianEigensystem<Real> system) : system_(std::move(system)) {}

  ComplexMatrixT<Real> operator()(Real t) const {
    return system_.eigenvectors * phases(t).asDiagonal() * system_.eigenvectors.adjoint();
  }

  ComplexVectorT<Real> apply(Real t, const ComplexVectorT<Real>& psi) const {
    ComplexVectorT<Real> c = system_.eigenvectors.adjoint() * psi;
    c = phases(t).cwiseProduct(c);
    return system_.eigenvectors * c;
  }

  const HermitianEigensystem<Real>& eigensystem() const { return system_; }

 private:
  ComplexVectorT<Real> phases(Real t) const {
    ComplexVectorT<Real> p(system_.eigenvalues.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = std::polar(Real(1), -system_.eigenvalues(i) * t);
    return p;
  }

  HermitianEigensystem<Real> system_;
};

template <typename Real = double>
ComplexMatrixT<Real> hermitian_exponential(const ComplexMatrixT<Real>& h, Real t) {
  return HermitianPropagator<Real>(h)(t);
}

/// One piece of a piecewise-constant Hamiltonian (angular units, rad/us).
struct Segment {
  ComplexMatrix hamiltonian;
  double duration = 0;  // us
};

inline void check_norm(double before, const ComplexVector& psi) {
  const double drift = std::abs(psi.norm() - before);
  if (!(drift <= 1e-8)) {
    std::ostringstream msg;
    msg << "propagation lost unitarity: norm drift " << drift;
    throw NumericalError(msg.str());
  }
}

/// Applies exp(-i H_n t_n) ... exp(-i H_1 t_1) to `state`, first segment first.
inline ComplexVector propagate_piecewise(std::span<const Segment> segments, ComplexVector state) {
  const double norm0 = state.norm();
  for (const Segment& seg : segments) {
    if (seg.duration < 0) throw std::invalid_argument("propagate_piecewise: negative segment duration");
    if (seg.hamiltonian.rows() != state.size()) {
      throw std::invalid_argument("propagate_piecewise: dimension mismatch");
    }
    if (seg.duration == 0) continue;
    state = HermitianPropagator<double>(seg.hamiltonian).apply(seg.duration, state);
  }
  check_norm(norm0, state);
  return state;
}

/// Product exp(-i H_n t_n) ... exp(-i H_1 t_1) as an operator.
inline ComplexMatrix piecewise_propagator(std::span<const Segment> segments, Eigen::Index dim) {
  ComplexMatrix u = ComplexMatrix::Identity(dim, dim);
  for (const Segment& seg : segments) {
    if (seg.duration < 0) throw std::invalid_argument("piecewise_propagator: negative segment duration");
    if (seg.duration == 0) continue;
    u = HermitianPropagator<double>(seg.hamiltonian)(seg.duration) * u;
  }
  return u;
}

}  // namespace ereem
