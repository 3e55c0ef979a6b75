#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>

// 15N lab Hamiltonian in MHz written from explicit spin matrices, basis
// |m_s> (x) |m_I> with both projections descending. Bx may be negative.
inline Eigen::MatrixXcd hand_hamiltonian_xz(double bx, double bz) {
  using C = std::complex<double>;
  const double r = 1 / std::sqrt(2.0);
  Eigen::Matrix3cd sx, sy, sz;
  sx << 0, r, 0, r, 0, r, 0, r, 0;
  sy << 0, C(0, -r), 0, C(0, r), 0, C(0, -r), 0, C(0, r), 0;
  sz << 1, 0, 0, 0, 0, 0, 0, 0, -1;
  Eigen::Matrix2cd ix, iy, iz;
  ix << 0, 0.5, 0.5, 0;
  iy << 0, C(0, -0.5), C(0, 0.5), 0;
  iz << 0.5, 0, 0, -0.5;
  auto kron = [](const Eigen::Matrix3cd& a, const Eigen::Matrix2cd& c) {
    Eigen::MatrixXcd out(6, 6);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out.block(2 * i, 2 * j, 2, 2) = a(i, j) * c;
    return out;
  };
  const Eigen::Matrix3cd e3 = Eigen::Matrix3cd::Identity();
  const Eigen::Matrix2cd e2 = Eigen::Matrix2cd::Identity();
  return 2870 * kron(sz * sz, e2) + 2.8024 * kron(bz * sz + bx * sx, e2) + 431.6e-6 * kron(e3, bz * iz + bx * ix) +
         3.03 * kron(sz, iz) + 3.65 * (kron(sx, ix) + kron(sy, iy));
}

inline Eigen::MatrixXcd hand_hamiltonian(double b, double theta_deg) {
  const double th = theta_deg * 3.14159265358979323846 / 180;
  return hand_hamiltonian_xz(b * std::sin(th), b * std::cos(th));
}

// Splitting between the hyperfine-averaged upper and lower transitions, valid
// while the three electronic manifolds stay ordered (m_s = 0, -1, +1).
inline double hand_delta_pm1(const Eigen::MatrixXcd& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  const Eigen::VectorXd e = es.eigenvalues();
  return (e(4) + e(5)) / 2 - (e(2) + e(3)) / 2;
}
