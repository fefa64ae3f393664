#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "pendctl/common.hpp"
#include "pendctl/linearization.hpp"

namespace pendctl {

// ---------------------------------------------------------------------------
// Continuous algebraic Riccati equation
//
//   A'P + PA - P B R^-1 B' P + Q = 0
//
// The stabilizing solution spans the stable invariant subspace of the
// Hamiltonian [[A, -B R^-1 B'], [-Q, -A']]. We take a complex Schur form,
// move the open-left-half-plane eigenvalues to the leading block with
// adjacent Givens swaps, read P = U21 U11^-1, then polish with Newton steps
// on the residual.
// ---------------------------------------------------------------------------

inline Matrix care_residual(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R, const Matrix& P) {
  const Matrix BRinvBt = B * R.llt().solve(B.transpose());
  return A.transpose() * P + P * A - P * BRinvBt * P + Q;
}

inline double care_tolerance(const Matrix& P) { return 1e-8 * (1.0 + P.norm()); }

namespace detail {

using ComplexMatrix = Eigen::MatrixXcd;

// Swap diagonal entries k and k+1 of the upper-triangular T, updating U so
// that U T U^H is unchanged.
inline void swap_schur_pair(ComplexMatrix& T, ComplexMatrix& U, Eigen::Index k) {
  using C = std::complex<double>;
  const C t11 = T(k, k);
  const C t22 = T(k + 1, k + 1);
  const C x1 = T(k, k + 1);
  const C x2 = t22 - t11;
  const double r = std::hypot(std::abs(x1), std::abs(x2));
  if (r == 0.0) return;
  const C v1 = x1 / r;
  const C v2 = x2 / r;
  Eigen::Matrix2cd G;
  G << v1, -std::conj(v2), v2, std::conj(v1);
  T.middleRows(k, 2) = G.adjoint() * T.middleRows(k, 2);
  T.middleCols(k, 2) = T.middleCols(k, 2) * G;
  U.middleCols(k, 2) = U.middleCols(k, 2) * G;
  T(k + 1, k) = 0.0;
  T(k, k) = t22;
  T(k + 1, k + 1) = t11;
}

// Solves Ac' X + X Ac = -W for symmetric W via the Kronecker form.
inline Matrix solve_lyapunov(const Matrix& Ac, const Matrix& W) {
  const auto n = Ac.rows();
  const Matrix I = Matrix::Identity(n, n);
  Matrix K(n * n, n * n);
  const Matrix At = Ac.transpose();
  // vec(At X) = (I kron At) vec(X); vec(X Ac) = (Ac' kron I) vec(X).
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) K.block(i * n, j * n, n, n) = I(i, j) * At + At(i, j) * I;
  const Vector rhs = -Eigen::Map<const Vector>(W.data(), n * n);
  const Vector x = K.fullPivLu().solve(rhs);
  Matrix X = Eigen::Map<const Matrix>(x.data(), n, n);
  return 0.5 * (X + X.transpose());
}

inline void check_weights(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
  const auto n = A.rows();
  require(A.cols() == n, "A must be square");
  require(B.rows() == n && B.cols() >= 1, "B must be n x m");
  require(Q.rows() == n && Q.cols() == n, "Q must be n x n");
  require(R.rows() == B.cols() && R.cols() == B.cols(), "R must be m x m");
  require(A.allFinite() && B.allFinite() && Q.allFinite() && R.allFinite(), "non-finite matrix entries");
  const double qs = 1e-10 * (1.0 + Q.norm());
  require((Q - Q.transpose()).norm() <= qs, "Q must be symmetric");
  require((R - R.transpose()).norm() <= 1e-10 * (1.0 + R.norm()), "R must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> qe(Q);
  require(qe.eigenvalues().minCoeff() >= -qs, "Q must be positive semidefinite");
  Eigen::LLT<Matrix> rl(R);
  require(rl.info() == Eigen::Success, "R must be positive definite");
}

}  // namespace detail

inline Matrix solve_care(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
  detail::check_weights(A, B, Q, R);
  const auto n = A.rows();
  const Matrix G = B * R.llt().solve(B.transpose());

  Matrix H(2 * n, 2 * n);
  H << A, -G, -Q, -A.transpose();

  Eigen::ComplexSchur<Matrix> schur(H);
  if (schur.info() != Eigen::Success) throw SynthesisError("Schur decomposition of the Hamiltonian failed");
  detail::ComplexMatrix T = schur.matrixT();
  detail::ComplexMatrix U = schur.matrixU();

  const double axis_tol = 1e-12 * (1.0 + H.norm());
  Eigen::Index stable = 0;
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    const double re = T(i, i).real();
    if (std::abs(re) <= axis_tol)
      throw SynthesisError("Hamiltonian has eigenvalues on the imaginary axis; no stabilizing solution");
    if (re < 0) ++stable;
  }
  if (stable != n) throw SynthesisError("Hamiltonian stable subspace has the wrong dimension");

  // Bubble stable eigenvalues to the top-left.
  for (Eigen::Index pass = 0; pass < 2 * n; ++pass) {
    bool moved = false;
    for (Eigen::Index k = 0; k + 1 < 2 * n; ++k) {
      if (T(k, k).real() > 0 && T(k + 1, k + 1).real() < 0) {
        detail::swap_schur_pair(T, U, k);
        moved = true;
      }
    }
    if (!moved) break;
  }

  const detail::ComplexMatrix U11 = U.topLeftCorner(n, n);
  const detail::ComplexMatrix U21 = U.bottomLeftCorner(n, n);
  Eigen::FullPivLU<detail::ComplexMatrix> lu(U11);
  if (lu.rank() < n || std::abs(lu.rcond()) < 1e-14)
    throw SynthesisError("(A, B) is not stabilizable: U11 is singular");
  // P = U21 U11^-1  <=>  U11^T P^T = U21^T
  const detail::ComplexMatrix Pc = U11.transpose().fullPivLu().solve(U21.transpose()).transpose();
  Matrix P = Pc.real();
  P = 0.5 * (P + P.transpose());

  // Newton refinement on the residual.
  double res = care_residual(A, B, Q, R, P).norm();
  for (int it = 0; it < 20 && res > 1e-3 * care_tolerance(P); ++it) {
    const Matrix Ac = A - G * P;
    const Matrix dP = detail::solve_lyapunov(Ac, care_residual(A, B, Q, R, P));
    const Matrix Pn = P + dP;
    const double rn = care_residual(A, B, Q, R, Pn).norm();
    if (!(rn < res)) break;
    P = 0.5 * (Pn + Pn.transpose());
    res = rn;
  }

  if (!(res < care_tolerance(P))) throw SynthesisError("Riccati residual above tolerance", res);
  if (!is_hurwitz(eigenvalues(A - G * P)))
    throw SynthesisError("Riccati solution does not stabilize A - B K", res);
  return P;
}

// ---------------------------------------------------------------------------
// LQR
// ---------------------------------------------------------------------------

struct LqrDesign {
  Matrix Q;
  Matrix R;
  Matrix P;
  Matrix K;                       // m x n, law u = -K x
  std::optional<RowVector> Ki;    // integral gain (NxtWay position loop)
  double residual = NAN;
  Eigen::VectorXcd closed_loop_eigs;
};

inline LqrDesign lqr_gain(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
  LqrDesign d;
  d.Q = Q;
  d.R = R;
  d.P = solve_care(A, B, Q, R);
  d.K = R.llt().solve(B.transpose() * d.P);
  d.residual = care_residual(A, B, Q, R, d.P).norm();
  d.closed_loop_eigs = eigenvalues(A - B * d.K);
  return d;
}

inline LqrDesign lqr_gain(const StateSpace& ss, const Matrix& Q, const Matrix& R) {
  ss.validate();
  require(!ss.discrete(), "LQR synthesis expects a continuous model");
  return lqr_gain(ss.A, ss.B, Q, R);
}

/// LQR for a model whose input columns all carry the same voltage, with
/// x_{n+1} = integral of x_{integrated}. The shared-input problem keeps the
/// full cost u'Ru with u = [v, ..., v], so B_eff = B 1 and R_eff = 1'R 1.
/// The returned K covers the plant states; Ki is the integral-state gain.
inline LqrDesign lqr_gain_integral(const StateSpace& plant, const Matrix& Q_aug, const Matrix& R_full,
                                   Eigen::Index integrated = 0) {
  plant.validate();
  require(R_full.rows() == plant.inputs() && R_full.cols() == plant.inputs(), "R must match the input count");
  const StateSpace shared = collapse_inputs(plant);
  const StateSpace aug = augment_with_integral(shared, integrated, "int_" + (plant.state_labels.empty()
                                                                                ? std::string("x")
                                                                                : plant.state_labels[integrated]));
  const Vector ones = Vector::Ones(plant.inputs());
  Matrix R_eff(1, 1);
  R_eff(0, 0) = ones.dot(R_full * ones);
  LqrDesign d = lqr_gain(aug, Q_aug, R_eff);
  const auto n = plant.states();
  d.Ki = RowVector(d.K.rightCols(1).transpose());
  d.K = Matrix(d.K.leftCols(n));
  d.R = R_full;
  return d;
}

struct StabilityReport {
  Eigen::VectorXcd eigs;
  bool stable = false;
};

/// Eigenvalues of A - B K (continuous) or Ad - Bd K (discrete).
inline StabilityReport stability_report(const StateSpace& ss, const Matrix& K) {
  ss.validate();
  require(K.rows() == ss.inputs() && K.cols() == ss.states(), "K must be inputs x states");
  StabilityReport r;
  r.eigs = eigenvalues(ss.A - ss.B * K);
  r.stable = ss.discrete() ? inside_unit_circle(r.eigs) : is_hurwitz(r.eigs);
  return r;
}

/// Chooses the sign of a reference gain (printed with an unknown sign
/// convention) so that u = -K x stabilizes the model. Returns the gain
/// unchanged when neither sign stabilizes.
inline Matrix align_gain_sign(const StateSpace& ss, const Matrix& K) {
  if (stability_report(ss, K).stable) return K;
  if (stability_report(ss, -K).stable) return -K;
  return K;
}

// ---------------------------------------------------------------------------
// Discrete sliding-mode control
// ---------------------------------------------------------------------------

/// k_max = sqrt((Ts alpha / sqrt(2))^2 + 1)
inline double smc_gain_bound(double Ts, double alpha) {
  require(Ts > 0 && std::isfinite(Ts), "Ts must be positive");
  require(alpha > 0 && std::isfinite(alpha), "alpha must be positive");
  const double a = Ts * alpha / std::sqrt(2.0);
  return std::sqrt(a * a + 1.0);
}

struct SurfaceBlocks {
  Matrix A11;  // (n-m) x (n-m)
  Matrix A12;  // (n-m) x m
  Matrix A21;  // m x (n-m)
  Matrix A22;  // m x m
};

inline SurfaceBlocks partition(const Matrix& A, Eigen::Index m) {
  require(A.rows() == A.cols(), "partition needs a square matrix");
  require(m >= 1 && m < A.rows(), "partition size out of range");
  const auto r = A.rows() - m;
  return {A.topLeftCorner(r, r), A.topRightCorner(r, m), A.bottomLeftCorner(m, r), A.bottomRightCorner(m, m)};
}

struct SurfaceVerdict {
  Eigen::VectorXcd eigs;
  bool stable = false;
};

/// Reduced sliding dynamics x1(k+1) = (A11 - A12 C) x1(k) on s = C x1 + x2 = 0.
inline SurfaceVerdict smc_surface(const SurfaceBlocks& b, const Matrix& C) {
  const auto r = b.A11.rows();
  require(b.A11.cols() == r, "A11 must be square");
  require(b.A12.rows() == r, "A12 must have as many rows as A11");
  require(C.rows() == b.A12.cols() && C.cols() == r, "C must be m x (n-m)");
  SurfaceVerdict v;
  v.eigs = eigenvalues(b.A11 - b.A12 * C);
  v.stable = inside_unit_circle(v.eigs);
  return v;
}

/// Orthogonal change of coordinates z = T x with T Bd = [0; B2].
struct RegularForm {
  Matrix T;
  Matrix A;  // T Ad T'
  Matrix B;  // T Bd
};

inline RegularForm regular_form(const Matrix& Ad, const Matrix& Bd) {
  const auto n = Ad.rows();
  const auto m = Bd.cols();
  require(Bd.rows() == n && m >= 1 && m < n, "regular form needs Bd of size n x m, m < n");
  Eigen::HouseholderQR<Matrix> qr(Bd);
  const Matrix Qfull = qr.householderQ() * Matrix::Identity(n, n);
  RegularForm rf;
  rf.T.resize(n, n);
  rf.T << Qfull.rightCols(n - m).transpose(), Qfull.leftCols(m).transpose();
  rf.A = rf.T * Ad * rf.T.transpose();
  rf.B = rf.T * Bd;
  const Eigen::FullPivLU<Matrix> b2(rf.B.bottomRows(m));
  if (b2.rank() < m) throw SynthesisError("input matrix is rank deficient");
  return rf;
}

/// Single-input pole placement: gain C with eig(A - b C) = poles.
inline RowVector ackermann(const Matrix& A, const Vector& b, const Eigen::VectorXcd& poles) {
  const auto n = A.rows();
  require(b.size() == n && poles.size() == n, "ackermann: dimension mismatch");
  Matrix ctrb(n, n);
  Vector col = b;
  for (Eigen::Index i = 0; i < n; ++i) {
    ctrb.col(i) = col;
    col = A * col;
  }
  Eigen::FullPivLU<Matrix> lu(ctrb);
  if (lu.rank() < n) throw SynthesisError("reduced pair (A11, A12) is not controllable");
  // Characteristic polynomial coefficients, highest power first.
  Eigen::VectorXcd coeff = Eigen::VectorXcd::Zero(n + 1);
  coeff(0) = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j >= 1; --j) coeff(j) -= poles(i) * coeff(j - 1);
  }
  require(coeff.imag().cwiseAbs().maxCoeff() < 1e-9 * (1.0 + coeff.cwiseAbs().maxCoeff()),
          "desired poles must come in conjugate pairs");
  Matrix phi = Matrix::Zero(n, n);
  Matrix Ak = Matrix::Identity(n, n);
  for (Eigen::Index j = n; j >= 0; --j) {
    phi += coeff(j).real() * Ak;
    Ak = Ak * A;
  }
  RowVector e = RowVector::Zero(n);
  e(n - 1) = 1.0;
  return e * lu.solve(phi);
}

struct SmcDesign {
  RowVector L;       // s = L x, normalized so that L Bd = 1
  RowVector Keq;     // equivalent control, u = -Keq x - k sign(s)
  double k = 0.0;    // switching gain [V]
  double Ts = 0.0;
  double alpha = 1.0;
  Eigen::VectorXcd surface_eigs;
  bool exceeds_bound = false;    // user k above smc_gain_bound(Ts, alpha)
  double boundary_layer = 0.0;   // 0 = pure sign(s)
};

struct SmcOptions {
  std::vector<std::complex<double>> surface_poles;  // continuous-time, mapped with exp(p Ts)
  double alpha = 100.0;
  std::optional<double> k;  // defaults to the Lyapunov bound
  double boundary_layer = 0.0;
};

/// Designs a single-input discrete SMC on a ZOH model. The surface places the
/// reduced dynamics at exp(p Ts) for the requested continuous poles; the
/// equivalent control makes s(k+1) = -k sign(s(k)) on the linear model.
inline SmcDesign design_smc(const StateSpace& discrete, const SmcOptions& opt) {
  discrete.validate();
  require(discrete.discrete(), "SMC synthesis expects a discrete (ZOH) model");
  require(discrete.inputs() == 1, "SMC synthesis expects a single (virtual) input");
  const auto n = discrete.states();
  require(static_cast<Eigen::Index>(opt.surface_poles.size()) == n - 1,
          "need " + std::to_string(n - 1) + " surface poles");
  require(opt.boundary_layer >= 0, "boundary layer width must be non-negative");

  const RegularForm rf = regular_form(discrete.A, discrete.B);
  const SurfaceBlocks blocks = partition(rf.A, 1);
  Eigen::VectorXcd zpoles(n - 1);
  for (Eigen::Index i = 0; i < n - 1; ++i) zpoles(i) = std::exp(opt.surface_poles[i] * discrete.Ts);
  const RowVector C = ackermann(blocks.A11, blocks.A12.col(0), zpoles);

  const SurfaceVerdict verdict = smc_surface(blocks, Matrix(C));
  if (!verdict.stable) throw SynthesisError("sliding surface dynamics are not inside the unit circle");

  RowVector z_surface(n);
  z_surface << C, 1.0;
  RowVector L = z_surface * rf.T;
  const double lb = (L * discrete.B)(0, 0);
  if (!(std::abs(lb) > 1e-14)) throw SynthesisError("surface is insensitive to the input (L Bd = 0)");
  L /= lb;

  SmcDesign d;
  d.L = L;
  d.Keq = L * discrete.A;
  d.Ts = discrete.Ts;
  d.alpha = opt.alpha;
  const double bound = smc_gain_bound(discrete.Ts, opt.alpha);
  d.k = opt.k.value_or(bound);
  require(d.k >= 0 && std::isfinite(d.k), "switching gain must be non-negative");
  d.exceeds_bound = d.k > bound;
  d.surface_eigs = verdict.eigs;
  d.boundary_layer = opt.boundary_layer;
  return d;
}

}  // namespace pendctl
