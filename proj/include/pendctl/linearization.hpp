#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "pendctl/common.hpp"
#include "pendctl/plant.hpp"

namespace pendctl {

enum class TimeDomain { Continuous, Discrete };

struct StateSpace {
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix D;
  TimeDomain kind = TimeDomain::Continuous;
  double Ts = 0.0;  // seconds, meaningful iff kind == Discrete
  std::vector<std::string> state_labels;

  Eigen::Index states() const { return A.rows(); }
  Eigen::Index inputs() const { return B.cols(); }
  Eigen::Index outputs() const { return C.rows(); }
  bool discrete() const { return kind == TimeDomain::Discrete; }

  void validate() const {
    const auto n = A.rows();
    require(A.cols() == n, "A must be square");
    require(B.rows() == n, "B must have as many rows as A");
    require(C.cols() == n, "C must have as many columns as A");
    require(D.rows() == C.rows() && D.cols() == B.cols(), "D must be outputs x inputs");
    require(!discrete() || Ts > 0, "discrete model needs Ts > 0");
    require(state_labels.empty() || static_cast<Eigen::Index>(state_labels.size()) == n,
            "state_labels must name every state");
  }
};

inline std::vector<std::string> default_state_labels() { return {"q1", "q2", "q1dot", "q2dot"}; }

/// Continuous model with C = I and D = 0.
inline StateSpace make_continuous(Matrix A, Matrix B, std::vector<std::string> labels = {}) {
  StateSpace ss;
  const auto n = A.rows();
  ss.C = Matrix::Identity(n, n);
  ss.D = Matrix::Zero(n, B.cols());
  ss.A = std::move(A);
  ss.B = std::move(B);
  ss.state_labels = std::move(labels);
  ss.validate();
  return ss;
}

/// Central-difference Jacobians of xdot = f(x, u).
template <typename F>
std::pair<Matrix, Matrix> numeric_jacobian(F&& f, const Vector& x0, const Vector& u0, double eps = 1e-6) {
  require(eps > 0, "finite-difference step must be positive");
  require(x0.allFinite() && u0.allFinite(), "linearization point must be finite");
  const auto n = x0.size();
  const auto m = u0.size();
  Matrix A(n, n), B(n, m);
  for (Eigen::Index j = 0; j < n; ++j) {
    Vector xp = x0, xm = x0;
    xp(j) += eps;
    xm(j) -= eps;
    A.col(j) = (Vector(f(xp, u0)) - Vector(f(xm, u0))) / (2.0 * eps);
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    Vector up = u0, um = u0;
    up(j) += eps;
    um(j) -= eps;
    B.col(j) = (Vector(f(x0, up)) - Vector(f(x0, um))) / (2.0 * eps);
  }
  return {A, B};
}

/// Linearizes the nonlinear plant about (x0, u0). B has one column per
/// physical input (two for NxtWay).
inline StateSpace jacobian_linearize(const PlantParams& plant, const Vector4& x0, const Vector& u0,
                                     double eps = 1e-6) {
  // Surfaces a singular mass matrix at the operating point before differencing.
  (void)state_derivative(plant, x0, u0);
  auto f = [&](const Vector& x, const Vector& u) -> Vector { return state_derivative(plant, Vector4(x), u); };
  auto [A, B] = numeric_jacobian(f, Vector(x0), u0, eps);
  return make_continuous(std::move(A), std::move(B), default_state_labels());
}

inline StateSpace jacobian_linearize(const PlantParams& plant, double eps = 1e-6) {
  return jacobian_linearize(plant, Vector4::Zero(), Vector::Zero(input_count(plant)), eps);
}

inline StateSpace rotpen_statespace_closed_form(const RotPenParams& p) {
  const double gam = p.gamma();
  const double arm = p.m_r * (p.L_r / 2.0) * (p.L_r / 2.0) + p.m_p * p.L_r * p.L_r + p.J_r;
  const double pend = p.m_p * (p.L_p / 2.0) * (p.L_p / 2.0) + p.J_p;
  const double mlL = p.m_p * p.L_p * p.L_r;
  // gamma multiplies the coupling term as well, so that Delta_Q equals
  // det M_Q(0) of the nonlinear model.
  const double delta = gam * (arm * pend - 0.25 * mlL * mlL);
  if (!(std::abs(delta) > 1e-12 * gam * arm * pend) || !std::isfinite(delta)) throw DegenerateParameters("Delta_Q vanishes");
  const double damp_r = p.f_r * gam + p.K_m * p.K_g;

  Matrix A = Matrix::Zero(4, 4);
  Matrix B = Matrix::Zero(4, 1);
  A(0, 2) = 1.0;
  A(1, 3) = 1.0;
  A(2, 1) = 0.25 / delta * p.m_p * p.m_p * p.L_p * p.L_p * p.L_r * p.g * gam;
  A(2, 2) = -damp_r * (p.J_p + 0.25 * p.m_p * p.L_p * p.L_p) / delta;
  A(2, 3) = -0.5 / delta * mlL * p.f_p * gam;
  A(3, 1) = 0.5 / delta * p.L_p * p.m_p * p.g * gam * arm;
  A(3, 2) = -0.5 / delta * mlL * damp_r;
  A(3, 3) = -p.f_p * gam * arm / delta;
  B(2, 0) = (p.J_p + 0.25 * p.m_p * p.L_p * p.L_p) / delta;
  B(3, 0) = 0.5 / delta * mlL;
  return make_continuous(std::move(A), std::move(B), default_state_labels());
}

inline StateSpace nxtway_statespace_closed_form(const NxtWayParams& p) {
  const double n2jm = 2.0 * p.n * p.n * p.J_m;
  const double wheel = 2.0 * p.m * p.R * p.R + p.M * p.R * p.R + 2.0 * p.J_w();
  const double e11 = wheel + n2jm;
  const double e22 = p.M * p.L * p.L + p.J_q2() + n2jm;
  const double mlr = p.M * p.L * p.R;
  const double e12 = mlr - n2jm;
  const double delta = e11 * e22 - e12 * e12;
  if (!(std::abs(delta) > 1e-12 * e11 * e22) || !std::isfinite(delta)) throw DegenerateParameters("Delta_N vanishes");
  const double beta = p.beta();
  const double alpha = p.alpha();
  const double bw = beta + p.f_w;

  Matrix A = Matrix::Zero(4, 4);
  Matrix B = Matrix::Zero(4, 2);
  A(0, 2) = 1.0;
  A(1, 3) = 1.0;
  A(2, 1) = -p.g * p.M * p.L * e12 / delta;
  A(2, 2) = -2.0 * (bw * e22 + beta * e12) / delta;
  A(2, 3) = 2.0 * beta * (p.M * p.L * p.L + p.J_q2() + mlr) / delta;
  A(3, 1) = p.M * p.g * p.L * e11 / delta;
  A(3, 2) = 2.0 * (bw * e12 + beta * e11) / delta;
  A(3, 3) = -2.0 * beta * (mlr + wheel) / delta;
  B(2, 0) = B(2, 1) = alpha * (p.M * p.L * p.L + p.J_q2() + mlr) / delta;
  B(3, 0) = B(3, 1) = -alpha * (mlr + wheel) / delta;
  return make_continuous(std::move(A), std::move(B), default_state_labels());
}

inline StateSpace statespace_closed_form(const PlantParams& p) {
  if (const auto* r = std::get_if<RotPenParams>(&p)) return rotpen_statespace_closed_form(*r);
  return nxtway_statespace_closed_form(std::get<NxtWayParams>(p));
}

/// Places where the closed-form builders depart from the printed tables.
inline std::vector<std::string> closed_form_notes(Platform platform) {
  if (platform == Platform::RotPen)
    return {"A(1,3) = A(2,4) = 1 (kinematic identity) instead of 1/Delta_Q",
            "Delta_Q = gamma*(arm*pend - m_p^2 L_p^2 L_r^2 / 4), i.e. det M_Q(0)"};
  return {"A(3,3) and A(4,3) read as 2*[(beta+f_w)*E + beta*E'] over Delta_N"};
}

/// ZOH discretization through the exponential of [[A, B], [0, 0]] * Ts.
inline StateSpace discretize_zoh(const StateSpace& ss, double Ts) {
  ss.validate();
  require(!ss.discrete(), "model is already discrete");
  require(Ts > 0 && std::isfinite(Ts), "sample time must be positive");
  const auto n = ss.states();
  const auto m = ss.inputs();
  Matrix aug = Matrix::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = ss.A * Ts;
  aug.topRightCorner(n, m) = ss.B * Ts;
  const Matrix phi = aug.exp();
  StateSpace d = ss;
  d.A = phi.topLeftCorner(n, n);
  d.B = phi.topRightCorner(n, m);
  d.kind = TimeDomain::Discrete;
  d.Ts = Ts;
  return d;
}

/// Appends x_{n+1} = integral of x_{index}. Works for continuous models only.
inline StateSpace augment_with_integral(const StateSpace& ss, Eigen::Index index, const std::string& label) {
  ss.validate();
  require(!ss.discrete(), "integral augmentation expects a continuous model");
  require(index >= 0 && index < ss.states(), "integrated state index out of range");
  const auto n = ss.states();
  Matrix A = Matrix::Zero(n + 1, n + 1);
  A.topLeftCorner(n, n) = ss.A;
  A(n, index) = 1.0;
  Matrix B = Matrix::Zero(n + 1, ss.inputs());
  B.topRows(n) = ss.B;
  auto labels = ss.state_labels;
  if (!labels.empty()) labels.push_back(label);
  return make_continuous(std::move(A), std::move(B), std::move(labels));
}

/// Drives every input column with one shared signal: B_eff = B * 1.
inline StateSpace collapse_inputs(const StateSpace& ss) {
  ss.validate();
  StateSpace out = ss;
  out.B = ss.B.rowwise().sum();
  out.D = ss.D.rowwise().sum();
  return out;
}

inline Eigen::VectorXcd eigenvalues(const Matrix& m) {
  require(m.rows() == m.cols(), "eigenvalues need a square matrix");
  if (m.rows() == 0) return {};
  Eigen::EigenSolver<Matrix> es(m, false);
  if (es.info() != Eigen::Success) throw Error("eigenvalue solver did not converge");
  Eigen::VectorXcd ev = es.eigenvalues();
  std::sort(ev.data(), ev.data() + ev.size(), [](const auto& a, const auto& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return ev;
}

inline constexpr double kUnitCircleMargin = 1e-9;

inline bool is_hurwitz(const Eigen::VectorXcd& ev) {
  return std::all_of(ev.data(), ev.data() + ev.size(), [](const auto& z) { return z.real() < 0; });
}

inline bool inside_unit_circle(const Eigen::VectorXcd& ev) {
  return std::all_of(ev.data(), ev.data() + ev.size(),
                     [](const auto& z) { return std::abs(z) < 1.0 - kUnitCircleMargin; });
}

struct EntryDiscrepancy {
  char matrix = 'A';
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  double lhs = 0;
  double rhs = 0;
  double relative = 0;
};

/// Entry-wise relative comparison of A and B; |a - b| / max(|a|, |b|, floor).
inline std::vector<EntryDiscrepancy> compare_models(const StateSpace& lhs, const StateSpace& rhs,
                                                    double floor = 1e-9) {
  require(lhs.A.rows() == rhs.A.rows() && lhs.B.cols() == rhs.B.cols(), "models have different shapes");
  std::vector<EntryDiscrepancy> out;
  const auto scan = [&](char name, const Matrix& a, const Matrix& b) {
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        const double scale = std::max({std::abs(a(i, j)), std::abs(b(i, j)), floor});
        out.push_back({name, i, j, a(i, j), b(i, j), std::abs(a(i, j) - b(i, j)) / scale});
      }
  };
  scan('A', lhs.A, rhs.A);
  scan('B', lhs.B, rhs.B);
  return out;
}

inline double max_relative(const std::vector<EntryDiscrepancy>& d) {
  double worst = 0;
  for (const auto& e : d) worst = std::max(worst, e.relative);
  return worst;
}

}  // namespace pendctl
