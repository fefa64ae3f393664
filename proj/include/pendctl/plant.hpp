#pragma once

// Nonlinear Euler-Lagrange models of the two pendulum platforms:
//
//   M(q) q'' + C(q, q') q' + G(q) = V
//
// with V the actuator-referred input in volts. RotPen is the Quanser rotary
// inverted pendulum (q1 arm angle, q2 pole angle); NxtWay is the two-wheeled
// Lego robot restricted to the sagittal plane (q1 wheel angle, q2 body pitch,
// yaw held at zero). q2 = 0 is the upright pole for both.

#include <cmath>
#include <string>
#include <variant>

#include "pendctl/common.hpp"

namespace pendctl {

struct RotPenParams {
  double g = 9.81;
  double m_p = 0.127;    // pendulum mass [kg]
  double L_p = 0.337;    // pendulum length [m]
  double J_p = 0.0012;   // pendulum inertia [kg m^2]
  double m_r = 0.257;    // arm mass [kg]
  double L_r = 0.216;    // arm length [m]
  double J_r = 9.98e-4;  // arm inertia [kg m^2]
  double f_p = 0.0024;   // arm-pendulum friction [N m s/rad]
  double f_r = 0.0024;   // motor-arm friction [N m s/rad]
  double R_m = 2.6;      // motor resistance [ohm]
  double L_m = 0.18e-3;  // motor inductance [H], not used by the model
  double K_m = 0.00767;  // back-emf constant [V s/rad]
  double K_t = 0.00767;  // torque constant [N m/A]
  double eta_g = 0.9;
  double eta_m = 0.69;
  double K_enc = 4096;  // encoder counts/rev, not used by the model
  double K_g = 70;
  double V_max = 6;

  double gamma() const { return R_m / (K_t * K_g * eta_g * eta_m); }
};

struct NxtWayParams {
  double g = 9.81;
  double m = 0.03;    // wheel mass [kg]
  double R = 0.02;    // wheel radius [m]
  double M = 0.6;     // body mass [kg]
  double W = 0.14;    // body width [m]
  double D = 0.04;    // body depth [m]
  double H = 0.27;    // body height [m]
  double L = 0.12;    // wheel axle to body centre of mass [m]
  double J_m = 1e-5;  // motor inertia [kg m^2]
  double f_m = 0.0022;
  double f_w = 0.0;
  double R_m = 6.69;
  double K_b = 0.468;
  double K_t = 0.317;
  double n = 1.0;  // gear ratio (listed as eta in the parameter table)
  double V_max = 10;

  double J_w() const { return m * R * R / 2.0; }
  double J_q2() const { return M * L * L / 3.0; }
  double J_q3() const { return M * (W * W + D * D) / 12.0; }
  double alpha() const { return n * K_t / R_m; }
  double beta() const { return n * K_t * K_b / R_m + f_m; }
};

using PlantParams = std::variant<RotPenParams, NxtWayParams>;

inline Platform platform_of(const PlantParams& p) {
  return std::holds_alternative<RotPenParams>(p) ? Platform::RotPen : Platform::NxtWay;
}

inline PlantParams default_params(Platform platform) {
  if (platform == Platform::RotPen) return RotPenParams{};
  return NxtWayParams{};
}

inline double max_voltage(const PlantParams& p) {
  return std::visit([](const auto& x) { return x.V_max; }, p);
}

/// Physical input count: one motor for RotPen, left/right motors for NxtWay.
inline int input_count(const PlantParams& p) { return platform_of(p) == Platform::RotPen ? 1 : 2; }

/// Maps a single virtual voltage to the physical input vector. NxtWay drives
/// both wheels with the same voltage.
inline Vector expand_input(const PlantParams& p, double u) {
  return Vector::Constant(input_count(p), u);
}

inline void validate(const RotPenParams& p) {
  const auto positive = [](double v, const char* name) {
    if (!(v > 0) || !std::isfinite(v)) throw InvalidArgument(std::string(name) + " must be positive");
  };
  const auto nonneg = [](double v, const char* name) {
    if (!(v >= 0) || !std::isfinite(v)) throw InvalidArgument(std::string(name) + " must be non-negative");
  };
  positive(p.g, "g");
  positive(p.m_p, "m_p");
  positive(p.L_p, "L_p");
  positive(p.J_p, "J_p");
  positive(p.m_r, "m_r");
  positive(p.L_r, "L_r");
  positive(p.J_r, "J_r");
  positive(p.R_m, "R_m");
  positive(p.L_m, "L_m");
  positive(p.K_t, "K_t");
  positive(p.K_g, "K_g");
  positive(p.V_max, "V_max");
  positive(p.eta_g, "eta_g");
  positive(p.eta_m, "eta_m");
  nonneg(p.f_p, "f_p");
  nonneg(p.f_r, "f_r");
  nonneg(p.K_m, "K_m");
  nonneg(p.K_enc, "K_enc");
}

inline void validate(const NxtWayParams& p) {
  const auto positive = [](double v, const char* name) {
    if (!(v > 0) || !std::isfinite(v)) throw InvalidArgument(std::string(name) + " must be positive");
  };
  const auto nonneg = [](double v, const char* name) {
    if (!(v >= 0) || !std::isfinite(v)) throw InvalidArgument(std::string(name) + " must be non-negative");
  };
  positive(p.g, "g");
  positive(p.m, "m");
  positive(p.R, "R");
  positive(p.M, "M");
  positive(p.W, "W");
  positive(p.D, "D");
  positive(p.H, "H");
  positive(p.L, "L");
  positive(p.J_m, "J_m");
  positive(p.R_m, "R_m");
  positive(p.K_t, "K_t");
  positive(p.n, "n");
  positive(p.V_max, "V_max");
  nonneg(p.f_m, "f_m");
  nonneg(p.f_w, "f_w");
  nonneg(p.K_b, "K_b");
}

inline void validate(const PlantParams& p) {
  std::visit([](const auto& x) { validate(x); }, p);
}

/// Copy with friction and back-emf damping removed, leaving a conservative
/// mechanical system.
inline PlantParams without_dissipation(const PlantParams& p) {
  if (auto* r = std::get_if<RotPenParams>(&p)) {
    RotPenParams c = *r;
    c.f_p = c.f_r = c.K_m = 0;
    return c;
  }
  NxtWayParams c = std::get<NxtWayParams>(p);
  c.f_m = c.f_w = c.K_b = 0;
  return c;
}

struct GeneralizedState {
  Vector2 q = Vector2::Zero();
  Vector2 qdot = Vector2::Zero();

  static GeneralizedState from_vector(const Vector4& x) { return {x.head<2>(), x.tail<2>()}; }
  Vector4 to_vector() const {
    Vector4 x;
    x << q, qdot;
    return x;
  }
};

struct DynamicsMatrices {
  Matrix2 M;
  Matrix2 C;
  Vector2 G;
};

inline constexpr double kSingularDetTol = 1e-12;

inline DynamicsMatrices eval_mcg(const RotPenParams& p, const GeneralizedState& s) {
  const double s2 = std::sin(s.q(1));
  const double c2 = std::cos(s.q(1));
  const double dq1 = s.qdot(0);
  const double dq2 = s.qdot(1);
  const double gam = p.gamma();
  const double half_lp = p.L_p / 2.0;
  const double arm = p.m_r * (p.L_r / 2.0) * (p.L_r / 2.0) + p.m_p * p.L_r * p.L_r + p.J_r;
  const double coupling = 0.5 * p.m_p * p.L_p * p.L_r;

  DynamicsMatrices d;
  // Row 1 is actuator-referred (scaled by gamma); row 2 is not.
  d.M << gam * (arm + p.m_p * half_lp * half_lp * s2 * s2), -coupling * c2 * gam,
      -coupling * c2, p.m_p * half_lp * half_lp + p.J_p;
  d.C << 2.0 * s2 * c2 * p.m_p * half_lp * half_lp * gam * dq2 + gam * p.f_r + p.K_m * p.K_g,
      coupling * s2 * dq2 * gam,
      -dq1 * p.m_p * half_lp * half_lp * s2 * c2, p.f_p;
  d.G << 0.0, -half_lp * p.m_p * p.g * s2;
  return d;
}

inline DynamicsMatrices eval_mcg(const NxtWayParams& p, const GeneralizedState& s) {
  const double s2 = std::sin(s.q(1));
  const double c2 = std::cos(s.q(1));
  const double dq2 = s.qdot(1);
  const double n2jm = 2.0 * p.n * p.n * p.J_m;
  const double wheel = 2.0 * p.m * p.R * p.R + p.M * p.R * p.R + 2.0 * p.J_w() + n2jm;
  const double body = p.M * p.L * p.L + p.J_q2() + n2jm;
  const double cross = p.M * p.L * p.R * c2 - n2jm;
  const double beta = p.beta();
  const double inv_alpha = 1.0 / p.alpha();

  DynamicsMatrices d;
  d.M << wheel, cross, -cross, -body;
  d.M *= inv_alpha;
  d.C << 2.0 * (beta + p.f_w), -2.0 * beta - p.M * p.L * p.R * dq2 * s2, 2.0 * beta, -2.0 * beta;
  d.C *= inv_alpha;
  d.G << 0.0, inv_alpha * p.M * p.g * p.L * s2;
  return d;
}

inline void require_finite(const GeneralizedState& s) {
  if (!s.q.allFinite() || !s.qdot.allFinite()) throw InvalidArgument("state contains non-finite entries");
}

inline DynamicsMatrices eval_mcg(const PlantParams& p, const GeneralizedState& s) {
  require_finite(s);
  return std::visit([&](const auto& x) { return eval_mcg(x, s); }, p);
}

/// Right-hand side voltage vector V of the model for physical inputs v.
inline Vector2 generalized_input(const PlantParams& p, const Vector& v) {
  if (v.size() != input_count(p))
    throw InvalidArgument("expected " + std::to_string(input_count(p)) + " input(s), got " +
                          std::to_string(v.size()));
  if (!v.allFinite()) throw InvalidArgument("input voltage is not finite");
  if (platform_of(p) == Platform::RotPen) return Vector2(v(0), 0.0);
  // Both wheel equations carry the summed motor voltage.
  const double sum = v(0) + v(1);
  return Vector2(sum, sum);
}

inline Vector2 forward_dynamics(const PlantParams& p, const GeneralizedState& s, const Vector& v) {
  const DynamicsMatrices d = eval_mcg(p, s);
  const double det = d.M.determinant();
  if (!(std::abs(det) > kSingularDetTol))
    throw SingularConfiguration("mass matrix is singular (|det M| = " + std::to_string(std::abs(det)) + ")");
  const Vector2 rhs = generalized_input(p, v) - d.C * s.qdot - d.G;
  return d.M.partialPivLu().solve(rhs);
}

/// State derivative for x = [q1, q2, q1', q2'].
inline Vector4 state_derivative(const PlantParams& p, const Vector4& x, const Vector& v) {
  const GeneralizedState s = GeneralizedState::from_vector(x);
  Vector4 dx;
  dx << s.qdot, forward_dynamics(p, s, v);
  return dx;
}

/// Kinetic plus potential energy of the mechanical subsystem. The potential
/// is zero with the pole hanging (q2 = pi) and maximal upright (q2 = 0).
inline double mechanical_energy(const RotPenParams& p, const GeneralizedState& s) {
  const double s2 = std::sin(s.q(1));
  const double c2 = std::cos(s.q(1));
  const double half_lp = p.L_p / 2.0;
  const double arm = p.m_r * (p.L_r / 2.0) * (p.L_r / 2.0) + p.m_p * p.L_r * p.L_r + p.J_r;
  Matrix2 inertia;
  inertia << arm + p.m_p * half_lp * half_lp * s2 * s2, -0.5 * p.m_p * p.L_p * p.L_r * c2,
      -0.5 * p.m_p * p.L_p * p.L_r * c2, p.m_p * half_lp * half_lp + p.J_p;
  const double kinetic = 0.5 * s.qdot.dot(inertia * s.qdot);
  const double potential = p.m_p * p.g * half_lp * (1.0 + c2);
  return kinetic + potential;
}

inline double mechanical_energy(const NxtWayParams& p, const GeneralizedState& s) {
  const double c2 = std::cos(s.q(1));
  const double n2jm = 2.0 * p.n * p.n * p.J_m;
  const double cross = p.M * p.L * p.R * c2 - n2jm;
  Matrix2 inertia;
  inertia << 2.0 * p.m * p.R * p.R + p.M * p.R * p.R + 2.0 * p.J_w() + n2jm, cross,
      cross, p.M * p.L * p.L + p.J_q2() + n2jm;
  const double kinetic = 0.5 * s.qdot.dot(inertia * s.qdot);
  const double potential = p.M * p.g * p.L * (1.0 + c2);
  return kinetic + potential;
}

inline double mechanical_energy(const PlantParams& p, const GeneralizedState& s) {
  require_finite(s);
  return std::visit([&](const auto& x) { return mechanical_energy(x, s); }, p);
}

}  // namespace pendctl
