#pragma once

// Standard designs and experiment presets for the two platforms.

#include <complex>
#include <optional>
#include <vector>

#include "pendctl/common.hpp"
#include "pendctl/linearization.hpp"
#include "pendctl/plant.hpp"
#include "pendctl/simulation.hpp"
#include "pendctl/synthesis.hpp"

namespace pendctl {

struct LqrWeights {
  Matrix Q;
  Matrix R;
};

/// RotPen: Q = diag(5, 1, 1, 1), R = 1.
/// NxtWay: Q = diag(1, 6e5, 1, 1, 4e2) over [x, int q1], R = diag(1e3, 1e3).
inline LqrWeights default_lqr_weights(Platform p) {
  if (p == Platform::RotPen) {
    Matrix R(1, 1);
    R << 1.0;
    return {Vector4(5, 1, 1, 1).asDiagonal(), R};
  }
  Vector q(5);
  q << 1, 6e5, 1, 1, 4e2;
  return {q.asDiagonal(), Eigen::Vector2d(1e3, 1e3).asDiagonal()};
}

/// LQR on the numeric Jacobian at the upright equilibrium. NxtWay weights
/// with one more row than the plant trigger the integral-of-q1 design.
inline LqrDesign design_lqr(const PlantParams& plant, const LqrWeights& w) {
  const StateSpace ss = jacobian_linearize(plant);
  if (w.Q.rows() == ss.states() + 1) return lqr_gain_integral(ss, w.Q, w.R, 0);
  if (ss.inputs() > 1) {
    // Shared input: u'Ru with u = [v, ..., v].
    const Vector ones = Vector::Ones(ss.inputs());
    require(w.R.rows() == ss.inputs() && w.R.cols() == ss.inputs(), "R must match the input count");
    Matrix R_eff(1, 1);
    R_eff(0, 0) = ones.dot(w.R * ones);
    LqrDesign d = lqr_gain(collapse_inputs(ss), w.Q, R_eff);
    d.R = w.R;
    return d;
  }
  return lqr_gain(ss, w.Q, w.R);
}

inline LqrDesign design_default_lqr(const PlantParams& plant) {
  return design_lqr(plant, default_lqr_weights(platform_of(plant)));
}

struct SmcDefaults {
  std::vector<std::complex<double>> poles;  // continuous-time surface poles
  double switching_gain;                    // V; alpha is chosen so that k_max equals it
};

/// Surface poles at -4, -5, -6 rad/s; switching gains 2.5 V (RotPen) and 20 V
/// (NxtWay).
inline SmcDefaults default_smc_options(Platform p) {
  if (p == Platform::RotPen) return {{-4.0, -5.0, -6.0}, 2.5};
  return {{-4.0, -5.0, -6.0}, 20.0};
}

/// Smallest alpha whose bound admits k: inverse of smc_gain_bound.
inline double alpha_for_gain(double Ts, double k) {
  require(Ts > 0, "Ts must be positive");
  require(k > 1, "the bound is at least 1; k must exceed 1");
  return std::sqrt(2.0) * std::sqrt(k * k - 1.0) / Ts;
}

/// Discrete single-input model used for SMC synthesis (inputs collapsed).
inline StateSpace smc_design_model(const PlantParams& plant, double Ts) {
  return discretize_zoh(collapse_inputs(jacobian_linearize(plant)), Ts);
}

inline SmcDesign design_smc(const PlantParams& plant, double Ts, const SmcOptions& opt) {
  return design_smc(smc_design_model(plant, Ts), opt);
}

inline SmcDesign design_default_smc(const PlantParams& plant, std::optional<double> Ts = std::nullopt) {
  const Platform p = platform_of(plant);
  const SmcDefaults d = default_smc_options(p);
  const double ts = Ts.value_or(default_controller_Ts(p));
  SmcOptions opt;
  opt.surface_poles = d.poles;
  opt.alpha = alpha_for_gain(ts, d.switching_gain);
  return design_smc(plant, ts, opt);
}

// ---------------------------------------------------------------------------
// Printed gains kept as regression fixtures
// ---------------------------------------------------------------------------

/// Printed LQR gains (u = -K x). NxtWay carries the integral gain.
inline LqrDesign reference_lqr_gains(Platform p) {
  LqrDesign d;
  const LqrWeights w = default_lqr_weights(p);
  d.Q = w.Q;
  d.R = w.R;
  d.K.resize(1, 4);
  if (p == Platform::RotPen) {
    d.K << -2.2361, 25.4512, -2.4613, 3.6332;
  } else {
    d.K << -0.8211, -69.4743, -1.0739, -9.0738;
    RowVector ki(1);
    ki << -0.4472;
    d.Ki = ki;
  }
  return d;
}

struct ReferenceSmcGains {
  RowVector K;
  double k = 0.0;
  RowVector L;               // as printed
  bool dimension_coherent;   // L has one entry per state
  bool gain_conforms;        // k within the bound at the platform rate and the given alpha
};

inline ReferenceSmcGains reference_smc_gains(Platform p, double alpha = 100.0) {
  ReferenceSmcGains f;
  f.K.resize(4);
  if (p == Platform::NxtWay) {
    f.K << 0, 1.0194, -3.3149, 3.2957;
    f.k = 20;
    f.L.resize(3);
    f.L << 0, -0.0002, 1;
  } else {
    f.K << -4.8606, 5.3882, -0.334, 0.3472;
    f.k = 2.5;
    f.L.resize(4);
    f.L << 1155.5, -4.1, 61, -68.3;
  }
  f.dimension_coherent = f.L.size() == 4;
  f.gain_conforms = f.k <= smc_gain_bound(default_controller_Ts(p), alpha);
  return f;
}

}  // namespace pendctl
