#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <variant>
#include <vector>

#include "pendctl/common.hpp"
#include "pendctl/config.hpp"
#include "pendctl/linearization.hpp"
#include "pendctl/plant.hpp"
#include "pendctl/synthesis.hpp"

namespace pendctl {

// ---------------------------------------------------------------------------
// Disturbance
// ---------------------------------------------------------------------------

enum class DisturbanceKind { None, PulseTrain };

struct DisturbanceSpec {
  DisturbanceKind kind = DisturbanceKind::None;
  double amplitude = 0.0;   // V
  double frequency = 0.0;   // Hz
  double start_time = 0.0;  // s
  double duty = 0.5;
  double fraction = 0.5;    // amplitude / V_max when built from pulse_disturbance

  void validate() const {
    require(std::isfinite(amplitude) && amplitude >= 0, "disturbance amplitude must be non-negative");
    require(std::isfinite(start_time) && start_time >= 0, "disturbance start must be non-negative");
    if (kind == DisturbanceKind::PulseTrain) {
      require(std::isfinite(frequency) && frequency > 0, "pulse train frequency must be positive");
      require(duty > 0 && duty <= 1, "pulse train duty must lie in (0, 1]");
    }
  }
};

inline DisturbanceSpec pulse_disturbance(double V_max, double fraction = 0.5) {
  require(V_max > 0, "V_max must be positive");
  require(fraction >= 0, "disturbance fraction must be non-negative");
  return {DisturbanceKind::PulseTrain, fraction * V_max, 0.0167, 60.0, 0.5, fraction};
}

inline double disturbance_value(const DisturbanceSpec& d, double t) {
  if (d.kind == DisturbanceKind::None || t < d.start_time) return 0.0;
  const double period = 1.0 / d.frequency;
  const double phase = std::fmod(t - d.start_time, period);
  return phase < d.duty * period ? d.amplitude : 0.0;
}

// ---------------------------------------------------------------------------
// Control laws
// ---------------------------------------------------------------------------

inline double saturate(double u, double V_max) {
  require(V_max > 0, "saturation limit must be positive");
  return std::clamp(u, -V_max, V_max);
}

inline double sign0(double s) { return s > 0 ? 1.0 : (s < 0 ? -1.0 : 0.0); }

/// u = -K (x - ref) - Ki integ. Uses the first row of K (single virtual input).
inline double lqr_control_law(const LqrDesign& d, const Vector& x, double integ = 0.0,
                              const Vector* ref = nullptr) {
  require(x.size() == d.K.cols(), "state size does not match K");
  const Vector e = ref ? Vector(x - *ref) : x;
  double u = -(d.K.row(0) * e)(0, 0);
  if (d.Ki) u -= (*d.Ki)(0) * integ;
  return u;
}

struct SmcOutput {
  double u = 0.0;
  double s = 0.0;
};

inline SmcOutput smc_control_law(const SmcDesign& d, const Vector& x, const Vector* ref = nullptr) {
  require(x.size() == d.L.size() && x.size() == d.Keq.size(), "state size does not match the SMC design");
  const Vector e = ref ? Vector(x - *ref) : x;
  SmcOutput out;
  out.s = d.L.dot(e);
  double sw = sign0(out.s);
  if (d.boundary_layer > 0 && std::abs(out.s) < d.boundary_layer) sw = out.s / d.boundary_layer;
  out.u = -d.Keq.dot(e) - d.k * sw;
  return out;
}

// ---------------------------------------------------------------------------
// Derivative filter
// ---------------------------------------------------------------------------

/// Backward difference followed by a first-order low-pass discretized with the
/// bilinear transform (cutoff prewarped, unity DC gain).
class DerivativeFilter {
 public:
  DerivativeFilter(double Ts, double cutoff_hz) : Ts_(Ts) {
    require(Ts > 0 && std::isfinite(Ts), "filter Ts must be positive");
    require(cutoff_hz > 0 && cutoff_hz < 0.5 / Ts, "filter cutoff must lie in (0, Nyquist)");
    const double wc = 2.0 / Ts * std::tan(M_PI * cutoff_hz * Ts);
    const double a = wc * Ts;
    b_ = a / (2.0 + a);
    a1_ = (2.0 - a) / (2.0 + a);
  }

  void reset(double x0) {
    prev_x_ = x0;
    prev_r_ = 0.0;
    y_ = 0.0;
    primed_ = true;
  }

  double step(double x) {
    if (!primed_) reset(x);
    const double r = (x - prev_x_) / Ts_;
    y_ = a1_ * y_ + b_ * (r + prev_r_);
    prev_x_ = x;
    prev_r_ = r;
    return y_;
  }

 private:
  double Ts_;
  double b_ = 0.0;
  double a1_ = 0.0;
  double prev_x_ = 0.0;
  double prev_r_ = 0.0;
  double y_ = 0.0;
  bool primed_ = false;
};

inline std::vector<double> filtered_derivative(const std::vector<double>& samples, double Ts, double cutoff_hz) {
  require(samples.size() >= 2, "filtered_derivative needs at least two samples");
  DerivativeFilter f(Ts, cutoff_hz);
  std::vector<double> out;
  out.reserve(samples.size());
  for (double x : samples) out.push_back(f.step(x));
  return out;
}

// ---------------------------------------------------------------------------
// Closed-loop simulation
// ---------------------------------------------------------------------------

enum class Measurement { Ideal, FilteredDerivative };

struct SimConfig {
  double duration = 10.0;
  double plant_dt = 0.0005;
  double controller_Ts = 0.002;
  DisturbanceSpec disturbance;
  Vector4 x0 = Vector4::Zero();
  Vector4 reference = Vector4::Zero();
  double saturation_V = 6.0;
  Measurement measurement = Measurement::Ideal;
  double filter_cutoff = 30.0;

  long ticks() const { return std::lround(duration / controller_Ts); }
  long substeps() const { return std::lround(controller_Ts / plant_dt); }

  void validate() const {
    require(std::isfinite(duration) && duration > 0, "duration must be positive");
    require(std::isfinite(controller_Ts) && controller_Ts > 0, "controller_Ts must be positive");
    require(std::isfinite(plant_dt) && plant_dt > 0, "plant_dt must be positive");
    require(plant_dt <= controller_Ts * (1 + 1e-12), "plant_dt must not exceed controller_Ts");
    const double ratio = controller_Ts / plant_dt;
    require(std::abs(ratio - std::round(ratio)) < 1e-9 * ratio, "controller_Ts must be an integer multiple of plant_dt");
    require(saturation_V > 0, "saturation_V must be positive");
    require(x0.allFinite() && reference.allFinite(), "x0 and reference must be finite");
    if (measurement == Measurement::FilteredDerivative)
      require(filter_cutoff > 0 && filter_cutoff < 0.5 / controller_Ts, "filter cutoff must lie in (0, Nyquist)");
    disturbance.validate();
  }
};

inline double default_controller_Ts(Platform p) { return p == Platform::RotPen ? 0.002 : 0.004; }

inline SimConfig default_sim_config(const PlantParams& plant) {
  SimConfig c;
  c.controller_Ts = default_controller_Ts(platform_of(plant));
  c.plant_dt = c.controller_Ts / 4.0;
  c.saturation_V = max_voltage(plant);
  return c;
}

using Controller = std::variant<LqrDesign, SmcDesign>;

inline bool is_smc(const Controller& c) { return std::holds_alternative<SmcDesign>(c); }

struct SimTrace {
  std::vector<double> t;
  std::vector<Vector4> x;
  std::vector<double> u_cmd;
  std::vector<double> u_applied;
  std::vector<double> dist;
  std::vector<double> s;      // SMC only
  std::vector<double> integ;  // integral designs only
  bool has_surface = false;
  bool has_integral = false;
  bool diverged = false;
  double V_max = 0.0;

  std::size_t size() const { return t.size(); }
  bool empty() const { return t.empty(); }
};

inline constexpr double kDivergenceBound = 1e3;

inline Vector4 rk4_step(const PlantParams& plant, const Vector4& x, const Vector& v, double h) {
  const Vector4 k1 = state_derivative(plant, x, v);
  const Vector4 k2 = state_derivative(plant, x + 0.5 * h * k1, v);
  const Vector4 k3 = state_derivative(plant, x + 0.5 * h * k2, v);
  const Vector4 k4 = state_derivative(plant, x + h * k3, v);
  return x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Open-loop RK4 integration with a constant physical input.
inline Vector4 integrate(const PlantParams& plant, Vector4 x, const Vector& v, double dt, long steps) {
  for (long i = 0; i < steps; ++i) x = rk4_step(plant, x, v, dt);
  return x;
}

inline SimTrace simulate(const PlantParams& plant, const Controller& controller, const SimConfig& cfg) {
  validate(plant);
  cfg.validate();
  const bool smc = is_smc(controller);
  const LqrDesign* lqr = std::get_if<LqrDesign>(&controller);
  const SmcDesign* sm = std::get_if<SmcDesign>(&controller);
  if (lqr) require(lqr->K.cols() == 4 && lqr->K.rows() >= 1, "LQR gain must have 4 columns");
  if (sm) require(sm->L.size() == 4 && sm->Keq.size() == 4, "SMC design must cover 4 states");

  const long N = cfg.ticks();
  const long sub = cfg.substeps();
  const double Ts = cfg.controller_Ts;
  const double h = Ts / static_cast<double>(sub);
  const Vector ref = cfg.reference;

  SimTrace tr;
  tr.has_surface = smc;
  tr.has_integral = lqr && lqr->Ki.has_value();
  tr.V_max = cfg.saturation_V;
  tr.t.reserve(N + 1);
  tr.x.reserve(N + 1);

  std::optional<DerivativeFilter> f1, f2;
  if (cfg.measurement == Measurement::FilteredDerivative) {
    f1.emplace(Ts, cfg.filter_cutoff);
    f2.emplace(Ts, cfg.filter_cutoff);
    f1->reset(cfg.x0(0));
    f2->reset(cfg.x0(1));
  }

  Vector4 x = cfg.x0;
  double integ = 0.0;
  for (long k = 0; k <= N; ++k) {
    const double t = static_cast<double>(k) * Ts;
    Vector4 y = x;
    if (f1) {
      y(2) = f1->step(x(0));
      y(3) = f2->step(x(1));
    }
    double u = 0.0;
    double s = 0.0;
    if (lqr) {
      u = lqr_control_law(*lqr, y, integ, &ref);
    } else {
      const SmcOutput o = smc_control_law(*sm, y, &ref);
      u = o.u;
      s = o.s;
    }
    const double ua = saturate(u, cfg.saturation_V);
    const double d = disturbance_value(cfg.disturbance, t);

    tr.t.push_back(t);
    tr.x.push_back(x);
    tr.u_cmd.push_back(u);
    tr.u_applied.push_back(ua);
    tr.dist.push_back(d);
    if (tr.has_surface) tr.s.push_back(s);
    if (tr.has_integral) tr.integ.push_back(integ);

    if (k == N) break;
    integ += Ts * (y(0) - ref(0));
    try {
      for (long i = 0; i < sub; ++i) {
        const double ti = t + static_cast<double>(i) * h;
        x = rk4_step(plant, x, expand_input(plant, ua + disturbance_value(cfg.disturbance, ti)), h);
      }
    } catch (const SingularConfiguration&) {
      tr.diverged = true;
      break;
    }
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kDivergenceBound) {
      tr.diverged = true;
      break;
    }
  }
  return tr;
}

/// Closed-loop SMC on a discrete linear model x(k+1) = Ad x + Bd u without
/// saturation. Returns the surface sequence s(0..steps).
struct LinearSmcRun {
  std::vector<Vector> x;
  std::vector<double> s;
  std::vector<double> u;
};

inline LinearSmcRun simulate_linear_smc(const StateSpace& discrete, const SmcDesign& d, const Vector& x0, long steps) {
  discrete.validate();
  require(discrete.discrete() && discrete.inputs() == 1, "expects a single-input discrete model");
  require(x0.size() == discrete.states(), "x0 size mismatch");
  LinearSmcRun r;
  Vector x = x0;
  for (long k = 0; k <= steps; ++k) {
    const SmcOutput o = smc_control_law(d, x);
    r.x.push_back(x);
    r.s.push_back(o.s);
    r.u.push_back(o.u);
    if (k == steps) break;
    x = discrete.A * x + discrete.B.col(0) * o.u;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Trace CSV
// ---------------------------------------------------------------------------

inline void write_trace_csv(std::ostream& out, const SimTrace& tr) {
  out << "t,q1,q2,q1dot,q2dot,u_cmd,u_applied,dist";
  if (tr.has_surface) out << ",s";
  if (tr.has_integral) out << ",integ";
  out << '\n';
  for (std::size_t i = 0; i < tr.size(); ++i) {
    out << format_double(tr.t[i]);
    for (int j = 0; j < 4; ++j) out << ',' << format_double(tr.x[i](j));
    out << ',' << format_double(tr.u_cmd[i]) << ',' << format_double(tr.u_applied[i]) << ','
        << format_double(tr.dist[i]);
    if (tr.has_surface) out << ',' << format_double(tr.s[i]);
    if (tr.has_integral) out << ',' << format_double(tr.integ[i]);
    out << '\n';
  }
}

}  // namespace pendctl
