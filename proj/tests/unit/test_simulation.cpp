#include <algorithm>
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "pendctl/experiment.hpp"
#include "pendctl/simulation.hpp"

using namespace pendctl;

namespace {

SmcDesign switching_only(double k) {
  SmcDesign d;
  d.L = RowVector::Zero(4);
  d.L(1) = 1.0;
  d.Keq = RowVector::Zero(4);
  d.k = k;
  return d;
}

LqrDesign gain_only(const RowVector& K) {
  LqrDesign d;
  d.K = K;
  return d;
}

}  // namespace

TEST(Saturate, Examples) {
  EXPECT_EQ(saturate(7.5, 6.0), 6.0);
  EXPECT_EQ(saturate(-7.5, 6.0), -6.0);
  EXPECT_EQ(saturate(2.0, 6.0), 2.0);
  EXPECT_THROW(saturate(1.0, 0.0), InvalidArgument);
}

TEST(Disturbance, DefaultPulseTrain) {
  const DisturbanceSpec d = pulse_disturbance(10.0);
  EXPECT_EQ(d.amplitude, 5.0);
  const double period = 1.0 / 0.0167;
  EXPECT_NEAR(period, 59.88, 5e-3);
  EXPECT_EQ(disturbance_value(d, 30.0), 0.0);
  EXPECT_EQ(disturbance_value(d, 60.0), 5.0);
  EXPECT_EQ(disturbance_value(d, 60.0 + 29.9), 5.0);
  EXPECT_EQ(disturbance_value(d, 60.0 + 30.0), 0.0);
  EXPECT_EQ(disturbance_value(d, 60.0 + period + 1.0), 5.0);
  EXPECT_EQ(disturbance_value(DisturbanceSpec{}, 70.0), 0.0);
  EXPECT_EQ(pulse_disturbance(6.0, 0.25).amplitude, 1.5);
}

TEST(Disturbance, Validation) {
  DisturbanceSpec d = pulse_disturbance(6.0);
  d.frequency = 0;
  EXPECT_THROW(d.validate(), InvalidArgument);
  d = pulse_disturbance(6.0);
  d.duty = 1.5;
  EXPECT_THROW(d.validate(), InvalidArgument);
  EXPECT_THROW(pulse_disturbance(-1.0), InvalidArgument);
}

TEST(ControlLaw, LqrOnReferenceGain) {
  const LqrDesign d = reference_lqr_gains(Platform::NxtWay);
  const Vector e2 = Vector4(0, 1, 0, 0);
  EXPECT_NEAR(lqr_control_law(d, e2), 69.4743, 1e-12);
  EXPECT_NEAR(lqr_control_law(d, Vector::Zero(4), 2.0), 2 * 0.4472, 1e-12);
  const Vector ref = Vector4(0, 1, 0, 0);
  EXPECT_EQ(lqr_control_law(d, e2, 0.0, &ref), 0.0);
  EXPECT_THROW(lqr_control_law(d, Vector::Zero(3)), InvalidArgument);
}

TEST(ControlLaw, SmcSwitchingTerm) {
  const SmcDesign d = switching_only(20.0);
  EXPECT_EQ(smc_control_law(d, Vector4(0, 0.1, 0, 0)).u, -20.0);
  EXPECT_EQ(smc_control_law(d, Vector4(0, -0.1, 0, 0)).u, 20.0);
  EXPECT_EQ(sign0(0.0), 0.0);
  EXPECT_EQ(smc_control_law(d, Vector4::Zero()).u, 0.0);
  SmcDesign bl = d;
  bl.boundary_layer = 0.2;
  EXPECT_NEAR(smc_control_law(bl, Vector4(0, 0.1, 0, 0)).u, -10.0, 1e-12);
  EXPECT_EQ(smc_control_law(bl, Vector4(0, 0.5, 0, 0)).u, -20.0);
}

// Property: both laws are odd in the state about the reference.
TEST(ControlLaw, OddSymmetry) {
  const SmcDesign s = design_default_smc(PlantParams(RotPenParams{}));
  const LqrDesign l = design_default_lqr(PlantParams(RotPenParams{}));
  for (int i = 0; i < 20; ++i) {
    const Vector x = Vector4::Random();
    EXPECT_NEAR(smc_control_law(s, x).u, -smc_control_law(s, Vector(-x)).u, 1e-9);
    EXPECT_NEAR(lqr_control_law(l, x), -lqr_control_law(l, Vector(-x)), 1e-12);
  }
}

TEST(Filter, ConstantSignalHasZeroDerivative) {
  for (double v : filtered_derivative(std::vector<double>(100, 3.7), 0.002, 30)) EXPECT_EQ(v, 0.0);
}

TEST(Filter, RampConvergesToSlope) {
  std::vector<double> x;
  for (int i = 0; i < 2000; ++i) x.push_back(2.0 * i * 0.002);
  const auto y = filtered_derivative(x, 0.002, 30);
  EXPECT_NEAR(y.back(), 2.0, 1e-9);
}

TEST(Filter, AttenuatesAboveCutoff) {
  const double Ts = 0.001;
  const double fc = 10.0;
  const auto gain_at = [&](double f) {
    std::vector<double> x;
    for (int i = 0; i < 20000; ++i) x.push_back(std::sin(2 * M_PI * f * i * Ts));
    const auto y = filtered_derivative(x, Ts, fc);
    double peak = 0;
    for (std::size_t i = y.size() / 2; i < y.size(); ++i) peak = std::max(peak, std::abs(y[i]));
    return peak / (2 * M_PI * f);
  };
  EXPECT_GT(gain_at(0.5), 0.99);
  EXPECT_LT(gain_at(10 * fc), 0.12);
}

TEST(Filter, RejectsBadInput) {
  EXPECT_THROW(filtered_derivative({1.0}, 0.002, 30), InvalidArgument);
  EXPECT_THROW(filtered_derivative({1.0, 2.0}, 0.002, 300), InvalidArgument);
  EXPECT_THROW(DerivativeFilter(0.0, 30), InvalidArgument);
}

TEST(SimConfig, Validation) {
  SimConfig c;
  EXPECT_NO_THROW(c.validate());
  c.plant_dt = 0.003;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = SimConfig{};
  c.plant_dt = 0.0007;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = SimConfig{};
  c.duration = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = SimConfig{};
  c.measurement = Measurement::FilteredDerivative;
  c.filter_cutoff = 400;
  EXPECT_THROW(c.validate(), InvalidArgument);
  EXPECT_EQ(default_sim_config(PlantParams(NxtWayParams{})).controller_Ts, 0.004);
  EXPECT_EQ(default_sim_config(PlantParams(NxtWayParams{})).saturation_V, 10.0);
}

TEST(Simulate, EquilibriumStaysPut) {
  for (Platform p : {Platform::RotPen, Platform::NxtWay}) {
    const PlantParams plant = default_params(p);
    const SimTrace tr = simulate(plant, design_default_lqr(plant), default_sim_config(plant));
    EXPECT_EQ(tr.size(), static_cast<std::size_t>(default_sim_config(plant).ticks() + 1));
    for (std::size_t i = 0; i < tr.size(); ++i) {
      EXPECT_EQ(tr.x[i].norm(), 0.0);
      EXPECT_EQ(tr.u_applied[i], 0.0);
    }
    EXPECT_FALSE(tr.diverged);
  }
}

TEST(Simulate, IsDeterministic) {
  const PlantParams plant = NxtWayParams{};
  SimConfig c = default_sim_config(plant);
  c.duration = 90;
  c.disturbance = pulse_disturbance(10.0);
  const SimTrace a = simulate(plant, design_default_smc(plant), c);
  const SimTrace b = simulate(plant, design_default_smc(plant), c);
  std::ostringstream sa, sb;
  write_trace_csv(sa, a);
  write_trace_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Simulate, SamplesOnTheControllerGrid) {
  const PlantParams plant = RotPenParams{};
  SimConfig c = default_sim_config(plant);
  c.duration = 0.1;
  const SimTrace tr = simulate(plant, design_default_lqr(plant), c);
  ASSERT_EQ(tr.size(), 51u);
  for (std::size_t i = 0; i < tr.size(); ++i) EXPECT_EQ(tr.t[i], static_cast<double>(i) * 0.002);
}

// Property: applied voltage never exceeds the saturation limit.
TEST(Simulate, AppliedVoltageIsSaturated) {
  for (Platform p : {Platform::RotPen, Platform::NxtWay}) {
    const PlantParams plant = default_params(p);
    SimConfig c = default_sim_config(plant);
    c.duration = 5;
    c.x0 = Vector4(0, 0.3, 0, 0);
    for (const Controller& ctl : {Controller(design_default_lqr(plant)), Controller(design_default_smc(plant))}) {
      const SimTrace tr = simulate(plant, ctl, c);
      double worst_cmd = 0;
      for (std::size_t i = 0; i < tr.size(); ++i) {
        EXPECT_LE(std::abs(tr.u_applied[i]), c.saturation_V);
        worst_cmd = std::max(worst_cmd, std::abs(tr.u_cmd[i]));
      }
      EXPECT_GT(worst_cmd, c.saturation_V) << to_string(p);  // the limit is active
    }
  }
}

TEST(Simulate, RecoversFromInitialTilt) {
  for (Platform p : {Platform::RotPen, Platform::NxtWay}) {
    const PlantParams plant = default_params(p);
    SimConfig c = default_sim_config(plant);
    c.duration = 10;
    c.x0 = Vector4(0, 0.05, 0, 0);
    const SimTrace tr = simulate(plant, design_default_lqr(plant), c);
    EXPECT_FALSE(tr.diverged);
    EXPECT_LT(std::abs(tr.x.back()(1)), 1e-3) << to_string(p);
  }
}

TEST(Simulate, FilteredMeasurementStillStabilizes) {
  const PlantParams plant = RotPenParams{};
  SimConfig c = default_sim_config(plant);
  c.duration = 10;
  c.x0 = Vector4(0, 0.05, 0, 0);
  c.measurement = Measurement::FilteredDerivative;
  const SimTrace tr = simulate(plant, design_default_lqr(plant), c);
  EXPECT_FALSE(tr.diverged);
  EXPECT_LT(std::abs(tr.x.back()(1)), 2e-3);
}

TEST(Simulate, DivergenceIsFlagged) {
  const PlantParams plant = RotPenParams{};
  SimConfig c = default_sim_config(plant);
  c.duration = 5;
  c.x0 = Vector4(0, 0.05, 0, 0);
  const SimTrace tr = simulate(plant, gain_only(reference_lqr_gains(Platform::RotPen).K * -1.0), c);
  // Reversed feedback drives the arm into full-scale rotation; the state leaves
  // the tracked region or the run completes with the pendulum fallen.
  EXPECT_TRUE(tr.diverged || std::abs(tr.x.back()(1)) > 1.0);

  c.x0 = Vector4(2e3, 0, 0, 0);
  c.duration = 1;
  const SimTrace out = simulate(plant, gain_only(RowVector::Zero(4)), c);
  EXPECT_TRUE(out.diverged);
  EXPECT_EQ(out.size(), 1u);
}

TEST(Simulate, IntegralStateAccumulatesArmError) {
  const PlantParams plant = NxtWayParams{};
  SimConfig c = default_sim_config(plant);
  c.duration = 0.02;
  c.x0 = Vector4(0.5, 0, 0, 0);
  const SimTrace tr = simulate(plant, design_default_lqr(plant), c);
  ASSERT_TRUE(tr.has_integral);
  EXPECT_EQ(tr.integ[0], 0.0);
  EXPECT_NEAR(tr.integ[1], 0.004 * 0.5, 1e-15);
}

TEST(Rk4, FourthOrderConvergence) {
  const PlantParams plant = NxtWayParams{};
  const Vector4 x0(0, 0.2, 0, 0);
  const Vector v = Vector::Constant(2, 0.5);
  const double T = 0.2;
  const auto run = [&](long steps) { return integrate(plant, x0, v, T / steps, steps); };
  const Vector4 a = run(200), b = run(400), c = run(800);
  const double ratio = (a - b).norm() / (b - c).norm();
  EXPECT_GT(ratio, 13.0);
  EXPECT_LT(ratio, 19.0);
}

TEST(LinearSmc, DeadbeatReachesTheSurfaceInOneStep) {
  const StateSpace d = smc_design_model(PlantParams(RotPenParams{}), 0.002);
  SmcOptions opt;
  opt.surface_poles = {-4.0, -5.0, -6.0};
  opt.k = 0.0;
  const SmcDesign s = design_smc(d, opt);
  const LinearSmcRun r = simulate_linear_smc(d, s, Vector4(0.1, 0.05, 0, 0), 50);
  ASSERT_EQ(r.s.size(), 51u);
  for (std::size_t k = 1; k < r.s.size(); ++k) EXPECT_NEAR(r.s[k], 0.0, 1e-12);
}

TEST(TraceCsv, HeaderDependsOnController) {
  const PlantParams plant = NxtWayParams{};
  SimConfig c = default_sim_config(plant);
  c.duration = 0.008;
  std::ostringstream lqr, smc;
  write_trace_csv(lqr, simulate(plant, design_default_lqr(plant), c));
  write_trace_csv(smc, simulate(plant, design_default_smc(plant), c));
  EXPECT_EQ(lqr.str().substr(0, lqr.str().find('\n')), "t,q1,q2,q1dot,q2dot,u_cmd,u_applied,dist,integ");
  EXPECT_EQ(smc.str().substr(0, smc.str().find('\n')), "t,q1,q2,q1dot,q2dot,u_cmd,u_applied,dist,s");
  const std::string text = lqr.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}
