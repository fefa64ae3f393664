#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "pendctl/metrics.hpp"

using namespace pendctl;

namespace {

// q2 = q2(t) and u = u(t) sampled at dt on [t0, t0 + T].
template <class Q2, class U>
SimTrace synthetic(Q2 q2, U u, double t0, double T, double dt, double vmax = 10.0) {
  SimTrace tr;
  tr.V_max = vmax;
  const long n = std::lround(T / dt);
  for (long k = 0; k <= n; ++k) {
    const double t = t0 + k * dt;
    tr.t.push_back(t);
    tr.x.push_back(Vector4(0, q2(t - t0), 0, -q2(t - t0)));
    tr.u_cmd.push_back(u(t - t0));
    tr.u_applied.push_back(u(t - t0));
    tr.dist.push_back(0.0);
  }
  return tr;
}

const auto decay = [](double t) { return 0.1 * std::exp(-t); };
const auto zero_u = [](double) { return 0.0; };

}  // namespace

TEST(Metrics, ExponentialDecaySettleTime) {
  const SimTrace tr = synthetic(decay, zero_u, 0, 10, 1e-3);
  const Metrics m = compute_metrics(tr);
  ASSERT_TRUE(m.settle_time);
  // 0.1 e^{-t} = 0.02 at t = ln 5.
  EXPECT_NEAR(*m.settle_time, std::log(5.0), 1e-3);
  EXPECT_NEAR(m.pole_vel_max, 0.1, 1e-12);
  EXPECT_EQ(m.quality, Quality::Smooth);
}

TEST(Metrics, AlreadyInsideBandSettlesImmediately) {
  const SimTrace tr = synthetic([](double) { return 0.001; }, zero_u, 0, 1, 1e-3);
  EXPECT_EQ(*compute_metrics(tr).settle_time, 0.0);
}

TEST(Metrics, NeverSettlingHasNoSettleTime) {
  const SimTrace tr = synthetic([](double t) { return 0.1 * std::sin(3 * t) + 0.05; }, zero_u, 0, 10, 1e-3);
  EXPECT_FALSE(compute_metrics(tr).settle_time);
}

TEST(Metrics, OnsetAndWindow) {
  // Kick at t = 5, decays afterwards; a second kick after the window is ignored.
  const auto q2 = [](double t) {
    if (t < 5) return 0.0;
    if (t > 20) return 0.1;
    return 0.1 * std::exp(-(t - 5));
  };
  const SimTrace tr = synthetic(q2, zero_u, 0, 25, 1e-3);
  MetricsConfig cfg;
  cfg.onset = 5;
  cfg.window_end = 20;
  EXPECT_NEAR(*compute_metrics(tr, cfg).settle_time, std::log(5.0), 1e-3);
  cfg.window_end = INFINITY;
  EXPECT_FALSE(compute_metrics(tr, cfg).settle_time);
}

TEST(Metrics, VoltageStatistics) {
  const SimTrace tr = synthetic(decay, [](double t) { return t < 0.5 ? -4.0 : 2.0; }, 0, 1, 0.25);
  const Metrics m = compute_metrics(tr);
  EXPECT_EQ(m.u_inf, 4.0);
  EXPECT_EQ(m.u_pct_max, 40.0);
  // Samples -4, -4, 2, 2, 2: one jump of 6 over four steps.
  EXPECT_NEAR(m.scattering_score, 6.0 / 4.0 / 10.0, 1e-15);
  EXPECT_EQ(m.quality, Quality::Scattering);
  MetricsConfig cfg;
  cfg.V_max = 6.0;
  EXPECT_NEAR(compute_metrics(tr, cfg).u_pct_max, 400.0 / 6.0, 1e-12);
}

TEST(Metrics, ChatteringIsScattering) {
  const SimTrace tr = synthetic(decay, [](double t) { return std::lround(t / 1e-3) % 2 ? 5.0 : -5.0; }, 0, 1, 1e-3);
  const Metrics m = compute_metrics(tr);
  EXPECT_NEAR(m.scattering_score, 1.0, 1e-12);
  EXPECT_EQ(m.quality, Quality::Scattering);
}

TEST(Metrics, DivergedRunHasNoSettleTime) {
  SimTrace tr = synthetic(decay, zero_u, 0, 1, 1e-3);
  tr.diverged = true;
  const Metrics m = compute_metrics(tr);
  EXPECT_EQ(m.quality, Quality::Diverged);
  EXPECT_FALSE(m.settle_time);
}

TEST(Metrics, RejectsBadInput) {
  EXPECT_THROW(compute_metrics(SimTrace{}), InvalidArgument);
  SimTrace tr = synthetic(decay, zero_u, 0, 1, 1e-3);
  MetricsConfig cfg;
  cfg.band = 0;
  EXPECT_THROW(compute_metrics(tr, cfg), InvalidArgument);
  tr.V_max = 0;
  EXPECT_THROW(compute_metrics(tr), InvalidArgument);
}

// Property: shifting the trace and the onset together leaves metrics unchanged.
TEST(Metrics, TimeShiftInvariance) {
  const auto u = [](double t) { return 3.0 * std::exp(-2 * t); };
  const Metrics a = compute_metrics(synthetic(decay, u, 0, 10, 1e-3));
  for (double shift : {1.0, 37.5, 120.0}) {
    MetricsConfig cfg;
    cfg.onset = shift;
    const Metrics b = compute_metrics(synthetic(decay, u, shift, 10, 1e-3), cfg);
    EXPECT_NEAR(*b.settle_time, *a.settle_time, 1e-9);
    EXPECT_EQ(b.u_inf, a.u_inf);
    EXPECT_EQ(b.pole_vel_max, a.pole_vel_max);
    EXPECT_NEAR(b.scattering_score, a.scattering_score, 1e-15);
  }
}

// Property: settle time is stable under resampling within one sample period.
TEST(Metrics, ResamplingInvariance) {
  const double coarse = *compute_metrics(synthetic(decay, zero_u, 0, 10, 2e-3)).settle_time;
  const double fine = *compute_metrics(synthetic(decay, zero_u, 0, 10, 5e-4)).settle_time;
  EXPECT_LE(std::abs(coarse - fine), 2e-3);
}

TEST(Report, RowsAndFlags) {
  Metrics m;
  m.settle_time = 0.324;
  m.u_inf = 8.48;
  m.u_pct_max = 84.8;
  m.pole_vel_max = 1.058;
  std::vector<ReportRow> rows = {{"lqr-nxt", Platform::NxtWay, ControllerKind::Lqr, m},
                                 {"smc-rot", Platform::RotPen, ControllerKind::Smc, m}};
  rows[1].metrics.settle_time.reset();
  rows[1].metrics.quality = Quality::Scattering;
  const std::string text = comparison_report(rows);
  std::istringstream in(text);
  std::string note, head, rule, r1, r2;
  std::getline(in, note);
  std::getline(in, head);
  std::getline(in, rule);
  std::getline(in, r1);
  std::getline(in, r2);
  EXPECT_NE(note.find("rad/s"), std::string::npos);
  EXPECT_NE(head.find("Estado q2 [s]"), std::string::npos);
  EXPECT_NE(head.find("Robustez"), std::string::npos);
  EXPECT_NE(r1.find("84.8 %"), std::string::npos);
  EXPECT_NE(r2.find("8.480 V"), std::string::npos);
  EXPECT_NE(r1.find("| Si "), std::string::npos);
  EXPECT_NE(r1.find("| smooth"), std::string::npos);
  EXPECT_NE(r2.find("| No "), std::string::npos);
  EXPECT_NE(r2.find("| scattering"), std::string::npos);
  EXPECT_NE(r2.find(" - "), std::string::npos);
  for (const std::string& line : {head, r1, r2}) {
    ASSERT_FALSE(line.empty());
    EXPECT_NE(line.back(), ' ');
  }
}

TEST(Report, RejectsEmptyLabelsAndNoRows) {
  EXPECT_THROW(comparison_report({}), InvalidArgument);
  EXPECT_THROW(comparison_report({{"", Platform::RotPen, ControllerKind::Lqr, {}}}), InvalidArgument);
}

TEST(Report, MetricsCsv) {
  Metrics m;
  m.u_inf = 2.5;
  m.u_pct_max = 25;
  std::ostringstream os;
  write_metrics_csv(os, {{"a", Platform::NxtWay, ControllerKind::Smc, m}});
  EXPECT_EQ(os.str(),
            "label,platform,controller,settle_time,u_inf,u_pct_max,pole_vel_max,scattering_score,quality\n"
            "a,nxtway,smc,,2.5,25,0,0,smooth\n");
}
