#include <sstream>

#include <gtest/gtest.h>

#include "pendctl/experiment.hpp"
#include "pendctl/io.hpp"

using namespace pendctl;

namespace {

std::string key_of(const std::string& text) {
  std::istringstream in(text);
  try {
    read_design(in);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<none>";
}

}  // namespace

TEST(MatrixText, RoundTrip) {
  Matrix m(2, 3);
  m << 1.0 / 3.0, -2.5e-17, 7, 0, 1e300, -4;
  EXPECT_EQ(format_matrix(m), format_matrix(parse_matrix("m", format_matrix(m))));
  EXPECT_EQ(parse_matrix("m", format_matrix(m)), m);
  EXPECT_EQ(parse_matrix("m", "1,2;3,4"), (Matrix(2, 2) << 1, 2, 3, 4).finished());
  EXPECT_THROW(parse_matrix("m", "1,2;3"), ConfigError);
  EXPECT_THROW(parse_matrix("m", ""), ConfigError);
  EXPECT_EQ(parse_row("r", "1, 2, 3").size(), 3);
}

TEST(StateSpaceFile, ContinuousAndDiscreteRoundTrip) {
  const StateSpace c = jacobian_linearize(PlantParams(NxtWayParams{}));
  for (const StateSpace& ss : {c, discretize_zoh(c, 0.004)}) {
    std::stringstream io;
    write_statespace(io, ss);
    const StateSpace back = read_statespace(io);
    EXPECT_EQ(back.A, ss.A);
    EXPECT_EQ(back.B, ss.B);
    EXPECT_EQ(back.kind, ss.kind);
    EXPECT_EQ(back.Ts, ss.Ts);
    EXPECT_EQ(back.state_labels, ss.state_labels);
  }
}

TEST(StateSpaceFile, Errors) {
  std::istringstream bad_domain("domain = hybrid\nA = 1\nB = 1\n");
  EXPECT_THROW(read_statespace(bad_domain), ConfigError);
  std::istringstream missing("domain = continuous\nA = 1\n");
  EXPECT_THROW(read_statespace(missing), ConfigError);
  std::istringstream shape("domain = continuous\nA = 1,2;3,4\nB = 1\n");
  EXPECT_THROW(read_statespace(shape), ConfigError);
}

TEST(DesignFile, LqrRoundTrip) {
  const LqrDesign d = design_default_lqr(PlantParams(NxtWayParams{}));
  std::stringstream io;
  write_design(io, d, "nxtway");
  const auto back = std::get<LqrDesign>(read_design(io));
  EXPECT_EQ(back.K, d.K);
  EXPECT_EQ(back.P, d.P);
  EXPECT_EQ(back.Q, d.Q);
  EXPECT_EQ(back.R, d.R);
  ASSERT_TRUE(back.Ki);
  EXPECT_EQ(*back.Ki, *d.Ki);
  EXPECT_EQ(back.residual, d.residual);
  EXPECT_EQ(back.closed_loop_eigs, d.closed_loop_eigs);
}

TEST(DesignFile, SmcRoundTrip) {
  SmcOptions opt;
  opt.surface_poles = default_smc_options(Platform::RotPen).poles;
  opt.alpha = alpha_for_gain(0.002, 2.5);
  opt.boundary_layer = 0.01;
  const SmcDesign d = design_smc(PlantParams(RotPenParams{}), 0.002, opt);
  std::stringstream io;
  write_design(io, d);
  const std::string text = io.str();
  EXPECT_NE(text.find("k_max = "), std::string::npos);
  const auto back = std::get<SmcDesign>(read_design(io));
  EXPECT_EQ(back.L, d.L);
  EXPECT_EQ(back.Keq, d.Keq);
  EXPECT_EQ(back.k, d.k);
  EXPECT_EQ(back.Ts, d.Ts);
  EXPECT_EQ(back.alpha, d.alpha);
  EXPECT_EQ(back.boundary_layer, 0.01);
  EXPECT_EQ(back.exceeds_bound, d.exceeds_bound);
  EXPECT_EQ(back.surface_eigs, d.surface_eigs);
}

TEST(DesignFile, ErrorsNameTheKey) {
  EXPECT_EQ(key_of("K = 1,2,3,4\n"), "controller");
  EXPECT_EQ(key_of("controller = pid\n"), "controller");
  EXPECT_EQ(key_of("controller = lqr\n"), "K");
  EXPECT_EQ(key_of("controller = lqr\nK = 1,x\n"), "K");
  EXPECT_EQ(key_of("controller = lqr\nK = 1\nK = 2\n"), "K");
  EXPECT_EQ(key_of("controller = smc\nL = 1,2\nKeq = 1\nk = 1\nTs = 0.01\nalpha = 1\n"), "Keq");
  EXPECT_EQ(key_of("controller = smc\nL = 1\nKeq = 1\nk = -1\nTs = 0.01\nalpha = 1\n"), "k");
  EXPECT_EQ(key_of("controller = smc\nL = 1\nKeq = 1\nk = 1\nTs = 0\nalpha = 1\n"), "Ts");
  EXPECT_THROW(read_design_file("/nonexistent/design.txt"), ConfigError);
}
