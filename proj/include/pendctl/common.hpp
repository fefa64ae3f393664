#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace pendctl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Vector4 = Eigen::Vector4d;
using Matrix2 = Eigen::Matrix2d;
using Vector2 = Eigen::Vector2d;

enum class Platform { RotPen, NxtWay };

inline constexpr std::string_view to_string(Platform p) {
  return p == Platform::RotPen ? "rotpen" : "nxtway";
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: non-finite values, mismatched dimensions, invalid parameters.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Mass matrix (nearly) singular at the evaluated configuration.
class SingularConfiguration : public Error {
 public:
  using Error::Error;
};

/// Degenerate closed-form denominator (Delta_Q / Delta_N vanish).
class DegenerateParameters : public Error {
 public:
  using Error::Error;
};

/// Riccati / surface synthesis failure. Carries the final residual when known.
class SynthesisError : public Error {
 public:
  explicit SynthesisError(const std::string& what, double residual = NAN)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Malformed config or file content; names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

inline Platform parse_platform(std::string_view s) {
  if (s == "rotpen" || s == "RotPen" || s == "quanser") return Platform::RotPen;
  if (s == "nxtway" || s == "NxtWay" || s == "nxt") return Platform::NxtWay;
  throw ConfigError("platform", "unknown platform '" + std::string(s) + "'");
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

}  // namespace pendctl
