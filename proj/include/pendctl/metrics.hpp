#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pendctl/common.hpp"
#include "pendctl/config.hpp"
#include "pendctl/simulation.hpp"

namespace pendctl {

enum class Quality { Smooth, Scattering, Diverged };

inline constexpr std::string_view to_string(Quality q) {
  switch (q) {
    case Quality::Smooth: return "smooth";
    case Quality::Scattering: return "scattering";
    case Quality::Diverged: return "diverged";
  }
  return "?";
}

inline constexpr double kScatteringThreshold = 0.02;

struct Metrics {
  std::optional<double> settle_time;  // s after onset; empty when diverged or never settled
  double u_inf = 0.0;                 // V
  double u_pct_max = 0.0;             // % of V_max
  double pole_vel_max = 0.0;          // rad/s
  double scattering_score = 0.0;      // mean |du| / V_max
  Quality quality = Quality::Smooth;
};

struct MetricsConfig {
  double band = 0.02;                 // rad on q2
  double onset = 0.0;                 // s
  double window_end = std::numeric_limits<double>::infinity();
  double V_max = 0.0;                 // 0 = take it from the trace
  double q2_reference = 0.0;
};

/// Settle time is the first instant after which q2 stays inside the band up
/// to window_end, measured from onset.
inline Metrics compute_metrics(const SimTrace& tr, const MetricsConfig& cfg = {}) {
  if (tr.empty()) throw InvalidArgument("cannot compute metrics of an empty trace");
  const double vmax = cfg.V_max > 0 ? cfg.V_max : tr.V_max;
  require(vmax > 0, "V_max must be positive");
  require(cfg.band > 0, "settle band must be positive");

  Metrics m;
  double du_sum = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    m.u_inf = std::max(m.u_inf, std::abs(tr.u_applied[i]));
    m.pole_vel_max = std::max(m.pole_vel_max, std::abs(tr.x[i](3)));
    if (i > 0) du_sum += std::abs(tr.u_applied[i] - tr.u_applied[i - 1]);
  }
  m.u_pct_max = 100.0 * m.u_inf / vmax;
  m.scattering_score = tr.size() > 1 ? du_sum / static_cast<double>(tr.size() - 1) / vmax : 0.0;

  if (tr.diverged) {
    m.quality = Quality::Diverged;
    return m;
  }
  m.quality = m.scattering_score < kScatteringThreshold ? Quality::Smooth : Quality::Scattering;

  std::optional<std::size_t> last_out;
  std::optional<std::size_t> last_in_window;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    if (tr.t[i] < cfg.onset || tr.t[i] > cfg.window_end) continue;
    last_in_window = i;
    if (std::abs(tr.x[i](1) - cfg.q2_reference) > cfg.band) last_out = i;
  }
  if (!last_in_window || !last_out) {
    m.settle_time = 0.0;
  } else if (*last_out != *last_in_window) {
    m.settle_time = std::max(0.0, tr.t[*last_out + 1] - cfg.onset);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Comparison report
// ---------------------------------------------------------------------------

enum class ControllerKind { Lqr, Smc };

inline constexpr std::string_view to_string(ControllerKind k) { return k == ControllerKind::Lqr ? "lqr" : "smc"; }

struct ReportRow {
  std::string label;
  Platform platform = Platform::RotPen;
  ControllerKind controller = ControllerKind::Lqr;
  Metrics metrics;
};

namespace detail {

inline std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

inline void check_rows(const std::vector<ReportRow>& rows) {
  require(!rows.empty(), "report needs at least one run");
  for (const auto& r : rows) require(!r.label.empty(), "report rows need a non-empty label");
}

}  // namespace detail

/// Plain-text comparison table, one row per run. Power is
/// shown in % of V_max for NxtWay and in volts for RotPen.
inline std::string comparison_report(const std::vector<ReportRow>& rows) {
  detail::check_rows(rows);
  const std::vector<std::string> head = {"Control",     "Plataforma",  "Estado q2 [s]", "Potencia",
                                         "Velocidad Maxima [rad/s]",   "Criterio Energia Minima",
                                         "Robustez",    "Estabilizacion", "u_inf [V]", "u_pct [%]",
                                         "scatter"};
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    const Metrics& m = r.metrics;
    const std::string power = r.platform == Platform::NxtWay ? detail::fixed(m.u_pct_max, 1) + " %"
                                                             : detail::fixed(m.u_inf, 3) + " V";
    cells.push_back({r.label, std::string(to_string(r.platform)),
                     m.settle_time ? detail::fixed(*m.settle_time, 3) : std::string("-"), power,
                     detail::fixed(m.pole_vel_max, 3), r.controller == ControllerKind::Lqr ? "Si" : "No",
                     r.controller == ControllerKind::Smc ? "Si" : "No", std::string(to_string(m.quality)),
                     detail::fixed(m.u_inf, 4), detail::fixed(m.u_pct_max, 2),
                     detail::fixed(m.scattering_score, 4)});
  }
  std::vector<std::size_t> w(head.size());
  for (std::size_t j = 0; j < head.size(); ++j) {
    w[j] = head[j].size();
    for (const auto& c : cells) w[j] = std::max(w[j], c[j].size());
  }
  std::ostringstream os;
  os << "# Velocidad Maxima in rad/s (max |q2dot|); Estado q2 = settle time into the q2 band after the disturbance "
        "onset\n";
  const auto line = [&](const std::vector<std::string>& c) {
    for (std::size_t j = 0; j < c.size(); ++j) {
      if (j) os << " | ";
      if (j + 1 == c.size())
        os << c[j];
      else
        os << std::left << std::setw(static_cast<int>(w[j])) << c[j];
    }
    os << '\n';
  };
  line(head);
  std::size_t total = 0;
  for (auto x : w) total += x;
  os << std::string(total + 3 * (w.size() - 1), '-') << '\n';
  for (const auto& c : cells) line(c);
  return os.str();
}

inline void write_metrics_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  detail::check_rows(rows);
  out << "label,platform,controller,settle_time,u_inf,u_pct_max,pole_vel_max,scattering_score,quality\n";
  for (const auto& r : rows) {
    const Metrics& m = r.metrics;
    out << r.label << ',' << to_string(r.platform) << ',' << to_string(r.controller) << ','
        << (m.settle_time ? format_double(*m.settle_time) : std::string()) << ',' << format_double(m.u_inf) << ','
        << format_double(m.u_pct_max) << ',' << format_double(m.pole_vel_max) << ','
        << format_double(m.scattering_score) << ',' << to_string(m.quality) << '\n';
  }
}

}  // namespace pendctl
