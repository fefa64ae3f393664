#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pendctl/pendctl.hpp"

namespace pendctl::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kSynthesisFailure = 2, kDiverged = 3 };

inline constexpr const char* kConfigEnv = "PENDULUM_CTL_CONFIG";

// Every flag maps to a config key of the same name (dashes become
// underscores). Plant constants can be overridden with "plant.<name>".
inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "platform", "params",   "controller",  "design",        "q",        "r",         "poles",
      "alpha",    "k",        "boundary_layer", "duration",   "ts",       "plant_dt",  "disturbance",
      "disturbance_fraction", "x0",          "reference",     "measurement", "filter_cutoff", "band",
      "onset",    "trace",    "metrics",     "out",           "csv",      "trace_dir",
  };
  return keys;
}

using Settings = std::map<std::string, std::string>;

struct ExperimentSpec {
  Platform platform = Platform::RotPen;
  PlantParams plant = RotPenParams{};
  std::string controller = "lqr";
  std::optional<std::string> design_path;
  std::optional<std::vector<double>> q, r, poles;
  std::optional<double> alpha, k;
  double boundary_layer = 0.0;
  SimConfig sim;
  double band = 0.02;
  std::optional<double> onset;
};

// ---------------------------------------------------------------------------
// Settings: config file (explicit or from the environment) overlaid by flags
// ---------------------------------------------------------------------------

inline Settings load_settings(const std::optional<std::string>& config_path, const Settings& flags) {
  Settings s;
  std::optional<std::string> path = config_path;
  if (!path)
    if (const char* env = std::getenv(kConfigEnv); env && *env) path = env;
  if (path) {
    for (const auto& kv : parse_key_values_file(*path)) {
      if (!known_keys().count(kv.key) && kv.key.rfind("plant.", 0) != 0)
        throw ConfigError(kv.key, "unknown config key (" + *path + " line " + std::to_string(kv.line) + ")");
      s[kv.key] = kv.value;
    }
  }
  for (const auto& [key, value] : flags) s[key] = value;
  return s;
}

inline std::optional<std::string> get(const Settings& s, const std::string& key) {
  const auto it = s.find(key);
  if (it == s.end()) return std::nullopt;
  return it->second;
}

inline std::optional<double> get_double(const Settings& s, const std::string& key) {
  const auto v = get(s, key);
  if (!v) return std::nullopt;
  return parse_double(key, *v);
}

inline std::optional<std::vector<double>> get_list(const Settings& s, const std::string& key) {
  const auto v = get(s, key);
  if (!v) return std::nullopt;
  return parse_list(key, *v);
}

inline Vector4 get_state(const Settings& s, const std::string& key, const Vector4& fallback) {
  const auto v = get_list(s, key);
  if (!v) return fallback;
  if (v->size() != 4) throw ConfigError(key, "expected 4 comma-separated values");
  return Vector4((*v)[0], (*v)[1], (*v)[2], (*v)[3]);
}

inline PlantParams plant_from_settings(Platform platform, const Settings& s) {
  std::vector<KeyValue> kvs;
  if (const auto path = get(s, "params")) kvs = parse_key_values_file(*path);
  for (const auto& [key, value] : s)
    if (key.rfind("plant.", 0) == 0) kvs.push_back({key.substr(6), value, 0});
  return plant_params_from(platform, kvs);
}

inline ExperimentSpec build_spec(const Settings& s) {
  ExperimentSpec e;
  const auto platform = get(s, "platform");
  if (!platform) throw ConfigError("platform", "missing (use --platform rotpen|nxtway)");
  e.platform = parse_platform(*platform);
  e.plant = plant_from_settings(e.platform, s);

  e.controller = get(s, "controller").value_or("lqr");
  static const std::set<std::string> controllers = {"lqr", "smc", "paper-gains", "paper-smc", "file"};
  if (!controllers.count(e.controller))
    throw ConfigError("controller", "expected lqr, smc, paper-gains, paper-smc or file");
  e.design_path = get(s, "design");
  if (e.design_path && e.controller == "lqr" && !get(s, "controller")) e.controller = "file";
  if (e.controller == "file" && !e.design_path) throw ConfigError("design", "controller=file needs a design path");

  e.q = get_list(s, "q");
  e.r = get_list(s, "r");
  e.poles = get_list(s, "poles");
  e.alpha = get_double(s, "alpha");
  e.k = get_double(s, "k");
  e.boundary_layer = get_double(s, "boundary_layer").value_or(0.0);
  if (e.boundary_layer < 0) throw ConfigError("boundary_layer", "must be non-negative");

  SimConfig& c = e.sim;
  c = default_sim_config(e.plant);
  c.duration = get_double(s, "duration").value_or(c.duration);
  c.controller_Ts = get_double(s, "ts").value_or(c.controller_Ts);
  c.plant_dt = get_double(s, "plant_dt").value_or(c.controller_Ts / 4.0);
  c.x0 = get_state(s, "x0", c.x0);
  c.reference = get_state(s, "reference", c.reference);
  const std::string dist = get(s, "disturbance").value_or("none");
  if (dist == "paper") {
    c.disturbance = pulse_disturbance(max_voltage(e.plant), get_double(s, "disturbance_fraction").value_or(0.5));
  } else if (dist != "none") {
    throw ConfigError("disturbance", "expected none or paper");
  }
  const std::string meas = get(s, "measurement").value_or("ideal");
  if (meas == "filtered" || meas == "filtered-derivative") {
    c.measurement = Measurement::FilteredDerivative;
  } else if (meas != "ideal") {
    throw ConfigError("measurement", "expected ideal or filtered");
  }
  c.filter_cutoff = get_double(s, "filter_cutoff").value_or(c.filter_cutoff);
  try {
    c.validate();
  } catch (const InvalidArgument& ex) {
    throw ConfigError("", ex.what());
  }
  e.band = get_double(s, "band").value_or(e.band);
  e.onset = get_double(s, "onset");
  return e;
}

// ---------------------------------------------------------------------------
// Controller construction
// ---------------------------------------------------------------------------

inline LqrWeights weights_from(const ExperimentSpec& e) {
  LqrWeights w = default_lqr_weights(e.platform);
  const Eigen::Index m = input_count(e.plant);
  if (e.q) {
    const auto n = static_cast<Eigen::Index>(e.q->size());
    if (n != 4 && !(n == 5 && e.platform == Platform::NxtWay))
      throw ConfigError("q", "expected 4 diagonal entries (5 for NxtWay with the integral state)");
    w.Q = Eigen::Map<const Vector>(e.q->data(), n).asDiagonal();
  }
  if (e.r) {
    const auto n = static_cast<Eigen::Index>(e.r->size());
    if (n == 1) {
      w.R = Matrix::Identity(m, m) * (*e.r)[0];
    } else if (n == m) {
      w.R = Eigen::Map<const Vector>(e.r->data(), n).asDiagonal();
    } else {
      throw ConfigError("r", "expected 1 or " + std::to_string(m) + " diagonal entries");
    }
  }
  return w;
}

inline SmcOptions smc_options_from(const ExperimentSpec& e) {
  const SmcDefaults d = default_smc_options(e.platform);
  SmcOptions o;
  o.surface_poles = d.poles;
  if (e.poles) {
    if (e.poles->size() != 3) throw ConfigError("poles", "expected 3 surface poles");
    o.surface_poles.assign(e.poles->begin(), e.poles->end());
  }
  o.alpha = e.alpha.value_or(alpha_for_gain(e.sim.controller_Ts, d.switching_gain));
  if (!(o.alpha > 0)) throw ConfigError("alpha", "must be positive");
  o.k = e.k;
  o.boundary_layer = e.boundary_layer;
  return o;
}

inline Controller make_controller(const ExperimentSpec& e) {
  if (e.controller == "lqr") return design_lqr(e.plant, weights_from(e));
  if (e.controller == "smc") return design_smc(e.plant, e.sim.controller_Ts, smc_options_from(e));
  if (e.controller == "paper-gains") return reference_lqr_gains(e.platform);
  if (e.controller == "paper-smc") {
    const ReferenceSmcGains f = reference_smc_gains(e.platform);
    if (!f.dimension_coherent)
      throw ConfigError("controller", "printed SMC surface for this platform does not have one entry per state");
    SmcDesign d;
    d.L = f.L;
    d.Keq = f.K;
    d.k = f.k;
    d.Ts = e.sim.controller_Ts;
    d.alpha = e.alpha.value_or(100.0);
    d.exceeds_bound = f.k > smc_gain_bound(d.Ts, d.alpha);
    d.boundary_layer = e.boundary_layer;
    return d;
  }
  return read_design_file(*e.design_path);
}

inline MetricsConfig metrics_config_for(const ExperimentSpec& e) {
  MetricsConfig mc;
  mc.band = e.band;
  mc.V_max = e.sim.saturation_V;
  mc.q2_reference = e.sim.reference(1);
  const DisturbanceSpec& d = e.sim.disturbance;
  if (d.kind == DisturbanceKind::PulseTrain) {
    mc.onset = e.onset.value_or(d.start_time);
    // Only the first pulse counts; later edges disturb the loop again.
    mc.window_end = mc.onset + d.duty / d.frequency;
  } else {
    mc.onset = e.onset.value_or(0.0);
  }
  return mc;
}

struct RunResult {
  ReportRow row;
  SimTrace trace;
};

inline RunResult run_experiment(const ExperimentSpec& e, const std::string& label) {
  const Controller c = make_controller(e);
  RunResult r;
  r.trace = simulate(e.plant, c, e.sim);
  r.row.label = label;
  r.row.platform = e.platform;
  r.row.controller = is_smc(c) ? ControllerKind::Smc : ControllerKind::Lqr;
  r.row.metrics = compute_metrics(r.trace, metrics_config_for(e));
  return r;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

inline std::ofstream open_out(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(path, "cannot open output file");
  return out;
}

inline void print_matrix(std::ostream& os, const char* name, const Matrix& m) {
  const Eigen::IOFormat fmt(6, 0, "  ", "\n", "  [", "]");
  os << name << " =\n" << m.format(fmt) << '\n';
}

inline void print_eigs(std::ostream& os, const char* name, const Eigen::VectorXcd& ev) {
  os << name << ':';
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    os << ' ' << format_double(ev(i).real());
    if (ev(i).imag() != 0) os << (ev(i).imag() > 0 ? "+" : "") << format_double(ev(i).imag()) << 'j';
  }
  os << '\n';
}

inline int cmd_linearize(const Settings& s, std::ostream& os) {
  const auto platform = get(s, "platform");
  if (!platform) throw ConfigError("platform", "missing (use --platform rotpen|nxtway)");
  const Platform p = parse_platform(*platform);
  const PlantParams plant = plant_from_settings(p, s);
  const StateSpace numeric = jacobian_linearize(plant);
  const StateSpace closed = statespace_closed_form(plant);
  os << "platform: " << to_string(p) << '\n';
  print_matrix(os, "A (closed form)", closed.A);
  print_matrix(os, "B (closed form)", closed.B);
  print_matrix(os, "A (numeric Jacobian)", numeric.A);
  print_matrix(os, "B (numeric Jacobian)", numeric.B);
  const auto disc = compare_models(numeric, closed);
  os << "max relative discrepancy: " << format_double(max_relative(disc)) << '\n';
  for (const auto& d : disc)
    if (d.relative > 1e-6)
      os << "  " << d.matrix << '(' << d.row + 1 << ',' << d.col + 1 << "): numeric " << format_double(d.lhs)
         << " closed " << format_double(d.rhs) << " rel " << format_double(d.relative) << '\n';
  for (const auto& note : closed_form_notes(p)) os << "note: " << note << '\n';
  print_eigs(os, "open-loop eigenvalues", eigenvalues(numeric.A));
  if (const auto out = get(s, "out")) {
    auto f = open_out(*out);
    if (const auto ts = get_double(s, "ts"))
      write_statespace(f, discretize_zoh(numeric, *ts));
    else
      write_statespace(f, numeric);
    os << "model written to " << *out << '\n';
  }
  return kOk;
}

inline int cmd_synthesize(const Settings& s, std::ostream& os) {
  const ExperimentSpec e = build_spec(s);
  const Controller c = make_controller(e);
  std::ostringstream text;
  write_design(text, c, to_string(e.platform));
  os << text.str();
  if (const auto* d = std::get_if<LqrDesign>(&c)) {
    const StateSpace ss = collapse_inputs(jacobian_linearize(e.plant));
    os << "# closed loop stable: " << (stability_report(ss, d->K.topRows(1)).stable || d->Ki ? "yes" : "no") << '\n';
  } else {
    const auto& sd = std::get<SmcDesign>(c);
    if (sd.exceeds_bound)
      os << "# warning: k exceeds the Lyapunov bound " << format_double(smc_gain_bound(sd.Ts, sd.alpha)) << '\n';
  }
  if (const auto out = get(s, "out")) {
    auto f = open_out(*out);
    f << text.str();
    os << "# design written to " << *out << '\n';
  }
  return kOk;
}

inline int cmd_simulate(const Settings& s, std::ostream& os) {
  const ExperimentSpec e = build_spec(s);
  const RunResult r = run_experiment(e, std::string(to_string(e.platform)) + "-" + e.controller);
  {
    auto f = open_out(get(s, "trace").value_or("trace.csv"));
    write_trace_csv(f, r.trace);
  }
  {
    auto f = open_out(get(s, "metrics").value_or("metrics.csv"));
    write_metrics_csv(f, {r.row});
  }
  os << comparison_report({r.row});
  if (r.trace.diverged) {
    os << "simulation diverged at t = " << format_double(r.trace.t.back()) << " s\n";
    return kDiverged;
  }
  return kOk;
}

inline int cmd_compare(const Settings& s, std::ostream& os) {
  struct Job {
    Platform platform;
    const char* controller;
  };
  const std::vector<Job> jobs = {{Platform::NxtWay, "lqr"},
                                 {Platform::NxtWay, "smc"},
                                 {Platform::RotPen, "lqr"},
                                 {Platform::RotPen, "smc"}};
  std::vector<std::future<RunResult>> futures;
  for (const auto& j : jobs) {
    Settings sj = s;
    sj["platform"] = std::string(to_string(j.platform));
    sj["controller"] = j.controller;
    if (!sj.count("disturbance")) sj["disturbance"] = "paper";
    if (!sj.count("duration")) sj["duration"] = "120";
    const ExperimentSpec e = build_spec(sj);
    const std::string label = std::string(j.controller == std::string("lqr") ? "LQR" : "SMC") + " " +
                              (j.platform == Platform::NxtWay ? "NxtWay" : "RotPen");
    futures.push_back(std::async(std::launch::async, [e, label] { return run_experiment(e, label); }));
  }
  std::vector<RunResult> results;
  for (auto& f : futures) results.push_back(f.get());

  std::vector<ReportRow> rows;
  for (const auto& r : results) rows.push_back(r.row);
  const std::string report = comparison_report(rows);
  os << report;
  if (const auto out = get(s, "out")) {
    auto f = open_out(*out);
    f << report;
  }
  if (const auto csv = get(s, "csv")) {
    auto f = open_out(*csv);
    write_metrics_csv(f, rows);
  }
  if (const auto dir = get(s, "trace_dir")) {
    for (std::size_t i = 0; i < results.size(); ++i) {
      std::string name = rows[i].label;
      for (auto& ch : name) ch = ch == ' ' ? '_' : static_cast<char>(std::tolower(ch));
      auto f = open_out((std::filesystem::path(*dir) / (name + ".csv")).string());
      write_trace_csv(f, results[i].trace);
    }
  }
  bool diverged = false;
  for (const auto& r : results) diverged = diverged || r.trace.diverged;
  return diverged ? kDiverged : kOk;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& os = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Modelling, LQR/SMC synthesis and simulation for two inverted-pendulum platforms", "pendctl"};
  app.require_subcommand(1);
  std::optional<std::string> config;
  Settings flags;

  const auto add = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    sub->add_option_function<std::string>(flag, [&flags, key](const std::string& v) { flags[key] = v; }, help);
  };
  const auto common = [&](CLI::App* sub) {
    sub->add_option_function<std::string>("--config", [&config](const std::string& v) { config = v; },
                                           std::string("key=value config file (default: $") + kConfigEnv + ")");
    add(sub, "--platform", "platform", "rotpen | nxtway");
    add(sub, "--params", "params", "plant parameter file overriding the defaults");
  };
  const auto controller_opts = [&](CLI::App* sub) {
    add(sub, "--controller", "controller", "lqr | smc | paper-gains | paper-smc | file");
    add(sub, "--design", "design", "design file (controller=file)");
    add(sub, "--q", "q", "LQR state weights (diagonal, comma-separated)");
    add(sub, "--r", "r", "LQR input weights (diagonal, comma-separated)");
    add(sub, "--poles", "poles", "SMC continuous-time surface poles, e.g. --poles=-4,-5,-6");
    add(sub, "--alpha", "alpha", "SMC reaching-rate constant");
    add(sub, "--k", "k", "SMC switching gain (default: the Lyapunov bound)");
    add(sub, "--boundary-layer", "boundary_layer", "SMC boundary-layer width (0 = off)");
    add(sub, "--ts", "ts", "controller sample time [s]");
  };
  const auto sim_opts = [&](CLI::App* sub) {
    add(sub, "--duration", "duration", "simulated time [s]");
    add(sub, "--plant-dt", "plant_dt", "RK4 step [s] (default Ts/4)");
    add(sub, "--disturbance", "disturbance", "none | paper");
    add(sub, "--disturbance-fraction", "disturbance_fraction", "pulse amplitude as a fraction of V_max");
    add(sub, "--x0", "x0", "initial state q1,q2,q1dot,q2dot");
    add(sub, "--reference", "reference", "reference state");
    add(sub, "--measurement", "measurement", "ideal | filtered");
    add(sub, "--filter-cutoff", "filter_cutoff", "derivative filter cutoff [Hz]");
    add(sub, "--band", "band", "settle band on q2 [rad]");
    add(sub, "--onset", "onset", "metrics onset time [s]");
  };

  CLI::App* lin = app.add_subcommand("linearize", "closed-form and numeric linear models with a discrepancy report");
  common(lin);
  add(lin, "--out", "out", "write the numeric model to this file");
  add(lin, "--ts", "ts", "discretize the written model with ZOH at this sample time");

  CLI::App* syn = app.add_subcommand("synthesize", "design an LQR or SMC controller");
  common(syn);
  controller_opts(syn);
  syn->add_flag_callback("--lqr", [&flags] { flags["controller"] = "lqr"; }, "shorthand for --controller lqr");
  syn->add_flag_callback("--smc", [&flags] { flags["controller"] = "smc"; }, "shorthand for --controller smc");
  add(syn, "--out", "out", "design file to write");

  CLI::App* sim = app.add_subcommand("simulate", "run one closed-loop experiment");
  common(sim);
  controller_opts(sim);
  sim_opts(sim);
  add(sim, "--trace", "trace", "trace CSV path (default trace.csv)");
  add(sim, "--metrics", "metrics", "metrics CSV path (default metrics.csv)");

  CLI::App* cmp = app.add_subcommand("compare", "LQR vs SMC on both platforms with the pulse disturbance");
  sim_opts(cmp);
  cmp->add_option_function<std::string>("--config", [&config](const std::string& v) { config = v; },
                                         "key=value config file");
  add(cmp, "--out", "out", "report file");
  add(cmp, "--csv", "csv", "metrics CSV");
  add(cmp, "--trace-dir", "trace_dir", "directory for the four trace CSVs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    os << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    os << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    const Settings s = load_settings(config, flags);
    if (lin->parsed()) return cmd_linearize(s, os);
    if (syn->parsed()) return cmd_synthesize(s, os);
    if (sim->parsed()) return cmd_simulate(s, os);
    return cmd_compare(s, os);
  } catch (const SynthesisError& e) {
    err << "synthesis failed: " << e.what();
    if (std::isfinite(e.residual())) err << " (residual " << format_double(e.residual()) << ')';
    err << '\n';
    return kSynthesisFailure;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

}  // namespace pendctl::cli
