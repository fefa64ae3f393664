#pragma once

// Line-oriented "key = value" text files. '#' starts a comment; blank lines
// are ignored. Used for plant parameters, experiment configs and designs.

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "pendctl/common.hpp"
#include "pendctl/plant.hpp"

namespace pendctl {

struct KeyValue {
  std::string key;
  std::string value;
  int line = 0;
};

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

inline std::vector<KeyValue> parse_key_values(std::istream& in) {
  std::vector<KeyValue> out;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no), "expected 'key = value', got '" + line + "'");
    KeyValue kv{trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1)), line_no};
    if (kv.key.empty()) throw ConfigError("line " + std::to_string(line_no), "empty key");
    out.push_back(std::move(kv));
  }
  return out;
}

inline std::vector<KeyValue> parse_key_values_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open file");
  return parse_key_values(in);
}

inline double parse_double(const std::string& key, std::string_view text) {
  const std::string t = trim(text);
  double v = 0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (t.empty() || ec != std::errc() || ptr != last)
    throw ConfigError(key, "expected a number, got '" + t + "'");
  return v;
}

inline std::vector<double> parse_list(const std::string& key, std::string_view text) {
  std::vector<double> out;
  std::string item;
  std::stringstream ss{std::string(text)};
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  if (out.empty()) throw ConfigError(key, "expected a comma-separated list of numbers");
  return out;
}

/// Shortest decimal text that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return std::to_string(v);
  return std::string(buf, ptr);
}

inline std::string format_list(const Eigen::Ref<const RowVector>& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_double(v(i));
  }
  return s;
}

namespace detail {

template <typename Params>
using FieldTable = std::vector<std::pair<const char*, double Params::*>>;

inline const FieldTable<RotPenParams>& rotpen_fields() {
  static const FieldTable<RotPenParams> t = {
      {"g", &RotPenParams::g},         {"m_p", &RotPenParams::m_p},     {"L_p", &RotPenParams::L_p},
      {"J_p", &RotPenParams::J_p},     {"m_r", &RotPenParams::m_r},     {"L_r", &RotPenParams::L_r},
      {"J_r", &RotPenParams::J_r},     {"f_p", &RotPenParams::f_p},     {"f_r", &RotPenParams::f_r},
      {"R_m", &RotPenParams::R_m},     {"L_m", &RotPenParams::L_m},     {"K_m", &RotPenParams::K_m},
      {"K_t", &RotPenParams::K_t},     {"eta_g", &RotPenParams::eta_g}, {"eta_m", &RotPenParams::eta_m},
      {"K_enc", &RotPenParams::K_enc}, {"K_g", &RotPenParams::K_g},     {"V_max", &RotPenParams::V_max},
  };
  return t;
}

inline const FieldTable<NxtWayParams>& nxtway_fields() {
  static const FieldTable<NxtWayParams> t = {
      {"g", &NxtWayParams::g},     {"m", &NxtWayParams::m},     {"R", &NxtWayParams::R},
      {"M", &NxtWayParams::M},     {"W", &NxtWayParams::W},     {"D", &NxtWayParams::D},
      {"H", &NxtWayParams::H},     {"L", &NxtWayParams::L},     {"J_m", &NxtWayParams::J_m},
      {"f_m", &NxtWayParams::f_m}, {"f_w", &NxtWayParams::f_w}, {"R_m", &NxtWayParams::R_m},
      {"K_b", &NxtWayParams::K_b}, {"K_t", &NxtWayParams::K_t}, {"n", &NxtWayParams::n},
      {"V_max", &NxtWayParams::V_max},
  };
  return t;
}

inline bool is_derived_key(const std::string& key) {
  return key == "gamma" || key == "alpha" || key == "beta" || key == "J_w" || key == "J_q2" || key == "J_q3";
}

template <typename Params>
void apply_fields(Params& p, const FieldTable<Params>& table, const std::vector<KeyValue>& kvs) {
  for (const auto& kv : kvs) {
    if (kv.key == "platform") continue;
    std::string key = kv.key;
    if (key == "eta" && std::is_same_v<Params, NxtWayParams>) key = "n";
    if (key == "V_m") key = "V_max";
    if (is_derived_key(key))
      throw ConfigError(kv.key, "derived constant; set the quantities it is computed from instead");
    bool found = false;
    for (const auto& [name, member] : table) {
      if (key == name) {
        p.*member = parse_double(kv.key, kv.value);
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError(kv.key, "unknown plant parameter");
  }
}

}  // namespace detail

/// Defaults for `platform` overridden by the entries in `kvs`. A "platform"
/// entry, when present, must agree with `platform`.
inline PlantParams plant_params_from(Platform platform, const std::vector<KeyValue>& kvs) {
  for (const auto& kv : kvs)
    if (kv.key == "platform" && parse_platform(kv.value) != platform)
      throw ConfigError("platform", "file is for '" + kv.value + "'");
  PlantParams p = default_params(platform);
  if (auto* r = std::get_if<RotPenParams>(&p))
    detail::apply_fields(*r, detail::rotpen_fields(), kvs);
  else
    detail::apply_fields(std::get<NxtWayParams>(p), detail::nxtway_fields(), kvs);
  try {
    validate(p);
  } catch (const InvalidArgument& e) {
    throw ConfigError("", e.what());
  }
  return p;
}

inline PlantParams load_plant_params(std::istream& in, Platform platform) {
  return plant_params_from(platform, parse_key_values(in));
}

inline PlantParams load_plant_params_file(const std::string& path, Platform platform) {
  return plant_params_from(platform, parse_key_values_file(path));
}

inline void write_plant_params(std::ostream& out, const PlantParams& p) {
  out << "platform = " << to_string(platform_of(p)) << '\n';
  if (const auto* r = std::get_if<RotPenParams>(&p)) {
    for (const auto& [name, member] : detail::rotpen_fields()) out << name << " = " << format_double(r->*member) << '\n';
    out << "# gamma = " << format_double(r->gamma()) << '\n';
  } else {
    const auto& x = std::get<NxtWayParams>(p);
    for (const auto& [name, member] : detail::nxtway_fields()) out << name << " = " << format_double(x.*member) << '\n';
    out << "# J_w = " << format_double(x.J_w()) << ", J_q2 = " << format_double(x.J_q2())
        << ", alpha = " << format_double(x.alpha()) << ", beta = " << format_double(x.beta()) << '\n';
  }
}

}  // namespace pendctl
