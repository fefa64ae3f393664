#pragma once

// Plain-text design and model files. Same "key = value" syntax as configs;
// matrices are written row-major with ',' between columns and ';' between
// rows.

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pendctl/common.hpp"
#include "pendctl/config.hpp"
#include "pendctl/linearization.hpp"
#include "pendctl/simulation.hpp"
#include "pendctl/synthesis.hpp"

namespace pendctl {

inline std::string format_matrix(const Matrix& m) {
  std::string s;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) s += ';';
    s += format_list(m.row(i));
  }
  return s;
}

inline Matrix parse_matrix(const std::string& key, const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::stringstream ss(text);
  std::string row;
  while (std::getline(ss, row, ';')) rows.push_back(parse_list(key, row));
  if (rows.empty()) throw ConfigError(key, "empty matrix");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw ConfigError(key, "ragged matrix rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

inline RowVector parse_row(const std::string& key, const std::string& text) {
  const std::vector<double> v = parse_list(key, text);
  return Eigen::Map<const RowVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

namespace detail {

using KeyMap = std::map<std::string, std::string>;

inline KeyMap to_map(const std::vector<KeyValue>& kvs) {
  KeyMap m;
  for (const auto& kv : kvs) {
    if (m.count(kv.key)) throw ConfigError(kv.key, "duplicate key");
    m[kv.key] = kv.value;
  }
  return m;
}

inline const std::string& need(const KeyMap& m, const std::string& key) {
  const auto it = m.find(key);
  if (it == m.end()) throw ConfigError(key, "missing");
  return it->second;
}

inline void write_eigs(std::ostream& out, const std::string& prefix, const Eigen::VectorXcd& ev) {
  if (ev.size() == 0) return;
  out << prefix << "_re = " << format_list(ev.real().transpose()) << '\n';
  out << prefix << "_im = " << format_list(ev.imag().transpose()) << '\n';
}

inline Eigen::VectorXcd read_eigs(const KeyMap& m, const std::string& prefix) {
  const auto re = m.find(prefix + "_re");
  const auto im = m.find(prefix + "_im");
  if (re == m.end() || im == m.end()) return {};
  const RowVector r = parse_row(re->first, re->second);
  const RowVector i = parse_row(im->first, im->second);
  if (r.size() != i.size()) throw ConfigError(prefix, "real and imaginary parts differ in length");
  Eigen::VectorXcd ev(r.size());
  for (Eigen::Index k = 0; k < r.size(); ++k) ev(k) = {r(k), i(k)};
  return ev;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// State-space files
// ---------------------------------------------------------------------------

inline void write_statespace(std::ostream& out, const StateSpace& ss) {
  ss.validate();
  out << "domain = " << (ss.discrete() ? "discrete" : "continuous") << '\n';
  if (ss.discrete()) out << "Ts = " << format_double(ss.Ts) << '\n';
  if (!ss.state_labels.empty()) {
    out << "states = ";
    for (std::size_t i = 0; i < ss.state_labels.size(); ++i) out << (i ? "," : "") << ss.state_labels[i];
    out << '\n';
  }
  out << "A = " << format_matrix(ss.A) << '\n';
  out << "B = " << format_matrix(ss.B) << '\n';
}

inline StateSpace read_statespace(std::istream& in) {
  const auto m = detail::to_map(parse_key_values(in));
  const Matrix A = parse_matrix("A", detail::need(m, "A"));
  const Matrix B = parse_matrix("B", detail::need(m, "B"));
  if (A.rows() != A.cols() || B.rows() != A.rows()) throw ConfigError("B", "A must be square and B must match its rows");
  StateSpace ss = make_continuous(A, B);
  const std::string& dom = detail::need(m, "domain");
  if (dom == "discrete") {
    ss.kind = TimeDomain::Discrete;
    ss.Ts = parse_double("Ts", detail::need(m, "Ts"));
  } else if (dom != "continuous") {
    throw ConfigError("domain", "expected continuous or discrete");
  }
  if (const auto it = m.find("states"); it != m.end()) {
    std::stringstream ss_labels(it->second);
    std::string label;
    while (std::getline(ss_labels, label, ',')) ss.state_labels.push_back(trim(label));
  }
  try {
    ss.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError("A", e.what());
  }
  return ss;
}

// ---------------------------------------------------------------------------
// Design files
// ---------------------------------------------------------------------------

inline void write_design(std::ostream& out, const Controller& c, std::string_view platform = {}) {
  if (!platform.empty()) out << "platform = " << platform << '\n';
  if (const auto* d = std::get_if<LqrDesign>(&c)) {
    out << "controller = lqr\n";
    if (d->Q.size()) out << "Q = " << format_matrix(d->Q) << '\n';
    if (d->R.size()) out << "R = " << format_matrix(d->R) << '\n';
    if (d->P.size()) out << "P = " << format_matrix(d->P) << '\n';
    out << "K = " << format_matrix(d->K) << '\n';
    if (d->Ki) out << "Ki = " << format_list(*d->Ki) << '\n';
    if (std::isfinite(d->residual)) out << "residual = " << format_double(d->residual) << '\n';
    detail::write_eigs(out, "closed_loop_eig", d->closed_loop_eigs);
  } else {
    const auto& s = std::get<SmcDesign>(c);
    out << "controller = smc\n";
    out << "L = " << format_list(s.L) << '\n';
    out << "Keq = " << format_list(s.Keq) << '\n';
    out << "k = " << format_double(s.k) << '\n';
    out << "Ts = " << format_double(s.Ts) << '\n';
    out << "alpha = " << format_double(s.alpha) << '\n';
    out << "k_max = " << format_double(smc_gain_bound(s.Ts, s.alpha)) << '\n';
    out << "exceeds_bound = " << (s.exceeds_bound ? 1 : 0) << '\n';
    out << "boundary_layer = " << format_double(s.boundary_layer) << '\n';
    detail::write_eigs(out, "surface_eig", s.surface_eigs);
  }
}

inline Controller read_design(std::istream& in) {
  const auto m = detail::to_map(parse_key_values(in));
  const std::string& kind = detail::need(m, "controller");
  const auto opt_matrix = [&](const std::string& key) -> Matrix {
    const auto it = m.find(key);
    return it == m.end() ? Matrix() : parse_matrix(key, it->second);
  };
  if (kind == "lqr") {
    LqrDesign d;
    d.K = parse_matrix("K", detail::need(m, "K"));
    d.Q = opt_matrix("Q");
    d.R = opt_matrix("R");
    d.P = opt_matrix("P");
    if (const auto it = m.find("Ki"); it != m.end()) d.Ki = parse_row("Ki", it->second);
    if (const auto it = m.find("residual"); it != m.end()) d.residual = parse_double("residual", it->second);
    d.closed_loop_eigs = detail::read_eigs(m, "closed_loop_eig");
    return d;
  }
  if (kind == "smc") {
    SmcDesign d;
    d.L = parse_row("L", detail::need(m, "L"));
    d.Keq = parse_row("Keq", detail::need(m, "Keq"));
    if (d.L.size() != d.Keq.size()) throw ConfigError("Keq", "L and Keq differ in length");
    d.k = parse_double("k", detail::need(m, "k"));
    d.Ts = parse_double("Ts", detail::need(m, "Ts"));
    d.alpha = parse_double("alpha", detail::need(m, "alpha"));
    if (!(d.k >= 0)) throw ConfigError("k", "switching gain must be non-negative");
    if (!(d.Ts > 0)) throw ConfigError("Ts", "must be positive");
    if (!(d.alpha > 0)) throw ConfigError("alpha", "must be positive");
    if (const auto it = m.find("boundary_layer"); it != m.end())
      d.boundary_layer = parse_double("boundary_layer", it->second);
    d.exceeds_bound = d.k > smc_gain_bound(d.Ts, d.alpha);
    d.surface_eigs = detail::read_eigs(m, "surface_eig");
    return d;
  }
  throw ConfigError("controller", "expected lqr or smc, got '" + kind + "'");
}

inline Controller read_design_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open design file");
  return read_design(in);
}

}  // namespace pendctl
