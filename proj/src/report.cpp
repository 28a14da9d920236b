#include "sgues/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace sgues {

using nlohmann::json;

namespace {

std::string printf_number(const char* fmt, double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(number_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(std::span<const double> v) {
  json out = json::array();
  for (double x : v) out.push_back(number_json(x));
  return out;
}

const char* class_name(LyapunovClass c) {
  switch (c) {
    case LyapunovClass::continuous:
      return "continuous";
    case LyapunovClass::discrete:
      return "discrete";
    case LyapunovClass::user:
      return "user";
  }
  return "user";
}

const char* direction_name(BoundDirection d) { return d == BoundDirection::upper ? "upper" : "lower"; }

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

std::string csv_number(double v) { return printf_number("%.17g", v); }
std::string summary_number(double v) { return printf_number("%.6g", v); }

json number_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

json to_json(const LyapunovData& data) {
  json j;
  j["exponent"] = data.exponent;
  if (data.classification) {
    json cls = json::array();
    for (LyapunovClass c : data.classification->classes) cls.push_back(class_name(c));
    j["classification"] = std::move(cls);
  }
  json p = json::array();
  for (const Matrix& m : data.p) p.push_back(matrix_json(m));
  j["P"] = std::move(p);
  json q = json::array();
  for (const Matrix& m : data.q_tilde) q.push_back(m.size() == 0 ? json(nullptr) : matrix_json(m));
  j["Q_tilde"] = std::move(q);
  j["k_lower"] = vector_json(data.k_lower);
  j["k_upper"] = vector_json(data.k_upper);
  j["lambda_bar"] = vector_json(data.lambda_bar);
  json r = matrix_json(data.r_bar);
  for (auto& row : r)
    for (auto& v : row)
      if (v == "nan") v = nullptr;
  j["r_bar"] = std::move(r);
  return j;
}

json to_json(const CertConfig& config) {
  return json{{"L", config.length}, {"c_s", number_json(config.c_s)}, {"c", vector_json(config.c)}};
}

CertConfig config_from_json(const json& j) {
  CertConfig c;
  c.length = j.at("L").get<std::size_t>();
  c.c_s = j.at("c_s").get<double>();
  for (const auto& v : j.at("c")) c.c.push_back(v.get<double>());
  return c;
}

json to_json(const Certificate& cert) {
  json j;
  j["theorem"] = cert.theorem == Theorem::main ? "main" : "no_self_impulses";
  j["config"] = to_json(cert.config);
  j["exponent"] = cert.exponent;
  j["R_L"] = number_json(std::exp(cert.log_r_l));
  j["R_hat"] = number_json(std::exp(cert.log_hat_r));
  j["switching"] = {{"lambda_s", number_json(cert.switching.lambda_s)},
                    {"r_s", number_json(cert.switching.r_s)},
                    {"T_S", number_json(cert.switching.t_s)},
                    {"N_S", number_json(cert.switching.n_s)},
                    {"branch", direction_name(cert.switching.branch)}};
  j["mode_lambda"] = vector_json(cert.mode_lambda);
  j["mode_r"] = vector_json(cert.mode_r);
  j["lambda_J"] = number_json(cert.lambda_j);
  j["r_J"] = cert.r_j ? number_json(*cert.r_j) : json(nullptr);
  j["C0"] = number_json(cert.c0);
  j["C1"] = number_json(cert.c1);
  j["C"] = number_json(cert.c);
  j["lambda0"] = number_json(cert.lambda0);
  j["K"] = number_json(cert.k);
  j["lambda"] = number_json(cert.lambda);
  j["valid"] = cert.valid;
  j["hypotheses_met"] = cert.hypotheses_met;
  j["diagnostics"] = cert.diagnostics;
  return j;
}

json to_json(const AuditReport& audit) {
  json items = json::array();
  for (const auto& i : audit.items) {
    items.push_back({{"name", i.name},
                     {"direction", direction_name(i.direction)},
                     {"limit", number_json(i.limit)},
                     {"extreme", number_json(i.extreme.value)},
                     {"t0", i.extreme.t0.to_string()},
                     {"t", i.extreme.t.to_string()},
                     {"slack", number_json(i.slack)}});
  }
  return json{{"passed", audit.passed()}, {"min_slack", number_json(audit.min_slack())},
              {"inequalities", std::move(items)}, {"graph_violations", audit.graph_violations}};
}

json to_json(const HybridSignal& signal) {
  json events = json::array();
  for (const Event& e : signal.events())
    events.push_back({{"t", e.time.to_string()},
                      {"kind", e.kind == EventKind::mode_switch ? "switch" : "self_impulse"},
                      {"mode", e.mode + 1}});
  return json{{"initial_mode", signal.initial_mode() + 1}, {"horizon", signal.horizon().to_string()},
              {"events", std::move(events)}};
}

void write_json(const std::filesystem::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

void write_combined_bound_csv(const std::filesystem::path& path, const CombinedBound& bound,
                              std::span<const double> s_values) {
  auto out = open_out(path);
  out << "s,beta";
  for (std::size_t k = 0; k < bound.envelopes().size(); ++k) out << ",beta_" << k + 1;
  out << "\n";
  for (double s : s_values) {
    out << csv_number(s) << "," << csv_number(bound.value(1.0, s));
    for (const Envelope& e : bound.envelopes()) out << "," << csv_number(e.k * std::exp(-e.lambda * s));
    out << "\n";
  }
}

void write_trajectory_csv(const std::filesystem::path& path, const HybridTrajectory& trajectory,
                          const CombinedBound& bound) {
  auto out = open_out(path);
  const auto n = trajectory.x0.size();
  out << "t";
  for (Eigen::Index k = 0; k < n; ++k) out << ",x_" << k + 1;
  out << ",mode,n_nu,n_mu,bound_value\n";
  const double r0 = trajectory.x0.norm();
  const double t0 = trajectory.t0.units();
  for (const auto& s : trajectory.samples) {
    out << csv_number(s.t);
    for (Eigen::Index k = 0; k < n; ++k) out << "," << csv_number(s.x(k));
    out << "," << s.mode + 1 << "," << s.switches << "," << s.impulses << ","
        << csv_number(bound.value(r0, s.t - t0 + static_cast<double>(s.events()))) << "\n";
  }
}

}  // namespace sgues
