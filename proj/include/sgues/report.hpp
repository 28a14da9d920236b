#pragma once

#include <filesystem>
#include <span>
#include <string>

#include <json.hpp>

#include "sgues/certifier.hpp"
#include "sgues/lyapunov.hpp"
#include "sgues/simulator.hpp"

namespace sgues {

// 17 significant digits: round-trips every double.
std::string csv_number(double v);
// 6 significant digits for human-readable summaries.
std::string summary_number(double v);

nlohmann::json to_json(const LyapunovData& data);
nlohmann::json to_json(const Certificate& cert);
nlohmann::json to_json(const AuditReport& audit);
nlohmann::json to_json(const HybridSignal& signal);
nlohmann::json to_json(const CertConfig& config);
CertConfig config_from_json(const nlohmann::json& j);

// Non-finite numbers are written as the strings "inf", "-inf" and "nan".
nlohmann::json number_json(double v);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

// Columns s, beta, then one column per envelope; r = 1.
void write_combined_bound_csv(const std::filesystem::path& path, const CombinedBound& bound,
                              std::span<const double> s_values);

// Columns t, x_1..x_n, mode (1-based), n_nu, n_mu, bound_value.
void write_trajectory_csv(const std::filesystem::path& path, const HybridTrajectory& trajectory,
                          const CombinedBound& bound);

}  // namespace sgues
