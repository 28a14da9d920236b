#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sgues/certifier.hpp"
#include "sgues/simulator.hpp"
#include "sgues/spec_io.hpp"

namespace sgues::cli {

inline constexpr int kExitValid = 0;
inline constexpr int kExitNotCertified = 1;  // no valid certificate, or a verification failed
inline constexpr int kExitInput = 2;

inline constexpr const char* kToolVersion = "sgues 1.0.0";

struct SynthOptions {
  std::filesystem::path spec;
  std::filesystem::path out = ".";
};

struct CertifyOptions {
  std::filesystem::path spec;
  std::filesystem::path out = ".";
  std::vector<std::size_t> lengths;  // empty: from the spec, else 1, 2, 3
  std::optional<double> c_s;
  std::map<Mode, double> c;  // 0-based keys
  bool sweep = false;
  bool refine = false;
  SweepObjective objective = SweepObjective::max_lambda;
};

struct SimulateOptions {
  std::filesystem::path spec;
  std::filesystem::path out = ".";
  std::optional<std::filesystem::path> report;  // certification report to reuse
  std::size_t seeds = 10;
  std::uint64_t seed_base = 0;
  std::string horizon = "10";
  double step = 1e-3;
  SignalStyle style = SignalStyle::periodic;
  std::optional<BranchChoice> branch;  // overrides the spec
  bool trajectories = true;            // write per-seed CSV
};

struct VerifyOptions {
  std::filesystem::path spec;
  std::filesystem::path report;
};

// Each command writes manifest.json before any other output and returns an exit code.
int synth(const SynthOptions& opt, const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);
int certify(const CertifyOptions& opt, const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);
int simulate(const SimulateOptions& opt, const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);
int verify(const VerifyOptions& opt, std::ostream& out, std::ostream& err);

// Certificates for the given configs; `no-walk` lengths become skipped entries.
struct CertificationRun {
  LyapunovData lyap;
  std::vector<Certificate> certificates;
  std::vector<std::string> skipped;
};
CertificationRun run_certification(const SystemSpec& spec, const CertifyOptions& opt);

// Switching branches each valid certificate relies on; generation enforces only these.
ConstraintProfile generation_profile(const ConstraintProfile& profile, const std::vector<Certificate>& certs,
                                     BranchChoice choice);

// CLI11 front end.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sgues::cli
