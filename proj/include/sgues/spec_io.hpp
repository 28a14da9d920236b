#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sgues/certifier.hpp"
#include "sgues/errors.hpp"
#include "sgues/lyapunov.hpp"
#include "sgues/model.hpp"
#include "sgues/simulator.hpp"

namespace sgues {

// One problem found in a spec document; line is 1-based, 0 when unknown.
struct Diagnostic {
  std::size_t line = 0;
  std::string path;  // JSON pointer
  std::string message;
  Severity severity = Severity::error;
};

std::string format_diagnostic(const std::string& file, const Diagnostic& d);

class SpecError : public InputError {
 public:
  SpecError(std::string file, std::vector<Diagnostic> diagnostics);
  const std::string& file() const { return file_; }
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::string file_;
  std::vector<Diagnostic> diagnostics_;
};

// Line of the first token of every value, keyed by JSON pointer.
class LocationIndex {
 public:
  // Expects text that already parsed as JSON.
  explicit LocationIndex(std::string_view text);
  // Line of the pointer or of its nearest located ancestor.
  std::size_t line_of(std::string pointer) const;

 private:
  std::map<std::string, std::size_t> lines_;
};

struct LyapunovSpec {
  std::optional<ModeClassification> classification;  // auto-classified when absent
  std::map<Mode, Matrix> q;
  std::map<Mode, Matrix> p;
  std::optional<LyapunovData> data;  // user-supplied data skips synthesis
};

enum class BranchChoice { auto_select, upper, lower, both };

struct SimulationSettings {
  std::optional<Vector> x0;  // default: all ones
  InputSignal input;
  BranchChoice branch = BranchChoice::auto_select;
};

struct SystemSpec {
  std::string file;
  SwitchedImpulsiveSystem system;
  ConstraintProfile profile;
  LyapunovSpec lyapunov;
  std::vector<CertConfig> configs;  // optional certify section
  SimulationSettings simulation;
  std::string canonical;  // compact dump of the parsed document, echoed into reports
  std::vector<Diagnostic> warnings;
};

// Parses and validates. Throws SpecError with line-anchored diagnostics.
SystemSpec parse_spec(std::string_view text, const std::string& file = "<memory>");
SystemSpec load_spec(const std::filesystem::path& path);

// Lyapunov data for the spec: the user-supplied section or a fresh synthesis.
LyapunovData resolve_lyapunov(const SystemSpec& spec);

}  // namespace sgues
