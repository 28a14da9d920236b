#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sgues/errors.hpp"
#include "sgues/jumpgraph.hpp"
#include "sgues/parallel.hpp"
#include "sgues/report.hpp"

namespace sgues::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kRatioTolerance = 1e-6;
constexpr double kVerifyTolerance = 1e-9;

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

// The only file carrying a timestamp.
void write_manifest(const fs::path& out, const std::string& command, const std::vector<std::string>& argv,
                    const fs::path& spec, json resolved) {
  fs::create_directories(out);
  write_json(out / "manifest.json", json{{"tool", kToolVersion},
                                         {"command", command},
                                         {"argv", argv},
                                         {"spec", spec.string()},
                                         {"output_dir", out.string()},
                                         {"resolved", std::move(resolved)},
                                         {"created_utc", utc_timestamp()}});
}

json spec_echo(const SystemSpec& spec) { return json{{"file", spec.file}, {"document", json::parse(spec.canonical)}}; }

void print_warnings(const SystemSpec& spec, std::ostream& err) {
  for (const auto& w : spec.warnings) err << format_diagnostic(spec.file, w) << "\n";
}

bool is_no_walk(const CertificationError& e) { return std::string_view(e.what()).starts_with("no-walk"); }

CombinedBound bound_of(const std::vector<Certificate>& certs) {
  std::vector<Certificate> valid;
  for (const auto& c : certs)
    if (c.valid) valid.push_back(c);
  return combined_bound(valid.empty() ? certs : valid);
}

std::vector<double> bound_grid() {
  std::vector<double> s;
  for (int k = 0; k <= 400; ++k) s.push_back(0.05 * k);
  return s;
}

void print_certificates(const std::vector<Certificate>& certs, std::ostream& out) {
  out << "L  c_s  lambda0  K  lambda  valid\n";
  for (const auto& c : certs)
    out << c.config.length << "  " << summary_number(c.config.c_s) << "  " << summary_number(c.lambda0) << "  "
        << summary_number(c.k) << "  " << summary_number(c.lambda) << "  " << (c.valid ? "yes" : "no") << "\n";
}

// Runs `body`, mapping the error taxonomy onto exit codes.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const SpecError& e) {
    for (const auto& d : e.diagnostics()) err << format_diagnostic(e.file(), d) << "\n";
    return kExitInput;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const CertificationError& e) {
    err << "certification error: " << e.what() << "\n";
    return kExitInput;
  } catch (const GenerationError& e) {
    err << "generation error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << "\n";
    return kExitInput;
  }
}

json resolved_certify(const CertifyOptions& opt) {
  json c = json::object();
  for (const auto& [m, v] : opt.c) c[std::to_string(m + 1)] = v;
  return json{{"L", opt.lengths},
              {"c_s", opt.c_s ? json(*opt.c_s) : json(nullptr)},
              {"c", std::move(c)},
              {"sweep", opt.sweep},
              {"refine", opt.refine},
              {"objective", opt.objective == SweepObjective::max_lambda ? "max_lambda" : "min_k"}};
}

}  // namespace

CertificationRun run_certification(const SystemSpec& spec, const CertifyOptions& opt) {
  CertificationRun run;
  run.lyap = resolve_lyapunov(spec);
  const auto graph = WeightedJumpGraph::from_lyapunov(spec.system.graph, run.lyap);
  const std::size_t modes = spec.system.mode_count();
  const bool main_theorem = spec.profile.self_impulses;

  auto attempt = [&](std::size_t length, auto&& make) {
    try {
      run.certificates.push_back(make());
    } catch (const CertificationError& e) {
      if (!is_no_walk(e)) throw;
      run.skipped.push_back("L = " + std::to_string(length) + ": " + e.what());
    }
  };

  if (opt.sweep) {
    std::vector<std::size_t> lengths = opt.lengths.empty() ? std::vector<std::size_t>{1, 2, 3} : opt.lengths;
    for (std::size_t length : lengths) {
      SweepGrid grid;
      grid.lengths = {length};
      grid.refine = opt.refine;
      if (opt.c_s) grid.c_s_values = {*opt.c_s};
      if (!opt.c.empty()) {
        grid.c_values.assign(modes, {});
        for (const auto& [m, v] : opt.c) grid.c_values.at(m) = {v};
      }
      attempt(length, [&] { return sweep(run.lyap, graph, spec.profile, grid, opt.objective).best; });
    }
  } else {
    std::vector<CertConfig> configs;
    if (opt.lengths.empty() && !spec.configs.empty()) {
      configs = spec.configs;
    } else {
      const std::vector<std::size_t> lengths = opt.lengths.empty() ? std::vector<std::size_t>{1, 2, 3} : opt.lengths;
      CertConfig base = spec.configs.empty() ? CertConfig{} : spec.configs.front();
      for (std::size_t length : lengths) {
        CertConfig c = base;
        c.length = length;
        configs.push_back(std::move(c));
      }
      if (!opt.c_s && spec.configs.empty()) throw InputError("explicit certification needs --cs (or use --sweep)");
    }
    for (auto& c : configs) {
      if (opt.c_s) c.c_s = *opt.c_s;
      if (c.c.size() != modes) c.c.assign(modes, main_theorem ? std::nan("") : 0.0);
      for (const auto& [m, v] : opt.c) {
        if (m >= modes) throw InputError("--ci names mode " + std::to_string(m + 1) + " beyond the mode count");
        c.c[m] = v;
      }
      for (Mode m = 0; m < modes; ++m)
        if (std::isnan(c.c[m])) throw InputError("missing coefficient for mode " + std::to_string(m + 1) + " (--ci)");
      attempt(c.length, [&] { return certify(run.lyap, graph, spec.profile, c); });
    }
  }
  if (run.certificates.empty()) throw CertificationError("no-walk at every requested length");
  return run;
}

ConstraintProfile generation_profile(const ConstraintProfile& profile, const std::vector<Certificate>& certs,
                                     BranchChoice choice) {
  ConstraintProfile out = profile;
  bool upper = true;
  bool lower = true;
  if (choice == BranchChoice::upper) lower = false;
  if (choice == BranchChoice::lower) upper = false;
  if (choice == BranchChoice::auto_select) {
    std::set<BoundDirection> used;
    for (const auto& c : certs)
      if (c.valid) used.insert(c.switching.branch);
    if (!used.empty()) {
      upper = used.contains(BoundDirection::upper);
      lower = used.contains(BoundDirection::lower);
    }
  }
  if (!upper) out.switching.upper.reset();
  if (!lower) out.switching.lower.reset();
  return out;
}

int synth(const SynthOptions& opt, const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    write_manifest(opt.out, "synth", argv, opt.spec, json::object());
    const SystemSpec spec = load_spec(opt.spec);
    print_warnings(spec, err);
    const LyapunovData lyap = resolve_lyapunov(spec);
    json report{{"tool", kToolVersion}, {"spec", spec_echo(spec)}, {"lyapunov", to_json(lyap)},
                {"source", spec.lyapunov.data ? "user" : "synthesized"}};
    int code = kExitValid;
    if (!lyap.p.empty()) {
      const auto check = sample_assumption_check(spec.system, lyap, 2000, 0);
      report["assumption_sampling"] = {{"holds", check.holds},
                                       {"samples", check.samples},
                                       {"worst_flow_excess", number_json(check.worst_flow_excess)},
                                       {"worst_jump_excess", number_json(check.worst_jump_excess)},
                                       {"worst_sandwich_excess", number_json(check.worst_sandwich_excess)},
                                       {"detail", check.detail}};
      if (!check.holds) {
        err << "supplied Lyapunov data fail pointwise sampling: " << check.detail << "\n";
        code = kExitInput;
      }
    }
    write_json(opt.out / "lyapunov_report.json", report);
    out << "lambda_bar:";
    for (double v : lyap.lambda_bar) out << " " << summary_number(v);
    out << "\nr_bar:\n";
    for (Eigen::Index r = 0; r < lyap.r_bar.rows(); ++r) {
      for (Eigen::Index c = 0; c < lyap.r_bar.cols(); ++c) out << " " << summary_number(lyap.r_bar(r, c));
      out << "\n";
    }
    return code;
  });
}

int certify(const CertifyOptions& opt, const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    write_manifest(opt.out, "certify", argv, opt.spec, resolved_certify(opt));
    const SystemSpec spec = load_spec(opt.spec);
    print_warnings(spec, err);
    const CertificationRun run = run_certification(spec, opt);
    const CombinedBound bound = bound_of(run.certificates);
    const bool any_valid = std::any_of(run.certificates.begin(), run.certificates.end(),
                                       [](const Certificate& c) { return c.valid; });
    json certs = json::array();
    for (const auto& c : run.certificates) {
      json j = to_json(c);
      if (c.valid) j["iiss_margin"] = number_json(iiss_margin(c));
      certs.push_back(std::move(j));
    }
    json envelopes = json::array();
    for (const auto& e : bound.envelopes()) envelopes.push_back({{"K", number_json(e.k)}, {"lambda", number_json(e.lambda)}});
    write_json(opt.out / "certification_report.json",
               json{{"tool", kToolVersion},
                    {"spec", spec_echo(spec)},
                    {"request", resolved_certify(opt)},
                    {"lyapunov", to_json(run.lyap)},
                    {"certificates", std::move(certs)},
                    {"skipped", run.skipped},
                    {"combined_bound", std::move(envelopes)},
                    {"any_valid", any_valid}});
    const auto grid = bound_grid();
    write_combined_bound_csv(opt.out / "combined_bound.csv", bound, grid);
    print_certificates(run.certificates, out);
    for (const auto& s : run.skipped) out << "skipped " << s << "\n";
    return any_valid ? kExitValid : kExitNotCertified;
  });
}

namespace {

struct SeedOutcome {
  std::uint64_t seed = 0;
  AuditReport audit;
  std::size_t events = 0;
  RatioReport ratio;
  std::optional<RatioReport> functional;
  bool diverged = false;
};

int simulate_with(const SystemSpec& spec, const CertifyOptions& copt, const SimulateOptions& opt, Time horizon,
                  std::ostream& out, std::ostream& err) {
  const CertificationRun run = run_certification(spec, copt);
  const bool any_valid = std::any_of(run.certificates.begin(), run.certificates.end(),
                                     [](const Certificate& c) { return c.valid; });
  const CombinedBound bound = bound_of(run.certificates);
  const BranchChoice choice = opt.branch ? *opt.branch : spec.simulation.branch;
  const ConstraintProfile gen_profile = generation_profile(spec.profile, run.certificates, choice);
  const Vector x0 = spec.simulation.x0 ? *spec.simulation.x0 : Vector::Ones(spec.system.dimension);
  const bool functional = spec.system.is_linear() && !run.lyap.p.empty();

  std::vector<SeedOutcome> outcomes(opt.seeds);
  parallel_for(opt.seeds, [&](std::size_t k) {
    SeedOutcome& o = outcomes[k];
    o.seed = opt.seed_base + k;
    const HybridSignal signal = generate_signal(gen_profile, spec.system.graph, horizon, o.seed, opt.style);
    o.audit = audit_signal(signal, spec.profile, spec.system.graph);
    o.events = signal.events().size();
    const HybridTrajectory traj = simulate(spec.system, signal, x0, Time{}, opt.step, spec.simulation.input);
    o.diverged = traj.diverged;
    o.ratio = verify_bound(traj, bound);
    if (functional) o.functional = lyapunov_functional_check(traj, run.lyap);
    const std::string stem = "seed_" + std::to_string(o.seed);
    write_json(opt.out / ("signal_" + stem + ".json"), to_json(signal));
    if (opt.trajectories) write_trajectory_csv(opt.out / ("traj_" + stem + ".csv"), traj, bound);
  });

  // Audits run against the declared profile; an unused branch may fail there by design.
  double worst_ratio = 0.0;
  double worst_functional = 0.0;
  bool generation_audits_pass = true;
  json seeds = json::array();
  for (const auto& o : outcomes) {
    worst_ratio = std::max(worst_ratio, o.ratio.max_ratio);
    if (o.functional) worst_functional = std::max(worst_functional, o.functional->max_ratio);
    const json audit = to_json(o.audit);
    seeds.push_back({{"seed", o.seed},
                     {"events", o.events},
                     {"audit", audit},
                     {"max_ratio", number_json(o.ratio.max_ratio)},
                     {"functional_ratio", o.functional ? number_json(o.functional->max_ratio) : json(nullptr)},
                     {"diverged", o.diverged}});
  }
  for (const auto& o : outcomes) {
    const AuditReport gen = [&] {
      AuditReport r;
      for (const auto& item : o.audit.items) {
        const bool dropped_upper = item.name == "switching upper" && !gen_profile.switching.upper;
        const bool dropped_lower = item.name == "switching lower" && !gen_profile.switching.lower;
        if (!dropped_upper && !dropped_lower) r.items.push_back(item);
      }
      r.graph_violations = o.audit.graph_violations;
      return r;
    }();
    generation_audits_pass = generation_audits_pass && gen.passed();
  }
  const bool bound_holds = worst_ratio <= 1.0 + kRatioTolerance;
  const bool functional_holds = worst_functional <= 1.0 + kRatioTolerance;
  json certs = json::array();
  for (const auto& c : run.certificates) certs.push_back(to_json(c));
  write_json(opt.out / "run_report.json",
             json{{"tool", kToolVersion},
                  {"spec", spec_echo(spec)},
                  {"certificates", std::move(certs)},
                  {"enforced_switching",
                   {{"upper", gen_profile.switching.upper.has_value()}, {"lower", gen_profile.switching.lower.has_value()}}},
                  {"seeds", std::move(seeds)},
                  {"max_ratio", number_json(worst_ratio)},
                  {"max_functional_ratio", functional ? number_json(worst_functional) : json(nullptr)},
                  {"audits_pass", generation_audits_pass},
                  {"bound_holds", bound_holds}});
  out << "seeds " << opt.seeds << ", max ratio " << summary_number(worst_ratio);
  if (functional) out << ", max functional ratio " << summary_number(worst_functional);
  out << ", audits " << (generation_audits_pass ? "pass" : "FAIL") << "\n";
  if (!generation_audits_pass) err << "a generated signal failed its audit\n";
  if (any_valid && (!bound_holds || !functional_holds)) {
    err << "trajectory exceeds the certified bound\n";
    return kExitNotCertified;
  }
  if (!generation_audits_pass) return kExitNotCertified;
  return any_valid ? kExitValid : kExitNotCertified;
}

}  // namespace

int simulate(const SimulateOptions& opt, const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Time horizon = Time::parse(opt.horizon);
    write_manifest(opt.out, "simulate", argv, opt.spec,
                   json{{"seeds", opt.seeds},
                        {"seed_base", opt.seed_base},
                        {"horizon", horizon.to_string()},
                        {"step", opt.step},
                        {"style", opt.style == SignalStyle::periodic ? "periodic" : "randomized"},
                        {"report", opt.report ? opt.report->string() : ""}});
    const SystemSpec spec = load_spec(opt.spec);
    print_warnings(spec, err);

    CertifyOptions copt;
    copt.spec = opt.spec;
    if (opt.report) {
      std::ifstream in(*opt.report);
      if (!in) throw InputError("cannot open report " + opt.report->string());
      const json rep = json::parse(in);
      std::vector<CertConfig> configs;
      for (const auto& c : rep.at("certificates")) configs.push_back(config_from_json(c.at("config")));
      SystemSpec with = spec;
      with.configs = configs;
      return simulate_with(with, copt, opt, horizon, out, err);
    }
    if (spec.configs.empty()) copt.sweep = true;
    return simulate_with(spec, copt, opt, horizon, out, err);
  });
}

int verify(const VerifyOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const SystemSpec spec = load_spec(opt.spec);
    std::ifstream in(opt.report);
    if (!in) throw InputError("cannot open report " + opt.report.string());
    json rep;
    try {
      rep = json::parse(in);
    } catch (const json::exception& e) {
      throw InputError("report is not valid JSON: " + std::string(e.what()));
    }
    if (!rep.contains("certificates")) throw InputError("report has no certificates");
    const LyapunovData lyap = resolve_lyapunov(spec);
    const auto graph = WeightedJumpGraph::from_lyapunov(spec.system.graph, lyap);
    bool consistent = true;
    bool any_valid = false;
    auto close = [](const json& stored, double fresh) {
      if (!stored.is_number()) return stored.is_string() && stored.get<std::string>() == csv_number(fresh);
      const double s = stored.get<double>();
      return std::abs(s - fresh) <= kVerifyTolerance * std::max(1.0, std::abs(fresh));
    };
    for (const auto& entry : rep.at("certificates")) {
      const Certificate c = certify(lyap, graph, spec.profile, config_from_json(entry.at("config")));
      const bool ok = close(entry.at("K"), c.k) && close(entry.at("lambda"), c.lambda) &&
                      entry.at("valid").get<bool>() == c.valid;
      out << "L = " << c.config.length << ": K " << summary_number(c.k) << ", lambda " << summary_number(c.lambda)
          << ", valid " << (c.valid ? "yes" : "no") << (ok ? "  [matches]" : "  [MISMATCH]") << "\n";
      consistent = consistent && ok;
      any_valid = any_valid || c.valid;
    }
    if (!lyap.p.empty()) {
      const auto check = sample_assumption_check(spec.system, lyap, 2000, 0);
      out << "Lyapunov sampling " << (check.holds ? "holds" : "FAILS") << "\n";
      consistent = consistent && check.holds;
    }
    return consistent && any_valid ? kExitValid : kExitNotCertified;
  });
}

namespace {

std::vector<std::string> args_of(int argc, const char* const* argv) { return {argv, argv + argc}; }

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Strong stability certificates for switched impulsive systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  SynthOptions synth_opt;
  auto* synth_cmd = app.add_subcommand("synth", "Synthesize per-mode Lyapunov data");
  synth_cmd->add_option("spec", synth_opt.spec, "System spec (JSON)")->required()->check(CLI::ExistingFile);
  synth_cmd->add_option("--out", synth_opt.out, "Output directory");

  CertifyOptions cert_opt;
  std::vector<std::string> ci;
  std::string objective = "max_lambda";
  auto* cert_cmd = app.add_subcommand("certify", "Compute stability certificates");
  cert_cmd->add_option("spec", cert_opt.spec, "System spec (JSON)")->required()->check(CLI::ExistingFile);
  cert_cmd->add_option("--L", cert_opt.lengths, "Walk lengths")->delimiter(',');
  cert_cmd->add_option("--cs", cert_opt.c_s, "Switching balance coefficient");
  cert_cmd->add_option("--ci", ci, "Mode coefficient as i=v (1-based), repeatable");
  cert_cmd->add_flag("--sweep", cert_opt.sweep, "Search the coefficient grid");
  cert_cmd->add_flag("--refine", cert_opt.refine, "Polish c_s of the sweep winner");
  cert_cmd->add_option("--objective", objective, "Sweep objective")->check(CLI::IsMember({"max_lambda", "min_k"}));
  cert_cmd->add_option("--out", cert_opt.out, "Output directory");

  SimulateOptions sim_opt;
  std::string style = "periodic";
  std::string branch;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate admissible signals and check the bound");
  sim_cmd->add_option("spec", sim_opt.spec, "System spec (JSON)")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--seeds", sim_opt.seeds, "Number of seeds");
  sim_cmd->add_option("--seed-base", sim_opt.seed_base, "First seed");
  sim_cmd->add_option("--horizon", sim_opt.horizon, "Horizon (decimal)");
  sim_cmd->add_option("--step", sim_opt.step, "Sample step")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--style", style, "Signal style")->check(CLI::IsMember({"periodic", "randomized"}));
  sim_cmd->add_option("--branch", branch, "Switching branches to enforce")
      ->check(CLI::IsMember({"auto", "upper", "lower", "both"}));
  sim_cmd->add_option("--report", sim_opt.report, "Certification report to reuse")->check(CLI::ExistingFile);
  sim_cmd->add_flag("!--no-trajectories", sim_opt.trajectories, "Skip per-seed trajectory CSV");
  sim_cmd->add_option("--out", sim_opt.out, "Output directory");

  VerifyOptions ver_opt;
  auto* ver_cmd = app.add_subcommand("verify", "Recompute a certification report and compare");
  ver_cmd->add_option("spec", ver_opt.spec, "System spec (JSON)")->required()->check(CLI::ExistingFile);
  ver_cmd->add_option("--report", ver_opt.report, "Certification report")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kExitInput;
  }

  const auto args = args_of(argc, argv);
  if (*synth_cmd) return synth(synth_opt, args, out, err);
  if (*cert_cmd) {
    for (const auto& item : ci) {
      const auto eq = item.find('=');
      try {
        if (eq == std::string::npos) throw std::invalid_argument(item);
        const long mode = std::stol(item.substr(0, eq));
        if (mode < 1) throw std::invalid_argument(item);
        cert_opt.c[static_cast<Mode>(mode - 1)] = std::stod(item.substr(eq + 1));
      } catch (const std::exception&) {
        err << "--ci expects i=v, got '" << item << "'\n";
        return kExitInput;
      }
    }
    cert_opt.objective = objective == "min_k" ? SweepObjective::min_k : SweepObjective::max_lambda;
    return certify(cert_opt, args, out, err);
  }
  if (*sim_cmd) {
    sim_opt.style = style == "randomized" ? SignalStyle::randomized : SignalStyle::periodic;
    if (branch == "auto") sim_opt.branch = BranchChoice::auto_select;
    else if (branch == "upper") sim_opt.branch = BranchChoice::upper;
    else if (branch == "lower") sim_opt.branch = BranchChoice::lower;
    else if (branch == "both") sim_opt.branch = BranchChoice::both;
    return simulate(sim_opt, args, out, err);
  }
  return verify(ver_opt, out, err);
}

}  // namespace sgues::cli
