#include "sgues/spec_io.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace sgues {

using nlohmann::json;

std::string format_diagnostic(const std::string& file, const Diagnostic& d) {
  std::string out = file;
  if (d.line > 0) out += ":" + std::to_string(d.line);
  out += d.severity == Severity::error ? ": error: " : ": warning: ";
  out += d.message;
  if (!d.path.empty()) out += " [" + d.path + "]";
  return out;
}

namespace {

std::string summarize(const std::string& file, const std::vector<Diagnostic>& ds) {
  std::string out;
  for (const auto& d : ds) {
    if (!out.empty()) out += "\n";
    out += format_diagnostic(file, d);
  }
  return out;
}

// Recursive scan of already-valid JSON text recording the line of each value.
class Scanner {
 public:
  Scanner(std::string_view text, std::map<std::string, std::size_t>& out) : text_(text), out_(out) {}

  void run() {
    skip_ws();
    if (pos_ < text_.size()) value("");
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      if (text_[pos_] == '\n') ++line_;
      ++pos_;
    }
  }

  std::string string_token() {
    std::string s;
    ++pos_;  // opening quote
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
        s += text_[pos_ + 1];
        pos_ += 2;
        continue;
      }
      s += text_[pos_++];
    }
    ++pos_;
    return s;
  }

  static std::string escape(const std::string& key) {
    std::string out;
    for (char c : key) {
      if (c == '~') out += "~0";
      else if (c == '/') out += "~1";
      else out += c;
    }
    return out;
  }

  void value(const std::string& pointer) {
    out_.emplace(pointer, line_);
    const char c = text_[pos_];
    if (c == '{') {
      ++pos_;
      skip_ws();
      while (pos_ < text_.size() && text_[pos_] != '}') {
        const std::string key = string_token();
        skip_ws();
        ++pos_;  // colon
        skip_ws();
        value(pointer + "/" + escape(key));
        skip_ws();
        if (text_[pos_] == ',') {
          ++pos_;
          skip_ws();
        }
      }
      ++pos_;
    } else if (c == '[') {
      ++pos_;
      skip_ws();
      for (std::size_t k = 0; pos_ < text_.size() && text_[pos_] != ']'; ++k) {
        value(pointer + "/" + std::to_string(k));
        skip_ws();
        if (text_[pos_] == ',') {
          ++pos_;
          skip_ws();
        }
      }
      ++pos_;
    } else if (c == '"') {
      string_token();
    } else {
      while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != ',' &&
             text_[pos_] != ']' && text_[pos_] != '}')
        ++pos_;
    }
  }

  std::string_view text_;
  std::map<std::string, std::size_t>& out_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

struct FieldError {
  std::string path;
  std::string message;
};

[[noreturn]] void fail(const std::string& path, const std::string& message) { throw FieldError{path, message}; }

double number(const json& j, const std::string& path, bool allow_inf = false) {
  double v = std::numeric_limits<double>::quiet_NaN();
  if (j.is_number()) {
    v = j.get<double>();
  } else if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf" || s == "+inf" || s == "Infinity") {
      v = std::numeric_limits<double>::infinity();
    } else {
      std::size_t used = 0;
      try {
        v = std::stod(s, &used);
      } catch (const std::exception&) {
        fail(path, "'" + s + "' is not a decimal number");
      }
      if (used != s.size()) fail(path, "'" + s + "' is not a decimal number");
    }
  } else {
    fail(path, "expected a number or decimal string");
  }
  if (std::isinf(v) && !allow_inf) fail(path, "infinite value not allowed here");
  if (std::isnan(v)) fail(path, "value is not a number");
  return v;
}

const json& member(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) fail(path, std::string("missing field '") + key + "'");
  return obj.at(key);
}

std::size_t count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0) fail(path, "expected a nonnegative integer");
  return j.get<std::size_t>();
}

Mode mode_index(const json& j, const std::string& path, std::size_t modes) {
  if (!j.is_number_integer()) fail(path, "mode index must be an integer");
  const auto v = j.get<long long>();
  if (v < 1 || static_cast<std::size_t>(v) > modes)
    fail(path, "mode index " + std::to_string(v) + " outside 1.." + std::to_string(modes));
  return static_cast<Mode>(v - 1);
}

Matrix matrix(const json& j, const std::string& path, std::size_t n) {
  if (n == 1 && (j.is_number() || j.is_string())) return Matrix::Constant(1, 1, number(j, path));
  if (!j.is_array() || j.size() != n) fail(path, "expected " + std::to_string(n) + " rows");
  Matrix m(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::string rp = path + "/" + std::to_string(r);
    if (!j[r].is_array() || j[r].size() != n) fail(rp, "expected " + std::to_string(n) + " columns");
    for (std::size_t c = 0; c < n; ++c) m(r, c) = number(j[r][c], rp + "/" + std::to_string(c));
  }
  return m;
}

Vector vector(const json& j, const std::string& path, std::size_t n) {
  if (!j.is_array() || j.size() != n) fail(path, "expected " + std::to_string(n) + " entries");
  Vector v(n);
  for (std::size_t k = 0; k < n; ++k) v(k) = number(j[k], path + "/" + std::to_string(k));
  return v;
}

BoundDirection direction(const json& j, const std::string& path) {
  const std::string s = j.is_string() ? j.get<std::string>() : "";
  if (s == "upper") return BoundDirection::upper;
  if (s == "lower") return BoundDirection::lower;
  fail(path, "direction must be \"upper\" or \"lower\"");
}

Harmonic harmonic(const json& j, const std::string& path) {
  const std::string s = j.is_string() ? j.get<std::string>() : "";
  if (s == "none") return Harmonic::none;
  if (s == "sin") return Harmonic::sine;
  if (s == "cos") return Harmonic::cosine;
  fail(path, "harmonic must be \"none\", \"sin\" or \"cos\"");
}

double optional_number(const json& obj, const char* key, const std::string& path, double fallback) {
  return obj.contains(key) ? number(obj.at(key), path + "/" + key) : fallback;
}

AbsAffinePerturbation perturbation(const json& j, const std::string& path, std::size_t n) {
  if (!j.is_object()) fail(path, "perturbation must be an object");
  AbsAffinePerturbation p;
  p.state_gain = optional_number(j, "state_gain", path, 0.0);
  if (j.contains("harmonic")) p.harmonic = harmonic(j.at("harmonic"), path + "/harmonic");
  p.input_sq_state_gain = optional_number(j, "input_sq_state_gain", path, 0.0);
  p.input_sq_gain = optional_number(j, "input_sq_gain", path, 0.0);
  p.input_gain = optional_number(j, "input_gain", path, 0.0);
  if (j.contains("direction")) p.direction = vector(j.at("direction"), path + "/direction", n);
  return p;
}

std::vector<Mode> mode_list(const json& j, const std::string& path, std::size_t modes) {
  if (!j.is_array()) fail(path, "expected a list of modes");
  std::vector<Mode> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(mode_index(j[k], path + "/" + std::to_string(k), modes));
  return out;
}

std::map<Mode, Matrix> indexed_matrices(const json& j, const std::string& path, std::size_t modes, std::size_t n) {
  if (!j.is_array()) fail(path, "expected a list of [mode, matrix] pairs");
  std::map<Mode, Matrix> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string p = path + "/" + std::to_string(k);
    if (!j[k].is_array() || j[k].size() != 2) fail(p, "expected [mode, matrix]");
    const Mode m = mode_index(j[k][0], p + "/0", modes);
    if (out.contains(m)) fail(p, "mode " + std::to_string(m + 1) + " listed twice");
    out.emplace(m, matrix(j[k][1], p + "/1", n));
  }
  return out;
}

ConstraintProfile constraints(const json& j, const std::string& path, std::size_t modes) {
  ConstraintProfile profile;
  profile.impulse.assign(modes, std::nullopt);
  if (!j.is_object()) fail(path, "constraints must be an object");
  if (j.contains("self_impulses")) {
    if (!j.at("self_impulses").is_boolean()) fail(path + "/self_impulses", "expected true or false");
    profile.self_impulses = j.at("self_impulses").get<bool>();
  }
  if (j.contains("impulse_adt")) {
    const std::string ip = path + "/impulse_adt";
    const json& list = j.at("impulse_adt");
    if (!list.is_array()) fail(ip, "expected a list");
    for (std::size_t k = 0; k < list.size(); ++k) {
      const std::string p = ip + "/" + std::to_string(k);
      const Mode m = mode_index(member(list[k], "mode", p), p + "/mode", modes);
      if (profile.impulse[m]) fail(p, "mode " + std::to_string(m + 1) + " has two impulse constraints");
      ImpulseAdt adt;
      adt.n0 = number(member(list[k], "N0", p), p + "/N0");
      adt.t_j = number(member(list[k], "T_J", p), p + "/T_J", true);
      adt.direction = direction(member(list[k], "direction", p), p + "/direction");
      profile.impulse[m] = adt;
    }
  }
  if (j.contains("switching_adt")) {
    const std::string sp = path + "/switching_adt";
    const json& s = j.at("switching_adt");
    if (!s.is_object()) fail(sp, "expected an object");
    auto pair = [&](const char* key) -> std::optional<AdtPair> {
      if (!s.contains(key)) return std::nullopt;
      const std::string p = sp + "/" + key;
      return AdtPair{number(member(s.at(key), "N0", p), p + "/N0"), number(member(s.at(key), "T", p), p + "/T", true)};
    };
    profile.switching.upper = pair("upper");
    profile.switching.lower = pair("lower");
  }
  if (j.contains("activation_groups")) {
    const std::string gp = path + "/activation_groups";
    const json& list = j.at("activation_groups");
    if (!list.is_array()) fail(gp, "expected a list");
    for (std::size_t k = 0; k < list.size(); ++k) {
      const std::string p = gp + "/" + std::to_string(k);
      ActivationGroup g;
      g.modes = mode_list(member(list[k], "modes", p), p + "/modes", modes);
      g.n_a = number(member(list[k], "N_a", p), p + "/N_a");
      g.t_a = number(member(list[k], "T_a", p), p + "/T_a");
      g.direction = direction(member(list[k], "direction", p), p + "/direction");
      profile.groups.push_back(std::move(g));
    }
  }
  return profile;
}

LyapunovData user_data(const json& j, const std::string& path, std::size_t modes, std::size_t n) {
  LyapunovData d;
  if (j.contains("exponent")) d.exponent = static_cast<int>(count(j.at("exponent"), path + "/exponent"));
  if (d.exponent < 1) fail(path + "/exponent", "exponent must be positive");
  const Vector lb = vector(member(j, "lambda_bar", path), path + "/lambda_bar", modes);
  d.lambda_bar.assign(lb.data(), lb.data() + modes);
  const json& rb = member(j, "r_bar", path);
  const std::string rp = path + "/r_bar";
  if (!rb.is_array() || rb.size() != modes) fail(rp, "expected an N x N table");
  d.r_bar = Matrix::Constant(modes, modes, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t r = 0; r < modes; ++r) {
    if (!rb[r].is_array() || rb[r].size() != modes) fail(rp + "/" + std::to_string(r), "expected N entries");
    for (std::size_t c = 0; c < modes; ++c)
      if (!rb[r][c].is_null()) d.r_bar(r, c) = number(rb[r][c], rp + "/" + std::to_string(r) + "/" + std::to_string(c));
  }
  if (j.contains("P")) {
    const auto ps = indexed_matrices(j.at("P"), path + "/P", modes, n);
    if (ps.size() != modes) fail(path + "/P", "P must be given for every mode");
    for (const auto& [m, p] : ps) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (p + p.transpose()));
      if (es.info() != Eigen::Success || es.eigenvalues()(0) <= 0.0)
        fail(path + "/P", "P of mode " + std::to_string(m + 1) + " is not positive definite");
      d.p.push_back(p);
      d.k_lower.push_back(es.eigenvalues()(0));
      d.k_upper.push_back(es.eigenvalues()(n - 1));
    }
    d.exponent = 2;
  } else {
    const std::string kp = path + "/k_lower";
    const Vector kl = vector(member(j, "k_lower", path), kp, modes);
    const Vector ku = vector(member(j, "k_upper", path), path + "/k_upper", modes);
    d.k_lower.assign(kl.data(), kl.data() + modes);
    d.k_upper.assign(ku.data(), ku.data() + modes);
  }
  d.q_tilde.assign(modes, Matrix());
  return d;
}

LyapunovSpec lyapunov_section(const json& j, const std::string& path, std::size_t modes, std::size_t n) {
  LyapunovSpec spec;
  if (!j.is_object()) fail(path, "lyapunov must be an object");
  if (j.contains("classification")) {
    const std::string cp = path + "/classification";
    const json& c = j.at("classification");
    ModeClassification cls;
    cls.classes.assign(modes, LyapunovClass::user);
    std::vector<int> seen(modes, 0);
    for (const auto& [key, kind] : {std::pair{"continuous", LyapunovClass::continuous},
                                    std::pair{"discrete", LyapunovClass::discrete}, std::pair{"user", LyapunovClass::user}}) {
      if (!c.contains(key)) continue;
      for (Mode m : mode_list(c.at(key), cp + "/" + key, modes)) {
        cls.classes[m] = kind;
        ++seen[m];
      }
    }
    for (Mode m = 0; m < modes; ++m)
      if (seen[m] != 1) fail(cp, "mode " + std::to_string(m + 1) + " must be classified exactly once");
    spec.classification = std::move(cls);
  }
  if (j.contains("Q")) spec.q = indexed_matrices(j.at("Q"), path + "/Q", modes, n);
  if (j.contains("P")) spec.p = indexed_matrices(j.at("P"), path + "/P", modes, n);
  if (j.contains("data")) spec.data = user_data(j.at("data"), path + "/data", modes, n);
  return spec;
}

std::vector<CertConfig> certify_section(const json& j, const std::string& path, std::size_t modes) {
  std::vector<CertConfig> out;
  const std::string cp = path + "/configs";
  const json& list = member(j, "configs", path);
  if (!list.is_array()) fail(cp, "expected a list");
  for (std::size_t k = 0; k < list.size(); ++k) {
    const std::string p = cp + "/" + std::to_string(k);
    CertConfig c;
    c.length = count(member(list[k], "L", p), p + "/L");
    c.c_s = number(member(list[k], "c_s", p), p + "/c_s");
    if (list[k].contains("c")) {
      const Vector v = vector(list[k].at("c"), p + "/c", modes);
      c.c.assign(v.data(), v.data() + modes);
    }
    out.push_back(std::move(c));
  }
  return out;
}

SimulationSettings simulation_section(const json& j, const std::string& path, std::size_t n) {
  SimulationSettings s;
  if (j.contains("x0")) s.x0 = vector(j.at("x0"), path + "/x0", n);
  if (j.contains("input")) {
    const std::string ip = path + "/input";
    const json& in = j.at("input");
    const std::string kind = in.is_object() && in.contains("kind") && in.at("kind").is_string()
                                 ? in.at("kind").get<std::string>()
                                 : "";
    if (kind == "zero") s.input.kind = InputKind::zero;
    else if (kind == "constant") s.input.kind = InputKind::constant;
    else if (kind == "sinusoid") s.input.kind = InputKind::sinusoid;
    else fail(ip + "/kind", "input kind must be \"zero\", \"constant\" or \"sinusoid\"");
    s.input.amplitude = optional_number(in, "amplitude", ip, 0.0);
    s.input.frequency = optional_number(in, "frequency", ip, 1.0);
    s.input.phase = optional_number(in, "phase", ip, 0.0);
  }
  if (j.contains("branch")) {
    const std::string b = j.at("branch").is_string() ? j.at("branch").get<std::string>() : "";
    if (b == "auto") s.branch = BranchChoice::auto_select;
    else if (b == "upper") s.branch = BranchChoice::upper;
    else if (b == "lower") s.branch = BranchChoice::lower;
    else if (b == "both") s.branch = BranchChoice::both;
    else fail(path + "/branch", "branch must be \"auto\", \"upper\", \"lower\" or \"both\"");
  }
  return s;
}

SystemSpec build(const json& doc, const std::string& file) {
  SystemSpec spec;
  spec.file = file;
  if (!doc.is_object()) fail("", "spec must be a JSON object");
  const std::size_t n = count(member(doc, "dimension", ""), "/dimension");
  if (n == 0) fail("/dimension", "dimension must be positive");
  const json& modes_j = member(doc, "modes", "");
  if (!modes_j.is_array() || modes_j.empty()) fail("/modes", "expected a nonempty list of modes");
  const std::size_t modes = modes_j.size();

  auto& sys = spec.system;
  sys.dimension = n;
  for (std::size_t i = 0; i < modes; ++i) {
    const std::string p = "/modes/" + std::to_string(i);
    FlowMap f;
    if (modes_j[i].is_object()) {
      f.a = matrix(member(modes_j[i], "A", p), p + "/A", n);
      if (modes_j[i].contains("perturbation"))
        f.perturbation = perturbation(modes_j[i].at("perturbation"), p + "/perturbation", n);
    } else {
      f.a = matrix(modes_j[i], p, n);
    }
    sys.flows.push_back(std::move(f));
  }

  std::vector<Edge> edges;
  if (doc.contains("edges")) {
    const json& list = doc.at("edges");
    if (!list.is_array()) fail("/edges", "expected a list of [i, j, J]");
    for (std::size_t k = 0; k < list.size(); ++k) {
      const std::string p = "/edges/" + std::to_string(k);
      if (!list[k].is_array() || list[k].size() != 3) fail(p, "expected [i, j, J]");
      const Edge e{mode_index(list[k][0], p + "/0", modes), mode_index(list[k][1], p + "/1", modes)};
      if (e.from == e.to) fail(p, "edge (" + std::to_string(e.from + 1) + "," + std::to_string(e.to + 1) +
                                       ") is a self loop; use self_jumps");
      if (sys.switch_jumps.contains(e)) fail(p, "duplicate edge");
      sys.switch_jumps.emplace(e, matrix(list[k][2], p + "/2", n));
      edges.push_back(e);
    }
  }
  sys.graph = JumpGraph(modes, edges);

  sys.self_jumps.assign(modes, Matrix::Identity(n, n));
  if (doc.contains("self_jumps"))
    for (auto& [m, j] : indexed_matrices(doc.at("self_jumps"), "/self_jumps", modes, n)) sys.self_jumps[m] = j;

  spec.profile = doc.contains("constraints") ? constraints(doc.at("constraints"), "/constraints", modes)
                                             : ConstraintProfile{std::vector<std::optional<ImpulseAdt>>(modes), {}, {}, true};
  if (doc.contains("lyapunov")) spec.lyapunov = lyapunov_section(doc.at("lyapunov"), "/lyapunov", modes, n);
  if (doc.contains("certify")) spec.configs = certify_section(doc.at("certify"), "/certify", modes);
  if (doc.contains("simulation")) spec.simulation = simulation_section(doc.at("simulation"), "/simulation", n);
  spec.canonical = doc.dump();
  return spec;
}

}  // namespace

SpecError::SpecError(std::string file, std::vector<Diagnostic> diagnostics)
    : InputError(summarize(file, diagnostics)), file_(std::move(file)), diagnostics_(std::move(diagnostics)) {}

LocationIndex::LocationIndex(std::string_view text) { Scanner(text, lines_).run(); }

std::size_t LocationIndex::line_of(std::string pointer) const {
  for (;;) {
    if (auto it = lines_.find(pointer); it != lines_.end()) return it->second;
    if (pointer.empty()) return 0;
    pointer.erase(pointer.rfind('/'));
  }
}

SystemSpec parse_spec(std::string_view text, const std::string& file) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // byte offset -> line
    std::size_t line = 1;
    for (std::size_t k = 0; k < std::min<std::size_t>(e.byte, text.size()); ++k)
      if (text[k] == '\n') ++line;
    throw SpecError(file, {{line, "", std::string("malformed JSON: ") + e.what(), Severity::error}});
  }
  const LocationIndex index(text);
  SystemSpec spec;
  try {
    spec = build(doc, file);
  } catch (const FieldError& e) {
    throw SpecError(file, {{index.line_of(e.path), e.path, e.message, Severity::error}});
  } catch (const std::invalid_argument& e) {
    throw SpecError(file, {{0, "", e.what(), Severity::error}});
  }

  std::vector<Diagnostic> errors;
  for (const Issue& issue : validate_system(spec.system, spec.profile)) {
    Diagnostic d{index.line_of(issue.path), issue.path, issue.message, issue.severity};
    if (issue.severity == Severity::error) errors.push_back(std::move(d));
    else spec.warnings.push_back(std::move(d));
  }
  if (!errors.empty()) throw SpecError(file, std::move(errors));
  return spec;
}

SystemSpec load_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError(path.string(), {{0, "", "cannot open file", Severity::error}});
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_spec(buf.str(), path.string());
}

LyapunovData resolve_lyapunov(const SystemSpec& spec) {
  if (spec.lyapunov.data) {
    LyapunovData d = *spec.lyapunov.data;
    d.check_consistency(spec.system.graph);
    return d;
  }
  const ModeClassification cls = spec.lyapunov.classification ? *spec.lyapunov.classification
                                                              : auto_classify(spec.system, &spec.profile);
  return synthesize(spec.system, cls, spec.lyapunov.q, spec.lyapunov.p);
}

}  // namespace sgues
