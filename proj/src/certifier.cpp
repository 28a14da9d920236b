#include "sgues/certifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "sgues/errors.hpp"
#include "sgues/parallel.hpp"

namespace sgues {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string mode_label(Mode m) { return "mode " + std::to_string(m + 1); }

std::optional<ImpulseAdt> impulse_of(const ConstraintProfile& profile, Mode m) {
  return m < profile.impulse.size() ? profile.impulse[m] : std::nullopt;
}

double t_j_of(const ConstraintProfile& profile, Mode m) {
  const auto adt = impulse_of(profile, m);
  return adt ? adt->t_j : kInf;
}

// Quantities shared by every configuration of one (lyap, profile) pair.
struct Context {
  std::size_t modes = 0;
  std::vector<double> lambda_bar;
  std::vector<double> log_self;  // ln r_bar(i,i); exactly 0 for neutral modes
  std::vector<double> t_j;
  std::vector<double> n0;        // 0 when no impulse pair is declared
  std::vector<ActivationGroup> groups;
  double k_ratio = 1.0;          // max K_upper / min K_lower
  int exponent = 2;
};

Context make_context(const LyapunovData& lyap, const ConstraintProfile& profile) {
  Context ctx;
  ctx.modes = lyap.mode_count();
  ctx.exponent = lyap.exponent;
  ctx.lambda_bar = lyap.lambda_bar;
  ctx.groups = profile.groups;
  for (Mode i = 0; i < ctx.modes; ++i) {
    const double r = lyap.self_gain(i);
    ctx.log_self.push_back(r == 1.0 ? 0.0 : std::log(r));
    ctx.t_j.push_back(t_j_of(profile, i));
    const auto adt = impulse_of(profile, i);
    ctx.n0.push_back(adt ? adt->n0 : 0.0);
  }
  const double kmax = *std::max_element(lyap.k_upper.begin(), lyap.k_upper.end());
  const double kmin = *std::min_element(lyap.k_lower.begin(), lyap.k_lower.end());
  ctx.k_ratio = kmax / kmin;
  return ctx;
}

void require_groups(const LyapunovData& lyap, const ConstraintProfile& profile) {
  if (profile.groups.empty()) throw CertificationError("missing constraint data: no activation groups declared");
  std::vector<int> seen(lyap.mode_count(), 0);
  for (const auto& g : profile.groups) {
    if (g.modes.empty()) throw CertificationError("missing constraint data: empty activation group");
    for (Mode m : g.modes) {
      if (m >= seen.size()) throw CertificationError("activation group references an unknown mode");
      ++seen[m];
    }
  }
  for (Mode m = 0; m < seen.size(); ++m)
    if (seen[m] != 1) throw CertificationError("activation groups must partition the modes; " + mode_label(m) + " is not covered exactly once");
  const ModePartition part = mode_partition(lyap, profile);
  for (const auto& g : profile.groups)
    for (Mode m : g.modes) {
      const bool unstable = part.rate_at_one[m] >= 0.0;
      if (unstable != (g.direction == BoundDirection::upper))
        throw CertificationError("activation group direction of " + mode_label(m) +
                                 " disagrees with the sign of lambda_i(1)");
    }
}

void require_impulse_constraints(const LyapunovData& lyap, const ConstraintProfile& profile) {
  for (Mode i = 0; i < lyap.mode_count(); ++i) {
    const double r = lyap.self_gain(i);
    const auto adt = impulse_of(profile, i);
    if (!adt) {
      if (r != 1.0) throw CertificationError("missing constraint data: no impulse dwell-time pair for " + mode_label(i));
      continue;
    }
    const bool upper = adt->direction == BoundDirection::upper;
    if (upper != (r >= 1.0))
      throw CertificationError("impulse bound direction of " + mode_label(i) +
                               " disagrees with its self jump gain (upper iff gain >= 1)");
  }
}

void check_lyap(const LyapunovData& lyap, const WeightedJumpGraph& graph) {
  lyap.check_consistency(graph.graph());
}

double group_max(const ActivationGroup& g, const std::vector<double>& rates) {
  double best = -kInf;
  for (Mode m : g.modes) best = std::max(best, rates[m]);
  return best;
}

void finish(Certificate& cert, const Context& ctx) {
  const double m = static_cast<double>(ctx.exponent);
  cert.c = cert.c0 + cert.c1;
  cert.k = std::exp(cert.c / m) * std::pow(ctx.k_ratio, 1.0 / m);
  cert.lambda = cert.lambda0 / m;
  cert.valid = cert.lambda0 > 0.0;
}

Certificate assemble_main(const Context& ctx, const ConstraintProfile& profile, const CertConfig& config,
                          double log_r, double log_hat) {
  Certificate cert;
  cert.theorem = Theorem::main;
  cert.config = config;
  cert.exponent = ctx.exponent;
  cert.log_r_l = log_r;
  cert.log_hat_r = log_hat;
  cert.switching = switching_rates(log_r, config.length, profile, config.c_s);
  cert.mode_lambda.resize(ctx.modes);
  cert.mode_r.resize(ctx.modes);
  for (Mode i = 0; i < ctx.modes; ++i) {
    const double ci = config.c[i];
    cert.mode_lambda[i] = ctx.log_self[i] == 0.0 ? ctx.lambda_bar[i]
                          : std::isinf(ctx.t_j[i]) ? ctx.lambda_bar[i]
                                                   : ctx.lambda_bar[i] + ci * ctx.log_self[i] / ctx.t_j[i];
    cert.mode_r[i] = (1.0 - ci) * ctx.log_self[i];
  }
  double c1_impulse = 0.0;
  for (Mode i = 0; i < ctx.modes; ++i) {
    if (ctx.log_self[i] == 0.0) continue;
    cert.r_j = cert.r_j ? std::max(*cert.r_j, cert.mode_r[i]) : cert.mode_r[i];
    c1_impulse += config.c[i] * ctx.n0[i] * ctx.log_self[i];
  }
  for (const auto& g : ctx.groups) {
    const double mx = group_max(g, cert.mode_lambda);
    cert.lambda_j += g.n_a * mx;
    cert.c0 += g.t_a * mx;
  }
  const double l = static_cast<double>(config.length);
  cert.c1 = c1_impulse + cert.switching.n_s * log_r / l + log_hat;
  double worst = std::max(cert.lambda_j + cert.switching.lambda_s, cert.switching.r_s);
  if (cert.r_j) worst = std::max(worst, *cert.r_j);
  cert.lambda0 = -worst;

  cert.hypotheses_met = true;
  for (Mode i = 0; i < ctx.modes; ++i)
    if (ctx.log_self[i] != 0.0 && !(cert.mode_r[i] < 0.0)) {
      cert.hypotheses_met = false;
      cert.diagnostics.push_back("r_i(c_i) >= 0 for " + mode_label(i));
    }
  if (!(cert.switching.r_s < 0.0)) {
    cert.hypotheses_met = false;
    cert.diagnostics.push_back("r_s >= 0: theorem hypothesis fails; only the pairwise (t0, t) condition can certify");
  }
  finish(cert, ctx);
  return cert;
}

Certificate assemble_no_self(const Context& ctx, const ConstraintProfile& profile, const CertConfig& config,
                             double log_r, double log_hat) {
  Certificate cert;
  cert.theorem = Theorem::no_self_impulses;
  cert.config = config;
  cert.exponent = ctx.exponent;
  cert.log_r_l = log_r;
  cert.log_hat_r = log_hat;
  cert.switching = switching_rates(log_r, config.length, profile, config.c_s);
  cert.mode_lambda = ctx.lambda_bar;
  cert.mode_r.assign(ctx.modes, 0.0);
  for (const auto& g : ctx.groups) {
    const double mx = group_max(g, ctx.lambda_bar);
    cert.lambda_j += g.n_a * mx;
    cert.c0 += g.t_a * mx;
  }
  const double l = static_cast<double>(config.length);
  cert.c1 = cert.switching.n_s * log_r / l + log_hat;
  cert.lambda0 = -std::max(cert.lambda_j + cert.switching.lambda_s, cert.switching.r_s);
  cert.hypotheses_met = true;
  finish(cert, ctx);
  return cert;
}

void check_config(const CertConfig& config, std::size_t modes, Theorem theorem) {
  if (config.length == 0) throw std::invalid_argument("L must be positive");
  if (!(config.c_s >= 0.0) || !std::isfinite(config.c_s)) throw std::invalid_argument("c_s must be a finite nonnegative number");
  if (theorem == Theorem::no_self_impulses) {
    if (!(config.c_s < 1.0)) throw std::invalid_argument("c_s must lie in [0, 1) without self impulses");
    return;
  }
  if (config.c.size() != modes) throw std::invalid_argument("one coefficient c_i per mode is required");
  for (double ci : config.c)
    if (!(ci >= 0.0) || !std::isfinite(ci)) throw std::invalid_argument("coefficients c_i must be finite and nonnegative");
}

std::pair<double, double> walk_weights(const WeightedJumpGraph& graph, std::size_t length) {
  const auto log_r = combined_log_weight(graph, length);
  if (!log_r) throw CertificationError("no-walk: the jump graph admits no walk of length " + std::to_string(length));
  return {*log_r, hat_combined_log_weight(graph, length)};
}

void require_no_self(const LyapunovData& lyap, const ConstraintProfile& profile) {
  if (!profile.self_impulses) return;
  for (Mode i = 0; i < lyap.mode_count(); ++i)
    if (lyap.self_gain(i) != 1.0)
      throw CertificationError("system has nonidentity self jumps (" + mode_label(i) + ") while self impulses are allowed");
  throw CertificationError("self impulses are declared; the no-self-impulse theorem needs self_impulses = false");
}

bool branch_available(double log_r, const ConstraintProfile& profile) {
  return log_r >= 0.0 ? profile.switching.upper.has_value() : profile.switching.lower.has_value();
}

}  // namespace

ModePartition mode_partition(const LyapunovData& lyap, const ConstraintProfile& profile) {
  ModePartition out;
  for (Mode i = 0; i < lyap.mode_count(); ++i) {
    const double r = lyap.self_gain(i);
    const auto adt = impulse_of(profile, i);
    if (!adt && r != 1.0 && profile.self_impulses)
      throw CertificationError("missing constraint data: T_J unknown for " + mode_label(i));
    const double tj = adt ? adt->t_j : kInf;
    const double rate = mode_flow_rate(lyap.lambda_bar[i], r, tj, 1.0);
    out.rate_at_one.push_back(rate);
    (rate >= 0.0 ? out.unstable : out.stable).push_back(i);
  }
  return out;
}

double mode_flow_rate(double lambda_bar, double r_self, double t_j, double c) {
  if (r_self == 1.0 || std::isinf(t_j)) return lambda_bar;
  return lambda_bar + c * std::log(r_self) / t_j;
}

double mode_jump_rate(double r_self, double c) {
  if (r_self == 1.0) return 0.0;
  return (1.0 - c) * std::log(r_self);
}

std::optional<OpenInterval> admissible_c_interval(double lambda_bar, double r_self, double t_j,
                                                  StabilityTarget target) {
  if (!(r_self > 0.0) || !(t_j > 0.0)) throw std::invalid_argument("self gain and T_J must be positive");
  const double at_one = mode_flow_rate(lambda_bar, r_self, t_j, 1.0);
  const bool stable = target == StabilityTarget::stable;
  if (stable != (at_one < 0.0)) throw std::invalid_argument("target disagrees with the sign of lambda_i(1)");
  if (r_self == 1.0) return std::nullopt;
  const double lr = std::log(r_self);
  if (lr == 0.0) return std::nullopt;
  // -lambda_bar T_J / ln r with s / inf = 0 conventions.
  const double pivot = std::isinf(t_j) ? (lambda_bar == 0.0 ? 0.0 : kInf) : -lambda_bar * t_j / lr;
  if (lr < 0.0) {
    if (!stable) return OpenInterval{0.0, 1.0};
    return lambda_bar <= 0.0 ? OpenInterval{0.0, 1.0} : OpenInterval{pivot, 1.0};
  }
  if (!stable) return OpenInterval{1.0, kInf};
  return OpenInterval{1.0, pivot};
}

SwitchingRates switching_rates(double log_r, std::size_t length, const ConstraintProfile& profile, double c_s) {
  if (length == 0) throw std::invalid_argument("L must be positive");
  SwitchingRates out;
  const double l = static_cast<double>(length);
  if (log_r >= 0.0) {
    if (!profile.switching.upper) throw CertificationError("missing constraint data: R(L) >= 1 needs the upper switching pair");
    out.branch = BoundDirection::upper;
    out.t_s = profile.switching.upper->period;
    out.n_s = c_s * profile.switching.upper->n0;
  } else {
    if (!profile.switching.lower) throw CertificationError("missing constraint data: R(L) < 1 needs the lower switching pair");
    out.branch = BoundDirection::lower;
    out.t_s = profile.switching.lower->period;
    out.n_s = c_s * profile.switching.lower->n0 - l;
  }
  out.lambda_s = std::isinf(out.t_s) ? 0.0 : c_s * log_r / (out.t_s * l);
  out.r_s = (1.0 - c_s) * log_r / l;
  return out;
}

Certificate certify_main(const LyapunovData& lyap, const WeightedJumpGraph& graph, const ConstraintProfile& profile,
                         const CertConfig& config) {
  check_lyap(lyap, graph);
  check_config(config, lyap.mode_count(), Theorem::main);
  require_impulse_constraints(lyap, profile);
  require_groups(lyap, profile);
  const Context ctx = make_context(lyap, profile);
  if (profile.self_impulses && std::all_of(ctx.log_self.begin(), ctx.log_self.end(), [](double v) { return v == 0.0; }))
    throw CertificationError("every self gain is neutral so r_J is undefined; declare self_impulses = false");
  const auto [log_r, log_hat] = walk_weights(graph, config.length);
  return assemble_main(ctx, profile, config, log_r, log_hat);
}

Certificate certify_no_self_impulses(const LyapunovData& lyap, const WeightedJumpGraph& graph,
                                     const ConstraintProfile& profile, const CertConfig& config) {
  check_lyap(lyap, graph);
  check_config(config, lyap.mode_count(), Theorem::no_self_impulses);
  require_no_self(lyap, profile);
  require_groups(lyap, profile);
  const Context ctx = make_context(lyap, profile);
  const auto [log_r, log_hat] = walk_weights(graph, config.length);
  return assemble_no_self(ctx, profile, config, log_r, log_hat);
}

Certificate certify(const LyapunovData& lyap, const WeightedJumpGraph& graph, const ConstraintProfile& profile,
                    const CertConfig& config) {
  return profile.self_impulses ? certify_main(lyap, graph, profile, config)
                               : certify_no_self_impulses(lyap, graph, profile, config);
}

namespace {

IncrementCheck bound_increment(const Staircase& f, const HybridSignal& signal, double limit, double tolerance) {
  IncrementCheck out;
  out.worst = max_increment(f, signal);
  out.worst_slack = limit - out.worst.value;
  out.holds = out.worst_slack >= -tolerance * std::max(1.0, std::abs(limit));
  return out;
}

}  // namespace

IncrementCheck check_h3(const Certificate& cert, const HybridSignal& signal, double c0, double lambda0,
                        double tolerance) {
  Staircase f;
  const std::size_t modes = cert.mode_lambda.size();
  f.mode_slope.resize(modes);
  f.impulse_jump.resize(modes);
  for (Mode i = 0; i < modes; ++i) {
    f.mode_slope[i] = cert.switching.lambda_s + cert.mode_lambda[i] + lambda0;
    f.impulse_jump[i] = cert.mode_r[i] + lambda0;
  }
  f.switch_jump = cert.switching.r_s + lambda0;
  return bound_increment(f, signal, c0, tolerance);
}

IncrementCheck check_comparison_condition(const LyapunovData& lyap, const HybridSignal& signal, double c,
                                          double lambda0, double tolerance) {
  Staircase f;
  const std::size_t modes = lyap.mode_count();
  f.mode_slope.resize(modes);
  f.impulse_jump.resize(modes);
  f.edge_jump = Matrix::Zero(static_cast<Eigen::Index>(modes), static_cast<Eigen::Index>(modes));
  for (Mode i = 0; i < modes; ++i) {
    f.mode_slope[i] = lyap.lambda_bar[i] + lambda0;
    f.impulse_jump[i] = std::log(lyap.self_gain(i)) + lambda0;
    for (Mode j = 0; j < modes; ++j)
      if (i != j && lyap.has_gain(i, j))
        f.edge_jump(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::log(lyap.gain(i, j)) + lambda0;
  }
  return bound_increment(f, signal, c, tolerance);
}

CombinedBound::CombinedBound(std::vector<Envelope> envelopes) : envelopes_(std::move(envelopes)) {
  if (envelopes_.empty()) throw std::invalid_argument("combined bound needs at least one certificate");
}

double CombinedBound::log_value(double r, double s) const {
  double best = kInf;
  for (const auto& e : envelopes_) best = std::min(best, std::log(e.k) - e.lambda * s);
  return best + std::log(r);
}

double CombinedBound::value(double r, double s) const { return std::exp(log_value(r, s)); }

std::size_t CombinedBound::active_index(double s) const {
  std::size_t idx = 0;
  double best = kInf;
  for (std::size_t k = 0; k < envelopes_.size(); ++k) {
    const double v = std::log(envelopes_[k].k) - envelopes_[k].lambda * s;
    if (v < best) {
      best = v;
      idx = k;
    }
  }
  return idx;
}

bool CombinedBound::decaying() const {
  return std::any_of(envelopes_.begin(), envelopes_.end(), [](const Envelope& e) { return e.lambda > 0.0; });
}

double CombinedBound::monotone_value(double r, double s) const {
  if (!decaying()) return kInf;
  // The pointwise min is piecewise exponential; its sup on [s, inf) sits at s or at a crossover.
  double best = log_value(r, s);
  for (std::size_t a = 0; a < envelopes_.size(); ++a)
    for (std::size_t b = a + 1; b < envelopes_.size(); ++b)
      if (const auto x = crossover(envelopes_[a], envelopes_[b]); x && *x > s) best = std::max(best, log_value(r, *x));
  return std::exp(best);
}

CombinedBound combined_bound(std::span<const Certificate> certs) {
  std::vector<Envelope> env;
  for (const auto& c : certs) env.push_back({c.k, c.lambda});
  return CombinedBound(std::move(env));
}

std::optional<double> crossover(const Envelope& a, const Envelope& b) {
  if (a.lambda == b.lambda) return std::nullopt;
  return std::log(a.k / b.k) / (a.lambda - b.lambda);
}

double iiss_margin(double k, double lambda) { return lambda / (k * std::exp(lambda)); }

double iiss_margin(const Certificate& cert) {
  if (!cert.valid) throw CertificationError("iISS margin needs a valid certificate");
  return iiss_margin(cert.k, cert.lambda);
}

std::vector<double> default_c_grid(const LyapunovData& lyap, const ConstraintProfile& profile, Mode mode) {
  const double r = lyap.self_gain(mode);
  if (r == 1.0) return {0.0};
  const double tj = t_j_of(profile, mode);
  const double at_one = mode_flow_rate(lyap.lambda_bar[mode], r, tj, 1.0);
  const auto iv = admissible_c_interval(lyap.lambda_bar[mode], r, tj,
                                        at_one < 0.0 ? StabilityTarget::stable : StabilityTarget::unstable);
  if (!iv) return {0.0};
  constexpr int kPoints = 20;
  std::vector<double> out;
  if (std::isinf(iv->hi)) {
    const double lo = std::log(std::max(iv->lo, 1.0) + 1e-3);
    const double hi = std::log(1e3);
    for (int k = 0; k < kPoints; ++k) out.push_back(std::exp(lo + (hi - lo) * k / (kPoints - 1)));
  } else if (iv->lo > 0.0) {
    const double lo = std::log(iv->lo);
    const double hi = std::log(iv->hi);
    for (int k = 1; k <= kPoints; ++k) out.push_back(std::exp(lo + (hi - lo) * k / (kPoints + 1)));
  } else {
    const double hi = std::log(iv->hi);
    const double lo = hi + std::log(1e-3);
    for (int k = 0; k < kPoints; ++k) out.push_back(std::exp(lo + (hi - lo) * k / kPoints));
  }
  return out;
}

std::vector<double> default_c_s_grid(Theorem theorem, double log_r_l) {
  std::vector<double> out;
  for (int k = 0; k < 20; ++k) out.push_back(k / 20.0);
  // With R(L) >= 1 the jump-count rate is negative only for c_s > 1.
  if (theorem == Theorem::main && log_r_l > 0.0)
    for (int k = 21; k <= 60; ++k) out.push_back(k / 20.0);
  return out;
}

namespace {

bool better(const Certificate& a, const Certificate& b, SweepObjective objective) {
  if (objective == SweepObjective::max_lambda) return a.lambda > b.lambda;
  if (a.valid != b.valid) return a.valid;
  if (a.valid) return a.k < b.k;
  return a.lambda0 > b.lambda0;
}

std::vector<double> merged(std::vector<double> base, const std::vector<double>& extra) {
  base.insert(base.end(), extra.begin(), extra.end());
  std::sort(base.begin(), base.end());
  base.erase(std::unique(base.begin(), base.end()), base.end());
  return base;
}

// Golden-section maximisation of a concave function on [lo, hi].
template <typename F>
double golden_max(F f, double lo, double hi, int iterations = 80) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int k = 0; k < iterations; ++k) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

SweepResult sweep(const LyapunovData& lyap, const WeightedJumpGraph& graph, const ConstraintProfile& profile,
                  const SweepGrid& grid, SweepObjective objective) {
  if (grid.lengths.empty()) throw std::invalid_argument("sweep needs at least one length");
  check_lyap(lyap, graph);
  const Theorem theorem = profile.self_impulses ? Theorem::main : Theorem::no_self_impulses;
  if (theorem == Theorem::main) require_impulse_constraints(lyap, profile);
  else require_no_self(lyap, profile);
  require_groups(lyap, profile);
  const Context ctx = make_context(lyap, profile);
  const std::size_t modes = ctx.modes;

  std::vector<std::vector<double>> c_grid(modes);
  for (Mode i = 0; i < modes; ++i) {
    if (theorem == Theorem::no_self_impulses) {
      c_grid[i] = {0.0};
    } else if (i < grid.c_values.size() && !grid.c_values[i].empty()) {
      c_grid[i] = merged(grid.c_values[i], {});
    } else {
      c_grid[i] = merged(default_c_grid(lyap, profile, i), i < grid.extra_c.size() ? grid.extra_c[i] : std::vector<double>{});
    }
  }

  std::vector<std::size_t> lengths = grid.lengths;
  std::sort(lengths.begin(), lengths.end());
  lengths.erase(std::unique(lengths.begin(), lengths.end()), lengths.end());

  SweepResult result;
  bool have_best = false;
  for (std::size_t length : lengths) {
    if (length == 0) throw std::invalid_argument("L must be positive");
    const auto log_r = combined_log_weight(graph, length);
    if (!log_r || !branch_available(*log_r, profile)) {
      result.skipped_lengths.push_back(length);
      continue;
    }
    const double log_hat = hat_combined_log_weight(graph, length);
    std::vector<double> cs_grid =
        grid.c_s_values.empty() ? merged(default_c_s_grid(theorem, *log_r), grid.extra_c_s) : merged(grid.c_s_values, {});
    if (theorem == Theorem::no_self_impulses)
      cs_grid.erase(std::remove_if(cs_grid.begin(), cs_grid.end(), [](double v) { return !(v >= 0.0 && v < 1.0); }),
                    cs_grid.end());
    cs_grid.erase(std::remove_if(cs_grid.begin(), cs_grid.end(), [](double v) { return !(v >= 0.0); }), cs_grid.end());

    std::size_t per_cs = 1;
    for (const auto& g : c_grid) per_cs *= g.size();
    const std::size_t total = per_cs * cs_grid.size();
    if (total > grid.max_points) throw std::invalid_argument("sweep grid exceeds the point budget");

    auto config_at = [&](std::size_t index) {
      CertConfig cfg;
      cfg.length = length;
      cfg.c_s = cs_grid[index / per_cs];
      cfg.c.resize(modes);
      std::size_t rem = index % per_cs;
      for (Mode i = modes; i-- > 0;) {
        cfg.c[i] = c_grid[i][rem % c_grid[i].size()];
        rem /= c_grid[i].size();
      }
      return cfg;
    };
    auto evaluate = [&](const CertConfig& cfg) {
      return theorem == Theorem::main ? assemble_main(ctx, profile, cfg, *log_r, log_hat)
                                      : assemble_no_self(ctx, profile, cfg, *log_r, log_hat);
    };

    constexpr std::size_t kChunk = 4096;
    const std::size_t chunks = (total + kChunk - 1) / kChunk;
    std::vector<std::optional<Certificate>> chunk_best(chunks);
    parallel_for(chunks, [&](std::size_t ch) {
      const std::size_t end = std::min(total, (ch + 1) * kChunk);
      for (std::size_t idx = ch * kChunk; idx < end; ++idx) {
        Certificate cert = evaluate(config_at(idx));
        if (!chunk_best[ch] || better(cert, *chunk_best[ch], objective)) chunk_best[ch] = std::move(cert);
      }
    });
    for (auto& cb : chunk_best)
      if (cb && (!have_best || better(*cb, result.best, objective))) {
        result.best = std::move(*cb);
        have_best = true;
      }
    result.evaluated += total;

    if (grid.refine && objective == SweepObjective::max_lambda && have_best && result.best.config.length == length) {
      CertConfig cfg = result.best.config;
      const bool upper = *log_r >= 0.0;
      double lo = upper && theorem == Theorem::main ? 1.0 : 0.0;
      double hi = theorem == Theorem::no_self_impulses || !upper ? 1.0 - 1e-12 : cs_grid.back();
      lo = std::max(lo, cfg.c_s - 0.05);
      hi = std::min(hi, cfg.c_s + 0.05);
      if (hi > lo) {
        const double cs = golden_max(
            [&](double v) {
              CertConfig t = cfg;
              t.c_s = v;
              return evaluate(t).lambda0;
            },
            lo, hi);
        cfg.c_s = cs;
        Certificate refined = evaluate(cfg);
        ++result.evaluated;
        if (better(refined, result.best, objective)) result.best = std::move(refined);
      }
    }
  }
  if (!have_best) throw CertificationError("no-walk: no requested length admits a walk with the declared switching pair");
  result.found_valid = result.best.valid;
  return result;
}

}  // namespace sgues
