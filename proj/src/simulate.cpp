#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unsupported/Eigen/MatrixFunctions>

#include "sgues/errors.hpp"
#include "sgues/simulator.hpp"

namespace sgues {

double InputSignal::at(double t) const {
  switch (kind) {
    case InputKind::zero:
      return 0.0;
    case InputKind::constant:
      return amplitude;
    case InputKind::sinusoid:
      return amplitude * std::sin(frequency * t + phase);
  }
  return 0.0;
}

namespace {

class Integrator {
 public:
  Integrator(const SwitchedImpulsiveSystem& system, const InputSignal& input, double step, HybridTrajectory& out)
      : system_(system), input_(input), step_(step), out_(out) {}

  // Flows from `start` to `end` in `mode`; the last sample carries `end_side`.
  bool flow(Vector& x, Mode mode, double start, double end, SampleSide end_side) {
    const double len = end - start;
    if (len <= 0.0) {
      if (end_side == SampleSide::pre_event) return emit(end, x, mode, end_side);
      return true;
    }
    const FlowMap& f = system_.flows[mode];
    if (f.is_linear()) {
      const Vector base = x;
      const double guard = 1e-12 * std::max(1.0, std::abs(end));
      for (std::size_t k = 1;; ++k) {
        const double t = start + static_cast<double>(k) * step_;
        if (t >= end - guard) break;
        x = (f.a * (t - start)).exp() * base;
        if (!emit(t, x, mode, SampleSide::flow)) return false;
      }
      x = (f.a * len).exp() * base;
      return emit(end, x, mode, end_side);
    }
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(len / step_ - 1e-9)));
    const double h = len / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double t = start + static_cast<double>(k) * h;
      const Vector k1 = f.eval(t, x, input_.at(t));
      const Vector k2 = f.eval(t + h / 2, x + h / 2 * k1, input_.at(t + h / 2));
      const Vector k3 = f.eval(t + h / 2, x + h / 2 * k2, input_.at(t + h / 2));
      const Vector k4 = f.eval(t + h, x + h * k3, input_.at(t + h));
      x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
      const bool last = k + 1 == n;
      if (!emit(last ? end : t + h, x, mode, last ? end_side : SampleSide::flow)) return false;
    }
    return true;
  }

  bool emit(double t, const Vector& x, Mode mode, SampleSide side) {
    out_.samples.push_back(TrajectorySample{t, x, mode, side, switches, impulses});
    if (!(x.norm() <= kDivergenceNorm)) {
      out_.diverged = true;
      return false;
    }
    return true;
  }

  std::int64_t switches = 0;
  std::int64_t impulses = 0;

 private:
  const SwitchedImpulsiveSystem& system_;
  const InputSignal& input_;
  double step_;
  HybridTrajectory& out_;
};

}  // namespace

HybridTrajectory simulate(const SwitchedImpulsiveSystem& system, const HybridSignal& signal, const Vector& x0,
                          Time t0, double step, const InputSignal& input) {
  if (static_cast<std::size_t>(x0.size()) != system.dimension)
    throw std::invalid_argument("initial state has the wrong dimension");
  if (!(step > 0.0) || !std::isfinite(step)) throw std::invalid_argument("step must be positive and finite");
  if (t0 < Time{} || t0 > signal.horizon()) throw std::invalid_argument("t0 outside [0, horizon]");
  if (signal.initial_mode() >= system.mode_count()) throw std::invalid_argument("signal mode out of range");

  const auto& events = signal.events();
  const std::size_t first = signal.first_event_after(t0);
  Time prev = t0;
  for (std::size_t k = first; k < events.size(); ++k) {
    if (events[k].mode >= system.mode_count()) throw std::invalid_argument("signal mode out of range");
    if (k > first && step > (events[k].time - prev).units() / 4.0)
      throw std::invalid_argument("step exceeds a quarter of the smallest inter-event gap");
    prev = events[k].time;
  }

  HybridTrajectory traj{signal, t0, x0, {}, false};
  Integrator integ(system, input, step, traj);
  Mode mode = signal.mode_at(t0);
  Vector x = x0;
  if (!integ.emit(t0.units(), x, mode, SampleSide::flow)) return traj;

  double at = t0.units();
  for (std::size_t k = first; k < events.size(); ++k) {
    const Event& e = events[k];
    const double te = e.time.units();
    if (!integ.flow(x, mode, at, te, SampleSide::pre_event)) return traj;
    x = system.jump(mode, e.mode) * x;
    if (e.kind == EventKind::mode_switch) ++integ.switches;
    else ++integ.impulses;
    mode = e.mode;
    if (!integ.emit(te, x, mode, SampleSide::post_event)) return traj;
    at = te;
  }
  integ.flow(x, mode, at, signal.horizon().units(), SampleSide::flow);
  return traj;
}

RatioReport verify_bound(const HybridTrajectory& trajectory, const CombinedBound& bound) {
  RatioReport report;
  const double r0 = trajectory.x0.norm();
  if (r0 == 0.0) return report;
  const double t0 = trajectory.t0.units();
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < trajectory.samples.size(); ++k) {
    const auto& s = trajectory.samples[k];
    const double span = (s.t - t0) + static_cast<double>(s.events());
    const double lr = std::log(s.x.norm()) - bound.log_value(r0, span);
    if (lr > worst) {
      worst = lr;
      report.index = k;
    }
  }
  report.max_ratio = std::exp(worst);
  return report;
}

RatioReport verify_bound(const HybridTrajectory& trajectory, const Certificate& cert) {
  return verify_bound(trajectory, CombinedBound({Envelope{cert.k, cert.lambda}}));
}

RatioReport lyapunov_functional_check(const HybridTrajectory& trajectory, const LyapunovData& lyap) {
  if (lyap.p.empty()) throw InputError("functional check needs the quadratic weights P");
  RatioReport report;
  const auto& samples = trajectory.samples;
  if (samples.empty()) return report;
  auto energy = [&](const TrajectorySample& s) { return s.x.dot(lyap.p[s.mode] * s.x); };
  const double w0 = energy(samples.front());
  if (w0 == 0.0) return report;
  const double log_w0 = std::log(w0);
  double budget = 0.0;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (k > 0) {
      const auto& p = samples[k - 1];
      const auto& c = samples[k];
      if (c.side == SampleSide::post_event) budget += std::log(lyap.gain(p.mode, c.mode));
      else budget += lyap.lambda_bar[p.mode] * (c.t - p.t);
    }
    const double lr = std::log(energy(samples[k])) - log_w0 - budget;
    if (lr > worst) {
      worst = lr;
      report.index = k;
    }
  }
  report.max_ratio = std::exp(worst);
  return report;
}

namespace {

double harmonic_value(Harmonic h, double t) {
  switch (h) {
    case Harmonic::none:
      return 0.0;
    case Harmonic::sine:
      return std::sin(t);
    case Harmonic::cosine:
      return std::cos(t);
  }
  return 0.0;
}

double theta(const ThetaCoefficient& c, double n_tilde, double t) {
  return std::max(c.gain * (1.0 + harmonic_value(c.harmonic, t)) - n_tilde, 0.0);
}

double trapezoid(const ThetaCoefficient& c, double n_tilde, double a, double b, double step) {
  if (b <= a) return 0.0;
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a) / step - 1e-9)));
  const double h = (b - a) / static_cast<double>(n);
  double sum = 0.5 * (theta(c, n_tilde, a) + theta(c, n_tilde, b));
  for (std::size_t k = 1; k < n; ++k) sum += theta(c, n_tilde, a + static_cast<double>(k) * h);
  return sum * h;
}

}  // namespace

ThetaDeficit theta_deficit(std::span<const ThetaCoefficient> coefficients, double n_tilde, const HybridSignal& signal,
                           double grid_step) {
  if (!(grid_step > 0.0)) throw std::invalid_argument("grid step must be positive");
  auto coeff = [&](Mode m) -> const ThetaCoefficient& {
    if (m >= coefficients.size()) throw std::invalid_argument("missing theta coefficient for a mode");
    return coefficients[m];
  };
  ThetaDeficit out;
  const double horizon = signal.horizon().units();
  for (const auto& c : coefficients) out.per_mode_integral.push_back(trapezoid(c, n_tilde, 0.0, horizon, grid_step));

  Mode mode = signal.initial_mode();
  double at = 0.0;
  for (const Event& e : signal.events()) {
    const double te = e.time.units();
    out.integral += trapezoid(coeff(mode), n_tilde, at, te, grid_step);
    mode = e.mode;
    out.event_sum += theta(coeff(mode), n_tilde, te);
    at = te;
  }
  out.integral += trapezoid(coeff(mode), n_tilde, at, horizon, grid_step);
  return out;
}

}  // namespace sgues
