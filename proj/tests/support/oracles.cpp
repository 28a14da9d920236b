#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace oracle {

Counts recount(const HybridSignal& signal, std::size_t modes, Time t0, Time t) {
  Counts c;
  c.impulses_per_mode.assign(modes, 0);
  c.activation_ticks.assign(modes, 0);
  for (const auto& e : signal.events()) {
    if (!(e.time > t0 && e.time <= t)) continue;
    if (e.kind == sgues::EventKind::mode_switch) {
      ++c.switches;
    } else {
      ++c.impulses;
      ++c.impulses_per_mode[e.mode];
    }
  }
  // Segment [a, b) carries mode m; intersect with [t0, t].
  Mode m = signal.initial_mode();
  std::int64_t a = 0;
  auto add = [&](std::int64_t lo, std::int64_t hi, Mode mode) {
    const std::int64_t l = std::max(lo, t0.ticks());
    const std::int64_t h = std::min(hi, t.ticks());
    if (h > l) c.activation_ticks[mode] += h - l;
  };
  for (const auto& e : signal.events()) {
    add(a, e.time.ticks(), m);
    a = e.time.ticks();
    m = e.mode;
  }
  add(a, std::max(signal.horizon().ticks(), t.ticks()), m);
  return c;
}

namespace {

struct Knot {
  std::int64_t ticks;
  std::size_t events_counted;  // events with index < this are included
};

double value_at(const sgues::Staircase& f, const HybridSignal& signal, const Knot& k) {
  const auto& ev = signal.events();
  double v = 0.0;
  Mode m = signal.initial_mode();
  std::int64_t a = 0;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    const std::int64_t b = std::min(ev[i].time.ticks(), k.ticks);
    if (b > a) v += f.mode_slope[m] * static_cast<double>(b - a) / static_cast<double>(Time::kTicksPerUnit);
    if (i >= k.events_counted) return v;
    v += f.jump_of(ev[i], m);
    a = ev[i].time.ticks();
    m = ev[i].mode;
  }
  if (k.ticks > a) v += f.mode_slope[m] * static_cast<double>(k.ticks - a) / static_cast<double>(Time::kTicksPerUnit);
  return v;
}

}  // namespace

double pair_grid_increment(const sgues::Staircase& f, const HybridSignal& signal, bool maximize) {
  std::vector<Knot> knots{{0, 0}};
  const auto& ev = signal.events();
  for (std::size_t i = 0; i < ev.size(); ++i) {
    knots.push_back({ev[i].time.ticks(), i});
    knots.push_back({ev[i].time.ticks(), i + 1});
  }
  knots.push_back({signal.horizon().ticks(), ev.size()});
  std::vector<double> values;
  for (const auto& k : knots) values.push_back(value_at(f, signal, k));
  double best = 0.0;
  for (std::size_t a = 0; a < knots.size(); ++a)
    for (std::size_t b = a; b < knots.size(); ++b) {
      const double d = values[b] - values[a];
      best = maximize ? std::max(best, d) : std::min(best, d);
    }
  return best;
}

Matrix expm_2x2(const Matrix& a, double t) {
  const double s = 0.5 * (a(0, 0) + a(1, 1));
  const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  const double disc = s * s - det;
  const Matrix id = Matrix::Identity(2, 2);
  const Matrix shifted = a - s * id;  // traceless part
  double c0 = 0.0;
  double c1 = 0.0;
  if (std::abs(disc) < 1e-14) {
    c0 = 1.0;
    c1 = t;
  } else if (disc > 0.0) {
    const double q = std::sqrt(disc);
    c0 = std::cosh(q * t);
    c1 = std::sinh(q * t) / q;
  } else {
    const double q = std::sqrt(-disc);
    c0 = std::cos(q * t);
    c1 = std::sin(q * t) / q;
  }
  return std::exp(s * t) * (c0 * id + c1 * shifted);
}

RayleighRange sample_rayleigh(const Matrix& q, const Matrix& p, std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  RayleighRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  Vector x(q.rows());
  for (std::size_t k = 0; k < samples; ++k) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal(gen);
    const double v = x.dot(q * x) / x.dot(p * x);
    r.min = std::min(r.min, v);
    r.max = std::max(r.max, v);
  }
  return r;
}

Vector step_product(const std::vector<Matrix>& maps, const std::vector<Mode>& schedule, const Vector& x0) {
  Vector x = x0;
  for (Mode m : schedule) x = maps[m] * x;
  return x;
}

double enumerate_log_weight(const Matrix& gains, const std::vector<std::vector<bool>>& edges, std::size_t length) {
  const std::size_t n = edges.size();
  double best = -std::numeric_limits<double>::infinity();
  if (length == 0) return 0.0;
  // Odometer over all sequences j_0..j_L.
  std::vector<std::size_t> seq(length + 1, 0);
  for (;;) {
    bool ok = true;
    double prod = 1.0;
    for (std::size_t l = 0; l < length && ok; ++l) {
      ok = edges[seq[l]][seq[l + 1]];
      if (ok) prod *= gains(static_cast<Eigen::Index>(seq[l]), static_cast<Eigen::Index>(seq[l + 1]));
    }
    if (ok) best = std::max(best, std::log(prod));
    std::size_t pos = 0;
    while (pos <= length && ++seq[pos] == n) seq[pos++] = 0;
    if (pos > length) break;
  }
  return best;
}

Matrix lyapunov_2x2(const Matrix& a, const Matrix& q) {
  // Unknowns (p11, p12, p22); equations for entries (1,1), (1,2), (2,2).
  const double a11 = a(0, 0), a12 = a(0, 1), a21 = a(1, 0), a22 = a(1, 1);
  Eigen::Matrix3d m;
  m << 2 * a11, 2 * a21, 0,
       a12, a11 + a22, a21,
       0, 2 * a12, 2 * a22;
  const Eigen::Vector3d rhs(-q(0, 0), -q(0, 1), -q(1, 1));
  const Eigen::Vector3d p = m.fullPivLu().solve(rhs);
  Matrix out(2, 2);
  out << p(0), p(1), p(1), p(2);
  return out;
}

}  // namespace oracle
