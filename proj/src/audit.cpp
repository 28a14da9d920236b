#include <algorithm>
#include <cmath>
#include <limits>

#include "sgues/simulator.hpp"

namespace sgues {

namespace {

double inverse_period(double period) { return std::isinf(period) ? 0.0 : 1.0 / period; }

}  // namespace

std::vector<ProfileBound> profile_bounds(const ConstraintProfile& profile, std::size_t mode_count) {
  std::vector<ProfileBound> out;
  auto switching = [&](const AdtPair& pair, BoundDirection dir, const char* name) {
    ProfileBound b;
    b.name = name;
    b.kind = BoundKind::switching;
    b.f.mode_slope.assign(mode_count, -inverse_period(pair.period));
    b.f.switch_jump = 1.0;
    b.direction = dir;
    b.limit = pair.n0;
    out.push_back(std::move(b));
  };
  if (profile.switching.upper) switching(*profile.switching.upper, BoundDirection::upper, "switching upper");
  if (profile.switching.lower) switching(*profile.switching.lower, BoundDirection::lower, "switching lower");

  if (profile.self_impulses) {
    for (Mode i = 0; i < std::min(mode_count, profile.impulse.size()); ++i) {
      if (!profile.impulse[i]) continue;
      const ImpulseAdt& adt = *profile.impulse[i];
      ProfileBound b;
      b.name = "impulses of mode " + std::to_string(i + 1);
      b.kind = BoundKind::impulse;
      b.subject = i;
      b.f.mode_slope.assign(mode_count, 0.0);
      b.f.mode_slope[i] = -inverse_period(adt.t_j);
      b.f.impulse_jump.assign(mode_count, 0.0);
      b.f.impulse_jump[i] = 1.0;
      b.direction = adt.direction;
      b.limit = adt.n0;
      out.push_back(std::move(b));
    }
  } else {
    ProfileBound b;
    b.name = "no self impulses";
    b.kind = BoundKind::no_self_impulse;
    b.f.mode_slope.assign(mode_count, 0.0);
    b.f.impulse_jump.assign(mode_count, 1.0);
    b.direction = BoundDirection::upper;
    b.limit = 0.0;
    out.push_back(std::move(b));
  }

  for (std::size_t g = 0; g < profile.groups.size(); ++g) {
    const ActivationGroup& grp = profile.groups[g];
    ProfileBound b;
    b.name = "activation of group " + std::to_string(g + 1);
    b.kind = BoundKind::activation;
    b.subject = g;
    b.f.mode_slope.assign(mode_count, -grp.n_a);
    for (Mode m : grp.modes)
      if (m < mode_count) b.f.mode_slope[m] += 1.0;
    b.direction = grp.direction;
    b.limit = grp.t_a;
    out.push_back(std::move(b));
  }
  return out;
}

AuditReport audit_signal(const HybridSignal& signal, const ConstraintProfile& profile, std::size_t mode_count) {
  AuditReport report;
  for (const ProfileBound& b : profile_bounds(profile, mode_count)) {
    InequalityAudit item;
    item.name = b.name;
    item.direction = b.direction;
    item.limit = b.limit;
    if (b.direction == BoundDirection::upper) {
      item.extreme = max_increment(b.f, signal);
      item.slack = b.limit - item.extreme.value;
    } else {
      item.extreme = min_increment(b.f, signal);
      item.slack = item.extreme.value - b.limit;
    }
    report.items.push_back(std::move(item));
  }
  return report;
}

AuditReport audit_signal(const HybridSignal& signal, const ConstraintProfile& profile, const JumpGraph& graph) {
  AuditReport report = audit_signal(signal, profile, graph.mode_count());
  report.graph_violations = signal.graph_violations(graph);
  return report;
}

bool AuditReport::passed(double tolerance) const {
  if (!graph_violations.empty()) return false;
  return std::all_of(items.begin(), items.end(), [&](const InequalityAudit& i) { return i.slack >= -tolerance; });
}

double AuditReport::min_slack() const {
  double s = std::numeric_limits<double>::infinity();
  for (const auto& i : items) s = std::min(s, i.slack);
  return s;
}

}  // namespace sgues
