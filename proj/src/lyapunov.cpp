#include "sgues/lyapunov.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "sgues/errors.hpp"
#include "sgues/rng.hpp"

namespace sgues {

namespace {

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) throw std::invalid_argument(std::string(what) + " must be a nonempty square matrix");
}

bool is_symmetric(const Matrix& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

bool is_positive_definite(const Matrix& m) {
  if (!is_symmetric(m)) return false;
  Eigen::LLT<Matrix> llt(0.5 * (m + m.transpose()));
  return llt.info() == Eigen::Success;
}

Eigen::VectorXcd spectrum(const Matrix& m) {
  Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigenvalue iteration did not converge");
  return solver.eigenvalues();
}

// Kronecker product X (x) Y.
Matrix kron(const Matrix& x, const Matrix& y) {
  Matrix out(x.rows() * y.rows(), x.cols() * y.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
  return out;
}

// Solves op(vec P) = -vec Q with one refinement step and symmetrises.
Matrix solve_vectorized(const Matrix& op, const Matrix& q) {
  const Eigen::Index n = q.rows();
  const Vector rhs = -Eigen::Map<const Vector>(q.data(), n * n);
  Eigen::PartialPivLU<Matrix> lu(op);
  Vector x = lu.solve(rhs);
  x += lu.solve(rhs - op * x);
  Matrix p = Eigen::Map<Matrix>(x.data(), n, n);
  return 0.5 * (p + p.transpose());
}

void check_q(const Matrix& q, Eigen::Index n) {
  if (q.rows() != n || q.cols() != n) throw InputError("Q has the wrong shape");
  if (!is_positive_definite(q)) throw InputError("Q must be symmetric positive definite");
}

std::string mode_label(Mode m) { return "mode " + std::to_string(m + 1); }

double max_gain(const Matrix& jump, const Matrix& p_to, const Matrix& p_from) {
  if (jump == Matrix::Identity(jump.rows(), jump.cols()) && p_to == p_from) return 1.0;
  return generalized_eig_extremes(jump.transpose() * p_to * jump, p_from).max;
}

}  // namespace

bool is_hurwitz(const Matrix& a) {
  require_square(a, "flow matrix");
  return spectrum(a).real().maxCoeff() < -kSpectralTolerance;
}

bool is_schur(const Matrix& j) {
  require_square(j, "jump matrix");
  return spectrum(j).cwiseAbs().maxCoeff() < 1.0 - kSpectralTolerance;
}

Matrix solve_continuous_lyapunov(const Matrix& a, const Matrix& q) {
  require_square(a, "flow matrix");
  check_q(q, a.rows());
  if (!is_hurwitz(a)) throw InputError("continuous Lyapunov equation requires a Hurwitz matrix");
  const Matrix at = a.transpose();
  const Matrix eye = Matrix::Identity(a.rows(), a.rows());
  Matrix p = solve_vectorized(kron(eye, at) + kron(at, eye), q);
  if (!is_positive_definite(p)) throw std::runtime_error("continuous Lyapunov solution is not positive definite");
  return p;
}

Matrix solve_discrete_lyapunov(const Matrix& j, const Matrix& q) {
  require_square(j, "jump matrix");
  check_q(q, j.rows());
  if (!is_schur(j)) throw InputError("discrete Lyapunov equation requires a Schur matrix");
  const Matrix jt = j.transpose();
  const Eigen::Index n2 = j.rows() * j.rows();
  Matrix p = solve_vectorized(kron(jt, jt) - Matrix::Identity(n2, n2), q);
  if (!is_positive_definite(p)) throw std::runtime_error("discrete Lyapunov solution is not positive definite");
  return p;
}

PencilExtremes generalized_eig_extremes(const Matrix& q, const Matrix& p) {
  require_square(p, "P");
  if (q.rows() != p.rows() || q.cols() != p.cols()) throw std::invalid_argument("pencil matrices differ in shape");
  if (!is_symmetric(q)) throw std::invalid_argument("Q must be symmetric");
  if (!is_symmetric(p)) throw InputError("P must be symmetric positive definite");
  Eigen::LLT<Matrix> llt(0.5 * (p + p.transpose()));
  if (llt.info() != Eigen::Success) throw InputError("P must be symmetric positive definite");
  // C = L^{-1} Q L^{-T} shares the pencil spectrum.
  const auto lower = llt.matrixL();
  const Matrix y = lower.solve(0.5 * (q + q.transpose()));
  Matrix c = lower.solve(y.transpose());
  c = 0.5 * (c + c.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(c, Eigen::EigenvaluesOnly);
  return {eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff()};
}

bool LyapunovData::has_gain(Mode from, Mode to) const {
  return from < static_cast<Mode>(r_bar.rows()) && to < static_cast<Mode>(r_bar.cols()) &&
         !std::isnan(r_bar(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to)));
}

double LyapunovData::gain(Mode from, Mode to) const {
  if (!has_gain(from, to))
    throw std::out_of_range("no jump gain for (" + std::to_string(from + 1) + "," + std::to_string(to + 1) + ")");
  return r_bar(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to));
}

void LyapunovData::check_consistency(const JumpGraph& graph) const {
  const std::size_t n = mode_count();
  if (exponent < 1) throw InputError("Lyapunov exponent m must be a positive integer");
  if (n != graph.mode_count()) throw InputError("Lyapunov data covers a different number of modes than the graph");
  if (k_lower.size() != n || k_upper.size() != n) throw InputError("sandwich constants missing for some modes");
  if (r_bar.rows() != static_cast<Eigen::Index>(n) || r_bar.cols() != static_cast<Eigen::Index>(n))
    throw InputError("jump gain table has the wrong shape");
  for (Mode i = 0; i < n; ++i) {
    if (!(k_lower[i] > 0.0) || !(k_lower[i] <= k_upper[i]) || !std::isfinite(k_upper[i]))
      throw InputError("sandwich constants of " + mode_label(i) + " must satisfy 0 < K_lower <= K_upper");
    if (!std::isfinite(lambda_bar[i])) throw InputError("flow rate of " + mode_label(i) + " is not finite");
    if (!has_gain(i, i) || !(self_gain(i) > 0.0) || !std::isfinite(self_gain(i)))
      throw InputError("self jump gain of " + mode_label(i) + " must be positive and finite");
  }
  for (const Edge& e : graph.edges())
    if (!has_gain(e.from, e.to) || !(gain(e.from, e.to) > 0.0) || !std::isfinite(gain(e.from, e.to)))
      throw InputError("jump gain for edge (" + std::to_string(e.from + 1) + "," + std::to_string(e.to + 1) +
                       ") must be positive and finite");
}

ModeClassification auto_classify(const SwitchedImpulsiveSystem& system, const ConstraintProfile* profile) {
  ModeClassification out;
  const Matrix eye = Matrix::Identity(static_cast<Eigen::Index>(system.dimension),
                                      static_cast<Eigen::Index>(system.dimension));
  for (Mode i = 0; i < system.mode_count(); ++i) {
    const Matrix& a = system.flows[i].a;
    const Matrix& jself = system.jump(i, i);
    const bool hurwitz = is_hurwitz(a);
    const bool schur = is_schur(jself);
    if (hurwitz && !schur) {
      out.classes.push_back(LyapunovClass::continuous);
    } else if (!hurwitz && schur) {
      out.classes.push_back(LyapunovClass::discrete);
    } else if (!hurwitz) {
      out.classes.push_back(LyapunovClass::user);
    } else {
      const bool has_tj = profile && i < profile->impulse.size() && profile->impulse[i].has_value();
      if (!has_tj) {
        out.classes.push_back(LyapunovClass::discrete);
        continue;
      }
      const double tj = profile->impulse[i]->t_j;
      auto rate_at_one = [&](double lambda_bar, double r_self) {
        return std::isinf(tj) ? lambda_bar : lambda_bar + std::log(r_self) / tj;
      };
      const Matrix pc = solve_continuous_lyapunov(a, eye);
      const double cont = rate_at_one(-generalized_eig_extremes(eye, pc).min, max_gain(jself, pc, pc));
      const Matrix pd = solve_discrete_lyapunov(jself, eye);
      const Matrix qt = -(a.transpose() * pd + pd * a);
      const double disc = rate_at_one(-generalized_eig_extremes(qt, pd).min, 1.0 - generalized_eig_extremes(eye, pd).min);
      out.classes.push_back(disc < cont ? LyapunovClass::discrete : LyapunovClass::continuous);
    }
  }
  return out;
}

LyapunovData synthesize(const SwitchedImpulsiveSystem& system, const ModeClassification& classification,
                        const std::map<Mode, Matrix>& q_choices, const std::map<Mode, Matrix>& p_choices) {
  const std::size_t modes = system.mode_count();
  if (classification.classes.size() != modes) throw InputError("classification must cover every mode exactly once");
  const auto n = static_cast<Eigen::Index>(system.dimension);
  const Matrix eye = Matrix::Identity(n, n);

  LyapunovData out;
  out.exponent = 2;
  out.classification = classification;
  out.p.resize(modes);
  out.q_tilde.resize(modes);
  out.k_lower.resize(modes);
  out.k_upper.resize(modes);
  out.lambda_bar.resize(modes);
  out.r_bar = Matrix::Constant(static_cast<Eigen::Index>(modes), static_cast<Eigen::Index>(modes),
                               std::numeric_limits<double>::quiet_NaN());

  auto q_for = [&](Mode i) -> Matrix {
    const auto it = q_choices.find(i);
    return it == q_choices.end() ? eye : it->second;
  };

  for (Mode i = 0; i < modes; ++i) {
    const Matrix& a = system.flows[i].a;
    const Matrix& jself = system.jump(i, i);
    const auto idx = static_cast<Eigen::Index>(i);
    switch (classification.classes[i]) {
      case LyapunovClass::continuous: {
        if (!is_hurwitz(a)) throw InputError("classification mismatch: " + mode_label(i) + " is continuous-class but its flow matrix is not Hurwitz");
        const Matrix q = q_for(i);
        out.p[i] = solve_continuous_lyapunov(a, q);
        out.lambda_bar[i] = -generalized_eig_extremes(q, out.p[i]).min;
        break;
      }
      case LyapunovClass::discrete: {
        if (!is_schur(jself)) throw InputError("classification mismatch: " + mode_label(i) + " is discrete-class but its self jump is not Schur");
        const Matrix q = q_for(i);
        out.p[i] = solve_discrete_lyapunov(jself, q);
        out.r_bar(idx, idx) = 1.0 - generalized_eig_extremes(q, out.p[i]).min;
        break;
      }
      case LyapunovClass::user: {
        const auto it = p_choices.find(i);
        const Matrix p = it == p_choices.end() ? eye : it->second;
        if (p.rows() != n || p.cols() != n || !is_positive_definite(p))
          throw InputError("user P of " + mode_label(i) + " is not symmetric positive definite");
        out.p[i] = 0.5 * (p + p.transpose());
        break;
      }
    }
    if (classification.classes[i] != LyapunovClass::continuous) {
      out.q_tilde[i] = -(a.transpose() * out.p[i] + out.p[i] * a);
      out.lambda_bar[i] = -generalized_eig_extremes(out.q_tilde[i], out.p[i]).min;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> pe(out.p[i], Eigen::EigenvaluesOnly);
    out.k_lower[i] = pe.eigenvalues().minCoeff();
    out.k_upper[i] = pe.eigenvalues().maxCoeff();
  }

  for (Mode i = 0; i < modes; ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    if (classification.classes[i] != LyapunovClass::discrete) out.r_bar(idx, idx) = max_gain(system.jump(i, i), out.p[i], out.p[i]);
  }
  for (const Edge& e : system.graph.edges())
    out.r_bar(static_cast<Eigen::Index>(e.from), static_cast<Eigen::Index>(e.to)) =
        max_gain(system.jump(e.from, e.to), out.p[e.to], out.p[e.from]);

  for (Eigen::Index i = 0; i < out.r_bar.rows(); ++i)
    for (Eigen::Index j = 0; j < out.r_bar.cols(); ++j)
      if (!std::isnan(out.r_bar(i, j)) && !(out.r_bar(i, j) > 0.0))
        throw InputError("jump map (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                         ") annihilates the state; its gain must be positive");
  return out;
}

AssumptionSampleReport sample_assumption_check(const SwitchedImpulsiveSystem& system, const LyapunovData& data,
                                               std::size_t samples_per_map, std::uint64_t seed, double tolerance) {
  AssumptionSampleReport rep;
  const std::size_t modes = system.mode_count();
  if (data.p.size() != modes) throw InputError("sampling check needs quadratic Lyapunov matrices for every mode");
  if (data.exponent != 2) throw InputError("sampling check supports quadratic data only");
  const auto n = static_cast<Eigen::Index>(system.dimension);
  CounterRng rng(seed, 0x5a17);
  auto draw = [&]() {
    Vector x(n);
    for (Eigen::Index k = 0; k < n; ++k) x(k) = rng.normal();
    const double norm = x.norm();
    return norm > 0 ? Vector(x / norm) : Vector(Vector::Unit(n, 0));
  };
  std::ostringstream detail;
  auto jump_check = [&](Mode from, Mode to) {
    const Matrix& j = system.jump(from, to);
    const double gain = data.gain(from, to);
    for (std::size_t s = 0; s < samples_per_map; ++s) {
      const Vector x = draw();
      const Vector y = j * x;
      const double excess = y.dot(data.p[to] * y) - gain * x.dot(data.p[from] * x);
      rep.worst_jump_excess = std::max(rep.worst_jump_excess, excess);
    }
  };
  for (Mode i = 0; i < modes; ++i) {
    const Matrix& p = data.p[i];
    const Matrix& a = system.flows[i].a;
    for (std::size_t s = 0; s < samples_per_map; ++s) {
      const Vector x = draw();
      const double v = x.dot(p * x);
      rep.worst_flow_excess = std::max(rep.worst_flow_excess, 2.0 * x.dot(p * (a * x)) - data.lambda_bar[i] * v);
      rep.worst_sandwich_excess =
          std::max({rep.worst_sandwich_excess, data.k_lower[i] - v, v - data.k_upper[i]});
      ++rep.samples;
    }
    jump_check(i, i);
  }
  for (const Edge& e : system.graph.edges()) jump_check(e.from, e.to);
  rep.holds = rep.worst_flow_excess <= tolerance && rep.worst_jump_excess <= tolerance &&
              rep.worst_sandwich_excess <= tolerance;
  detail << "flow excess " << rep.worst_flow_excess << ", jump excess " << rep.worst_jump_excess
         << ", sandwich excess " << rep.worst_sandwich_excess;
  rep.detail = detail.str();
  return rep;
}

}  // namespace sgues
