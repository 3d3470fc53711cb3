#include "modlab/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"

namespace modlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Power { linear, square, sqrt, general };

Power classify_exponent(double e) {
  if (e == 1.0) return Power::linear;
  if (e == 2.0) return Power::square;
  if (e == 0.5) return Power::sqrt;
  return Power::general;
}

double apply_power(Power kind, double e, double x) {
  switch (kind) {
    case Power::linear: return x;
    case Power::square: return x * x;
    case Power::sqrt: return std::sqrt(x);
    case Power::general: return std::pow(x, e);
  }
  return std::pow(x, e);
}

struct Constraint {
  UsageVector usage;
  std::vector<std::int32_t> object;
  double lambda = 0.0;
  int zero_streak = 0;
  std::uint64_t object_hash = 0;
};

std::uint64_t hash_object(const std::vector<std::int32_t>& ids) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto id : ids) {
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(id));
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Restricted-program state for the dual ascent. The primal is recovered
// cellwise from s = sum_j lambda_j N_j, and the energy identity
// mu rho^p = s rho / p keeps the objective cheap to maintain.
class DualState {
 public:
  DualState(const MeshDomain& dom, double p)
      : dom_(dom),
        p_(p),
        exponent_(1.0 / (p - 1.0)),
        power_(classify_exponent(1.0 / (p - 1.0))),
        s_(dom.cell_count(), 0.0),
        rho_(dom.cell_count(), 0.0) {}

  const Density& rho() const { return rho_; }
  double lambda_sum() const { return lambda_sum_; }

  double energy() const {
    double acc = 0.0;
    for (const auto& con : constraints_)
      if (con.lambda > 0.0) acc += con.lambda * usage_of(con);
    return acc / p_;
  }

  double dual_value() const {
    // g(lambda) = sum lambda - (p-1) * energy, valid for any lambda >= 0.
    // The dual is maximized in closed form along the ray t*lambda, which
    // absorbs any uniform slack of the multipliers:
    //   g(t lambda) = t A - t^(p/(p-1)) (p-1) E,  argmax t* = (A/(pE))^(p-1),
    // giving g(t* lambda) = t* A / p.
    const double a = lambda_sum_;
    const double e = energy();
    if (!(a > 0.0) || !(e > 0.0)) return 0.0;
    const double plain = a - (p_ - 1.0) * e;
    const double t_star = std::pow(a / (p_ * e), p_ - 1.0);
    const double scaled = t_star * a / p_;
    return std::max({0.0, plain, scaled});
  }

  double usage_of(const Constraint& con) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < con.usage.cells.size(); ++i)
      acc += con.usage.weights[i] * rho_[con.usage.cells[i]];
    return acc;
  }

  std::size_t size() const { return constraints_.size(); }
  std::vector<Constraint>& constraints() { return constraints_; }

  /// Adds the family member unless an identical object is already active;
  /// returns whether a new constraint was created.
  bool add(UsageVector usage, std::vector<std::int32_t> object) {
    Constraint con;
    con.object_hash = hash_object(object);
    if (!seen_.insert(con.object_hash).second) return false;
    con.usage = std::move(usage);
    con.object = std::move(object);
    constraints_.push_back(std::move(con));
    update_lambda(constraints_.size() - 1);
    return true;
  }

  /// One round-robin pass; returns the largest relative multiplier change.
  /// Constraints already satisfying their optimality condition are skipped.
  double sweep() {
    double worst = 0.0;
    for (std::size_t j = 0; j < constraints_.size(); ++j) {
      const Constraint& con = constraints_[j];
      const double usage = usage_of(con);
      if (con.lambda == 0.0 && usage >= 1.0) continue;
      if (con.lambda > 0.0 && std::abs(usage - 1.0) <= 1e-12) continue;
      worst = std::max(worst, update_lambda(j));
    }
    return worst;
  }

  /// Runs sweeps until the largest relative multiplier change drops below
  /// the threshold; returns the number of sweeps spent.
  int ascend(double threshold, int max_sweeps) {
    int spent = 0;
    while (spent < max_sweeps) {
      ++spent;
      if (sweep() <= threshold) break;
    }
    return spent;
  }

  /// Signed complementarity residual sum lambda_j (1 - usage_j); the dual
  /// value satisfies g = energy + residual, so a small relative residual
  /// certifies the restricted program to the same relative precision.
  std::pair<double, double> energy_and_residual() const {
    double energy = 0.0, residual = 0.0;
    for (const auto& con : constraints_) {
      if (con.lambda <= 0.0) continue;
      const double usage = usage_of(con);
      energy += con.lambda * usage;
      residual += con.lambda * (1.0 - usage);
    }
    return {energy / p_, residual};
  }

  /// Sweeps until |residual| <= rel_target * energy.
  int ascend_residual(double rel_target, int max_sweeps) {
    int spent = 0;
    while (spent < max_sweeps) {
      ++spent;
      sweep();
      const auto [energy, residual] = energy_and_residual();
      if (std::abs(residual) <= rel_target * std::max(energy, 1e-300)) break;
    }
    return spent;
  }

  /// Drops constraints whose multiplier stayed at zero for the given
  /// number of outer iterations; returns how many were removed.
  std::size_t prune(int streak_limit) {
    std::size_t before = constraints_.size();
    std::erase_if(constraints_, [&](Constraint& con) {
      if (con.lambda > 0.0) {
        con.zero_streak = 0;
        return false;
      }
      if (++con.zero_streak < streak_limit) return false;
      seen_.erase(con.object_hash);
      return true;
    });
    return before - constraints_.size();
  }

 private:
  double primal(std::int32_t c) const {
    const double base = s_[c] / (p_ * dom_.cell_measure(c));
    return apply_power(power_, exponent_, base);
  }

  void shift_lambda(Constraint& con, double next) {
    const double delta = next - con.lambda;
    if (delta == 0.0) return;
    for (std::size_t i = 0; i < con.usage.cells.size(); ++i) {
      const auto c = con.usage.cells[i];
      s_[c] = std::max(0.0, s_[c] + delta * con.usage.weights[i]);
      rho_[c] = primal(c);
    }
    lambda_sum_ += delta;
    con.lambda = next;
  }

  /// Optimal lambda_j with the others held fixed: the unique t >= 0 with
  /// usage_j(rho(t)) = 1, or 0 when the constraint is already slack.
  double update_lambda(std::size_t j) {
    Constraint& con = constraints_[j];
    const auto& cells = con.usage.cells;
    const auto& w = con.usage.weights;
    const auto k = cells.size();

    base_.resize(k);
    scale_.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
      const auto c = cells[i];
      base_[i] = std::max(0.0, s_[c] - con.lambda * w[i]);
      scale_[i] = 1.0 / (p_ * dom_.cell_measure(c));
    }
    auto eval = [&](double t) {
      double acc = 0.0;
      for (std::size_t i = 0; i < k; ++i)
        acc += w[i] * apply_power(power_, exponent_, (base_[i] + t * w[i]) * scale_[i]);
      return acc;
    };

    double target = 0.0;
    if (eval(0.0) >= 1.0) {
      target = 0.0;
    } else if (power_ == Power::linear) {
      // p = 2: usage is affine in t.
      double a = 0.0, b = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        a += w[i] * base_[i] * scale_[i];
        b += w[i] * w[i] * scale_[i];
      }
      target = (1.0 - a) / b;
    } else if (power_ == Power::square) {
      // p = 3/2: usage is quadratic in t.
      double a = 0.0, b = 0.0, c2 = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        const double sb = base_[i] * scale_[i];
        const double sw = w[i] * scale_[i];
        a += w[i] * sb * sb;
        b += 2.0 * w[i] * sb * sw;
        c2 += w[i] * sw * sw;
      }
      const double disc = std::max(0.0, b * b - 4.0 * c2 * (a - 1.0));
      target = (-b + std::sqrt(disc)) / (2.0 * c2);
    } else {
      // Monotone scalar equation; geometric bracketing plus safeguarded
      // Newton on the bracket.
      double lo = 0.0, f_lo = eval(0.0);
      double hi = std::max(con.lambda, 1.0);
      double f_hi = eval(hi);
      int grow = 0;
      while (f_hi < 1.0 && grow++ < 400) {
        lo = hi;
        f_lo = f_hi;
        hi *= 2.0;
        f_hi = eval(hi);
      }
      double t = 0.5 * (lo + hi);
      for (int it = 0; it < 200; ++it) {
        double f = eval(t);
        if (f < 1.0) {
          lo = t;
          f_lo = f;
        } else {
          hi = t;
          f_hi = f;
        }
        if (std::abs(f - 1.0) <= 1e-13) break;
        double deriv = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
          const double x = (base_[i] + t * w[i]) * scale_[i];
          if (x > 0.0)
            deriv += w[i] * w[i] * scale_[i] * exponent_ * std::pow(x, exponent_ - 1.0);
        }
        double next = deriv > 0.0 ? t - (f - 1.0) / deriv : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (hi - lo <= 1e-15 * std::max(1.0, hi)) {
          t = 0.5 * (lo + hi);
          break;
        }
        t = next;
      }
      (void)f_lo;
      (void)f_hi;
      target = t;
    }

    const double old = con.lambda;
    shift_lambda(con, std::max(0.0, target));
    const double denom = std::max({std::abs(old), std::abs(con.lambda), 1e-300});
    return std::abs(con.lambda - old) <= 0.0 ? 0.0
                                             : std::abs(con.lambda - old) / denom;
  }

  const MeshDomain& dom_;
  double p_;
  double exponent_;
  Power power_;
  std::vector<double> s_;
  Density rho_;
  std::vector<Constraint> constraints_;
  std::unordered_set<std::uint64_t> seen_;
  double lambda_sum_ = 0.0;
  std::vector<double> base_;
  std::vector<double> scale_;
};

class ConnectingAdapter final : public FamilyOracle {
 public:
  ConnectingAdapter(const MeshDomain& dom, const FamilySpec& spec) : oracle_(dom, spec) {}
  OracleResult most_violated(const Density& rho) const override {
    return oracle_.most_violated(rho);
  }
  std::vector<OracleResult> most_violated_batch(const Density& rho,
                                                double usage_threshold,
                                                int max_batch) const override {
    return oracle_.most_violated_batch(rho, usage_threshold, max_batch);
  }

 private:
  CurveOracle oracle_;
};

class SeparatingAdapter final : public FamilyOracle {
 public:
  SeparatingAdapter(const MeshDomain& dom, const FamilySpec& spec) : oracle_(dom, spec) {}
  OracleResult most_violated(const Density& rho) const override {
    return oracle_.most_violated(rho);
  }
  std::vector<OracleResult> most_violated_batch(const Density& rho,
                                                double usage_threshold,
                                                int max_batch) const override {
    return oracle_.most_violated_batch(rho, usage_threshold, max_batch);
  }

 private:
  CutOracle oracle_;
};

void validate_problem(const ModulusProblem& prob) {
  if (prob.dom == nullptr) throw std::invalid_argument("solve_modulus: missing mesh");
  if (!(prob.p > 1.0)) throw std::invalid_argument("solve_modulus: p must exceed 1");
  if (!(prob.tol > 0.0 && prob.tol < 1.0))
    throw std::invalid_argument("solve_modulus: tol must lie in (0, 1)");
  if (prob.max_iters < 1) throw std::invalid_argument("solve_modulus: max_iters must be >= 1");
  validate_family_spec(*prob.dom, prob.spec);
}

}  // namespace

double conjugate_exponent(double p) {
  if (!(p > 1.0)) throw std::invalid_argument("conjugate_exponent: p must exceed 1");
  return p / (p - 1.0);
}

double lp_energy(const MeshDomain& dom, const Density& rho, double q) {
  double acc = 0.0;
  for (std::int32_t c = 0; c < dom.cell_count(); ++c)
    acc += dom.cell_measure(c) * std::pow(rho[c], q);
  return acc;
}

std::string_view to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::converged: return "converged";
    case SolverStatus::iteration_limit: return "iteration-limit";
    case SolverStatus::family_empty: return "family-empty";
    case SolverStatus::no_admissible: return "no-admissible";
  }
  return "unknown";
}

std::string SolverReport::to_json() const {
  nlohmann::json j;
  j["value_lower"] = value_lower;
  j["value_upper"] = value_upper;
  j["p"] = p;
  j["status"] = std::string(to_string(status));
  j["iterations"] = iterations;
  j["active_count"] = active_objects.size();
  return j.dump(2);
}

SolverReport solve_modulus(const ModulusProblem& prob, const FamilyOracle& oracle) {
  validate_problem(prob);
  const MeshDomain& dom = *prob.dom;
  SolverReport report;
  report.p = prob.p;
  report.rho_star.assign(dom.cell_count(), 0.0);

  DualState state(dom, prob.p);
  double best_lower = 0.0;
  const double bracket_factor = std::pow(1.0 + prob.tol, prob.p);
  const bool trace = std::getenv("MODLAB_TRACE") != nullptr;

  // Exploratory iterations run a warm-started loose ascent; when a
  // candidate density passes the oracle the restricted program is pushed
  // to a certified complementarity residual instead, plus a bounded
  // stationarity pass.
  constexpr int kLooseSweeps = 12;
  constexpr double kLooseResidual = 1e-3;
  bool polished = false;
  auto polish = [&]() {
    state.ascend_residual(0.1 * prob.tol, 200);
    state.ascend(1e-10, 50);
  };

  double oracle_seconds = 0.0, ascent_seconds = 0.0;
  const auto now = [] { return std::chrono::steady_clock::now(); };
  constexpr int kBatch = 16;

  for (int iter = 1; iter <= prob.max_iters; ++iter) {
    report.iterations = iter;
    const auto t0 = now();
    auto batch = oracle.most_violated_batch(state.rho(), 1.0 - prob.tol, kBatch);
    const auto res = batch.front();
    oracle_seconds += std::chrono::duration<double>(now() - t0).count();

    if (res.family_empty) {
      report.status = SolverStatus::family_empty;
      report.value_lower = report.value_upper = 0.0;
      report.min_usage = kInf;
      return report;
    }
    if (res.usage.cells.empty()) {
      // A family member with no usage support admits no density at all.
      report.status = SolverStatus::no_admissible;
      report.value_lower = report.value_upper = kInf;
      report.min_usage = 0.0;
      return report;
    }

    const double energy = state.energy();
    best_lower = std::max(best_lower, state.dual_value());
    report.min_usage = res.value;

    if (trace && iter % 100 == 0)
      std::fprintf(stderr,
                   "modlab solve: iter=%d active=%zu min_usage=%.8f lower=%.8g "
                   "oracle=%.2fs ascent=%.2fs\n",
                   iter, state.size(), res.value, best_lower, oracle_seconds,
                   ascent_seconds);

    if (res.value >= 1.0 - prob.tol && res.value > 0.0) {
      const double upper = energy / std::pow(res.value, prob.p);
      if (upper <= best_lower * bracket_factor || res.value >= 1.0 - 1e-14) {
        report.status = SolverStatus::converged;
        report.value_upper = upper;
        report.value_lower = std::min(best_lower, upper);
        for (std::int32_t c = 0; c < dom.cell_count(); ++c)
          report.rho_star[c] = state.rho()[c] / res.value;
        for (auto& con : state.constraints())
          report.active_objects.push_back({std::move(con.usage), con.lambda, std::move(con.object)});
        return report;
      }
      if (!polished) {
        // Candidate density passed the oracle but the bracket is loose;
        // certify the restricted program and retry.
        polish();
        polished = true;
        continue;
      }
    }

    const auto t1 = now();
    for (auto& member : batch) {
      if (member.family_empty || member.usage.cells.empty()) continue;
      state.add(std::move(member.usage), std::move(member.object));
    }
    polished = false;
    if (res.value >= 1.0 - 3.0 * prob.tol)
      state.ascend_residual(0.3 * prob.tol, 40);
    else
      state.ascend_residual(kLooseResidual, kLooseSweeps);
    state.prune(50);
    ascent_seconds += std::chrono::duration<double>(now() - t1).count();
  }

  // Iteration budget exhausted: report the bracket we can still certify.
  const auto res = oracle.most_violated(state.rho());
  report.status = SolverStatus::iteration_limit;
  report.min_usage = res.family_empty ? kInf : res.value;
  best_lower = std::max(best_lower, state.dual_value());
  report.value_lower = best_lower;
  report.value_upper = (res.family_empty || res.value <= 0.0 || res.usage.cells.empty())
                           ? kInf
                           : state.energy() / std::pow(res.value, prob.p);
  report.value_lower = std::min(report.value_lower, report.value_upper);
  if (!res.family_empty && res.value > 0.0) {
    for (std::int32_t c = 0; c < dom.cell_count(); ++c)
      report.rho_star[c] = state.rho()[c] / res.value;
  }
  for (auto& con : state.constraints())
    report.active_objects.push_back({std::move(con.usage), con.lambda, std::move(con.object)});
  return report;
}

SolverReport solve_modulus(const ModulusProblem& prob) {
  validate_problem(prob);
  if (prob.spec.kind == FamilyKind::connecting) {
    ConnectingAdapter oracle(*prob.dom, prob.spec);
    return solve_modulus(prob, oracle);
  }
  SeparatingAdapter oracle(*prob.dom, prob.spec);
  return solve_modulus(prob, oracle);
}

CertificateOutcome variational_certificate(const ModulusProblem& prob,
                                           const SolverReport& report,
                                           std::span<const Density> trials) {
  validate_problem(prob);
  const MeshDomain& dom = *prob.dom;
  CertificateOutcome out;
  out.max_violation = -kInf;

  std::unique_ptr<FamilyOracle> oracle;
  if (prob.spec.kind == FamilyKind::connecting)
    oracle = std::make_unique<ConnectingAdapter>(dom, prob.spec);
  else
    oracle = std::make_unique<SeparatingAdapter>(dom, prob.spec);

  const double pm1 = prob.p - 1.0;
  for (std::size_t t = 0; t < trials.size(); ++t) {
    const auto& phi = trials[t];
    if (static_cast<std::int32_t>(phi.size()) != dom.cell_count())
      throw std::invalid_argument("variational_certificate: trial density has wrong size");
    for (double v : phi)
      if (!(v >= 0.0)) throw std::invalid_argument("variational_certificate: trial density must be nonnegative");

    const auto res = oracle->most_violated(phi);
    if (!res.family_empty && res.value < 1.0 - prob.tol) {
      out.rejected_trial = t;
      out.rejection_witness = res;
      return out;
    }
    double pairing = 0.0;
    for (std::int32_t c = 0; c < dom.cell_count(); ++c)
      pairing += phi[c] * dom.cell_measure(c) * std::pow(report.rho_star[c], pm1);
    const double violation = report.value_lower - pairing;
    out.violations.push_back(violation);
    out.max_violation = std::max(out.max_violation, violation);
  }
  if (out.violations.empty()) out.max_violation = 0.0;
  return out;
}

CapacityResult capacity_solve(const MeshDomain& dom, const RegionTriple& region,
                              double p, const CapacityOptions& opts) {
  if (!(p > 1.0)) throw std::invalid_argument("capacity_solve: p must exceed 1");
  validate_region(dom, region);
  const auto n = dom.cell_count();
  std::vector<char> in_g(n, 0), in_e(n, 0), in_f(n, 0);
  for (auto c : region.g) in_g[c] = 1;
  for (auto c : region.e) in_e[c] = 1;
  for (auto c : region.f) in_f[c] = 1;

  const double h = dom.spacing();
  const auto d_e = geodesic_field(dom, region.e, in_g);
  const auto d_f = geodesic_field(dom, region.f, in_g);

  std::vector<double> u(n, 0.0);
  for (auto c : region.g) {
    const double a = d_e[c];
    const double b = d_f[c];
    u[c] = (a + b) > 0.0 ? a / (a + b) : 0.0;
  }
  for (auto c : region.e) u[c] = 0.0;
  for (auto c : region.f) u[c] = 1.0;

  auto energy_of = [&](const std::vector<double>& field) {
    double acc = 0.0;
    for (auto c : region.g) {
      double g = 0.0;
      for (const auto& nb : dom.neighbors(c))
        if (in_g[nb.cell]) g = std::max(g, std::abs(field[nb.cell] - field[c]));
      acc += dom.cell_measure(c) * std::pow(g / h, p);
    }
    return acc;
  };

  std::vector<double> grad(n, 0.0);
  auto gradient = [&](const std::vector<double>& field) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (auto c : region.g) {
      double g = 0.0;
      for (const auto& nb : dom.neighbors(c))
        if (in_g[nb.cell]) g = std::max(g, std::abs(field[nb.cell] - field[c]));
      if (g <= 0.0) continue;
      // Split the subgradient over all maximizing faces.
      int ties = 0;
      for (const auto& nb : dom.neighbors(c))
        if (in_g[nb.cell] && std::abs(field[nb.cell] - field[c]) >= g * (1.0 - 1e-12)) ++ties;
      const double coef =
          dom.cell_measure(c) * p * std::pow(g / h, p - 1.0) / (h * ties);
      for (const auto& nb : dom.neighbors(c)) {
        if (!in_g[nb.cell]) continue;
        const double diff = field[nb.cell] - field[c];
        if (std::abs(diff) >= g * (1.0 - 1e-12)) {
          const double sign = diff >= 0.0 ? 1.0 : -1.0;
          grad[nb.cell] += coef * sign;
          grad[c] -= coef * sign;
        }
      }
    }
    for (auto c : region.e) grad[c] = 0.0;
    for (auto c : region.f) grad[c] = 0.0;
  };

  CapacityResult result;
  double energy = energy_of(u);
  double step = 0.1;
  std::vector<double> trial(n, 0.0);
  double window_start = energy;
  int window_ticks = 0;

  int iter = 0;
  for (; iter < opts.max_iters; ++iter) {
    gradient(u);
    double gnorm2 = 0.0;
    for (auto c : region.g) gnorm2 += grad[c] * grad[c];
    if (gnorm2 <= 1e-30) {
      result.converged = true;
      break;
    }

    bool accepted = false;
    for (int back = 0; back < 40; ++back) {
      trial = u;
      for (auto c : region.g)
        trial[c] = std::clamp(u[c] - step * grad[c], 0.0, 1.0);
      for (auto c : region.e) trial[c] = 0.0;
      for (auto c : region.f) trial[c] = 1.0;
      const double trial_energy = energy_of(trial);
      if (trial_energy <= energy - 1e-4 * step * gnorm2) {
        u.swap(trial);
        energy = trial_energy;
        step *= 1.3;
        accepted = true;
        break;
      }
      step *= 0.5;
    }

    if (++window_ticks >= 10) {
      if (std::abs(window_start - energy) <= opts.tol * std::max(energy, 1e-300)) {
        result.converged = true;
        break;
      }
      window_start = energy;
      window_ticks = 0;
    }
    if (!accepted && step < 1e-18) {
      result.converged = true;
      break;
    }
  }

  result.value = energy;
  result.iterations = iter;
  result.potential = std::move(u);
  return result;
}

void write_density_csv(std::string& out, const Density& rho) {
  out += "cell,rho\n";
  char buf[64];
  for (std::size_t c = 0; c < rho.size(); ++c) {
    std::snprintf(buf, sizeof(buf), "%zu,%.12g\n", c, rho[c]);
    out += buf;
  }
}

}  // namespace modlab
