#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "modlab/families.hpp"
#include "modlab/mesh.hpp"

namespace modlab {

/// p* = p / (p - 1); requires p > 1.
double conjugate_exponent(double p);

/// Integral of rho^q against the cell measure.
double lp_energy(const MeshDomain& dom, const Density& rho, double q);

struct ModulusProblem {
  const MeshDomain* dom = nullptr;
  FamilySpec spec;
  double p = 2.0;
  double tol = 1e-6;
  int max_iters = 10000;
};

enum class SolverStatus { converged, iteration_limit, family_empty, no_admissible };

std::string_view to_string(SolverStatus status);

struct ActiveObject {
  UsageVector usage;
  double lambda = 0.0;
  std::vector<std::int32_t> object;
};

struct SolverReport {
  double value_lower = 0.0;
  double value_upper = 0.0;
  Density rho_star;
  std::vector<ActiveObject> active_objects;
  int iterations = 0;
  SolverStatus status = SolverStatus::converged;
  double p = 2.0;
  /// Certified minimum usage over the family at the final density.
  double min_usage = 0.0;

  std::string to_json() const;
};

/// Most-violated-member source for the solver; implementations must be
/// deterministic functions of the density.
class FamilyOracle {
 public:
  virtual ~FamilyOracle() = default;
  virtual OracleResult most_violated(const Density& rho) const = 0;

  /// Optionally returns extra violated members alongside the certified
  /// minimum (always first); used to amortize restricted-program
  /// re-solves. The default yields just the minimum.
  virtual std::vector<OracleResult> most_violated_batch(const Density& rho,
                                                        double usage_threshold,
                                                        int max_batch) const {
    (void)usage_threshold;
    (void)max_batch;
    std::vector<OracleResult> out;
    out.push_back(most_violated(rho));
    return out;
  }
};

/// Computes mod_p of the family by constraint generation: grow an active
/// set of family members from the oracle and re-solve the restricted
/// program by dual coordinate ascent with the closed-form primal
/// rho_c = (sum_j lambda_j N_jc / (p mu_c))^(1/(p-1)). The returned
/// bracket is certified: value_lower is a dual bound, value_upper the
/// energy of a rescaled admissible density.
SolverReport solve_modulus(const ModulusProblem& prob);
SolverReport solve_modulus(const ModulusProblem& prob, const FamilyOracle& oracle);

struct CertificateOutcome {
  /// max over trials of value_lower - integral(phi rho*^(p-1)) dmu;
  /// a correct extremal keeps this below tol * value_upper.
  double max_violation = 0.0;
  std::vector<double> violations;
  std::optional<std::size_t> rejected_trial;
  OracleResult rejection_witness;
};

/// First-variation optimality check of a solved report against admissible
/// trial densities. Trials failing the admissibility oracle are rejected
/// with the violating family member attached.
CertificateOutcome variational_certificate(const ModulusProblem& prob,
                                           const SolverReport& report,
                                           std::span<const Density> trials);

struct CapacityOptions {
  double tol = 1e-6;
  int max_iters = 20000;
};

struct CapacityResult {
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
  Density potential;
};

/// Dirichlet-energy capacity analogue of the connecting modulus:
/// minimize sum_c mu_c g_c^p over potentials u with u=0 on E, u=1 on F,
/// where g_c is the largest one-sided difference quotient at c. Solved by
/// projected subgradient descent with Armijo backtracking.
CapacityResult capacity_solve(const MeshDomain& dom, const RegionTriple& region,
                              double p, const CapacityOptions& opts = {});

void write_density_csv(std::string& out, const Density& rho);

}  // namespace modlab
