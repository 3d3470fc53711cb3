#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modlab/mesh.hpp"

namespace modlab {

/// Nonnegative scalar field on cells.
using Density = std::vector<double>;

/// Sparse cell -> weight map recording how much of an object's measure
/// each cell carries. Cell ids are sorted and weights are positive.
struct UsageVector {
  std::vector<std::int32_t> cells;
  std::vector<double> weights;

  double total() const;
  double dot(const Density& rho) const;
};

enum class FamilyKind { connecting, separating };

struct FamilySpec {
  FamilyKind kind = FamilyKind::connecting;
  RegionTriple region;
  /// Separating families only: keep surfaces at distance > 1/j from E and F.
  std::optional<int> truncation_j;
};

void validate_family_spec(const MeshDomain& dom, const FamilySpec& spec);

/// Length usage of a simple face-adjacent cell path: h per visited cell,
/// halved at the two endpoints.
UsageVector curve_usage(const MeshDomain& dom, const FamilySpec& spec,
                        std::span<const std::int32_t> path);

/// Area usage of a face set: each face spreads its area over the adjacent
/// cells that lie in G (half to each side, all of it if one side is
/// outside G).
UsageVector surface_usage(const MeshDomain& dom, const FamilySpec& spec,
                          std::span<const std::int32_t> faces);

/// True iff deleting the faces leaves E and F inside single, distinct
/// components of G.
bool is_separating(const MeshDomain& dom, const FamilySpec& spec,
                   std::span<const std::int32_t> faces);

struct OracleResult {
  bool family_empty = false;
  double value = 0.0;
  UsageVector usage;
  /// Path cells for connecting families, face ids for separating ones.
  std::vector<std::int32_t> object;
};

/// Minimum-usage member oracle for a connecting family: single-source
/// shortest path over node costs, deterministic tie-breaking by cell id.
class CurveOracle {
 public:
  CurveOracle(const MeshDomain& dom, const FamilySpec& spec);
  ~CurveOracle();
  CurveOracle(CurveOracle&&) noexcept;

  OracleResult most_violated(const Density& rho) const;

  /// The most-violated curve followed by further cell-disjoint curves
  /// whose usage stays below the threshold. The first entry is always the
  /// certified family minimum.
  std::vector<OracleResult> most_violated_batch(const Density& rho,
                                                double usage_threshold,
                                                int max_batch) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Minimum-usage member oracle for a separating family: min cut by
/// max-flow over face capacities, with truncation-excluded faces
/// contracted out of the flow graph.
class CutOracle {
 public:
  CutOracle(const MeshDomain& dom, const FamilySpec& spec);
  ~CutOracle();
  CutOracle(CutOracle&&) noexcept;

  OracleResult most_violated(const Density& rho) const;

  /// The certified minimum cut followed by violated distance-shell cuts
  /// (cheap fixed geometry separators evaluated without extra max-flow
  /// runs).
  std::vector<OracleResult> most_violated_batch(const Density& rho,
                                                double usage_threshold,
                                                int max_batch) const;

  /// Faces a truncated family is not allowed to cut.
  const std::vector<char>& excluded_faces() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

OracleResult min_weight_curve(const MeshDomain& dom, const FamilySpec& spec,
                              const Density& rho);
OracleResult min_weight_cut(const MeshDomain& dom, const FamilySpec& spec,
                            const Density& rho);

std::string object_to_json(std::span<const std::int32_t> ids);
std::vector<std::int32_t> object_from_json(std::string_view text);

}  // namespace modlab
