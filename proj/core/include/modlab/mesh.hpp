#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace modlab {

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

/// Axis-aligned cell complex modelling a metric measure space at
/// resolution h. Cells carry the volume measure, faces carry
/// codimension-1 area, and the cell adjacency graph carries the metric
/// (uniform step h between face-adjacent cell centers).
class MeshDomain {
 public:
  struct Neighbor {
    std::int32_t cell;
    std::int32_t face;
  };

  struct GlueInfo {
    double epsilon = 0.0;
    int cantor_level = 0;
    double glue_area = 0.0;
    double max_endpoint_rounding = 0.0;
    std::vector<std::int32_t> glue_faces;
  };

  int dimension() const { return dim_; }
  double spacing() const { return h_; }
  std::int32_t cell_count() const { return static_cast<std::int32_t>(mu_.size()); }
  std::int32_t face_count() const { return static_cast<std::int32_t>(face_area_.size()); }

  const std::array<int, 4>& cell_key(std::int32_t c) const { return keys_[c]; }
  const std::array<double, 3>& cell_center(std::int32_t c) const { return centers_[c]; }
  double cell_measure(std::int32_t c) const { return mu_[c]; }
  int cell_component(std::int32_t c) const { return keys_[c][3]; }
  std::span<const double> cell_measures() const { return mu_; }

  double face_area(std::int32_t f) const { return face_area_[f]; }
  /// Adjacent cells of a face; second entry is -1 for boundary faces.
  const std::array<std::int32_t, 2>& face_cells(std::int32_t f) const {
    return face_cells_[f];
  }
  bool face_interior(std::int32_t f) const { return face_cells_[f][1] >= 0; }

  std::span<const Neighbor> neighbors(std::int32_t c) const {
    return {adj_.data() + adj_off_[c], adj_.data() + adj_off_[c + 1]};
  }

  double total_measure() const { return total_mu_; }

  /// Looks up a cell by integer grid key (coords..., copy); -1 if absent.
  std::int32_t find_cell(const std::array<int, 4>& key) const;

  const std::optional<GlueInfo>& glue_info() const { return glue_info_; }

  /// Internal assembly state used by the domain builders.
  struct Builder {
    int dim = 2;
    double h = 0.0;
    std::vector<std::array<int, 4>> keys;
    std::vector<std::array<double, 3>> centers;
    std::vector<double> mu;
    std::vector<double> face_area;
    std::vector<std::array<std::int32_t, 2>> face_cells;
    std::optional<GlueInfo> glue_info;

    std::int32_t add_cell(const std::array<int, 4>& key,
                          const std::array<double, 3>& center, double measure);
    std::int32_t add_face(double area, std::int32_t c1, std::int32_t c2);
    /// Validates invariants, builds adjacency, and produces the mesh.
    MeshDomain finish() &&;
  };

 private:
  friend struct Builder;
  MeshDomain() = default;

  int dim_ = 2;
  double h_ = 0.0;
  std::vector<std::array<int, 4>> keys_;
  std::vector<std::array<double, 3>> centers_;
  std::vector<double> mu_;
  std::vector<double> face_area_;
  std::vector<std::array<std::int32_t, 2>> face_cells_;
  std::vector<std::int32_t> adj_off_;
  std::vector<Neighbor> adj_;
  double total_mu_ = 0.0;
  std::optional<GlueInfo> glue_info_;
};

/// The domain G together with the two marked continua E and F it
/// connects or separates. Cell ids index into a single MeshDomain.
struct RegionTriple {
  std::vector<std::int32_t> g;
  std::vector<std::int32_t> e;
  std::vector<std::int32_t> f;
};

/// Checks the structural requirements on (G, E, F): nonempty, disjoint
/// E and F contained in G, each connected in the adjacency graph, and
/// (unless waived) G itself connected. Oracles waive the connectivity of
/// G and report disconnection as an empty or degenerate family instead.
/// Throws std::invalid_argument on violation.
void validate_region(const MeshDomain& dom, const RegionTriple& region,
                     int min_terminal_cells = 1, bool require_connected_g = true);

/// Self-similar Cantor approximation on [1/4, 3/4]: every retained
/// interval spawns two children of relative length ratio anchored at its
/// endpoints, so the similarity dimension log 2 / log(1/ratio) is 1-eps.
struct CantorApprox {
  double epsilon = 0.0;
  int level = 0;
  double ratio = 0.0;
  std::vector<std::array<double, 2>> intervals;

  double retained_length() const;
  double similarity_dimension() const;
};

CantorApprox build_cantor_approx(double epsilon, int level);

MeshDomain build_grid_domain(int q, int side_cells, double h);

MeshDomain build_masked_domain(
    const MeshDomain& base,
    const std::function<bool(const std::array<double, 3>&)>& keep);

/// Two meshed unit cubes glued along a Cantor-set footprint in their
/// shared bottom face. Copy 1 is mirrored to negative z so geometric
/// predicates work on the glued object; graph distance between copies
/// runs through the glue faces only.
MeshDomain build_glued_cubes(double epsilon, int cantor_level, int side_cells);

/// Shortest-path distance in the cell graph with step h; kUnreachable if
/// the cells lie in different components.
double geodesic_distance(const MeshDomain& dom, std::int32_t c1, std::int32_t c2);

/// Distance field from a source set; `allowed` (if nonempty) restricts
/// the traversal to the marked cells.
std::vector<double> geodesic_field(const MeshDomain& dom,
                                   std::span<const std::int32_t> sources,
                                   std::span<const char> allowed = {});

/// Cells within strict distance `radius` of `center`.
std::vector<std::int32_t> geodesic_ball(const MeshDomain& dom, std::int32_t center,
                                        double radius,
                                        std::span<const char> allowed = {});

struct RegularityReport {
  double a_hat = 0.0;    // min mu(B(x,r)) / r^Q over samples
  double A_hat = 0.0;    // max mu(B(x,r)) / r^Q over samples
  double C_mu_hat = 0.0; // max mu(2B) / mu(B) over samples
  int samples = 0;
};

/// Empirical Ahlfors-regularity and doubling diagnostics from random
/// (cell, radius) samples. Deterministic for a fixed sample count.
RegularityReport regularity_report(const MeshDomain& dom, int samples);

std::string export_mesh_json(const MeshDomain& dom);
MeshDomain import_mesh_json(std::string_view text);

}  // namespace modlab
