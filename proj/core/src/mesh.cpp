#include "modlab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "json.hpp"

#include "modlab/rng.hpp"

namespace modlab {

namespace {

using json = nlohmann::json;

bool key_less(const std::array<int, 4>& a, const std::array<int, 4>& b) {
  return a < b;
}

}  // namespace

std::int32_t MeshDomain::Builder::add_cell(const std::array<int, 4>& key,
                                           const std::array<double, 3>& center,
                                           double measure) {
  keys.push_back(key);
  centers.push_back(center);
  mu.push_back(measure);
  return static_cast<std::int32_t>(mu.size()) - 1;
}

std::int32_t MeshDomain::Builder::add_face(double area, std::int32_t c1,
                                           std::int32_t c2) {
  face_area.push_back(area);
  face_cells.push_back({c1, c2});
  return static_cast<std::int32_t>(face_area.size()) - 1;
}

MeshDomain MeshDomain::Builder::finish() && {
  const auto n = static_cast<std::int32_t>(mu.size());
  if (n == 0) throw std::invalid_argument("mesh: no cells");
  if (h <= 0.0) throw std::invalid_argument("mesh: spacing must be positive");
  for (double m : mu)
    if (!(m > 0.0)) throw std::invalid_argument("mesh: cell measure must be positive");
  for (std::size_t f = 0; f < face_area.size(); ++f) {
    if (!(face_area[f] > 0.0))
      throw std::invalid_argument("mesh: face area must be positive");
    const auto [c1, c2] = face_cells[f];
    if (c1 < 0 || c1 >= n || c2 < -1 || c2 >= n || c1 == c2)
      throw std::invalid_argument("mesh: face references invalid cells");
  }
  if (!std::is_sorted(keys.begin(), keys.end(), key_less))
    throw std::invalid_argument("mesh: cells not in canonical order");

  MeshDomain dom;
  dom.dim_ = dim;
  dom.h_ = h;
  dom.keys_ = std::move(keys);
  dom.centers_ = std::move(centers);
  dom.mu_ = std::move(mu);
  dom.face_area_ = std::move(face_area);
  dom.face_cells_ = std::move(face_cells);
  dom.glue_info_ = std::move(glue_info);

  double total = 0.0;
  for (double m : dom.mu_) total += m;
  dom.total_mu_ = total;

  std::vector<std::int32_t> degree(n, 0);
  for (const auto& fc : dom.face_cells_) {
    if (fc[1] < 0) continue;
    ++degree[fc[0]];
    ++degree[fc[1]];
  }
  dom.adj_off_.assign(n + 1, 0);
  for (std::int32_t c = 0; c < n; ++c) dom.adj_off_[c + 1] = dom.adj_off_[c] + degree[c];
  dom.adj_.resize(dom.adj_off_[n]);
  std::vector<std::int32_t> cursor(dom.adj_off_.begin(), dom.adj_off_.end() - 1);
  for (std::int32_t f = 0; f < dom.face_count(); ++f) {
    const auto [c1, c2] = dom.face_cells_[f];
    if (c2 < 0) continue;
    dom.adj_[cursor[c1]++] = {c2, f};
    dom.adj_[cursor[c2]++] = {c1, f};
  }

  // Declared domains must be connected.
  std::vector<char> seen(n, 0);
  std::deque<std::int32_t> queue{0};
  seen[0] = 1;
  std::int32_t reached = 1;
  while (!queue.empty()) {
    const auto c = queue.front();
    queue.pop_front();
    for (const auto& nb : dom.neighbors(c)) {
      if (!seen[nb.cell]) {
        seen[nb.cell] = 1;
        ++reached;
        queue.push_back(nb.cell);
      }
    }
  }
  if (reached != n) throw std::invalid_argument("mesh: adjacency graph is disconnected");
  return dom;
}

std::int32_t MeshDomain::find_cell(const std::array<int, 4>& key) const {
  const auto it = std::lower_bound(keys_.begin(), keys_.end(), key, key_less);
  if (it == keys_.end() || *it != key) return -1;
  return static_cast<std::int32_t>(it - keys_.begin());
}

void validate_region(const MeshDomain& dom, const RegionTriple& region,
                     int min_terminal_cells, bool require_connected_g) {
  const auto n = dom.cell_count();
  std::vector<char> in_g(n, 0), in_e(n, 0), in_f(n, 0);
  auto mark = [&](const std::vector<std::int32_t>& cells, std::vector<char>& flag,
                  const char* what) {
    for (auto c : cells) {
      if (c < 0 || c >= n) throw std::invalid_argument(std::string(what) + ": cell id out of range");
      if (flag[c]) throw std::invalid_argument(std::string(what) + ": duplicate cell id");
      flag[c] = 1;
    }
  };
  mark(region.g, in_g, "region G");
  mark(region.e, in_e, "region E");
  mark(region.f, in_f, "region F");
  if (region.g.empty()) throw std::invalid_argument("region G: empty");
  if (static_cast<int>(region.e.size()) < min_terminal_cells ||
      static_cast<int>(region.f.size()) < min_terminal_cells)
    throw std::invalid_argument("region E/F: too few cells");
  for (auto c : region.e) {
    if (!in_g[c]) throw std::invalid_argument("region E: not contained in G");
    if (in_f[c]) throw std::invalid_argument("region E/F: not disjoint");
  }
  for (auto c : region.f)
    if (!in_g[c]) throw std::invalid_argument("region F: not contained in G");

  auto connected = [&](const std::vector<std::int32_t>& cells, const std::vector<char>& flag) {
    if (cells.empty()) return false;
    std::vector<char> seen(n, 0);
    std::deque<std::int32_t> queue{cells[0]};
    seen[cells[0]] = 1;
    std::size_t reached = 1;
    while (!queue.empty()) {
      const auto c = queue.front();
      queue.pop_front();
      for (const auto& nb : dom.neighbors(c)) {
        if (flag[nb.cell] && !seen[nb.cell]) {
          seen[nb.cell] = 1;
          ++reached;
          queue.push_back(nb.cell);
        }
      }
    }
    return reached == cells.size();
  };
  if (require_connected_g && !connected(region.g, in_g))
    throw std::invalid_argument("region G: disconnected");
  if (!connected(region.e, in_e)) throw std::invalid_argument("region E: disconnected");
  if (!connected(region.f, in_f)) throw std::invalid_argument("region F: disconnected");
}

double CantorApprox::retained_length() const {
  double total = 0.0;
  for (const auto& iv : intervals) total += iv[1] - iv[0];
  return total;
}

double CantorApprox::similarity_dimension() const {
  return std::log(2.0) / std::log(1.0 / ratio);
}

CantorApprox build_cantor_approx(double epsilon, int level) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("cantor: epsilon must lie in (0, 1)");
  if (level < 0) throw std::invalid_argument("cantor: level must be nonnegative");
  CantorApprox approx;
  approx.epsilon = epsilon;
  approx.level = level;
  approx.ratio = std::pow(0.5, 1.0 / (1.0 - epsilon));
  approx.intervals = {{0.25, 0.75}};
  for (int g = 0; g < level; ++g) {
    std::vector<std::array<double, 2>> next;
    next.reserve(approx.intervals.size() * 2);
    for (const auto& iv : approx.intervals) {
      const double len = (iv[1] - iv[0]) * approx.ratio;
      next.push_back({iv[0], iv[0] + len});
      next.push_back({iv[1] - len, iv[1]});
    }
    approx.intervals = std::move(next);
  }
  return approx;
}

namespace {

struct GridShape {
  int q;
  int side;
  double h;

  std::int32_t cell_id(int i, int j, int k) const {
    if (q == 2) return static_cast<std::int32_t>(i) * side + j;
    return (static_cast<std::int32_t>(i) * side + j) * side + k;
  }
};

MeshDomain::Builder grid_builder(const GridShape& shape) {
  MeshDomain::Builder b;
  b.dim = shape.q;
  b.h = shape.h;
  const double mu = std::pow(shape.h, shape.q);
  const int kmax = shape.q == 3 ? shape.side : 1;
  for (int i = 0; i < shape.side; ++i)
    for (int j = 0; j < shape.side; ++j)
      for (int k = 0; k < kmax; ++k)
        b.add_cell({i, j, shape.q == 3 ? k : 0, 0},
                   {(i + 0.5) * shape.h, (j + 0.5) * shape.h,
                    shape.q == 3 ? (k + 0.5) * shape.h : 0.0},
                   mu);

  const double area = std::pow(shape.h, shape.q - 1);
  for (int i = 0; i < shape.side; ++i)
    for (int j = 0; j < shape.side; ++j)
      for (int k = 0; k < kmax; ++k) {
        const auto c = shape.cell_id(i, j, k);
        if (i + 1 < shape.side) b.add_face(area, c, shape.cell_id(i + 1, j, k));
        else b.add_face(area, c, -1);
        if (i == 0) b.add_face(area, c, -1);
        if (j + 1 < shape.side) b.add_face(area, c, shape.cell_id(i, j + 1, k));
        else b.add_face(area, c, -1);
        if (j == 0) b.add_face(area, c, -1);
        if (shape.q == 3) {
          if (k + 1 < shape.side) b.add_face(area, c, shape.cell_id(i, j, k + 1));
          else b.add_face(area, c, -1);
          if (k == 0) b.add_face(area, c, -1);
        }
      }
  return b;
}

}  // namespace

MeshDomain build_grid_domain(int q, int side_cells, double h) {
  if (q != 2 && q != 3) throw std::invalid_argument("build_grid_domain: Q must be 2 or 3");
  if (side_cells < 2) throw std::invalid_argument("build_grid_domain: side_cells must be >= 2");
  if (!(h > 0.0)) throw std::invalid_argument("build_grid_domain: spacing must be positive");
  return grid_builder({q, side_cells, h}).finish();
}

MeshDomain build_masked_domain(
    const MeshDomain& base,
    const std::function<bool(const std::array<double, 3>&)>& keep) {
  const auto n = base.cell_count();
  std::vector<std::int32_t> remap(n, -1);
  MeshDomain::Builder b;
  b.dim = base.dimension();
  b.h = base.spacing();
  for (std::int32_t c = 0; c < n; ++c) {
    if (keep(base.cell_center(c)))
      remap[c] = b.add_cell(base.cell_key(c), base.cell_center(c), base.cell_measure(c));
  }
  if (b.mu.empty()) throw std::invalid_argument("build_masked_domain: empty retained set");
  for (std::int32_t f = 0; f < base.face_count(); ++f) {
    const auto [c1, c2] = base.face_cells(f);
    const auto r1 = remap[c1];
    const auto r2 = c2 >= 0 ? remap[c2] : -1;
    if (r1 >= 0 && r2 >= 0) b.add_face(base.face_area(f), r1, r2);
    else if (r1 >= 0) b.add_face(base.face_area(f), r1, -1);
    else if (r2 >= 0) b.add_face(base.face_area(f), r2, -1);
  }
  try {
    return std::move(b).finish();
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("build_masked_domain: retained set is disconnected");
  }
}

MeshDomain build_glued_cubes(double epsilon, int cantor_level, int side_cells) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("build_glued_cubes: epsilon must lie in (0, 1)");
  if (cantor_level < 0)
    throw std::invalid_argument("build_glued_cubes: cantor_level must be nonnegative");
  if (side_cells < 4 || side_cells % 4 != 0)
    throw std::invalid_argument("build_glued_cubes: side_cells must be a positive multiple of 4");

  const int s = side_cells;
  const double h = 1.0 / s;
  const auto cantor = build_cantor_approx(epsilon, cantor_level);

  // Snap interval endpoints outward to grid lines and reject constructions
  // where the snap merges neighbouring intervals.
  struct Span { int lo, hi; };
  std::vector<Span> spans;
  double max_rounding = 0.0;
  for (const auto& iv : cantor.intervals) {
    const double lo_exact = iv[0] * s;
    const double hi_exact = iv[1] * s;
    int lo = static_cast<int>(std::floor(lo_exact + 1e-9));
    int hi = static_cast<int>(std::ceil(hi_exact - 1e-9));
    max_rounding = std::max(max_rounding, std::abs(lo - lo_exact) * h);
    max_rounding = std::max(max_rounding, std::abs(hi - hi_exact) * h);
    if (hi <= lo) hi = lo + 1;
    spans.push_back({lo, hi});
  }
  // Touching spans mean the grid cannot resolve the gap between retained
  // intervals, so the construction degenerates.
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].lo <= spans[i - 1].hi)
      throw std::invalid_argument(
          "build_glued_cubes: Cantor intervals misaligned with grid lines at this resolution");
  }

  std::vector<char> glue_column(s, 0);
  for (const auto& sp : spans)
    for (int j = std::max(0, sp.lo); j < std::min(s, sp.hi); ++j) glue_column[j] = 1;

  MeshDomain::Builder b;
  b.dim = 3;
  b.h = h;
  const double mu = h * h * h;
  const double area = h * h;

  // Canonical order: key (i, j, k, copy) lexicographic, copy last.
  auto cell_id = [s](int i, int j, int k, int copy) {
    return ((static_cast<std::int32_t>(i) * s + j) * s + k) * 2 + copy;
  };
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j)
      for (int k = 0; k < s; ++k)
        for (int copy = 0; copy < 2; ++copy) {
          const double z = (k + 0.5) * h;
          b.add_cell({i, j, k, copy},
                     {(i + 0.5) * h, (j + 0.5) * h, copy == 0 ? z : -z}, mu);
        }

  MeshDomain::GlueInfo glue;
  glue.epsilon = epsilon;
  glue.cantor_level = cantor_level;
  glue.max_endpoint_rounding = max_rounding;

  const int quarter = s / 4;
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j)
      for (int k = 0; k < s; ++k)
        for (int copy = 0; copy < 2; ++copy) {
          const auto c = cell_id(i, j, k, copy);
          if (i + 1 < s) b.add_face(area, c, cell_id(i + 1, j, k, copy));
          else b.add_face(area, c, -1);
          if (i == 0) b.add_face(area, c, -1);
          if (j + 1 < s) b.add_face(area, c, cell_id(i, j + 1, k, copy));
          else b.add_face(area, c, -1);
          if (j == 0) b.add_face(area, c, -1);
          if (k + 1 < s) b.add_face(area, c, cell_id(i, j, k + 1, copy));
          else b.add_face(area, c, -1);
          if (k == 0) {
            const bool in_glue = copy == 0 && i >= quarter && i < 3 * quarter && glue_column[j];
            if (in_glue) {
              const auto f = b.add_face(area, c, cell_id(i, j, 0, 1));
              glue.glue_faces.push_back(f);
              glue.glue_area += area;
            } else if (copy == 0) {
              b.add_face(area, c, -1);
            } else if (!(i >= quarter && i < 3 * quarter && glue_column[j])) {
              b.add_face(area, c, -1);
            }
          }
        }

  b.glue_info = std::move(glue);
  return std::move(b).finish();
}

std::vector<double> geodesic_field(const MeshDomain& dom,
                                   std::span<const std::int32_t> sources,
                                   std::span<const char> allowed) {
  const auto n = dom.cell_count();
  std::vector<double> dist(n, kUnreachable);
  std::deque<std::int32_t> queue;
  for (auto s : sources) {
    if (s < 0 || s >= n) throw std::invalid_argument("geodesic_field: cell id out of range");
    if (!allowed.empty() && !allowed[s]) continue;
    if (dist[s] != 0.0) {
      dist[s] = 0.0;
      queue.push_back(s);
    }
  }
  const double h = dom.spacing();
  while (!queue.empty()) {
    const auto c = queue.front();
    queue.pop_front();
    for (const auto& nb : dom.neighbors(c)) {
      if (!allowed.empty() && !allowed[nb.cell]) continue;
      if (dist[nb.cell] == kUnreachable) {
        dist[nb.cell] = dist[c] + h;
        queue.push_back(nb.cell);
      }
    }
  }
  return dist;
}

double geodesic_distance(const MeshDomain& dom, std::int32_t c1, std::int32_t c2) {
  if (c1 < 0 || c1 >= dom.cell_count() || c2 < 0 || c2 >= dom.cell_count())
    throw std::invalid_argument("geodesic_distance: cell id out of range");
  const std::array<std::int32_t, 1> src{c1};
  return geodesic_field(dom, src)[c2];
}

std::vector<std::int32_t> geodesic_ball(const MeshDomain& dom, std::int32_t center,
                                        double radius, std::span<const char> allowed) {
  if (center < 0 || center >= dom.cell_count())
    throw std::invalid_argument("geodesic_ball: cell id out of range");
  std::vector<std::int32_t> members;
  if (!(radius > 0.0)) return members;
  if (!allowed.empty() && !allowed[center]) return members;
  const double h = dom.spacing();
  // Local BFS; avoids touching the whole mesh for small balls.
  static thread_local std::vector<std::int32_t> seen_cells;
  static thread_local std::vector<char> seen;
  if (static_cast<std::int32_t>(seen.size()) != dom.cell_count()) {
    seen.assign(dom.cell_count(), 0);
    seen_cells.clear();
  } else {
    for (auto c : seen_cells) seen[c] = 0;
    seen_cells.clear();
  }

  std::deque<std::pair<std::int32_t, double>> queue{{center, 0.0}};
  seen[center] = 1;
  seen_cells.push_back(center);
  while (!queue.empty()) {
    const auto [c, d] = queue.front();
    queue.pop_front();
    members.push_back(c);
    for (const auto& nb : dom.neighbors(c)) {
      if (seen[nb.cell]) continue;
      if (!allowed.empty() && !allowed[nb.cell]) continue;
      const double nd = d + h;
      if (nd < radius) {
        seen[nb.cell] = 1;
        seen_cells.push_back(nb.cell);
        queue.push_back({nb.cell, nd});
      }
    }
  }
  std::sort(members.begin(), members.end());
  return members;
}

RegularityReport regularity_report(const MeshDomain& dom, int samples) {
  if (samples < 1) throw std::invalid_argument("regularity_report: samples must be >= 1");
  const auto n = dom.cell_count();
  const double h = dom.spacing();

  // Two-sweep diameter estimate.
  const std::array<std::int32_t, 1> seed0{0};
  auto d0 = geodesic_field(dom, seed0);
  std::int32_t far = 0;
  for (std::int32_t c = 0; c < n; ++c)
    if (d0[c] != kUnreachable && d0[c] > d0[far]) far = c;
  const std::array<std::int32_t, 1> seed1{far};
  auto d1 = geodesic_field(dom, seed1);
  double diam = 0.0;
  for (std::int32_t c = 0; c < n; ++c)
    if (d1[c] != kUnreachable) diam = std::max(diam, d1[c]);

  const double r_lo = 2.0 * h;
  const double r_hi = std::max(r_lo, diam / 2.0);
  RegularityReport rep;
  rep.samples = samples;
  rep.a_hat = std::numeric_limits<double>::infinity();

  RngStream rng(0x9d1ab5u, 41);
  const int q = dom.dimension();
  for (int s = 0; s < samples; ++s) {
    const auto c = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(n)));
    const double r = r_lo + (r_hi - r_lo) * rng.uniform();
    double mu_b = 0.0, mu_2b = 0.0;
    for (auto m : geodesic_ball(dom, c, r)) mu_b += dom.cell_measure(m);
    for (auto m : geodesic_ball(dom, c, 2.0 * r)) mu_2b += dom.cell_measure(m);
    const double density = mu_b / std::pow(r, q);
    rep.a_hat = std::min(rep.a_hat, density);
    rep.A_hat = std::max(rep.A_hat, density);
    if (mu_b > 0.0) rep.C_mu_hat = std::max(rep.C_mu_hat, mu_2b / mu_b);
  }
  return rep;
}

std::string export_mesh_json(const MeshDomain& dom) {
  json root;
  root["Q"] = dom.dimension();
  root["h"] = dom.spacing();
  json cells = json::array();
  for (std::int32_t c = 0; c < dom.cell_count(); ++c) {
    const auto& center = dom.cell_center(c);
    json jc;
    jc["id"] = c;
    jc["center"] = dom.dimension() == 2
                       ? json::array({center[0], center[1]})
                       : json::array({center[0], center[1], center[2]});
    jc["mu"] = dom.cell_measure(c);
    jc["component"] = dom.cell_component(c);
    jc["key"] = dom.cell_key(c);
    cells.push_back(std::move(jc));
  }
  root["cells"] = std::move(cells);
  json faces = json::array();
  for (std::int32_t f = 0; f < dom.face_count(); ++f) {
    json jf;
    jf["id"] = f;
    jf["area"] = dom.face_area(f);
    const auto [c1, c2] = dom.face_cells(f);
    jf["cells"] = c2 >= 0 ? json::array({c1, c2}) : json::array({c1});
    faces.push_back(std::move(jf));
  }
  root["faces"] = std::move(faces);
  return root.dump(2);
}

MeshDomain import_mesh_json(std::string_view text) {
  json root = json::parse(text);
  MeshDomain::Builder b;
  b.dim = root.at("Q").get<int>();
  b.h = root.at("h").get<double>();
  if (b.dim != 2 && b.dim != 3) throw std::invalid_argument("mesh import: Q must be 2 or 3");
  for (const auto& jc : root.at("cells")) {
    std::array<double, 3> center{0.0, 0.0, 0.0};
    const auto& jcenter = jc.at("center");
    for (std::size_t d = 0; d < jcenter.size() && d < 3; ++d)
      center[d] = jcenter[d].get<double>();
    std::array<int, 4> key{0, 0, 0, 0};
    if (jc.contains("key")) {
      const auto& jkey = jc.at("key");
      for (std::size_t d = 0; d < jkey.size() && d < 4; ++d) key[d] = jkey[d].get<int>();
    }
    const auto id = b.add_cell(key, center, jc.at("mu").get<double>());
    if (id != jc.at("id").get<std::int32_t>())
      throw std::invalid_argument("mesh import: cell ids must be dense and ordered");
  }
  for (const auto& jf : root.at("faces")) {
    const auto& jcells = jf.at("cells");
    const auto c1 = jcells.at(0).get<std::int32_t>();
    const auto c2 = jcells.size() > 1 ? jcells.at(1).get<std::int32_t>() : -1;
    b.add_face(jf.at("area").get<double>(), c1, c2);
  }
  return std::move(b).finish();
}

}  // namespace modlab
