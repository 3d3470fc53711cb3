#include "modlab/families.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <queue>
#include <stdexcept>

#include "json.hpp"

namespace modlab {

namespace {

constexpr double kFlowInf = 1e30;

std::vector<char> make_mask(std::int32_t n, std::span<const std::int32_t> cells) {
  std::vector<char> mask(n, 0);
  for (auto c : cells) mask[c] = 1;
  return mask;
}

UsageVector sorted_usage(std::vector<std::pair<std::int32_t, double>> entries) {
  std::sort(entries.begin(), entries.end());
  UsageVector u;
  u.cells.reserve(entries.size());
  u.weights.reserve(entries.size());
  for (const auto& [cell, w] : entries) {
    if (!u.cells.empty() && u.cells.back() == cell) {
      u.weights.back() += w;
    } else {
      u.cells.push_back(cell);
      u.weights.push_back(w);
    }
  }
  return u;
}

}  // namespace

double UsageVector::total() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

double UsageVector::dot(const Density& rho) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) acc += weights[i] * rho[cells[i]];
  return acc;
}

void validate_family_spec(const MeshDomain& dom, const FamilySpec& spec) {
  // Oracles tolerate a disconnected G: it shows up as an empty connecting
  // family or a degenerate separating one rather than an error.
  validate_region(dom, spec.region, 1, false);
  if (spec.truncation_j) {
    if (spec.kind != FamilyKind::separating)
      throw std::invalid_argument("family: truncation_j applies to separating families only");
    if (*spec.truncation_j < 1)
      throw std::invalid_argument("family: truncation_j must be a positive integer");
  }
}

UsageVector curve_usage(const MeshDomain& dom, const FamilySpec& spec,
                        std::span<const std::int32_t> path) {
  if (path.size() < 2) throw std::invalid_argument("curve_usage: path needs at least two cells");
  const auto n = dom.cell_count();
  const auto in_g = make_mask(n, spec.region.g);
  const auto in_e = make_mask(n, spec.region.e);
  const auto in_f = make_mask(n, spec.region.f);

  std::vector<char> visited(n, 0);
  for (std::size_t i = 0; i < path.size(); ++i) {
    const auto c = path[i];
    if (c < 0 || c >= n) throw std::invalid_argument("curve_usage: cell id out of range");
    if (!in_g[c]) throw std::invalid_argument("curve_usage: path leaves G");
    if (visited[c]) throw std::invalid_argument("curve_usage: path repeats a cell");
    visited[c] = 1;
    if (i > 0) {
      bool adjacent = false;
      for (const auto& nb : dom.neighbors(path[i - 1]))
        if (nb.cell == c) {
          adjacent = true;
          break;
        }
      if (!adjacent)
        throw std::invalid_argument("curve_usage: consecutive cells are not face-adjacent");
    }
  }
  if (!in_e[path.front()]) throw std::invalid_argument("curve_usage: path must start in E");
  if (!in_f[path.back()]) throw std::invalid_argument("curve_usage: path must end in F");

  const double h = dom.spacing();
  std::vector<std::pair<std::int32_t, double>> entries;
  entries.reserve(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) {
    const bool endpoint = i == 0 || i + 1 == path.size();
    entries.push_back({path[i], endpoint ? 0.5 * h : h});
  }
  return sorted_usage(std::move(entries));
}

UsageVector surface_usage(const MeshDomain& dom, const FamilySpec& spec,
                          std::span<const std::int32_t> faces) {
  const auto n = dom.cell_count();
  const auto in_g = make_mask(n, spec.region.g);
  std::vector<std::pair<std::int32_t, double>> entries;
  entries.reserve(faces.size() * 2);
  for (auto f : faces) {
    if (f < 0 || f >= dom.face_count())
      throw std::invalid_argument("surface_usage: face id out of range");
    const auto [c1, c2] = dom.face_cells(f);
    const bool g1 = in_g[c1];
    const bool g2 = c2 >= 0 && in_g[c2];
    const double a = dom.face_area(f);
    if (g1 && g2) {
      entries.push_back({c1, 0.5 * a});
      entries.push_back({c2, 0.5 * a});
    } else if (g1) {
      entries.push_back({c1, a});
    } else if (g2) {
      entries.push_back({c2, a});
    } else {
      throw std::invalid_argument("surface_usage: face outside the closure of G");
    }
  }
  return sorted_usage(std::move(entries));
}

bool is_separating(const MeshDomain& dom, const FamilySpec& spec,
                   std::span<const std::int32_t> faces) {
  if (spec.kind != FamilyKind::separating)
    throw std::invalid_argument("is_separating: spec must describe a separating family");
  const auto n = dom.cell_count();
  const auto in_g = make_mask(n, spec.region.g);
  std::vector<char> deleted(dom.face_count(), 0);
  for (auto f : faces) {
    if (f < 0 || f >= dom.face_count())
      throw std::invalid_argument("is_separating: face id out of range");
    deleted[f] = 1;
  }

  std::vector<std::int32_t> comp(n, -1);
  std::int32_t next = 0;
  for (auto seed : spec.region.g) {
    if (comp[seed] >= 0) continue;
    const auto label = next++;
    std::deque<std::int32_t> queue{seed};
    comp[seed] = label;
    while (!queue.empty()) {
      const auto c = queue.front();
      queue.pop_front();
      for (const auto& nb : dom.neighbors(c)) {
        if (!in_g[nb.cell] || deleted[nb.face] || comp[nb.cell] >= 0) continue;
        comp[nb.cell] = label;
        queue.push_back(nb.cell);
      }
    }
  }

  const auto side_e = comp[spec.region.e.front()];
  for (auto c : spec.region.e)
    if (comp[c] != side_e) return false;
  const auto side_f = comp[spec.region.f.front()];
  for (auto c : spec.region.f)
    if (comp[c] != side_f) return false;
  return side_e != side_f;
}

// ---------------------------------------------------------------------------
// Curve oracle
// ---------------------------------------------------------------------------

struct CurveOracle::Impl {
  const MeshDomain& dom;
  FamilySpec spec;
  std::vector<char> in_g, in_e, in_f;

  Impl(const MeshDomain& d, FamilySpec s) : dom(d), spec(std::move(s)) {
    validate_family_spec(dom, spec);
    if (spec.kind != FamilyKind::connecting)
      throw std::invalid_argument("CurveOracle: spec must describe a connecting family");
    const auto n = dom.cell_count();
    in_g = make_mask(n, spec.region.g);
    in_e = make_mask(n, spec.region.e);
    in_f = make_mask(n, spec.region.f);
  }

  UsageVector path_usage(std::span<const std::int32_t> path) const {
    const double h = dom.spacing();
    std::vector<std::pair<std::int32_t, double>> entries;
    entries.reserve(path.size());
    for (std::size_t i = 0; i < path.size(); ++i) {
      const bool endpoint = i == 0 || i + 1 == path.size();
      entries.push_back({path[i], endpoint ? 0.5 * h : h});
    }
    return sorted_usage(std::move(entries));
  }

  /// One shortest-path extraction; cells marked in `blocked` (if present)
  /// are impassable.
  OracleResult shortest(const Density& rho, const std::vector<char>* blocked) const {
    const auto n = dom.cell_count();
    const double h = dom.spacing();
    dist_buf.assign(n, kUnreachable);
    parent_buf.assign(n, -1);
    using Item = std::pair<double, std::int32_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    for (auto e : spec.region.e) {
      if (blocked && (*blocked)[e]) continue;
      dist_buf[e] = 0.0;
      heap.push({0.0, e});
    }

    OracleResult res;
    std::int32_t goal = -1;
    while (!heap.empty()) {
      const auto [d, c] = heap.top();
      heap.pop();
      if (d > dist_buf[c]) continue;
      if (in_f[c]) {
        goal = c;
        break;
      }
      for (const auto& nb : dom.neighbors(c)) {
        if (!in_g[nb.cell]) continue;
        if (blocked && (*blocked)[nb.cell]) continue;
        const double nd = d + 0.5 * h * (rho[c] + rho[nb.cell]);
        if (nd < dist_buf[nb.cell]) {
          dist_buf[nb.cell] = nd;
          parent_buf[nb.cell] = c;
          heap.push({nd, nb.cell});
        }
      }
    }
    if (goal < 0) {
      res.family_empty = true;
      return res;
    }
    for (auto c = goal; c >= 0; c = parent_buf[c]) res.object.push_back(c);
    std::reverse(res.object.begin(), res.object.end());
    res.usage = path_usage(res.object);
    res.value = res.usage.dot(rho);
    return res;
  }

  std::vector<OracleResult> batch(const Density& rho, double usage_threshold,
                                  int max_batch) const {
    std::vector<OracleResult> out;
    auto first = shortest(rho, nullptr);
    const bool empty = first.family_empty;
    out.push_back(std::move(first));
    if (empty || max_batch <= 1) return out;

    std::vector<char> blocked(dom.cell_count(), 0);
    while (static_cast<int>(out.size()) < max_batch) {
      if (out.back().value >= usage_threshold) break;
      for (auto c : out.back().object) blocked[c] = 1;
      auto next = shortest(rho, &blocked);
      if (next.family_empty || next.value >= usage_threshold) break;
      out.push_back(std::move(next));
    }
    return out;
  }

  mutable std::vector<double> dist_buf;
  mutable std::vector<std::int32_t> parent_buf;
};

CurveOracle::CurveOracle(const MeshDomain& dom, const FamilySpec& spec)
    : impl_(std::make_unique<Impl>(dom, spec)) {}
CurveOracle::~CurveOracle() = default;
CurveOracle::CurveOracle(CurveOracle&&) noexcept = default;

OracleResult CurveOracle::most_violated(const Density& rho) const {
  return impl_->shortest(rho, nullptr);
}

std::vector<OracleResult> CurveOracle::most_violated_batch(const Density& rho,
                                                           double usage_threshold,
                                                           int max_batch) const {
  return impl_->batch(rho, usage_threshold, max_batch);
}

// ---------------------------------------------------------------------------
// Cut oracle
// ---------------------------------------------------------------------------

namespace {

struct UnionFind {
  std::vector<std::int32_t> parent;

  explicit UnionFind(std::int32_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  std::int32_t find(std::int32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void merge(std::int32_t a, std::int32_t b) { parent[find(a)] = find(b); }
};

struct Dinic {
  struct Arc {
    std::int32_t to;
    std::int32_t rev;
  };

  std::int32_t nodes = 0;
  std::vector<Arc> arcs;
  std::vector<double> base_cap;
  std::vector<std::int32_t> head_off;
  std::vector<std::int32_t> arc_at;  // CSR arc index list

  // Assembly buffers; finalize() packs them into CSR form.
  std::vector<std::array<std::int32_t, 2>> pending;  // (from, to)
  std::vector<double> pending_cap;

  std::int32_t add_arc(std::int32_t from, std::int32_t to, double cap) {
    pending.push_back({from, to});
    pending_cap.push_back(cap);
    return static_cast<std::int32_t>(pending.size()) - 1;
  }

  void add_edge_pair(std::int32_t u, std::int32_t v, double cap_uv, double cap_vu) {
    add_arc(u, v, cap_uv);
    add_arc(v, u, cap_vu);
  }

  void finalize(std::int32_t node_count) {
    nodes = node_count;
    const auto m = static_cast<std::int32_t>(pending.size());
    arcs.resize(m);
    base_cap.resize(m);
    head_off.assign(nodes + 1, 0);
    arc_at.resize(m);
    std::vector<std::int32_t> degree(nodes, 0);
    for (const auto& [from, to] : pending) ++degree[from];
    for (std::int32_t v = 0; v < nodes; ++v) head_off[v + 1] = head_off[v] + degree[v];
    std::vector<std::int32_t> cursor(head_off.begin(), head_off.end() - 1);
    std::vector<std::int32_t> slot(m);
    for (std::int32_t a = 0; a < m; ++a) slot[a] = cursor[pending[a][0]]++;
    for (std::int32_t a = 0; a < m; ++a) {
      arc_at[slot[a]] = a;
      arcs[a].to = pending[a][1];
      base_cap[a] = pending_cap[a];
    }
    // Arcs were appended in mutually reverse pairs.
    for (std::int32_t a = 0; a < m; a += 2) {
      arcs[a].rev = a + 1;
      arcs[a + 1].rev = a;
    }
    pending.clear();
    pending.shrink_to_fit();
    pending_cap.clear();
    pending_cap.shrink_to_fit();
  }

  /// Runs max-flow on a working copy of capacities; returns (flow value,
  /// residual source side). FIFO push-relabel with the gap heuristic and
  /// periodic global relabeling; robust for real-valued capacities.
  std::pair<double, std::vector<char>> max_flow(std::vector<double>& cap,
                                                std::int32_t s, std::int32_t t) const {
    double scale = 0.0;
    for (double c : cap) scale = std::max(scale, c == kFlowInf ? 0.0 : c);
    const double eps = std::max(scale, 1.0) * 1e-14;
    const auto n = nodes;

    std::vector<std::int32_t> height(n, 0);
    std::vector<double> excess(n, 0.0);
    std::vector<std::int32_t> cur(head_off.begin(), head_off.end() - 1);
    std::vector<std::int32_t> gap_count(2 * n + 1, 0);
    std::deque<std::int32_t> active;
    std::deque<std::int32_t> bfs_queue;

    auto push = [&](std::int32_t v, std::int32_t a) {
      const auto to = arcs[a].to;
      const double amount = std::min(excess[v], cap[a]);
      cap[a] -= amount;
      cap[arcs[a].rev] += amount;
      excess[v] -= amount;
      if (excess[to] <= eps && to != s && to != t && amount > 0.0) active.push_back(to);
      excess[to] += amount;
    };

    // Exact heights from a reverse-residual BFS rooted at the sink.
    auto global_relabel = [&]() {
      for (std::int32_t v = 0; v < n; ++v) height[v] = 2 * n;
      std::fill(gap_count.begin(), gap_count.end(), 0);
      height[t] = 0;
      bfs_queue.clear();
      bfs_queue.push_back(t);
      while (!bfs_queue.empty()) {
        const auto v = bfs_queue.front();
        bfs_queue.pop_front();
        for (auto i = head_off[v]; i < head_off[v + 1]; ++i) {
          const auto a = arc_at[i];
          const auto u = arcs[a].to;
          // u can reach v through the reverse arc when that arc has
          // residual capacity.
          if (cap[arcs[a].rev] > eps && height[u] == 2 * n && u != s) {
            height[u] = height[v] + 1;
            bfs_queue.push_back(u);
          }
        }
      }
      height[s] = n;
      for (std::int32_t v = 0; v < n; ++v)
        if (height[v] < 2 * n) ++gap_count[height[v]];
      std::copy(head_off.begin(), head_off.end() - 1, cur.begin());
    };

    global_relabel();
    excess[s] = kFlowInf;
    for (auto i = head_off[s]; i < head_off[s + 1]; ++i) {
      const auto a = arc_at[i];
      if (cap[a] > eps) push(s, a);
    }

    const std::int64_t relabel_budget = 6LL * static_cast<std::int64_t>(arcs.size()) + 16;
    std::int64_t work = 0;

    while (!active.empty()) {
      const auto v = active.front();
      active.pop_front();
      if (excess[v] <= eps || height[v] >= 2 * n) continue;

      while (excess[v] > eps) {
        if (cur[v] == head_off[v + 1]) {
          // Relabel: one above the lowest admissible neighbour.
          const auto old_height = height[v];
          std::int32_t best = 2 * n;
          for (auto i = head_off[v]; i < head_off[v + 1]; ++i) {
            const auto a = arc_at[i];
            if (cap[a] > eps) best = std::min(best, height[arcs[a].to] + 1);
          }
          work += head_off[v + 1] - head_off[v];
          if (old_height < 2 * n) {
            --gap_count[old_height];
            // Gap heuristic: heights above an empty level are dead.
            if (gap_count[old_height] == 0 && old_height < n) {
              for (std::int32_t u = 0; u < n; ++u) {
                if (height[u] > old_height && height[u] < n && u != s) {
                  --gap_count[height[u]];
                  height[u] = n + 1;
                }
              }
            }
          }
          height[v] = best;
          if (best < 2 * n) ++gap_count[best];
          cur[v] = head_off[v];
          if (height[v] >= 2 * n) break;
        }
        const auto a = arc_at[cur[v]];
        if (cap[a] > eps && height[v] == height[arcs[a].to] + 1) {
          push(v, a);
        } else {
          ++cur[v];
        }
      }
      if (excess[v] > eps && height[v] < 2 * n) active.push_back(v);

      if (work > relabel_budget) {
        work = 0;
        global_relabel();
        // Re-collect the active nodes under the fresh heights.
        active.clear();
        for (std::int32_t u = 0; u < n; ++u)
          if (u != s && u != t && excess[u] > eps && height[u] < 2 * n)
            active.push_back(u);
      }
    }

    const double flow = excess[t];
    std::vector<char> source_side(n, 0);
    bfs_queue.clear();
    bfs_queue.push_back(s);
    source_side[s] = 1;
    while (!bfs_queue.empty()) {
      const auto v = bfs_queue.front();
      bfs_queue.pop_front();
      for (auto i = head_off[v]; i < head_off[v + 1]; ++i) {
        const auto a = arc_at[i];
        if (cap[a] > eps && !source_side[arcs[a].to]) {
          source_side[arcs[a].to] = 1;
          bfs_queue.push_back(arcs[a].to);
        }
      }
    }
    return {flow, std::move(source_side)};
  }
};

}  // namespace

struct CutOracle::Impl {
  const MeshDomain& dom;
  FamilySpec spec;
  std::vector<char> in_g, in_ef;
  std::vector<char> excluded;            // per face
  std::vector<std::int32_t> candidate;   // cuttable faces
  std::vector<std::int32_t> node_of;     // cell -> flow node (via representative), -1 off G
  std::vector<std::int32_t> face_arc;    // candidate index -> first arc id
  bool family_empty = false;
  std::int32_t node_count = 0;
  std::int32_t source = 0, sink = 0;
  Dinic net;

  Impl(const MeshDomain& d, FamilySpec s) : dom(d), spec(std::move(s)) {
    validate_family_spec(dom, spec);
    if (spec.kind != FamilyKind::separating)
      throw std::invalid_argument("CutOracle: spec must describe a separating family");
    const auto n = dom.cell_count();
    in_g = make_mask(n, spec.region.g);
    in_ef = make_mask(n, spec.region.e);
    for (auto c : spec.region.f) in_ef[c] = 1;

    excluded.assign(dom.face_count(), 0);
    if (spec.truncation_j) {
      // A face sits within distance 1/j of E u F when the nearest cell
      // center beside it (outside E u F) does; faces buried inside E u F
      // are excluded outright.
      std::vector<std::int32_t> sources(spec.region.e);
      sources.insert(sources.end(), spec.region.f.begin(), spec.region.f.end());
      const auto dist = geodesic_field(dom, sources, in_g);
      const double reach = 1.0 / *spec.truncation_j;
      for (std::int32_t f = 0; f < dom.face_count(); ++f) {
        const auto [c1, c2] = dom.face_cells(f);
        if (c2 < 0 || !in_g[c1] || !in_g[c2]) continue;
        double d_face = kUnreachable;
        if (!in_ef[c1]) d_face = std::min(d_face, dist[c1]);
        if (!in_ef[c2]) d_face = std::min(d_face, dist[c2]);
        if (in_ef[c1] && in_ef[c2]) d_face = 0.0;
        if (d_face <= reach) excluded[f] = 1;
      }
    }

    UnionFind uf(n);
    for (std::int32_t f = 0; f < dom.face_count(); ++f) {
      if (!excluded[f]) continue;
      const auto [c1, c2] = dom.face_cells(f);
      uf.merge(c1, c2);
    }

    node_of.assign(n, -1);
    std::vector<std::int32_t> rep_node(n, -1);
    for (auto c : spec.region.g) {
      const auto r = uf.find(c);
      if (rep_node[r] < 0) rep_node[r] = node_count++;
      node_of[c] = rep_node[r];
    }
    source = node_count;
    sink = node_count + 1;

    std::vector<char> is_source_node(node_count, 0), is_sink_node(node_count, 0);
    for (auto c : spec.region.e) is_source_node[node_of[c]] = 1;
    for (auto c : spec.region.f) is_sink_node[node_of[c]] = 1;
    for (std::int32_t v = 0; v < node_count; ++v)
      if (is_source_node[v] && is_sink_node[v]) family_empty = true;
    if (family_empty) return;

    for (std::int32_t f = 0; f < dom.face_count(); ++f) {
      if (excluded[f]) continue;
      const auto [c1, c2] = dom.face_cells(f);
      if (c2 < 0 || !in_g[c1] || !in_g[c2]) continue;
      const auto u = node_of[c1];
      const auto v = node_of[c2];
      if (u == v) continue;
      candidate.push_back(f);
      face_arc.push_back(net.add_arc(u, v, 0.0));
      net.add_arc(v, u, 0.0);
    }
    for (std::int32_t v = 0; v < node_count; ++v) {
      if (is_source_node[v]) net.add_edge_pair(source, v, kFlowInf, 0.0);
      if (is_sink_node[v]) net.add_edge_pair(v, sink, kFlowInf, 0.0);
    }
    net.finalize(node_count + 2);
    build_shells();
  }

  // Distance shells around E form a ladder of cheap separating face sets
  // that the batch oracle can test without running a max-flow each.
  std::vector<std::vector<std::int32_t>> shells;

  void build_shells() {
    if (family_empty) return;
    const auto dist = geodesic_field(dom, spec.region.e, in_g);
    double f_min = kUnreachable;
    for (auto c : spec.region.f) f_min = std::min(f_min, dist[c]);
    if (!(f_min > 0.0) || f_min == kUnreachable) return;
    const double h = dom.spacing();
    const int levels = static_cast<int>(std::floor(f_min / h + 0.5));
    std::vector<std::vector<std::int32_t>> ladder(std::max(0, levels));
    std::vector<char> bad(ladder.size(), 0);
    for (std::int32_t f = 0; f < dom.face_count(); ++f) {
      const auto [c1, c2] = dom.face_cells(f);
      if (c2 < 0 || !in_g[c1] || !in_g[c2]) continue;
      const double d1 = dist[c1];
      const double d2 = dist[c2];
      if (d1 == d2) continue;
      const double lo = std::min(d1, d2);
      if (lo == kUnreachable) continue;
      // BFS distances of adjacent cells differ by at most h, so the face
      // crosses exactly the threshold at its lower distance.
      const int level = static_cast<int>(std::floor(lo / h + 0.5));
      if (level < 0 || level >= static_cast<int>(ladder.size())) continue;
      if (excluded[f]) {
        bad[level] = 1;
        continue;
      }
      ladder[level].push_back(f);
    }
    for (std::size_t i = 0; i < ladder.size(); ++i) {
      if (bad[i] || ladder[i].empty()) continue;
      std::sort(ladder[i].begin(), ladder[i].end());
      shells.push_back(std::move(ladder[i]));
    }
  }

  UsageVector cut_usage(std::span<const std::int32_t> faces) const {
    std::vector<std::pair<std::int32_t, double>> entries;
    entries.reserve(faces.size() * 2);
    for (auto f : faces) {
      const auto [c1, c2] = dom.face_cells(f);
      const double a = dom.face_area(f);
      entries.push_back({c1, 0.5 * a});
      entries.push_back({c2, 0.5 * a});
    }
    return sorted_usage(std::move(entries));
  }

  OracleResult most_violated(const Density& rho) const {
    OracleResult res;
    if (family_empty) {
      res.family_empty = true;
      return res;
    }
    std::vector<double> cap(net.base_cap);
    for (std::size_t i = 0; i < candidate.size(); ++i) {
      const auto f = candidate[i];
      const auto [c1, c2] = dom.face_cells(f);
      const double c = dom.face_area(f) * 0.5 * (rho[c1] + rho[c2]);
      cap[face_arc[i]] = c;
      cap[face_arc[i] + 1] = c;
    }
    auto [flow, source_side] = net.max_flow(cap, source, sink);
    (void)flow;
    for (std::size_t i = 0; i < candidate.size(); ++i) {
      const auto f = candidate[i];
      const auto [c1, c2] = dom.face_cells(f);
      if (source_side[node_of[c1]] != source_side[node_of[c2]])
        res.object.push_back(f);
    }
    std::sort(res.object.begin(), res.object.end());
    res.usage = cut_usage(res.object);
    res.value = res.usage.dot(rho);
    return res;
  }
};

CutOracle::CutOracle(const MeshDomain& dom, const FamilySpec& spec)
    : impl_(std::make_unique<Impl>(dom, spec)) {}
CutOracle::~CutOracle() = default;
CutOracle::CutOracle(CutOracle&&) noexcept = default;

OracleResult CutOracle::most_violated(const Density& rho) const {
  return impl_->most_violated(rho);
}

std::vector<OracleResult> CutOracle::most_violated_batch(const Density& rho,
                                                         double usage_threshold,
                                                         int max_batch) const {
  std::vector<OracleResult> out;
  out.push_back(impl_->most_violated(rho));
  if (out.front().family_empty || max_batch <= 1) return out;
  if (out.front().value >= usage_threshold) return out;

  for (const auto& shell : impl_->shells) {
    if (static_cast<int>(out.size()) >= max_batch) break;
    if (shell == out.front().object) continue;
    OracleResult res;
    res.object = shell;
    res.usage = impl_->cut_usage(shell);
    res.value = res.usage.dot(rho);
    if (res.value < usage_threshold) out.push_back(std::move(res));
  }
  return out;
}

const std::vector<char>& CutOracle::excluded_faces() const { return impl_->excluded; }

OracleResult min_weight_curve(const MeshDomain& dom, const FamilySpec& spec,
                              const Density& rho) {
  return CurveOracle(dom, spec).most_violated(rho);
}

OracleResult min_weight_cut(const MeshDomain& dom, const FamilySpec& spec,
                            const Density& rho) {
  return CutOracle(dom, spec).most_violated(rho);
}

std::string object_to_json(std::span<const std::int32_t> ids) {
  nlohmann::json j = nlohmann::json::array();
  for (auto id : ids) j.push_back(id);
  return j.dump();
}

std::vector<std::int32_t> object_from_json(std::string_view text) {
  const auto j = nlohmann::json::parse(text);
  std::vector<std::int32_t> ids;
  for (const auto& v : j) ids.push_back(v.get<std::int32_t>());
  return ids;
}

}  // namespace modlab
