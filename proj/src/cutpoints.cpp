#include "slecut/cutpoints.hpp"

#include <algorithm>
#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <tuple>
#include <stdexcept>
#include <unordered_map>

#include "slecut/csv.hpp"

namespace slecut::cutpoints {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

cplx SceneSample::vertex(std::size_t i) const {
  if (i < curve.size()) return curve[i];
  i -= curve.size();
  if (i < arc1.size()) return arc1[i];
  return arc2.at(i - arc1.size());
}

void SceneSample::validate() const {
  if (size() == 0) throw std::invalid_argument("empty scene");
  if (local_eps.empty()) {
    if (!(epsilon > 0)) throw std::invalid_argument("scene epsilon must be positive");
  } else {
    if (local_eps.size() != size()) throw std::invalid_argument("local_eps must have one entry per vertex");
    for (double e : local_eps)
      if (!(e > 0)) throw std::invalid_argument("local epsilon must be positive");
  }
  for (const auto& l : links)
    if (l[0] >= size() || l[1] >= size()) throw std::invalid_argument("link index out of range");
}

namespace {
std::vector<cplx> sample_arc(double lo, double hi, double anchor, double step) {
  // angles anchor + k*step inside [lo, hi]
  std::vector<cplx> out;
  if (!(hi > lo)) return out;
  const long long k0 = static_cast<long long>(std::ceil((lo - anchor) / step));
  const long long k1 = static_cast<long long>(std::floor((hi - anchor) / step));
  for (long long k = k0; k <= k1; ++k) out.push_back(std::polar(1.0, anchor + static_cast<double>(k) * step));
  return out;
}

double max_gap(std::span<const cplx> c) {
  double g = 0;
  for (std::size_t i = 1; i < c.size(); ++i) g = std::max(g, std::abs(c[i] - c[i - 1]));
  return g;
}
}  // namespace

SceneSample make_scene(std::span<const cplx> curve, const green::BoundaryConfig& cfg, const SceneOptions& opt) {
  cfg.validate();
  if (curve.size() < 2) throw std::invalid_argument("curve needs at least two points");
  if (!(opt.eps_factor > 2)) throw std::invalid_argument("eps_factor must exceed 2");
  SceneSample s;
  s.curve.assign(curve.begin(), curve.end());
  double arc_step;
  if (!opt.adaptive) {
    s.epsilon = opt.eps_factor * max_gap(curve);
    if (!(s.epsilon > 0)) throw std::invalid_argument("curve points coincide");
    arc_step = s.epsilon / opt.eps_factor;
  } else {
    // arcs inherit the coarsest spacing the curve uses near the circle
    double g_edge = 0;
    for (std::size_t i = 1; i < curve.size(); ++i)
      if (std::abs(curve[i]) > 0.8 || std::abs(curve[i - 1]) > 0.8) g_edge = std::max(g_edge, std::abs(curve[i] - curve[i - 1]));
    arc_step = g_edge > 0 ? g_edge : max_gap(curve);
    s.epsilon = opt.eps_factor * arc_step;
  }
  const double margin = opt.eps_factor * arc_step;
  // arc1 spans (v1, v2 + 2pi) and contains w1; arc2 spans (v2, v1) and contains w2
  s.arc1 = sample_arc(cfg.v1 + margin, cfg.v2 + 2 * kPi - margin, cfg.w1, arc_step);
  s.arc2 = sample_arc(cfg.v2 + margin, cfg.v1 - margin, cfg.w2, arc_step);
  if (opt.adaptive) {
    s.local_eps.resize(s.size());
    for (std::size_t i = 0; i < curve.size(); ++i) {
      double g = 0;
      if (i > 0) g = std::max(g, std::abs(curve[i] - curve[i - 1]));
      if (i + 1 < curve.size()) g = std::max(g, std::abs(curve[i + 1] - curve[i]));
      s.local_eps[i] = opt.eps_factor * std::max(g, 1e-14);
    }
    for (std::size_t i = curve.size(); i < s.size(); ++i) s.local_eps[i] = opt.eps_factor * arc_step;
  }
  if (opt.close_tip && !s.arc2.empty()) {
    // arc2 vertex closest to a2
    const cplx a2 = std::polar(1.0, cfg.w2);
    std::size_t best = 0;
    for (std::size_t k = 1; k < s.arc2.size(); ++k)
      if (std::abs(s.arc2[k] - a2) < std::abs(s.arc2[best] - a2)) best = k;
    s.links.push_back({curve.size() - 1, curve.size() + s.arc1.size() + best});
  }
  return s;
}

// ---------------------------------------------------------------- graph

ProximityGraph::ProximityGraph(std::size_t n, std::vector<std::array<std::size_t, 2>> edges) {
  for (auto& e : edges) {
    if (e[0] >= n || e[1] >= n) throw std::invalid_argument("edge index out of range");
    if (e[0] > e[1]) std::swap(e[0], e[1]);
  }
  std::erase_if(edges, [](const auto& e) { return e[0] == e[1]; });
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  n_edges_ = edges.size();
  offsets_.assign(n + 1, 0);
  for (const auto& e : edges) ++offsets_[e[0] + 1], ++offsets_[e[1] + 1];
  for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] += offsets_[i];
  adj_.resize(2 * edges.size());
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (const auto& e : edges) adj_[fill[e[0]]++] = e[1], adj_[fill[e[1]]++] = e[0];
  comp_.assign(n, -1);
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp_[s] >= 0) continue;
    comp_[s] = n_comp_;
    stack.push_back(s);
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      for (std::size_t w : neighbours(v))
        if (comp_[w] < 0) comp_[w] = n_comp_, stack.push_back(w);
    }
    ++n_comp_;
  }
}

namespace {
struct CellKey {
  long long x, y;
  bool operator==(const CellKey&) const = default;
};
struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    return std::hash<long long>()(k.x * 0x9E3779B97F4A7C15LL ^ (k.y + 0x632BE59BD9B4E019LL));
  }
};

std::vector<std::array<std::size_t, 2>> uniform_edges(const SceneSample& s) {
  const double eps = s.epsilon;
  std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> grid;
  std::vector<cplx> pts(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    pts[i] = s.vertex(i);
    grid[{static_cast<long long>(std::floor(pts[i].real() / eps)), static_cast<long long>(std::floor(pts[i].imag() / eps))}]
        .push_back(i);
  }
  std::vector<std::array<std::size_t, 2>> edges;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const long long cx = static_cast<long long>(std::floor(pts[i].real() / eps));
    const long long cy = static_cast<long long>(std::floor(pts[i].imag() / eps));
    for (long long dx = -1; dx <= 1; ++dx)
      for (long long dy = -1; dy <= 1; ++dy) {
        const auto it = grid.find({cx + dx, cy + dy});
        if (it == grid.end()) continue;
        for (std::size_t j : it->second)
          if (j > i && std::abs(pts[i] - pts[j]) < eps) edges.push_back({i, j});
      }
  }
  return edges;
}

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;
using BPoint = bg::model::point<double, 2, bg::cs::cartesian>;
using BBox = bg::model::box<BPoint>;

std::vector<std::array<std::size_t, 2>> adaptive_edges(const SceneSample& s) {
  std::vector<std::pair<BPoint, std::size_t>> items;
  items.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) items.push_back({BPoint(s.vertex(i).real(), s.vertex(i).imag()), i});
  const bgi::rtree<std::pair<BPoint, std::size_t>, bgi::rstar<16>> tree(items.begin(), items.end());
  std::vector<std::array<std::size_t, 2>> edges;
  std::vector<std::pair<BPoint, std::size_t>> hits;
  for (std::size_t i = 0; i < s.size(); ++i) {
    // a partner with eps_j <= eps_i lies within eps_i; larger partners find i themselves
    const cplx p = s.vertex(i);
    const double e = s.eps(i);
    hits.clear();
    tree.query(bgi::intersects(BBox(BPoint(p.real() - e, p.imag() - e), BPoint(p.real() + e, p.imag() + e))),
               std::back_inserter(hits));
    for (const auto& [q, j] : hits) {
      if (j == i) continue;
      const double ej = s.eps(j);
      if (ej > e || (ej == e && j < i)) continue;
      if (std::abs(p - s.vertex(j)) < 0.5 * (e + ej)) edges.push_back({i, j});
    }
  }
  return edges;
}
}  // namespace

ProximityGraph build_graph(const SceneSample& scene) {
  scene.validate();
  auto edges = scene.local_eps.empty() ? uniform_edges(scene) : adaptive_edges(scene);
  edges.insert(edges.end(), scene.links.begin(), scene.links.end());
  return ProximityGraph(scene.size(), std::move(edges));
}

ProximityGraph build_graph_bruteforce(const SceneSample& scene) {
  scene.validate();
  std::vector<std::array<std::size_t, 2>> edges(scene.links.begin(), scene.links.end());
  for (std::size_t i = 0; i < scene.size(); ++i)
    for (std::size_t j = i + 1; j < scene.size(); ++j)
      if (std::abs(scene.vertex(i) - scene.vertex(j)) < 0.5 * (scene.eps(i) + scene.eps(j))) edges.push_back({i, j});
  return ProximityGraph(scene.size(), std::move(edges));
}

// ---------------------------------------------------------------- articulation

namespace {
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

struct Dfs {
  std::vector<std::size_t> disc, low, parent, ca, cb;  // ca/cb: group members in the subtree
};

// Iterative low-link DFS from root; counts group members per subtree.
Dfs low_link(const ProximityGraph& g, std::size_t root, const std::vector<char>& in_a, const std::vector<char>& in_b) {
  const std::size_t n = g.size();
  Dfs d;
  d.disc.assign(n, kNone);
  d.low.assign(n, 0);
  d.parent.assign(n, kNone);
  d.ca.assign(n, 0);
  d.cb.assign(n, 0);
  std::vector<std::pair<std::size_t, std::size_t>> stack;  // (vertex, next neighbour position)
  std::size_t time = 0;
  d.disc[root] = d.low[root] = time++;
  d.ca[root] = in_a[root], d.cb[root] = in_b[root];
  stack.push_back({root, 0});
  while (!stack.empty()) {
    auto& [v, pos] = stack.back();
    const auto nb = g.neighbours(v);
    if (pos < nb.size()) {
      const std::size_t w = nb[pos++];
      if (d.disc[w] == kNone) {
        d.parent[w] = v;
        d.disc[w] = d.low[w] = time++;
        d.ca[w] = in_a[w], d.cb[w] = in_b[w];
        stack.push_back({w, 0});
      } else if (w != d.parent[v]) {
        d.low[v] = std::min(d.low[v], d.disc[w]);
      }
    } else {
      const std::size_t done = v;
      stack.pop_back();
      const std::size_t p = d.parent[done];
      if (p != kNone) {
        d.low[p] = std::min(d.low[p], d.low[done]);
        d.ca[p] += d.ca[done];
        d.cb[p] += d.cb[done];
      }
    }
  }
  return d;
}

// For each vertex: is it an articulation vertex, and does it separate A from B.
struct Classification {
  std::vector<char> articulation, separating;
};

Classification classify(const ProximityGraph& g, std::span<const std::size_t> group_a, std::span<const std::size_t> group_b) {
  if (g.size() == 0) return {};
  if (!g.connected()) throw std::invalid_argument("graph is disconnected");
  const std::size_t n = g.size();
  std::vector<char> in_a(n, 0), in_b(n, 0);
  for (auto v : group_a) in_a.at(v) = 1;
  for (auto v : group_b) in_b.at(v) = 1;
  const std::size_t root = group_a.empty() ? 0 : group_a.front();
  const Dfs d = low_link(g, root, in_a, in_b);
  const std::size_t ta = d.ca[root], tb = d.cb[root];
  const bool any = ta == 0 || tb == 0;

  Classification out;
  out.articulation.assign(n, 0);
  out.separating.assign(n, 0);
  // children lists in discovery order are implicit through parent[]
  std::vector<std::vector<std::size_t>> kids(n);
  for (std::size_t w = 0; w < n; ++w)
    if (d.parent[w] != kNone) kids[d.parent[w]].push_back(w);
  for (std::size_t v = 0; v < n; ++v) {
    // components after removing v: separated child subtrees, plus the rest
    std::size_t split = 0, rest_a = ta - in_a[v], rest_b = tb - in_b[v];
    std::size_t comps_a = 0, comps_b = 0;
    bool mixed_piece = false;  // a single piece holding both groups
    for (std::size_t c : kids[v]) {
      if (v != root && d.low[c] < d.disc[v]) continue;
      ++split;
      rest_a -= d.ca[c];
      rest_b -= d.cb[c];
      comps_a += d.ca[c] > 0;
      comps_b += d.cb[c] > 0;
      mixed_piece |= d.ca[c] > 0 && d.cb[c] > 0;
    }
    const bool has_rest = v != root;
    std::size_t pieces = split + (has_rest ? 1 : 0);
    if (has_rest) {
      comps_a += rest_a > 0;
      comps_b += rest_b > 0;
      mixed_piece |= rest_a > 0 && rest_b > 0;
    }
    if (v == root ? split >= 2 : split >= 1) out.articulation[v] = 1;
    if (!out.articulation[v]) continue;
    if (any) {
      out.separating[v] = 1;
    } else if (comps_a >= 1 && comps_b >= 1 && pieces >= 2) {
      // separated unless both groups sit in one and the same piece only
      out.separating[v] = !(comps_a == 1 && comps_b == 1 && mixed_piece);
    }
  }
  return out;
}

std::vector<std::size_t> arc_vertices(const SceneSample& s, int which) {
  std::vector<std::size_t> out;
  const std::size_t lo = s.curve.size() + (which == 2 ? s.arc1.size() : 0);
  const std::size_t n = which == 1 ? s.arc1.size() : s.arc2.size();
  for (std::size_t k = 0; k < n; ++k) out.push_back(lo + k);
  return out;
}

// Removing every curve vertex within eps(v) of v: is no remaining piece attached to both
// groups (or, with a group empty, does the graph fall apart)? Arc vertices stay.
bool thickened_separates(const SceneSample& s, const ProximityGraph& g, std::size_t v, const std::vector<std::size_t>& A,
                         const std::vector<std::size_t>& B) {
  const std::size_t n = g.size();
  const cplx pv = s.vertex(v);
  const double e = s.eps(v);
  std::vector<char> removed(n, 0);
  for (std::size_t i = 0; i < s.curve.size(); ++i) removed[i] = std::abs(s.curve[i] - pv) < e;
  removed[v] = 1;
  std::vector<int> comp(n, -1);
  int nc = 0;
  for (std::size_t st = 0; st < n; ++st) {
    if (removed[st] || comp[st] >= 0) continue;
    std::vector<std::size_t> q{st};
    comp[st] = nc;
    while (!q.empty()) {
      const std::size_t x = q.back();
      q.pop_back();
      for (std::size_t y : g.neighbours(x))
        if (!removed[y] && comp[y] < 0) comp[y] = nc, q.push_back(y);
    }
    ++nc;
  }
  if (A.empty() || B.empty()) return nc >= 2;
  std::vector<char> has_a(nc, 0);
  for (auto a : A) has_a[comp[a]] = 1;
  for (auto b : B)
    if (has_a[comp[b]]) return false;
  return true;
}

// Union-find with undo, for offline deletion.
class RollbackDsu {
 public:
  explicit RollbackDsu(std::size_t n) : parent_(n), rank_(n, 0) {
    for (std::size_t i = 0; i < n; ++i) parent_[i] = i;
  }
  std::size_t find(std::size_t x) const {
    while (parent_[x] != x) x = parent_[x];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a), b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    history_.push_back({b, rank_[a] == rank_[b]});
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }
  std::size_t mark() const { return history_.size(); }
  void undo(std::size_t to) {
    while (history_.size() > to) {
      const auto [b, bumped] = history_.back();
      history_.pop_back();
      const std::size_t a = parent_[b];
      parent_[b] = b;
      if (bumped) --rank_[a];
    }
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<int> rank_;
  std::vector<std::pair<std::size_t, bool>> history_;
};

using Runs = std::vector<std::array<std::size_t, 2>>;  // half-open [lo, hi)

Runs to_runs(std::vector<std::size_t>& pos) {
  std::sort(pos.begin(), pos.end());
  Runs r;
  for (std::size_t p : pos) {
    if (!r.empty() && r.back()[1] >= p) r.back()[1] = std::max(r.back()[1], p + 1);
    else r.push_back({p, p + 1});
  }
  return r;
}

// Complement within [0, n) of the union of two sorted run lists.
Runs present_runs(const Runs& a, const Runs& b, std::size_t n) {
  Runs u;
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(u));
  Runs out;
  std::size_t cur = 0;
  for (const auto& r : u) {
    if (r[0] > cur) out.push_back({cur, r[0]});
    cur = std::max(cur, r[1]);
  }
  if (cur < n) out.push_back({cur, n});
  return out;
}

struct SegmentTree {
  std::size_t n;
  std::vector<std::vector<std::array<std::size_t, 2>>> edges;
  explicit SegmentTree(std::size_t n_) : n(n_), edges(4 * std::max<std::size_t>(n_, 1)) {}
  void add(std::size_t lo, std::size_t hi, std::array<std::size_t, 2> e) { add(1, 0, n, lo, hi, e); }
  void add(std::size_t node, std::size_t l, std::size_t r, std::size_t lo, std::size_t hi, std::array<std::size_t, 2> e) {
    if (hi <= l || r <= lo) return;
    if (lo <= l && r <= hi) {
      edges[node].push_back(e);
      return;
    }
    const std::size_t m = (l + r) / 2;
    add(2 * node, l, m, lo, hi, e);
    add(2 * node + 1, m, r, lo, hi, e);
  }
};

// Thickened verdict for every candidate at once: candidate p deletes the curve
// vertices of its ball; an edge lives on the candidate runs where both ends stay.
std::vector<char> thickened_offline(const SceneSample& s, const ProximityGraph& g, const std::vector<std::size_t>& cand,
                                    const std::vector<std::size_t>& A, const std::vector<std::size_t>& B) {
  const std::size_t C = cand.size(), nc = s.curve.size();
  std::vector<char> out(C, 0);
  if (C == 0) return out;
  // absent positions per curve vertex, via a grid at the largest candidate radius
  double emax = 0;
  for (auto c : cand) emax = std::max(emax, s.eps(c));
  std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> grid;
  auto cell = [&](cplx p) {
    return CellKey{static_cast<long long>(std::floor(p.real() / emax)), static_cast<long long>(std::floor(p.imag() / emax))};
  };
  for (std::size_t i = 0; i < nc; ++i) grid[cell(s.curve[i])].push_back(i);
  std::unordered_map<std::size_t, std::vector<std::size_t>> absent_pos;
  for (std::size_t p = 0; p < C; ++p) {
    const cplx pv = s.vertex(cand[p]);
    const double e = s.eps(cand[p]);
    const CellKey k = cell(pv);
    for (long long dx = -1; dx <= 1; ++dx)
      for (long long dy = -1; dy <= 1; ++dy) {
        const auto it = grid.find({k.x + dx, k.y + dy});
        if (it == grid.end()) continue;
        for (std::size_t i : it->second)
          if (i == cand[p] || std::abs(s.curve[i] - pv) < e) absent_pos[i].push_back(p);
      }
  }
  std::unordered_map<std::size_t, Runs> absent;
  for (auto& [i, pos] : absent_pos) absent.emplace(i, to_runs(pos));

  const std::size_t n = g.size();
  RollbackDsu dsu(n);
  for (std::size_t k = 1; k < A.size(); ++k) dsu.unite(A[0], A[k]);
  for (std::size_t k = 1; k < B.size(); ++k) dsu.unite(B[0], B[k]);
  SegmentTree tree(C);
  static const Runs kNoRuns;
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y : g.neighbours(x)) {
      if (y <= x) continue;
      const auto ix = absent.find(x), iy = absent.find(y);
      if (ix == absent.end() && iy == absent.end()) {
        dsu.unite(x, y);
        continue;
      }
      const Runs& ax = ix == absent.end() ? kNoRuns : ix->second;
      const Runs& ay = iy == absent.end() ? kNoRuns : iy->second;
      for (const auto& r : present_runs(ax, ay, C)) tree.add(r[0], r[1], {x, y});
    }
  // iterative walk of the segment tree with undo marks
  struct Frame {
    std::size_t node, l, r, mark;
    bool entered;
  };
  std::vector<Frame> stack{{1, 0, C, 0, false}};
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.entered) {
      dsu.undo(f.mark);
      stack.pop_back();
      continue;
    }
    f.entered = true;
    f.mark = dsu.mark();
    for (const auto& e : tree.edges[f.node]) dsu.unite(e[0], e[1]);
    const auto [node, l, r] = std::tuple{f.node, f.l, f.r};
    if (r - l == 1) {
      out[l] = dsu.find(A[0]) != dsu.find(B[0]);
      continue;
    }
    const std::size_t m = (l + r) / 2;
    stack.push_back({2 * node + 1, m, r, 0, false});
    stack.push_back({2 * node, l, m, 0, false});
  }
  return out;
}
}  // namespace

std::vector<std::size_t> articulation_points(const ProximityGraph& g) {
  const auto c = classify(g, {}, {});
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < c.articulation.size(); ++v)
    if (c.articulation[v]) out.push_back(v);
  return out;
}

std::vector<std::size_t> separating_vertices(const ProximityGraph& g, std::span<const std::size_t> group_a,
                                             std::span<const std::size_t> group_b) {
  const auto c = classify(g, group_a, group_b);
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < c.separating.size(); ++v)
    if (c.separating[v]) out.push_back(v);
  return out;
}

Verdict CutProfile::at(double r) const {
  Verdict v;
  v.disconnected = disconnected;
  if (disconnected) {
    v.d_min = kInf;
    return v;
  }
  v.n_in_disk = static_cast<std::size_t>(std::lower_bound(distances.begin(), distances.end(), r) - distances.begin());
  v.cut = v.n_in_disk > 0;
  v.d_min = distances.empty() ? kInf : distances.front();
  return v;
}

CutProfile cut_profile(const SceneSample& scene, cplx z0, RemovalMode mode, double max_radius) {
  const ProximityGraph g = build_graph(scene);
  CutProfile out;
  if (!g.connected()) {
    out.disconnected = true;
    return out;
  }
  const auto A = arc_vertices(scene, 1), B = arc_vertices(scene, 2);
  if (mode == RemovalMode::Vertex) {
    for (std::size_t v : separating_vertices(g, A, B)) {
      const double d = std::abs(scene.vertex(v) - z0);
      if (d < max_radius) out.distances.push_back(d);
    }
  } else {
    // candidates: curve vertices near z0
    std::vector<std::size_t> cand;
    for (std::size_t v = 0; v < scene.curve.size(); ++v)
      if (std::abs(scene.vertex(v) - z0) < max_radius) cand.push_back(v);
    if (A.empty() || B.empty()) {
      for (std::size_t v : cand)
        if (thickened_separates(scene, g, v, A, B)) out.distances.push_back(std::abs(scene.vertex(v) - z0));
    } else {
      const auto cut = thickened_offline(scene, g, cand, A, B);
      for (std::size_t p = 0; p < cand.size(); ++p)
        if (cut[p]) out.distances.push_back(std::abs(scene.vertex(cand[p]) - z0));
    }
  }
  std::sort(out.distances.begin(), out.distances.end());
  return out;
}

CutProfile cut_profile_reference(const SceneSample& scene, cplx z0, RemovalMode mode, double max_radius) {
  if (mode == RemovalMode::Vertex) return cut_profile(scene, z0, mode, max_radius);
  const ProximityGraph g = build_graph_bruteforce(scene);
  CutProfile out;
  if (!g.connected()) {
    out.disconnected = true;
    return out;
  }
  const auto A = arc_vertices(scene, 1), B = arc_vertices(scene, 2);
  for (std::size_t v = 0; v < scene.curve.size(); ++v) {
    const double d = std::abs(scene.vertex(v) - z0);
    if (d < max_radius && thickened_separates(scene, g, v, A, B)) out.distances.push_back(d);
  }
  std::sort(out.distances.begin(), out.distances.end());
  return out;
}

Verdict has_cut_point_in_disk(const SceneSample& scene, cplx z0, double r, RemovalMode mode) {
  if (!(r > 0)) throw std::invalid_argument("radius must be positive");
  return cut_profile(scene, z0, mode, mode == RemovalMode::Thickened ? r : 1e300).at(r);
}

SceneSample rotated(const SceneSample& s, double angle) {
  const cplx e = std::polar(1.0, angle);
  SceneSample o = s;
  for (auto* v : {&o.curve, &o.arc1, &o.arc2})
    for (auto& p : *v) p *= e;
  return o;
}

// ---------------------------------------------------------------- CSV

void write_scene_csv(const std::filesystem::path& file, const SceneSample& s) {
  csv::Writer w(file, {"kind", "re", "im"});
  auto dump = [&](const char* kind, const std::vector<cplx>& pts) {
    for (const auto& p : pts) w.row({kind, csv::fmt(p.real()), csv::fmt(p.imag())});
  };
  dump("curve", s.curve);
  dump("arc1", s.arc1);
  dump("arc2", s.arc2);
}

SceneSample read_scene_csv(const std::filesystem::path& file, double epsilon) {
  const auto t = csv::read(file);
  const auto ck = t.column("kind"), cr = t.column("re"), ci = t.column("im");
  SceneSample s;
  s.epsilon = epsilon;
  for (const auto& r : t.rows) {
    const cplx p(std::stod(r[cr]), std::stod(r[ci]));
    if (r[ck] == "curve") s.curve.push_back(p);
    else if (r[ck] == "arc1") s.arc1.push_back(p);
    else if (r[ck] == "arc2") s.arc2.push_back(p);
    else throw std::runtime_error("unknown scene row kind: " + r[ck]);
  }
  s.validate();
  return s;
}

void write_verdicts_csv(const std::filesystem::path& file, std::span<const VerdictRow> rows) {
  csv::Writer w(file, {"scene_id", "r", "verdict", "n_articulation_in_disk"});
  for (const auto& r : rows)
    w.row({r.scene_id, csv::fmt(r.r), r.verdict.cut ? "1" : "0", std::to_string(r.verdict.n_in_disk)});
}

}  // namespace slecut::cutpoints
