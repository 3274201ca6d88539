#pragma once
#include <array>
#include <complex>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "slecut/green.hpp"

namespace slecut::cutpoints {

using cplx = std::complex<double>;

// Curve plus the two open boundary arcs. Vertices are numbered curve first,
// then arc1, then arc2. With local_eps empty every vertex uses epsilon;
// otherwise u ~ v iff |u - v| < (eps_u + eps_v)/2.
struct SceneSample {
  std::vector<cplx> curve, arc1, arc2;
  double epsilon = 0;
  std::vector<double> local_eps;
  std::vector<std::array<std::size_t, 2>> links;  // extra edges, global indices

  std::size_t size() const { return curve.size() + arc1.size() + arc2.size(); }
  cplx vertex(std::size_t i) const;
  double eps(std::size_t i) const { return local_eps.empty() ? epsilon : local_eps[i]; }
  void validate() const;
};

struct SceneOptions {
  double eps_factor = 3.0;  // epsilon = factor * consecutive gap
  bool adaptive = false;    // per-vertex epsilon from the local gap
  bool close_tip = false;   // link the last curve point to a2 (truncated chords)
};

// Arcs are sampled so a_j is a vertex, and stop one epsilon short of b1, b2
// so the two open arcs never touch each other directly.
SceneSample make_scene(std::span<const cplx> curve, const green::BoundaryConfig& cfg, const SceneOptions& opt = {});

class ProximityGraph {
 public:
  ProximityGraph(std::size_t n, std::vector<std::array<std::size_t, 2>> edges);

  std::size_t size() const { return offsets_.size() - 1; }
  std::size_t edge_count() const { return n_edges_; }
  std::span<const std::size_t> neighbours(std::size_t v) const {
    return {adj_.data() + offsets_[v], adj_.data() + offsets_[v + 1]};
  }
  const std::vector<int>& components() const { return comp_; }
  int component_count() const { return n_comp_; }
  bool connected() const { return n_comp_ <= 1; }

 private:
  std::vector<std::size_t> offsets_, adj_;
  std::size_t n_edges_ = 0;
  std::vector<int> comp_;
  int n_comp_ = 0;
};

ProximityGraph build_graph(const SceneSample& scene);
// O(n^2) reference used by tests.
ProximityGraph build_graph_bruteforce(const SceneSample& scene);

// Low-link articulation vertices, sorted. Throws on a disconnected graph.
std::vector<std::size_t> articulation_points(const ProximityGraph& g);

// Articulation vertices whose removal puts some vertex of group A and some
// vertex of group B in different components. If either group is empty every
// articulation vertex qualifies.
std::vector<std::size_t> separating_vertices(const ProximityGraph& g, std::span<const std::size_t> group_a,
                                             std::span<const std::size_t> group_b);

struct Verdict {
  bool cut = false;
  bool disconnected = false;
  std::size_t n_in_disk = 0;  // separating vertices with |v - z0| < r
  double d_min = 0;           // distance from z0 to the nearest separating vertex (inf if none)
};

enum class RemovalMode { Vertex, Thickened };

// Distances from z0 of all separating vertices, sorted; nullopt-like flag if disconnected.
struct CutProfile {
  bool disconnected = false;
  std::vector<double> distances;
  Verdict at(double r) const;
};
// Thickened mode deletes the curve vertices within eps(v) of a curve vertex v
// (arcs stay) and asks whether the two arcs fall into different pieces.
CutProfile cut_profile(const SceneSample& scene, cplx z0, RemovalMode mode = RemovalMode::Vertex,
                       double max_radius = 1e300);
// One search per candidate on the brute-force graph; reference for tests.
CutProfile cut_profile_reference(const SceneSample& scene, cplx z0, RemovalMode mode = RemovalMode::Vertex,
                                 double max_radius = 1e300);

Verdict has_cut_point_in_disk(const SceneSample& scene, cplx z0, double r, RemovalMode mode = RemovalMode::Vertex);

SceneSample rotated(const SceneSample& s, double angle);

void write_scene_csv(const std::filesystem::path& file, const SceneSample& s);
SceneSample read_scene_csv(const std::filesystem::path& file, double epsilon);

struct VerdictRow {
  std::string scene_id;
  double r;
  Verdict verdict;
};
void write_verdicts_csv(const std::filesystem::path& file, std::span<const VerdictRow> rows);

}  // namespace slecut::cutpoints
