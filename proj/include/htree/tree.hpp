#pragma once

// Finite tree regions with fixed boundary heights, for graph homomorphisms
// (undirected) and monotone functions (directed), together with the
// brute-force enumeration oracles the exact engines are checked against.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "htree/rational.hpp"
#include "htree/rng.hpp"

namespace htree {

using Vertex = std::int32_t;
inline constexpr Vertex kNoVertex = -1;

/// Heights indexed by vertex; total on the region.
using HeightAssignment = std::vector<Height>;

inline constexpr std::size_t kDefaultVertexCap = 2'000'000;
inline constexpr std::uint64_t kDefaultEnumerationCap = 10'000'000;

/// Undirected finite tree. Vertices outside the interior carry a fixed height.
///
/// Invariants: the graph is a tree, every leaf is a boundary vertex and at
/// least one boundary vertex exists.
class TreeRegion {
 public:
  TreeRegion(std::vector<std::vector<Vertex>> adjacency, std::vector<bool> interior,
             std::vector<Height> boundary_heights);

  std::size_t size() const noexcept { return adjacency_.size(); }
  std::size_t edge_count() const noexcept { return adjacency_.size() - 1; }
  std::span<const Vertex> neighbors(Vertex v) const { return adjacency_[idx(v)]; }
  std::size_t degree(Vertex v) const { return adjacency_[idx(v)].size(); }
  bool is_interior(Vertex v) const { return interior_[idx(v)]; }
  Height boundary_height(Vertex v) const;
  const std::vector<Vertex>& interior_vertices() const noexcept { return interior_list_; }
  const std::vector<Vertex>& boundary_vertices() const noexcept { return boundary_list_; }
  const std::vector<std::vector<Vertex>>& adjacency() const noexcept { return adjacency_; }
  const std::vector<bool>& interior_mask() const noexcept { return interior_; }
  /// Stored heights; entries of interior vertices are zero.
  const std::vector<Height>& heights() const noexcept { return heights_; }

  std::vector<int> distances_from(Vertex v) const;

  /// Same tree and interior, new boundary heights (interior entries ignored).
  TreeRegion with_heights(std::vector<Height> heights) const;

 private:
  static std::size_t idx(Vertex v) { return static_cast<std::size_t>(v); }

  std::vector<std::vector<Vertex>> adjacency_;
  std::vector<bool> interior_;
  std::vector<Height> heights_;
  std::vector<Vertex> interior_list_;
  std::vector<Vertex> boundary_list_;
};

/// Rooted finite truncation of a directed tree; edges point child -> parent.
/// Vertex 0 is the root and parents precede children in index order.
class DirectedTreeRegion {
 public:
  DirectedTreeRegion(std::vector<Vertex> parent, std::vector<bool> interior,
                     std::vector<Height> boundary_heights);

  std::size_t size() const noexcept { return parent_.size(); }
  Vertex root() const noexcept { return 0; }
  Vertex parent(Vertex v) const { return parent_[idx(v)]; }
  std::span<const Vertex> children(Vertex v) const { return children_[idx(v)]; }
  int depth(Vertex v) const { return depth_[idx(v)]; }
  int max_depth() const noexcept { return max_depth_; }
  bool is_interior(Vertex v) const { return interior_[idx(v)]; }
  Height boundary_height(Vertex v) const;
  const std::vector<Vertex>& interior_vertices() const noexcept { return interior_list_; }
  const std::vector<Vertex>& boundary_vertices() const noexcept { return boundary_list_; }
  const std::vector<Vertex>& parents() const noexcept { return parent_; }
  const std::vector<bool>& interior_mask() const noexcept { return interior_; }
  const std::vector<Height>& heights() const noexcept { return heights_; }

  /// D_k(v): descendants of v at distance exactly k, in index order.
  std::vector<Vertex> descendants_at(Vertex v, int k) const;
  /// A(v): strict ancestors of v, nearest first.
  std::vector<Vertex> ancestors(Vertex v) const;

  DirectedTreeRegion with_heights(std::vector<Height> heights) const;

 private:
  static std::size_t idx(Vertex v) { return static_cast<std::size_t>(v); }

  std::vector<Vertex> parent_;
  std::vector<std::vector<Vertex>> children_;
  std::vector<int> depth_;
  int max_depth_ = 0;
  std::vector<bool> interior_;
  std::vector<Height> heights_;
  std::vector<Vertex> interior_list_;
  std::vector<Vertex> boundary_list_;
};

/// Ball of radius `depth` in the `degree`-regular tree; the outermost layer is
/// boundary (height 0). Vertices are numbered in BFS order from the centre.
TreeRegion build_regular_region(int degree, int depth, std::size_t vertex_cap = kDefaultVertexCap);

/// d-ary directed tree of the given depth; the root and the deepest layer are
/// boundary (height 0).
DirectedTreeRegion build_regular_directed_region(int children, int depth,
                                                 std::size_t vertex_cap = kDefaultVertexCap);

struct BoundaryRule {
  enum class Kind { constant, list, ramp };
  Kind kind = Kind::constant;
  Height value = 0;             // constant
  std::vector<Height> values;   // list, one per outer-layer vertex in index order
  Height start = 0;             // ramp: start + i * increment for the i-th outer vertex
  Height increment = 0;

  friend bool operator==(const BoundaryRule&, const BoundaryRule&) = default;
};

enum class RegionKind { undirected, directed };

/// Description of a regular region as stored in region files.
struct RegionSpec {
  RegionKind kind = RegionKind::undirected;
  int degree = 3;
  int depth = 1;
  Height root_height = 0;  // directed only
  BoundaryRule boundary;

  friend bool operator==(const RegionSpec&, const RegionSpec&) = default;
};

using AnyRegion = std::variant<TreeRegion, DirectedTreeRegion>;

AnyRegion build_region(const RegionSpec& spec, std::size_t vertex_cap = kDefaultVertexCap);
TreeRegion build_undirected(const RegionSpec& spec, std::size_t vertex_cap = kDefaultVertexCap);
DirectedTreeRegion build_directed(const RegionSpec& spec, std::size_t vertex_cap = kDefaultVertexCap);

/// Canonical structured-text form (JSON, two-space indent, trailing newline).
std::string save_region_spec(const RegionSpec& spec);
RegionSpec load_region_spec(const std::string& text);
RegionSpec read_region_file(const std::string& path);
void write_region_file(const std::string& path, const RegionSpec& spec);

struct FeasibilityReport {
  bool feasible = true;
  std::string reason;  // "parity", "lipschitz", "order" when infeasible
  Vertex witness_a = kNoVertex;
  Vertex witness_b = kNoVertex;
};

FeasibilityReport validate_hom_boundary(const TreeRegion& region);
FeasibilityReport validate_mon_boundary(const DirectedTreeRegion& region);

/// Per-vertex bounds implied by the boundary: for homomorphisms
/// lo(v) = max_b (b(u) - d(u,v)), hi(v) = min_b (b(u) + d(u,v)).
struct HeightBounds {
  std::vector<Height> lo;
  std::vector<Height> hi;
};

HeightBounds lipschitz_bounds(const TreeRegion& region);
HeightBounds lipschitz_bounds(const TreeRegion& region, const std::vector<bool>& fixed,
                              std::span<const Height> values);
/// For monotone functions: lo = max over boundary descendants, hi = min over
/// boundary ancestors; unbounded sides are reported as the int64 extremes.
HeightBounds monotone_bounds(const DirectedTreeRegion& region);

bool is_valid_hom(const TreeRegion& region, const HeightAssignment& h);
bool is_valid_monotone(const DirectedTreeRegion& region, const HeightAssignment& h);

using AssignmentVisitor = std::function<void(const HeightAssignment&)>;

/// Visits every valid assignment exactly once in lexicographic order of the
/// interior heights (interior vertices taken in index order). Returns the
/// count. Throws EnumerationCapExceeded beyond `cap` assignments.
std::uint64_t enumerate_homomorphisms(const TreeRegion& region, const AssignmentVisitor& visit,
                                      std::uint64_t cap = kDefaultEnumerationCap);
std::uint64_t enumerate_monotone(const DirectedTreeRegion& region, const AssignmentVisitor& visit,
                                 std::uint64_t cap = kDefaultEnumerationCap);

/// Sub-region of vertices within `radius` of `center`; vertices at distance
/// exactly `radius` (and boundary vertices of the parent region) become
/// boundary with heights taken from `heights`. Vertex 0 of the result is the
/// centre. `old_index`, when given, receives the new -> old vertex map.
TreeRegion ball_subregion(const TreeRegion& region, Vertex center, int radius,
                          const HeightAssignment& heights, std::vector<Vertex>* old_index = nullptr);

struct RandomRegionOptions {
  int min_degree = 3;
  int max_degree = 5;
  int max_depth = 3;
  std::size_t max_vertices = 16;
  Height min_height = -4;
  Height max_height = 4;
  /// Probability that a non-root vertex with children is made boundary.
  double inner_boundary_probability = 0.15;
};

/// Random tree whose interior vertices have degree in [min_degree, max_degree]
/// with a feasible boundary in [min_height, max_height].
TreeRegion random_hom_region(Rng& rng, const RandomRegionOptions& options);

}  // namespace htree
