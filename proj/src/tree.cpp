#include "htree/tree.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "htree/error.hpp"

namespace htree {

namespace {

constexpr Height kInf = std::numeric_limits<Height>::max() / 4;

std::size_t at(Vertex v) { return static_cast<std::size_t>(v); }

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::invalid_argument, what);
}

std::vector<Vertex> bfs_order(const std::vector<std::vector<Vertex>>& adjacency, Vertex start,
                              std::vector<Vertex>* parent_out) {
  std::vector<Vertex> order;
  std::vector<Vertex> parent(adjacency.size(), kNoVertex);
  std::vector<bool> seen(adjacency.size(), false);
  order.reserve(adjacency.size());
  order.push_back(start);
  seen[at(start)] = true;
  for (std::size_t head = 0; head < order.size(); ++head) {
    const Vertex v = order[head];
    for (Vertex w : adjacency[at(v)]) {
      if (seen[at(w)]) continue;
      seen[at(w)] = true;
      parent[at(w)] = v;
      order.push_back(w);
    }
  }
  if (parent_out) *parent_out = std::move(parent);
  return order;
}

}  // namespace

// ---------------------------------------------------------------------------
// TreeRegion

TreeRegion::TreeRegion(std::vector<std::vector<Vertex>> adjacency, std::vector<bool> interior,
                       std::vector<Height> boundary_heights)
    : adjacency_(std::move(adjacency)), interior_(std::move(interior)), heights_(std::move(boundary_heights)) {
  const std::size_t n = adjacency_.size();
  require(n >= 1, "region must have at least one vertex");
  require(interior_.size() == n && heights_.size() == n, "region arrays have mismatched sizes");
  std::size_t degree_sum = 0;
  for (std::size_t v = 0; v < n; ++v) {
    for (Vertex w : adjacency_[v]) {
      require(w >= 0 && at(w) < n, "neighbour index out of range");
      require(at(w) != v, "self loop");
      const auto& back = adjacency_[at(w)];
      require(std::find(back.begin(), back.end(), static_cast<Vertex>(v)) != back.end(),
              "adjacency is not symmetric");
    }
    degree_sum += adjacency_[v].size();
  }
  require(degree_sum == 2 * (n - 1), "region is not a tree (edge count)");
  require(bfs_order(adjacency_, 0, nullptr).size() == n, "region is not connected");
  for (std::size_t v = 0; v < n; ++v) {
    if (interior_[v]) {
      require(adjacency_[v].size() >= 2, "interior vertex " + std::to_string(v) + " is a leaf of the region");
      heights_[v] = 0;
      interior_list_.push_back(static_cast<Vertex>(v));
    } else {
      boundary_list_.push_back(static_cast<Vertex>(v));
    }
  }
  require(!boundary_list_.empty(), "region has no boundary vertex");
}

Height TreeRegion::boundary_height(Vertex v) const {
  require(!interior_[at(v)], "vertex " + std::to_string(v) + " is interior");
  return heights_[at(v)];
}

std::vector<int> TreeRegion::distances_from(Vertex v) const {
  std::vector<int> dist(size(), -1);
  std::deque<Vertex> queue{v};
  dist[at(v)] = 0;
  while (!queue.empty()) {
    const Vertex u = queue.front();
    queue.pop_front();
    for (Vertex w : adjacency_[at(u)]) {
      if (dist[at(w)] >= 0) continue;
      dist[at(w)] = dist[at(u)] + 1;
      queue.push_back(w);
    }
  }
  return dist;
}

TreeRegion TreeRegion::with_heights(std::vector<Height> heights) const {
  return TreeRegion(adjacency_, interior_, std::move(heights));
}

// ---------------------------------------------------------------------------
// DirectedTreeRegion

DirectedTreeRegion::DirectedTreeRegion(std::vector<Vertex> parent, std::vector<bool> interior,
                                       std::vector<Height> boundary_heights)
    : parent_(std::move(parent)), interior_(std::move(interior)), heights_(std::move(boundary_heights)) {
  const std::size_t n = parent_.size();
  require(n >= 1, "region must have at least one vertex");
  require(interior_.size() == n && heights_.size() == n, "region arrays have mismatched sizes");
  require(parent_[0] == kNoVertex, "vertex 0 must be the root");
  children_.assign(n, {});
  depth_.assign(n, 0);
  for (std::size_t v = 1; v < n; ++v) {
    const Vertex p = parent_[v];
    require(p >= 0 && at(p) < v, "parents must precede children in index order");
    children_[at(p)].push_back(static_cast<Vertex>(v));
    depth_[v] = depth_[at(p)] + 1;
    max_depth_ = std::max(max_depth_, depth_[v]);
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (interior_[v]) {
      heights_[v] = 0;
      interior_list_.push_back(static_cast<Vertex>(v));
    } else {
      boundary_list_.push_back(static_cast<Vertex>(v));
    }
  }
}

Height DirectedTreeRegion::boundary_height(Vertex v) const {
  require(!interior_[at(v)], "vertex " + std::to_string(v) + " is interior");
  return heights_[at(v)];
}

std::vector<Vertex> DirectedTreeRegion::descendants_at(Vertex v, int k) const {
  std::vector<Vertex> layer{v};
  for (int step = 0; step < k; ++step) {
    std::vector<Vertex> next;
    for (Vertex u : layer) {
      const auto& c = children_[at(u)];
      next.insert(next.end(), c.begin(), c.end());
    }
    layer = std::move(next);
  }
  std::sort(layer.begin(), layer.end());
  return layer;
}

std::vector<Vertex> DirectedTreeRegion::ancestors(Vertex v) const {
  std::vector<Vertex> out;
  for (Vertex p = parent_[at(v)]; p != kNoVertex; p = parent_[at(p)]) out.push_back(p);
  return out;
}

DirectedTreeRegion DirectedTreeRegion::with_heights(std::vector<Height> heights) const {
  return DirectedTreeRegion(parent_, interior_, std::move(heights));
}

// ---------------------------------------------------------------------------
// Builders

TreeRegion build_regular_region(int degree, int depth, std::size_t vertex_cap) {
  require(degree >= 2, "undirected degree must be at least 2");
  require(depth >= 0, "depth must be nonnegative");
  std::size_t total = 1;
  std::size_t layer = 1;
  for (int r = 1; r <= depth; ++r) {
    layer = r == 1 ? static_cast<std::size_t>(degree) : layer * static_cast<std::size_t>(degree - 1);
    total += layer;
    if (total > vertex_cap) {
      throw Error(ErrorCode::size_cap_exceeded,
                  "regular region exceeds vertex cap " + std::to_string(vertex_cap));
    }
  }
  std::vector<std::vector<Vertex>> adjacency(total);
  std::vector<bool> interior(total, false);
  std::vector<int> dist(total, 0);
  Vertex next = 1;
  for (std::size_t v = 0; v < total; ++v) {
    if (dist[v] == depth) continue;
    interior[v] = true;
    const int kids = v == 0 ? degree : degree - 1;
    for (int c = 0; c < kids; ++c) {
      adjacency[v].push_back(next);
      adjacency[at(next)].push_back(static_cast<Vertex>(v));
      dist[at(next)] = dist[v] + 1;
      ++next;
    }
  }
  return TreeRegion(std::move(adjacency), std::move(interior), std::vector<Height>(total, 0));
}

DirectedTreeRegion build_regular_directed_region(int children, int depth, std::size_t vertex_cap) {
  require(children >= 1, "children count must be at least 1");
  require(depth >= 1, "directed depth must be at least 1");
  std::size_t total = 1;
  std::size_t layer = 1;
  for (int r = 1; r <= depth; ++r) {
    layer *= static_cast<std::size_t>(children);
    total += layer;
    if (total > vertex_cap) {
      throw Error(ErrorCode::size_cap_exceeded,
                  "directed region exceeds vertex cap " + std::to_string(vertex_cap));
    }
  }
  std::vector<Vertex> parent(total, kNoVertex);
  std::vector<bool> interior(total, false);
  std::vector<int> dist(total, 0);
  Vertex next = 1;
  for (std::size_t v = 0; v < total; ++v) {
    if (dist[v] == depth) continue;
    interior[v] = v != 0;
    for (int c = 0; c < children; ++c) {
      parent[at(next)] = static_cast<Vertex>(v);
      dist[at(next)] = dist[v] + 1;
      ++next;
    }
  }
  return DirectedTreeRegion(std::move(parent), std::move(interior), std::vector<Height>(total, 0));
}

namespace {

std::vector<Height> apply_rule(const BoundaryRule& rule, const std::vector<Vertex>& outer, std::size_t n) {
  std::vector<Height> heights(n, 0);
  if (rule.kind == BoundaryRule::Kind::list) {
    require(rule.values.size() == outer.size(),
            "boundary list has " + std::to_string(rule.values.size()) + " values for " +
                std::to_string(outer.size()) + " outer vertices");
  }
  for (std::size_t i = 0; i < outer.size(); ++i) {
    Height h = 0;
    switch (rule.kind) {
      case BoundaryRule::Kind::constant: h = rule.value; break;
      case BoundaryRule::Kind::list: h = rule.values[i]; break;
      case BoundaryRule::Kind::ramp: h = rule.start + static_cast<Height>(i) * rule.increment; break;
    }
    heights[at(outer[i])] = h;
  }
  return heights;
}

}  // namespace

TreeRegion build_undirected(const RegionSpec& spec, std::size_t vertex_cap) {
  require(spec.kind == RegionKind::undirected, "region spec is not undirected");
  const TreeRegion base = build_regular_region(spec.degree, spec.depth, vertex_cap);
  std::vector<Vertex> outer = base.boundary_vertices();
  return base.with_heights(apply_rule(spec.boundary, outer, base.size()));
}

DirectedTreeRegion build_directed(const RegionSpec& spec, std::size_t vertex_cap) {
  require(spec.kind == RegionKind::directed, "region spec is not directed");
  const DirectedTreeRegion base = build_regular_directed_region(spec.degree, spec.depth, vertex_cap);
  std::vector<Vertex> outer;
  for (Vertex v : base.boundary_vertices()) {
    if (v != base.root()) outer.push_back(v);
  }
  auto heights = apply_rule(spec.boundary, outer, base.size());
  heights[0] = spec.root_height;
  return base.with_heights(std::move(heights));
}

AnyRegion build_region(const RegionSpec& spec, std::size_t vertex_cap) {
  if (spec.kind == RegionKind::undirected) return build_undirected(spec, vertex_cap);
  return build_directed(spec, vertex_cap);
}

// ---------------------------------------------------------------------------
// Region files

std::string save_region_spec(const RegionSpec& spec) {
  nlohmann::ordered_json j;
  j["kind"] = spec.kind == RegionKind::undirected ? "undirected" : "directed";
  j["degree"] = spec.degree;
  j["depth"] = spec.depth;
  if (spec.kind == RegionKind::directed) j["root_height"] = spec.root_height;
  nlohmann::ordered_json b;
  switch (spec.boundary.kind) {
    case BoundaryRule::Kind::constant:
      b["rule"] = "constant";
      b["value"] = spec.boundary.value;
      break;
    case BoundaryRule::Kind::list:
      b["rule"] = "list";
      b["values"] = spec.boundary.values;
      break;
    case BoundaryRule::Kind::ramp:
      b["rule"] = "ramp";
      b["start"] = spec.boundary.start;
      b["increment"] = spec.boundary.increment;
      break;
  }
  j["boundary"] = b;
  return j.dump(2) + "\n";
}

RegionSpec load_region_spec(const std::string& text) {
  RegionSpec spec;
  try {
    const auto j = nlohmann::json::parse(text);
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "undirected") {
      spec.kind = RegionKind::undirected;
    } else if (kind == "directed") {
      spec.kind = RegionKind::directed;
    } else {
      throw Error(ErrorCode::parse, "unknown region kind '" + kind + "'");
    }
    spec.degree = j.at("degree").get<int>();
    spec.depth = j.at("depth").get<int>();
    if (spec.kind == RegionKind::directed) spec.root_height = j.value("root_height", Height{0});
    const auto& b = j.at("boundary");
    const std::string rule = b.at("rule").get<std::string>();
    if (rule == "constant") {
      spec.boundary.kind = BoundaryRule::Kind::constant;
      spec.boundary.value = b.at("value").get<Height>();
    } else if (rule == "list") {
      spec.boundary.kind = BoundaryRule::Kind::list;
      spec.boundary.values = b.at("values").get<std::vector<Height>>();
    } else if (rule == "ramp") {
      spec.boundary.kind = BoundaryRule::Kind::ramp;
      spec.boundary.start = b.at("start").get<Height>();
      spec.boundary.increment = b.at("increment").get<Height>();
    } else {
      throw Error(ErrorCode::parse, "unknown boundary rule '" + rule + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("region description: ") + e.what());
  }
  return spec;
}

RegionSpec read_region_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::parse, "cannot open region file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_region_spec(buf.str());
}

void write_region_file(const std::string& path, const RegionSpec& spec) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::invalid_argument, "cannot write region file '" + path + "'");
  out << save_region_spec(spec);
}

// ---------------------------------------------------------------------------
// Bounds and feasibility

HeightBounds lipschitz_bounds(const TreeRegion& region, const std::vector<bool>& fixed,
                              std::span<const Height> values) {
  const std::size_t n = region.size();
  std::vector<Vertex> parent;
  const auto order = bfs_order(region.adjacency(), 0, &parent);
  HeightBounds b;
  b.lo.assign(n, -kInf);
  b.hi.assign(n, kInf);
  for (std::size_t v = 0; v < n; ++v) {
    if (fixed[v]) b.lo[v] = b.hi[v] = values[v];
  }
  // Leaves toward the root, then back out.
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const Vertex v = *it;
    const Vertex p = parent[at(v)];
    if (p == kNoVertex) continue;
    if (b.lo[at(v)] > -kInf) b.lo[at(p)] = std::max(b.lo[at(p)], b.lo[at(v)] - 1);
    if (b.hi[at(v)] < kInf) b.hi[at(p)] = std::min(b.hi[at(p)], b.hi[at(v)] + 1);
  }
  for (Vertex v : order) {
    const Vertex p = parent[at(v)];
    if (p == kNoVertex) continue;
    if (b.lo[at(p)] > -kInf) b.lo[at(v)] = std::max(b.lo[at(v)], b.lo[at(p)] - 1);
    if (b.hi[at(p)] < kInf) b.hi[at(v)] = std::min(b.hi[at(v)], b.hi[at(p)] + 1);
  }
  return b;
}

HeightBounds lipschitz_bounds(const TreeRegion& region) {
  std::vector<bool> fixed(region.size());
  for (std::size_t v = 0; v < region.size(); ++v) fixed[v] = !region.is_interior(static_cast<Vertex>(v));
  return lipschitz_bounds(region, fixed, region.heights());
}

FeasibilityReport validate_hom_boundary(const TreeRegion& region) {
  FeasibilityReport report;
  const auto depth = region.distances_from(0);
  const auto& boundary = region.boundary_vertices();
  const Vertex first = boundary.front();
  const auto parity = [&](Vertex v) {
    return ((region.boundary_height(v) + depth[at(v)]) % 2 + 2) % 2;
  };
  for (Vertex v : boundary) {
    if (parity(v) != parity(first)) {
      report.feasible = false;
      report.reason = "parity";
      report.witness_a = first;
      report.witness_b = v;
      return report;
    }
  }
  const HeightBounds b = lipschitz_bounds(region);
  for (Vertex u : boundary) {
    const Height bu = region.boundary_height(u);
    if (b.lo[at(u)] <= bu && b.hi[at(u)] >= bu) continue;
    const auto dist = region.distances_from(u);
    for (Vertex v : boundary) {
      const Height gap = region.boundary_height(v) - bu;
      if (gap > dist[at(v)] || -gap > dist[at(v)]) {
        report.feasible = false;
        report.reason = "lipschitz";
        report.witness_a = u;
        report.witness_b = v;
        return report;
      }
    }
  }
  return report;
}

HeightBounds monotone_bounds(const DirectedTreeRegion& region) {
  const std::size_t n = region.size();
  HeightBounds b;
  b.lo.assign(n, std::numeric_limits<Height>::min());
  b.hi.assign(n, std::numeric_limits<Height>::max());
  for (std::size_t i = n; i-- > 0;) {
    const auto v = static_cast<Vertex>(i);
    if (!region.is_interior(v)) b.lo[i] = std::max(b.lo[i], region.boundary_height(v));
    const Vertex p = region.parent(v);
    if (p != kNoVertex) b.lo[at(p)] = std::max(b.lo[at(p)], b.lo[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = static_cast<Vertex>(i);
    const Vertex p = region.parent(v);
    if (p != kNoVertex) b.hi[i] = b.hi[at(p)];
    if (!region.is_interior(v)) b.hi[i] = std::min(b.hi[i], region.boundary_height(v));
  }
  return b;
}

FeasibilityReport validate_mon_boundary(const DirectedTreeRegion& region) {
  FeasibilityReport report;
  const HeightBounds b = monotone_bounds(region);
  for (std::size_t v = 0; v < region.size(); ++v) {
    if (b.lo[v] > b.hi[v]) {
      report.feasible = false;
      report.reason = "order";
      report.witness_a = static_cast<Vertex>(v);
      return report;
    }
  }
  return report;
}

bool is_valid_hom(const TreeRegion& region, const HeightAssignment& h) {
  if (h.size() != region.size()) return false;
  for (Vertex v : region.boundary_vertices()) {
    if (h[at(v)] != region.boundary_height(v)) return false;
  }
  for (std::size_t v = 0; v < region.size(); ++v) {
    for (Vertex w : region.neighbors(static_cast<Vertex>(v))) {
      const Height d = h[v] - h[at(w)];
      if (d != 1 && d != -1) return false;
    }
  }
  return true;
}

bool is_valid_monotone(const DirectedTreeRegion& region, const HeightAssignment& h) {
  if (h.size() != region.size()) return false;
  for (Vertex v : region.boundary_vertices()) {
    if (h[at(v)] != region.boundary_height(v)) return false;
  }
  for (std::size_t v = 1; v < region.size(); ++v) {
    if (h[v] > h[at(region.parent(static_cast<Vertex>(v)))]) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Enumeration oracles

namespace {

class HomEnumerator {
 public:
  HomEnumerator(const TreeRegion& region, const AssignmentVisitor& visit, std::uint64_t cap)
      : region_(region), visit_(visit), cap_(cap), bounds_(lipschitz_bounds(region)), h_(region.heights()),
        assigned_(region.size(), false) {
    for (Vertex v : region.boundary_vertices()) assigned_[at(v)] = true;
  }

  std::uint64_t run() {
    recurse(0);
    return count_;
  }

 private:
  void recurse(std::size_t i) {
    const auto& interior = region_.interior_vertices();
    if (i == interior.size()) {
      if (++count_ > cap_) {
        throw Error(ErrorCode::enumeration_cap_exceeded,
                    "more than " + std::to_string(cap_) + " assignments");
      }
      visit_(h_);
      return;
    }
    const Vertex v = interior[i];
    for (Height t = bounds_.lo[at(v)]; t <= bounds_.hi[at(v)]; t += 2) {
      bool ok = true;
      for (Vertex w : region_.neighbors(v)) {
        if (!assigned_[at(w)]) continue;
        const Height d = t - h_[at(w)];
        if (d != 1 && d != -1) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      h_[at(v)] = t;
      assigned_[at(v)] = true;
      recurse(i + 1);
      assigned_[at(v)] = false;
    }
  }

  const TreeRegion& region_;
  const AssignmentVisitor& visit_;
  std::uint64_t cap_;
  HeightBounds bounds_;
  HeightAssignment h_;
  std::vector<bool> assigned_;
  std::uint64_t count_ = 0;
};

class MonotoneEnumerator {
 public:
  MonotoneEnumerator(const DirectedTreeRegion& region, const AssignmentVisitor& visit, std::uint64_t cap)
      : region_(region), visit_(visit), cap_(cap), bounds_(monotone_bounds(region)), h_(region.heights()) {}

  std::uint64_t run() {
    recurse(0);
    return count_;
  }

 private:
  void recurse(std::size_t i) {
    const auto& interior = region_.interior_vertices();
    if (i == interior.size()) {
      if (++count_ > cap_) {
        throw Error(ErrorCode::enumeration_cap_exceeded,
                    "more than " + std::to_string(cap_) + " assignments");
      }
      visit_(h_);
      return;
    }
    const Vertex v = interior[i];
    Height top = bounds_.hi[at(v)];
    const Vertex p = region_.parent(v);
    if (p != kNoVertex) top = std::min(top, h_[at(p)]);
    for (Height t = bounds_.lo[at(v)]; t <= top; ++t) {
      h_[at(v)] = t;
      recurse(i + 1);
    }
  }

  const DirectedTreeRegion& region_;
  const AssignmentVisitor& visit_;
  std::uint64_t cap_;
  HeightBounds bounds_;
  HeightAssignment h_;
  std::uint64_t count_ = 0;
};

}  // namespace

std::uint64_t enumerate_homomorphisms(const TreeRegion& region, const AssignmentVisitor& visit, std::uint64_t cap) {
  if (!validate_hom_boundary(region).feasible) return 0;
  return HomEnumerator(region, visit, cap).run();
}

std::uint64_t enumerate_monotone(const DirectedTreeRegion& region, const AssignmentVisitor& visit,
                                 std::uint64_t cap) {
  if (!validate_mon_boundary(region).feasible) return 0;
  const HeightBounds b = monotone_bounds(region);
  for (Vertex v : region.interior_vertices()) {
    if (b.lo[at(v)] == std::numeric_limits<Height>::min() || b.hi[at(v)] == std::numeric_limits<Height>::max()) {
      throw Error(ErrorCode::invalid_argument,
                  "interior vertex " + std::to_string(v) + " is unbounded; enumeration would not terminate");
    }
  }
  return MonotoneEnumerator(region, visit, cap).run();
}

// ---------------------------------------------------------------------------
// Sub-regions and random regions

TreeRegion ball_subregion(const TreeRegion& region, Vertex center, int radius, const HeightAssignment& heights,
                          std::vector<Vertex>* old_index) {
  require(radius >= 0, "radius must be nonnegative");
  require(heights.size() == region.size(), "height assignment has the wrong size");
  const auto dist = region.distances_from(center);
  std::vector<Vertex> parent;
  const auto order = bfs_order(region.adjacency(), center, &parent);
  std::vector<Vertex> new_of(region.size(), kNoVertex);
  std::vector<Vertex> old_of;
  for (Vertex v : order) {
    if (dist[at(v)] > radius) continue;
    new_of[at(v)] = static_cast<Vertex>(old_of.size());
    old_of.push_back(v);
  }
  const std::size_t n = old_of.size();
  std::vector<std::vector<Vertex>> adjacency(n);
  std::vector<bool> interior(n, false);
  std::vector<Height> h(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const Vertex v = old_of[i];
    for (Vertex w : region.neighbors(v)) {
      if (new_of[at(w)] != kNoVertex) adjacency[i].push_back(new_of[at(w)]);
    }
    interior[i] = region.is_interior(v) && dist[at(v)] < radius;
    h[i] = heights[at(v)];
  }
  if (old_index) *old_index = old_of;
  return TreeRegion(std::move(adjacency), std::move(interior), std::move(h));
}

TreeRegion random_hom_region(Rng& rng, const RandomRegionOptions& o) {
  require(o.min_degree >= 2 && o.max_degree >= o.min_degree, "bad degree range");
  require(o.max_vertices >= static_cast<std::size_t>(o.max_degree) + 1, "vertex budget too small");
  require(o.max_depth >= 1, "depth must be at least 1");
  const auto draw_degree = [&] {
    return o.min_degree + static_cast<int>(rng.below(static_cast<std::uint64_t>(o.max_degree - o.min_degree + 1)));
  };
  std::vector<std::vector<Vertex>> adjacency(1);
  std::vector<bool> interior{true};
  std::vector<int> depth{0};
  const auto add_children = [&](Vertex v, int count) {
    for (int c = 0; c < count; ++c) {
      const auto w = static_cast<Vertex>(adjacency.size());
      adjacency.emplace_back();
      adjacency[at(v)].push_back(w);
      adjacency[at(w)].push_back(v);
      interior.push_back(false);
      depth.push_back(depth[at(v)] + 1);
    }
  };
  add_children(0, draw_degree());
  for (std::size_t v = 1; v < adjacency.size(); ++v) {
    if (depth[v] >= o.max_depth) continue;
    const int kids = draw_degree() - 1;
    if (adjacency.size() + static_cast<std::size_t>(kids) > o.max_vertices) continue;
    if (rng.uniform() < 0.3) continue;
    add_children(static_cast<Vertex>(v), kids);
    interior[v] = rng.uniform() >= o.inner_boundary_probability;
  }
  const std::size_t n = adjacency.size();
  TreeRegion shape(adjacency, interior, std::vector<Height>(n, 0));
  const auto span = static_cast<std::uint64_t>(o.max_height - o.min_height + 1);
  const auto in_range = [&](Height h) { return h >= o.min_height && h <= o.max_height; };

  if (rng.coin()) {
    // Independent uniform heights, kept only when feasible.
    for (int attempt = 0; attempt < 20; ++attempt) {
      std::vector<Height> h(n, 0);
      for (Vertex v : shape.boundary_vertices()) h[at(v)] = o.min_height + static_cast<Height>(rng.below(span));
      TreeRegion candidate = shape.with_heights(std::move(h));
      if (validate_hom_boundary(candidate).feasible) return candidate;
    }
  }
  // Restriction of a random homomorphism.
  for (int attempt = 0; attempt < 200; ++attempt) {
    std::vector<Height> h(n, 0);
    h[0] = o.min_height + static_cast<Height>(rng.below(span));
    std::vector<Vertex> parent;
    const auto order = bfs_order(adjacency, 0, &parent);
    bool ok = true;
    for (Vertex v : order) {
      if (parent[at(v)] != kNoVertex) h[at(v)] = h[at(parent[at(v)])] + (rng.coin() ? 1 : -1);
    }
    for (Vertex v : shape.boundary_vertices()) ok = ok && in_range(h[at(v)]);
    if (ok) return shape.with_heights(std::move(h));
  }
  std::vector<Height> h(n, 0);
  for (std::size_t v = 0; v < n; ++v) h[v] = depth[v] % 2;
  return shape.with_heights(std::move(h));
}

}  // namespace htree
