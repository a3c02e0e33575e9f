#include "htree/flow.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "htree/error.hpp"
#include "htree/stats.hpp"

namespace htree {

namespace {

std::size_t at(Vertex v) { return static_cast<std::size_t>(v); }

Rational parse_decimal(std::string_view text) {
  const auto dot = text.find('.');
  if (dot == std::string_view::npos) return parse_rational(text);
  std::string digits(text.substr(0, dot));
  const std::string_view frac = text.substr(dot + 1);
  if (frac.empty() || !std::all_of(frac.begin(), frac.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw Error(ErrorCode::parse, "malformed decimal '" + std::string(text) + "'");
  }
  const bool negative = !digits.empty() && digits[0] == '-';
  if (digits.empty() || digits == "-" || digits == "+") digits += "0";
  const Rational whole = parse_rational(digits);
  const Rational part = parse_rational(std::string(frac) + "/1" + std::string(frac.size(), '0'));
  return negative ? whole - part : whole + part;
}

}  // namespace

// ---------------------------------------------------------------------------
// Weights

FlowWeight::FlowWeight(Rational value) : value_(std::move(value)) {
  if (value_ <= 0) throw Error(ErrorCode::non_positive_rate, "flow weights must be positive");
}

FlowWeight FlowWeight::infinity() {
  FlowWeight w;
  w.infinite_ = true;
  return w;
}

FlowWeight FlowWeight::from_double(double x) {
  if (std::isinf(x) && x > 0) return infinity();
  if (!(x > 0)) throw Error(ErrorCode::non_positive_rate, "flow weights must be positive");
  return FlowWeight(rational_from_double(x));
}

FlowWeight FlowWeight::parse(std::string_view text) {
  if (text == "inf" || text == "+inf" || text == "infinity") return infinity();
  return FlowWeight(parse_decimal(text));
}

const Rational& FlowWeight::value() const {
  if (infinite_) throw Error(ErrorCode::invalid_argument, "infinite weight has no rational value");
  return value_;
}

double FlowWeight::to_double() const {
  return infinite_ ? std::numeric_limits<double>::infinity() : htree::to_double(value_);
}

std::string FlowWeight::to_string() const { return infinite_ ? "inf" : htree::to_string(value_); }

FlowWeight operator+(const FlowWeight& a, const FlowWeight& b) {
  if (a.infinite_ || b.infinite_) return FlowWeight::infinity();
  return FlowWeight(a.value_ + b.value_);
}

bool operator==(const FlowWeight& a, const FlowWeight& b) {
  if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
  return a.value_ == b.value_;
}

const FlowWeight& Flow::at(Vertex child) const {
  const auto i = static_cast<std::size_t>(child);
  if (child <= 0 || i >= edge.size() || !edge[i]) {
    throw Error(ErrorCode::missing_edge_weight, "no weight on the edge above vertex " + std::to_string(child));
  }
  return *edge[i];
}

// ---------------------------------------------------------------------------
// Constructions

Flow flow_from_leaf_weights(const DirectedTreeRegion& region, const std::function<FlowWeight(Vertex)>& leaf_weight) {
  Flow flow;
  flow.edge.resize(region.size());
  // Parents precede children, so a reverse sweep sees every child first.
  for (std::size_t i = region.size(); i-- > 1;) {
    const auto v = static_cast<Vertex>(i);
    const auto kids = region.children(v);
    if (kids.empty()) {
      flow.edge[i] = leaf_weight(v);
      continue;
    }
    FlowWeight sum = *flow.edge[at(kids[0])];
    for (std::size_t c = 1; c < kids.size(); ++c) sum = sum + *flow.edge[at(kids[c])];
    flow.edge[i] = sum;
  }
  return flow;
}

Flow level_constant_flow(const DirectedTreeRegion& region, const FlowWeight& leaf_weight) {
  return flow_from_leaf_weights(region, [&](Vertex) { return leaf_weight; });
}

std::vector<Vertex> leftmost_ray(const DirectedTreeRegion& region) {
  std::vector<Vertex> ray;
  Vertex v = region.root();
  while (!region.children(v).empty()) {
    v = region.children(v)[0];
    ray.push_back(v);
  }
  return ray;
}

Flow near_ray_flow(const DirectedTreeRegion& region, const Rational& p, const Rational& eps) {
  if (p <= 0 || eps <= 0) throw Error(ErrorCode::non_positive_rate, "near-ray flow needs p > 0 and eps > 0");
  const auto ray = leftmost_ray(region);
  const Vertex tip = ray.empty() ? region.root() : ray.back();
  // Off-ray leaves at depth n get eps * d^-n with d their sibling count; the
  // ray's leaf gets p and the sums above follow from the flow condition.
  return flow_from_leaf_weights(region, [&](Vertex v) {
    if (v == tip) return FlowWeight(p);
    const auto d = static_cast<long>(region.children(region.parent(v)).size());
    return FlowWeight(eps / pow(Rational(d), static_cast<std::uint64_t>(region.depth(v))));
  });
}

// ---------------------------------------------------------------------------
// Validation

FlowReport validate_flow(const DirectedTreeRegion& region, const Flow& flow) {
  for (std::size_t i = 1; i < region.size(); ++i) flow.at(static_cast<Vertex>(i));
  FlowReport report;
  for (std::size_t i = 1; i < region.size(); ++i) {
    const auto v = static_cast<Vertex>(i);
    const auto kids = region.children(v);
    if (kids.empty()) continue;
    FlowWeight sum = flow.at(kids[0]);
    for (std::size_t c = 1; c < kids.size(); ++c) sum = sum + flow.at(kids[c]);
    const FlowWeight& up = flow.at(v);
    if (up == sum) continue;
    FlowViolation bad{v, up, sum, std::nullopt};
    if (!up.is_infinite() && !sum.is_infinite()) bad.residual = up.value() - sum.value();
    report.valid = false;
    report.violations.push_back(std::move(bad));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Sampling

GeometricSampler::GeometricSampler(const FlowWeight& alpha, double eps)
    : law_(alpha.is_infinite() ? IntPMF::dirac(0) : geometric_pmf(alpha.to_double(), eps)) {
  double acc = 0.0;
  for (std::size_t i = 0; i < law_.size(); ++i) {
    acc += law_.prob(law_.at_index(i));
    cdf_.push_back(acc);
  }
  cdf_.back() = 1.0;
}

Height GeometricSampler::operator()(Rng& rng) const {
  if (cdf_.size() == 1) return law_.base();
  const double u = rng.uniform();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  return law_.at_index(i);
}

void sample_flow_measure(const DirectedTreeRegion& region, const Flow& flow, double eps, std::uint64_t seed,
                         Vertex anchor, std::uint64_t count, const std::function<void(const HeightAssignment&)>& visit) {
  if (anchor < 0 || at(anchor) >= region.size()) throw Error(ErrorCode::invalid_argument, "anchor out of range");
  const FlowReport report = validate_flow(region, flow);
  if (!report.valid) {
    throw Error(ErrorCode::invalid_flow, "flow condition fails at vertex " + std::to_string(report.violations[0].vertex));
  }
  std::map<std::string, std::size_t> index;
  std::vector<GeometricSampler> samplers;
  std::vector<std::size_t> which(region.size(), 0);
  for (std::size_t i = 1; i < region.size(); ++i) {
    const FlowWeight& w = flow.at(static_cast<Vertex>(i));
    const auto [it, fresh] = index.emplace(w.to_string(), samplers.size());
    if (fresh) samplers.emplace_back(w, eps);
    which[i] = it->second;
  }
  Rng rng(seed);
  HeightAssignment h(region.size(), 0);
  for (std::uint64_t s = 0; s < count; ++s) {
    for (std::size_t i = 1; i < region.size(); ++i) {
      h[i] = h[at(region.parent(static_cast<Vertex>(i)))] - samplers[which[i]](rng);
    }
    const Height shift = h[at(anchor)];
    if (shift != 0) {
      for (Height& x : h) x -= shift;
    }
    visit(h);
    if (shift != 0) {
      for (Height& x : h) x += shift;
    }
    h[0] = 0;
  }
}

IntPMF min_gradient_law(std::span<const FlowWeight> alphas, double eps) {
  if (alphas.empty()) throw Error(ErrorCode::empty_edge_set, "minimum over an empty edge set");
  FlowWeight total = alphas[0];
  for (std::size_t i = 1; i < alphas.size(); ++i) total = total + alphas[i];
  return total.is_infinite() ? IntPMF::dirac(0) : geometric_pmf(total.to_double(), eps);
}

IntPMF min_gradient_law_exact(std::span<const Rational> ratios, const Rational& eps) {
  if (ratios.empty()) throw Error(ErrorCode::empty_edge_set, "minimum over an empty edge set");
  Rational q = 1;
  for (const Rational& r : ratios) {
    if (r < 0 || r >= 1) throw Error(ErrorCode::non_positive_rate, "geometric ratio must lie in [0,1)");
    q *= r;
  }
  return geometric_pmf_exact(q, eps);
}

// ---------------------------------------------------------------------------
// Localisation

double RaySpec::term(std::size_t g) const {
  switch (kind) {
    case Kind::constant: return htree::to_double(p);
    case Kind::geometric: return htree::to_double(p) * std::pow(htree::to_double(r), static_cast<double>(g - 1));
    case Kind::table: return table.at(g - 1);
  }
  return 0.0;
}

std::string to_string(Localisation v) {
  switch (v) {
    case Localisation::localised: return "Localised";
    case Localisation::delocalised: return "Delocalised";
    case Localisation::undecided: return "Undecided";
  }
  return "Undecided";
}

LocalisationReport localisation_test(const RaySpec& spec, std::size_t budget) {
  if (budget == 0) throw Error(ErrorCode::invalid_argument, "term budget must be positive");
  LocalisationReport rep;
  std::size_t n = budget;
  if (spec.kind == RaySpec::Kind::table) n = std::min(n, spec.table.size());
  if (spec.kind != RaySpec::Kind::table && spec.p <= 0) throw Error(ErrorCode::non_positive_rate, "ray weights must be positive");
  std::vector<double> phi;
  for (std::size_t g = 1; g <= n; ++g) {
    const double f = spec.term(g);
    if (!(f > 0)) throw Error(ErrorCode::non_positive_rate, "ray weights must be positive");
    phi.push_back(f);
    rep.partial_sum += std::exp(-f);
  }
  rep.terms = n;
  rep.last_term = n > 0 ? std::exp(-phi.back()) : 0.0;

  if (spec.kind == RaySpec::Kind::constant) {
    rep.verdict = Localisation::delocalised;
    rep.rule = "constant weights: terms do not vanish";
    return rep;
  }
  if (spec.kind == RaySpec::Kind::geometric) {
    if (spec.r <= 0) throw Error(ErrorCode::non_positive_rate, "growth factor must be positive");
    if (spec.r > 1) {
      rep.verdict = Localisation::localised;
      rep.rule = "geometric growth: terms decay super-exponentially";
    } else {
      rep.verdict = Localisation::delocalised;
      rep.rule = "non-increasing weights: terms bounded below by exp(-p)";
    }
    return rep;
  }

  if (n < 4) {
    rep.rule = "table too short";
    return rep;
  }
  const std::size_t from = n / 2;  // 0-based start of the second half
  double min_ratio = std::numeric_limits<double>::infinity();
  double max_ratio = 0.0;
  for (std::size_t i = from; i + 1 < n; ++i) {
    const double ratio = std::exp(phi[i] - phi[i + 1]);
    min_ratio = std::min(min_ratio, ratio);
    max_ratio = std::max(max_ratio, ratio);
  }
  if (max_ratio <= 0.9) {
    rep.verdict = Localisation::localised;
    rep.rule = "ratio test: ratios <= 0.9";
    return rep;
  }
  if (min_ratio >= 1.0) {
    rep.verdict = Localisation::delocalised;
    rep.rule = "ratio test: terms non-decreasing";
    return rep;
  }
  // Terms e^{-phi_g} with phi_g >= s log g are dominated by g^{-s}.
  double min_growth = std::numeric_limits<double>::infinity();
  double max_growth = 0.0;
  for (std::size_t i = std::max<std::size_t>(from, 1); i < n; ++i) {
    const double growth = phi[i] / std::log(static_cast<double>(i + 1));
    min_growth = std::min(min_growth, growth);
    max_growth = std::max(max_growth, growth);
  }
  if (min_growth >= 1.5) {
    rep.verdict = Localisation::localised;
    rep.rule = "log test: phi_g >= 1.5 log g";
  } else if (max_growth <= 1.0) {
    rep.verdict = Localisation::delocalised;
    rep.rule = "log test: phi_g <= log g";
  } else {
    rep.rule = "inconclusive on the budgeted prefix";
  }
  return rep;
}

double ray_variance(std::span<const FlowWeight> phis) {
  double total = 0.0;
  for (const FlowWeight& w : phis) {
    if (w.is_infinite()) continue;
    const double a = w.to_double();
    const double denom = std::expm1(-a);
    total += std::exp(-a) / (denom * denom);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Single-site DLR

DlrReport dlr_single_site_check(const FlowWeight& parent_weight, std::span<const FlowWeight> child_weights,
                                Height parent_height, std::span<const Height> child_heights) {
  if (child_weights.size() != child_heights.size()) {
    throw Error(ErrorCode::invalid_argument, "one weight per child height is required");
  }
  DlrReport rep;
  rep.hi = parent_height;
  rep.lo = child_heights.empty() ? parent_height : *std::max_element(child_heights.begin(), child_heights.end());
  if (rep.lo > rep.hi) throw Error(ErrorCode::empty_interval, "children sit above the parent");

  // Infinite weights pin h(x) to the corresponding neighbour.
  Height lo = rep.lo;
  Height hi = rep.hi;
  Rational tilt = 0;  // h(x) = t has weight exp(t * tilt)
  if (parent_weight.is_infinite()) {
    lo = std::max(lo, parent_height);
  } else {
    tilt += parent_weight.value();
  }
  for (std::size_t i = 0; i < child_weights.size(); ++i) {
    if (child_weights[i].is_infinite()) {
      hi = std::min(hi, child_heights[i]);
    } else {
      tilt -= child_weights[i].value();
    }
  }
  if (lo > hi) throw Error(ErrorCode::empty_interval, "infinite weights pin h(x) to incompatible heights");

  const auto size = static_cast<std::size_t>(hi - lo + 1);
  if (tilt == 0 || size == 1) {
    rep.conditional = IntPMF::from_exact(lo, 1, std::vector<Rational>(size, Rational(1)));
    rep.pass = lo == rep.lo && hi == rep.hi;
    return rep;
  }
  const double slope = to_double(tilt);
  std::vector<double> logs(size);
  for (std::size_t i = 0; i < size; ++i) logs[i] = slope * static_cast<double>(i);
  rep.conditional = IntPMF::from_log(lo, 1, std::move(logs));
  rep.pass = false;
  return rep;
}

DlrCase random_dlr_case(Rng& rng) {
  DlrCase c;
  const auto children = 1 + rng.below(4);
  Rational sum = 0;
  Height top = std::numeric_limits<Height>::min();
  for (std::uint64_t i = 0; i < children; ++i) {
    const Rational w(static_cast<long>(1 + rng.below(20)), static_cast<long>(1 + rng.below(20)));
    c.child_weights.emplace_back(w);
    sum += w;
    const auto h = static_cast<Height>(rng.below(11)) - 5;
    c.child_heights.push_back(h);
    top = std::max(top, h);
  }
  c.parent_weight = FlowWeight(sum);
  c.parent_height = top + static_cast<Height>(rng.below(6));
  return c;
}

// ---------------------------------------------------------------------------
// Exchangeability of level minima

std::vector<Height> level_minima(const DirectedTreeRegion& region, const HeightAssignment& h, Vertex x, int n) {
  if (x == region.root()) throw Error(ErrorCode::invalid_argument, "level minima need a vertex with a parent");
  std::vector<Height> out;
  for (int j = 0; j < n; ++j) {
    const auto level = region.descendants_at(x, j);
    if (level.empty()) throw Error(ErrorCode::invalid_argument, "region too shallow for the requested level");
    Height m = std::numeric_limits<Height>::max();
    for (Vertex y : level) m = std::min(m, h[at(region.parent(y))] - h[at(y)]);
    out.push_back(m);
  }
  return out;
}

ExchangeabilityReport exchangeability_exact(int d, int n, Height k, std::uint64_t cap) {
  if (k < 0) throw Error(ErrorCode::invalid_argument, "boundary drop must be nonnegative");
  const DirectedTreeRegion shape = build_regular_directed_region(d, n);
  std::vector<Height> heights(shape.size(), 0);
  for (Vertex v : shape.descendants_at(0, n)) heights[at(v)] = -k;
  const DirectedTreeRegion region = shape.with_heights(heights);

  std::map<std::vector<Height>, std::uint64_t> counts;
  ExchangeabilityReport rep;
  rep.configurations = enumerate_monotone(
      region, [&](const HeightAssignment& h) { ++counts[level_minima(region, h, 1, n)]; }, cap);

  std::map<Height, std::uint64_t> per_sum;
  std::map<Height, std::uint64_t> distinct;
  for (const auto& [xs, c] : counts) {
    Height a = 0;
    for (Height x : xs) a += x;
    per_sum[a] += c;
    ++distinct[a];
  }
  rep.max_deviation = 0;
  for (const auto& [xs, c] : counts) {
    Height a = 0;
    for (Height x : xs) a += x;
    // compositions of a into n nonnegative parts: C(a+n-1, n-1)
    BigInt total = 1;
    for (int i = 1; i < n; ++i) total = total * BigInt(a + i) / BigInt(i);
    const Rational uniform(BigInt(1), total);
    const Rational dev = abs(Rational(BigInt(c), BigInt(per_sum[a])) - uniform);
    if (dev > rep.max_deviation) rep.max_deviation = dev;
    if (BigInt(distinct[a]) != total && uniform > rep.max_deviation) rep.max_deviation = uniform;
  }
  rep.pass = rep.max_deviation == 0;
  return rep;
}

ExchangeabilityReport exchangeability_statistical(const std::vector<std::vector<Height>>& sequences, double alpha) {
  ExchangeabilityReport rep;
  rep.samples = sequences.size();
  rep.max_deviation = 0;
  const std::size_t m = sequences.empty() ? 0 : sequences[0].size();
  const std::size_t pairs = m * (m - (m > 0 ? 1 : 0)) / 2;
  rep.threshold = pairs > 0 ? alpha / static_cast<double>(pairs) : alpha;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      std::map<std::pair<Height, Height>, std::uint64_t> table;
      for (const auto& s : sequences) ++table[{s[i], s[j]}];
      rep.min_p_value = std::min(rep.min_p_value, bowker_symmetry(table).p_value);
    }
  }
  rep.pass = rep.min_p_value > rep.threshold;
  return rep;
}

ExchangeabilityReport exchangeability_flow(const DirectedTreeRegion& region, const Flow& flow, Vertex x, int n,
                                           std::size_t samples, double eps, std::uint64_t seed, double alpha) {
  std::vector<std::vector<Height>> seqs;
  seqs.reserve(samples);
  sample_flow_measure(region, flow, eps, seed, region.root(), samples,
                      [&](const HeightAssignment& h) { seqs.push_back(level_minima(region, h, x, n)); });
  return exchangeability_statistical(seqs, alpha);
}

// ---------------------------------------------------------------------------
// Flow files

std::string save_flow_spec(const FlowSpec& spec) {
  nlohmann::ordered_json j;
  j["region"] = nlohmann::ordered_json::parse(save_region_spec(spec.region));
  switch (spec.family) {
    case FlowSpec::Family::level_constant:
      j["family"] = "level_constant";
      j["leaf_weight"] = spec.leaf_weight.to_string();
      break;
    case FlowSpec::Family::near_ray:
      j["family"] = "near_ray";
      j["p"] = to_string(spec.p);
      j["eps"] = to_string(spec.eps);
      break;
    case FlowSpec::Family::explicit_edges: {
      j["family"] = "explicit";
      auto edges = nlohmann::ordered_json::array();
      for (const auto& [v, w] : spec.edges) edges.push_back({v, w.to_string()});
      j["edges"] = edges;
      break;
    }
  }
  return j.dump(2) + "\n";
}

FlowSpec load_flow_spec(const std::string& text) {
  FlowSpec spec;
  try {
    const auto j = nlohmann::json::parse(text);
    spec.region = load_region_spec(j.at("region").dump());
    if (spec.region.kind != RegionKind::directed) throw Error(ErrorCode::parse, "flows live on directed regions");
    const std::string family = j.at("family").get<std::string>();
    if (family == "level_constant") {
      spec.family = FlowSpec::Family::level_constant;
      spec.leaf_weight = FlowWeight::parse(j.at("leaf_weight").get<std::string>());
    } else if (family == "near_ray") {
      spec.family = FlowSpec::Family::near_ray;
      spec.p = parse_decimal(j.at("p").get<std::string>());
      spec.eps = parse_decimal(j.at("eps").get<std::string>());
    } else if (family == "explicit") {
      spec.family = FlowSpec::Family::explicit_edges;
      for (const auto& e : j.at("edges")) {
        spec.edges.emplace_back(e.at(0).get<Vertex>(), FlowWeight::parse(e.at(1).get<std::string>()));
      }
    } else {
      throw Error(ErrorCode::parse, "unknown flow family '" + family + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("flow description: ") + e.what());
  }
  return spec;
}

FlowSpec read_flow_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::parse, "cannot open flow file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_flow_spec(buf.str());
}

Flow build_flow(const FlowSpec& spec, const DirectedTreeRegion& region) {
  switch (spec.family) {
    case FlowSpec::Family::level_constant: return level_constant_flow(region, spec.leaf_weight);
    case FlowSpec::Family::near_ray: return near_ray_flow(region, spec.p, spec.eps);
    case FlowSpec::Family::explicit_edges: {
      Flow flow;
      flow.edge.resize(region.size());
      for (const auto& [v, w] : spec.edges) {
        if (v <= 0 || at(v) >= region.size()) throw Error(ErrorCode::parse, "edge vertex out of range");
        flow.edge[at(v)] = w;
      }
      return flow;
    }
  }
  return {};
}

}  // namespace htree
