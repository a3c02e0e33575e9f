#include "htree/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "htree/acceptance.hpp"
#include "htree/flow.hpp"
#include "htree/hom.hpp"
#include "htree/monotone.hpp"
#include "htree/stats.hpp"

namespace htree {

namespace {

Json star_region() {
  return Json::parse(R"({"kind":"undirected","degree":3,"depth":1,"boundary":{"rule":"constant","value":0}})");
}

Json ball_region(int degree, int depth) {
  Json j = star_region();
  j["degree"] = degree;
  j["depth"] = depth;
  return j;
}

Json default_flow() {
  return Json::parse(R"({"region":{"kind":"directed","degree":2,"depth":3,"root_height":0,)"
                     R"("boundary":{"rule":"constant","value":0}},"family":"level_constant","leaf_weight":"1"})");
}

struct Param {
  std::string key;
  Json value;
  std::string help;
};

std::vector<Param> params_for(const std::string& cmd) {
  std::vector<Param> p;
  const auto add = [&p](std::string key, Json value, std::string help) {
    p.push_back({std::move(key), std::move(value), std::move(help)});
  };
  const auto common = [&](std::uint64_t replicas, const char* replicas_help) {
    add("seed", std::uint64_t{1}, "master seed; replica seeds are derived from it");
    add("replicas", replicas, replicas_help);
    add("format", "csv", "output format: csv or json");
  };
  if (cmd == "hom-marginal") {
    common(0, "unused (exact computation)");
    add("region", star_region(), "undirected region description (object or file path)");
    add("vertex", 0, "target vertex; -1 for every interior vertex");
    add("mode", "exact", "exact or logfloat arithmetic");
  } else if (cmd == "hom-certify") {
    common(0, "unused (exact computation)");
    add("region", ball_region(3, 3), "undirected region description");
    add("vertex", 0, "target vertex; -1 for every interior vertex");
    add("threshold", "lambda2", "SLC threshold: a rational, or lambda2 for the certified lower bound of lambda^2");
  } else if (cmd == "hom-variance") {
    common(200, "profile: boundary replicas per radius");
    add("mode", "single", "single, sweep (random regions) or profile (variance against radius)");
    add("region", ball_region(3, 3), "undirected region (single and profile modes)");
    add("vertex", 0, "target vertex (single and profile modes)");
    add("bound", 0.0, "variance bound; 0 selects C(lambda^2)");
    add("regions", 1000, "sweep: number of random regions");
    add("max_depth", 5, "sweep: maximum depth of random regions");
    add("max_vertices", 31, "sweep: maximum size of random regions");
    add("radii", Json::array({1, 2}), "profile: ball radii");
    add("burn_in", 200, "profile: Glauber sweeps before each boundary draw");
  } else if (cmd == "hom-glauber") {
    common(100000, "post-burn-in sweeps (one sample per sweep)");
    add("region", ball_region(3, 2), "undirected region description");
    add("vertex", 0, "vertex whose marginal is compared");
    add("burn_in", 1000, "sweeps discarded before sampling");
  } else if (cmd == "offset-demo") {
    common(10000, "independent gradient fields");
    add("degree", 3, "degree of the regular tree");
    add("depth", 20, "number of levels");
    add("bins", 10, "histogram bins for frac(A_depth)");
  } else if (cmd == "flow-validate") {
    common(0, "unused (exact computation)");
    add("flow", default_flow(), "flow description (object or file path)");
  } else if (cmd == "flow-sample") {
    common(10000, "configurations drawn");
    add("flow", default_flow(), "flow description (object or file path)");
    add("eps", 1e-12, "geometric truncation tail mass");
    add("anchor", 0, "vertex pinned at height 0");
  } else if (cmd == "flow-localise") {
    common(0, "unused (deterministic)");
    add("family", "constant", "constant, geometric or table");
    add("p", "1/2", "constant value, or first term of the geometric family");
    add("r", "2", "growth factor of the geometric family");
    add("table", Json::array(), "phi_1, phi_2, ... for the table family");
    add("budget", 1000, "terms examined for tables");
  } else if (cmd == "flow-ray-variance") {
    common(100000, "Monte-Carlo samples");
    add("weights", Json::array({"1", "1", "1", "1", "1"}), "edge weights along the ray");
    add("eps", 1e-12, "geometric truncation tail mass");
  } else if (cmd == "flow-dlr") {
    common(0, "number of random flow-consistent configurations; 0 checks the explicit one");
    add("parent_weight", "2", "weight on the edge to the parent");
    add("child_weights", Json::array({"1", "1"}), "weights on the edges from the children");
    add("parent_height", 2, "height of the parent");
    add("child_heights", Json::array({0, 1}), "heights of the children");
  } else if (cmd == "mono-count") {
    common(0, "unused (exact computation)");
    add("d", 2, "children per vertex");
    add("n", 4, "depth");
    add("k", 3, "boundary drop: h = -k on the deepest layer");
    add("mode", "exact", "exact or logfloat counts");
  } else if (cmd == "mono-sample") {
    common(10000, "exact samples");
    add("d", 2, "children per vertex");
    add("n", 4, "depth");
    add("k", 3, "boundary drop");
    add("depth", 1, "depth whose marginal is tabulated");
  } else if (cmd == "mono-child-zero") {
    common(0, "unused (exact computation)");
    add("d", 2, "children per vertex");
    add("n_min", 2, "smallest depth");
    add("n_max", 10, "largest depth");
    add("k_min", 0, "smallest boundary drop");
    add("k_max", 10, "largest boundary drop");
    add("mode", "exact", "exact or logfloat counts");
  } else if (cmd == "frozen-region") {
    common(1000, "exact samples");
    add("d", 2, "children per vertex");
    add("n", 12, "depth");
    add("c", 3.0, "m = floor(n - c log n)");
    add("a", 1.0, "boundary drop k = floor(a n)");
  } else if (cmd == "verify") {
    p.push_back({"seed", std::uint64_t{20240601}, "master seed of the acceptance suite"});
    p.push_back({"replicas", 0, "unused (the suite fixes its own sample sizes)"});
    p.push_back({"format", "csv", "output format: csv or json"});
    add("fixtures", "", "fixture directory; empty selects the built-in one");
  } else {
    throw Error(ErrorCode::parse, "unknown subcommand '" + cmd + "'");
  }
  return p;
}

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::parse, what); }

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Canonical JSON for region and flow blocks.
Json canonical_block(const std::string& key, const Json& value) {
  if (key == "region") return Json::parse(save_region_spec(load_region_spec(value.dump())));
  return Json::parse(save_flow_spec(load_flow_spec(value.dump())));
}

bool is_block(const std::string& key) { return key == "region" || key == "flow"; }

template <class T>
T parse_integer(const std::string& key, const std::string& text) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) bad("--" + key + ": expected an integer, got '" + text + "'");
  return v;
}

double parse_float(const std::string& key, const std::string& text) {
  if (text.empty()) bad("--" + key + ": empty value");
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || !std::isfinite(v)) bad("--" + key + ": expected a number, got '" + text + "'");
  return v;
}

Json parse_flag(const std::string& key, const Json& def, const std::string& text) {
  if (is_block(key)) {
    const auto first = text.find_first_not_of(" \t\n");
    if (first != std::string::npos && text[first] == '{') {
      try {
        return Json::parse(text);
      } catch (const Json::exception& e) {
        bad("--" + key + ": " + e.what());
      }
    }
    try {
      return Json::parse(read_text(text));
    } catch (const Json::exception& e) {
      bad(text + ": " + e.what());
    }
  }
  switch (def.type()) {
    case Json::value_t::number_unsigned: return parse_integer<std::uint64_t>(key, text);
    case Json::value_t::number_integer: return parse_integer<std::int64_t>(key, text);
    case Json::value_t::number_float: return parse_float(key, text);
    case Json::value_t::boolean:
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      bad("--" + key + ": expected true or false");
    case Json::value_t::array: {
      if (!text.empty() && text.front() == '[') {
        try {
          return Json::parse(text);
        } catch (const Json::exception& e) {
          bad("--" + key + ": " + e.what());
        }
      }
      Json arr = Json::array();
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) {
        // numbers stay numbers; anything else (such as 1/2) is kept as text
        Json v = Json::parse(item, nullptr, false);
        if (v.is_discarded() || !(v.is_number())) v = item;
        arr.push_back(std::move(v));
      }
      return arr;
    }
    default: return text;
  }
}

// File values may use any JSON number type where the default is numeric.
void check_type(const std::string& key, const Json& def, const Json& v) {
  const bool ok = [&] {
    if (def.is_number_unsigned()) return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    if (def.is_number_integer()) return v.is_number_integer();
    if (def.is_number_float()) return v.is_number();
    if (def.is_boolean()) return v.is_boolean();
    if (def.is_string()) return v.is_string();
    if (def.is_array()) return v.is_array();
    if (def.is_object()) return v.is_object();
    return false;
  }();
  if (!ok) bad("parameter '" + key + "' has the wrong type");
}

// ---------------------------------------------------------------------------
// Typed access to a resolved config

const Json& get(const Json& cfg, const char* key) {
  const auto it = cfg.find(key);
  if (it == cfg.end()) bad(std::string("missing parameter '") + key + "'");
  return *it;
}

std::int64_t get_int(const Json& cfg, const char* key) { return get(cfg, key).get<std::int64_t>(); }
std::uint64_t get_count(const Json& cfg, const char* key) {
  const auto v = get_int(cfg, key);
  if (v < 0) throw Error(ErrorCode::invalid_argument, std::string(key) + " must be nonnegative");
  return static_cast<std::uint64_t>(v);
}
int get_small(const Json& cfg, const char* key) {
  const auto v = get_int(cfg, key);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw Error(ErrorCode::invalid_argument, std::string(key) + " out of range");
  }
  return static_cast<int>(v);
}
double get_double(const Json& cfg, const char* key) { return get(cfg, key).get<double>(); }
std::string get_string(const Json& cfg, const char* key) { return get(cfg, key).get<std::string>(); }
std::uint64_t get_seed(const Json& cfg) { return get(cfg, "seed").get<std::uint64_t>(); }

std::string json_text(const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

FlowWeight weight_of(const Json& v) { return FlowWeight::parse(json_text(v)); }

std::string fd(double x) { return format_double(x); }
std::string fr(const Rational& r) { return to_string(r); }
std::string fb(bool b) { return b ? "PASS" : "FAIL"; }

TreeRegion hom_region(const Json& cfg) {
  const RegionSpec spec = load_region_spec(get(cfg, "region").dump());
  if (spec.kind != RegionKind::undirected) throw Error(ErrorCode::invalid_argument, "an undirected region is required");
  TreeRegion region = build_undirected(spec);
  const auto feas = validate_hom_boundary(region);
  if (!feas.feasible) {
    throw Error(ErrorCode::infeasible_boundary, "boundary is infeasible (" + feas.reason + ") between vertices " +
                                                    std::to_string(feas.witness_a) + " and " +
                                                    std::to_string(feas.witness_b));
  }
  return region;
}

Vertex interior_vertex(const TreeRegion& region, std::int64_t v) {
  if (v < 0 || static_cast<std::size_t>(v) >= region.size() || !region.is_interior(static_cast<Vertex>(v))) {
    throw Error(ErrorCode::invalid_argument, "vertex " + std::to_string(v) + " is not an interior vertex");
  }
  return static_cast<Vertex>(v);
}

std::vector<Vertex> targets(const TreeRegion& region, std::int64_t v) {
  if (v == -1) return region.interior_vertices();
  return {interior_vertex(region, v)};
}

PmfMode pmf_mode(const Json& cfg) {
  const auto m = get_string(cfg, "mode");
  if (m == "exact") return PmfMode::exact;
  if (m == "logfloat") return PmfMode::logfloat;
  bad("mode must be exact or logfloat");
}

CountMode count_mode(const Json& cfg) {
  const auto m = get_string(cfg, "mode");
  if (m == "exact") return CountMode::exact;
  if (m == "logfloat") return CountMode::logfloat;
  bad("mode must be exact or logfloat");
}

// ---------------------------------------------------------------------------
// Subcommands

void hom_marginal(const Json& cfg, ExperimentRecord& rec) {
  const TreeRegion region = hom_region(cfg);
  const PmfMode mode = pmf_mode(cfg);
  rec.columns = {"vertex", "marginal", "mean", "variance"};
  for (Vertex x : targets(region, get_int(cfg, "vertex"))) {
    const IntPMF m = exact_marginal(region, x, mode).marginal;
    if (m.is_exact()) {
      const auto em = exact_moments(m);
      rec.rows.push_back({std::to_string(x), m.to_string(), fr(em.mean), fr(em.variance)});
    } else {
      const auto mm = moments(m);
      rec.rows.push_back({std::to_string(x), m.to_string(), fd(mm.mean), fd(mm.variance)});
    }
  }
}

void hom_certify(const Json& cfg, ExperimentRecord& rec) {
  const TreeRegion region = hom_region(cfg);
  const auto t = get_string(cfg, "threshold");
  const Rational threshold = t == "lambda2" ? certified_lambda_squared_lower() : parse_rational(t);
  rec.columns = {"vertex", "checked", "min_coefficient", "min_coefficient_decimal", "min_vertex", "threshold", "pass"};
  bool all = true;
  for (Vertex x : targets(region, get_int(cfg, "vertex"))) {
    const auto res = exact_marginal(region, x);
    const auto rep = certify_messages(res.table, threshold, &res.marginal);
    all = all && rep.pass;
    rec.rows.push_back({std::to_string(x), std::to_string(rep.checked), rep.min_coefficient.to_string(),
                        rep.min_coefficient.infinite ? "inf" : fd(rep.min_coefficient.approx),
                        std::to_string(rep.min_vertex), fr(threshold), fb(rep.pass)});
  }
  rec.summary.emplace_back("threshold_decimal", fd(to_double(threshold)));
  rec.summary.emplace_back("all_pass", fb(all));
}

void hom_variance(const Json& cfg, ExperimentRecord& rec) {
  const auto mode = get_string(cfg, "mode");
  double bound = get_double(cfg, "bound");
  if (bound == 0.0) bound = reference_variance_bound();
  if (bound < 0) throw Error(ErrorCode::invalid_argument, "bound must be positive");
  rec.summary.emplace_back("bound", fd(bound));

  if (mode == "single") {
    const TreeRegion region = hom_region(cfg);
    const Vertex x = interior_vertex(region, get_int(cfg, "vertex"));
    const auto chk = marginal_variance_check(region, x, bound);
    rec.columns = {"vertex", "variance", "variance_decimal", "bound", "pass"};
    rec.rows.push_back({std::to_string(x), fr(chk.variance), fd(to_double(chk.variance)), fd(bound), fb(chk.pass)});
  } else if (mode == "sweep") {
    RandomRegionOptions opt;
    opt.max_depth = get_small(cfg, "max_depth");
    opt.max_vertices = get_count(cfg, "max_vertices");
    const auto regions = get_count(cfg, "regions");
    Rng rng(derive_seed(get_seed(cfg), "hom_variance_sweep", 0));
    rec.columns = {"case", "vertices", "interior", "max_variance", "argmax_vertex", "bound", "pass"};
    std::uint64_t failures = 0;
    double worst = 0.0;
    for (std::uint64_t i = 0; i < regions; ++i) {
      const TreeRegion region = random_hom_region(rng, opt);
      Rational best = -1;
      Vertex arg = kNoVertex;
      bool pass = true;
      for (Vertex x : region.interior_vertices()) {
        const auto chk = marginal_variance_check(region, x, bound);
        pass = pass && chk.pass;
        if (chk.variance > best) {
          best = chk.variance;
          arg = x;
        }
      }
      if (!pass) ++failures;
      worst = std::max(worst, to_double(best));
      rec.rows.push_back({std::to_string(i), std::to_string(region.size()), std::to_string(region.interior_vertices().size()),
                          fr(best), std::to_string(arg), fd(bound), fb(pass)});
    }
    rec.summary.emplace_back("max_variance", fd(worst));
    rec.summary.emplace_back("failures", std::to_string(failures));
  } else if (mode == "profile") {
    const TreeRegion region = hom_region(cfg);
    const Vertex x = interior_vertex(region, get_int(cfg, "vertex"));
    const auto radii = get(cfg, "radii").get<std::vector<int>>();
    const auto pts = variance_profile(region, x, radii, get_count(cfg, "replicas"), get_count(cfg, "burn_in"), get_seed(cfg));
    rec.columns = {"radius", "mean_variance", "half_width", "replicas", "bound"};
    for (const auto& p : pts) {
      rec.rows.push_back({std::to_string(p.radius), fd(p.mean), fd(p.half_width), std::to_string(p.replicas), fd(bound)});
    }
  } else {
    bad("mode must be single, sweep or profile");
  }
}

void hom_glauber(const Json& cfg, ExperimentRecord& rec) {
  const TreeRegion region = hom_region(cfg);
  const Vertex x = interior_vertex(region, get_int(cfg, "vertex"));
  const IntPMF exact = exact_marginal(region, x).marginal;
  std::map<Height, std::uint64_t> counts;
  const auto samples = get_count(cfg, "replicas");
  glauber_sampler(region, samples, get_count(cfg, "burn_in"), derive_seed(get_seed(cfg), "hom_glauber", 0),
                  [&](const HeightAssignment& h) { ++counts[h[static_cast<std::size_t>(x)]]; });
  std::map<Height, bool> heights;
  for (std::size_t i = 0; i < exact.size(); ++i) heights[exact.at_index(i)] = true;
  for (const auto& [v, c] : counts) heights[v] = true;
  rec.columns = {"height", "count", "empirical", "exact", "exact_decimal"};
  for (const auto& [v, unused] : heights) {
    const auto it = counts.find(v);
    const std::uint64_t c = it == counts.end() ? 0 : it->second;
    rec.rows.push_back({std::to_string(v), std::to_string(c),
                        fd(samples == 0 ? 0.0 : static_cast<double>(c) / static_cast<double>(samples)),
                        fr(exact.exact(v)), fd(exact.prob(v))});
  }
  rec.summary.emplace_back("samples", std::to_string(samples));
  rec.summary.emplace_back("tv", samples == 0 ? "nan" : fd(empirical_tv(counts, exact)));
}

void offset_demo(const Json& cfg, ExperimentRecord& rec) {
  const auto res = height_offset_demo(get_small(cfg, "degree"), get_small(cfg, "depth"), get_count(cfg, "replicas"),
                                      get_seed(cfg), get_small(cfg, "bins"));
  rec.columns = {"level", "edges", "mean_increment", "variance", "variance_se", "expected_variance", "z", "pass"};
  bool all = true;
  std::vector<double> inc(res.averages.size());
  for (int k = 1; k <= res.depth; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    for (std::size_t r = 0; r < res.averages.size(); ++r) inc[r] = res.averages[r][ks] - res.averages[r][ks - 1];
    const auto s = summarize(inc);
    const double expected = 1.0 / static_cast<double>(res.level_sizes[ks]);
    const double z = s.variance_se > 0 ? (s.variance - expected) / s.variance_se : 0.0;
    const bool pass = std::abs(z) <= 3.0;
    all = all && pass;
    rec.rows.push_back({std::to_string(k), std::to_string(res.level_sizes[ks]), fd(s.mean), fd(s.variance),
                        fd(s.variance_se), fd(expected), fd(z), fb(pass)});
  }
  double max_bin = 0.0;
  for (std::size_t b = 0; b < res.histogram.size(); ++b) {
    rec.summary.emplace_back("frac_bin_" + std::to_string(b), fd(res.histogram[b]));
    max_bin = std::max(max_bin, res.histogram[b]);
  }
  rec.summary.emplace_back("max_bin", fd(max_bin));
  rec.summary.emplace_back("variances_pass", fb(all));
  rec.summary.emplace_back("histogram_pass", fb(max_bin <= 0.9));
}

struct FlowModel {
  FlowSpec spec;
  DirectedTreeRegion region;
  Flow flow;
};

FlowModel flow_model(const Json& cfg) {
  FlowSpec spec = load_flow_spec(get(cfg, "flow").dump());
  DirectedTreeRegion region = build_directed(spec.region);
  Flow flow = build_flow(spec, region);
  return {std::move(spec), std::move(region), std::move(flow)};
}

void flow_validate(const Json& cfg, ExperimentRecord& rec) {
  const auto m = flow_model(cfg);
  const auto rep = validate_flow(m.region, m.flow);
  rec.columns = {"vertex", "parent_weight", "children_sum", "residual"};
  for (const auto& v : rep.violations) {
    rec.rows.push_back({std::to_string(v.vertex), v.parent_weight.to_string(), v.children_sum.to_string(),
                        v.residual ? fr(*v.residual) : "inf"});
  }
  rec.summary.emplace_back("edges", std::to_string(m.region.size() - 1));
  rec.summary.emplace_back("valid", rep.valid ? "true" : "false");
}

void flow_sample(const Json& cfg, ExperimentRecord& rec) {
  const auto m = flow_model(cfg);
  const double eps = get_double(cfg, "eps");
  const auto anchor = get_int(cfg, "anchor");
  if (anchor < 0 || static_cast<std::size_t>(anchor) >= m.region.size()) {
    throw Error(ErrorCode::invalid_argument, "anchor out of range");
  }
  const std::size_t n = m.region.size();
  std::vector<std::map<Height, std::uint64_t>> grads(n);
  std::vector<double> height_sum(n, 0.0);
  const auto samples = get_count(cfg, "replicas");
  sample_flow_measure(m.region, m.flow, eps, derive_seed(get_seed(cfg), "flow_sample", 0), static_cast<Vertex>(anchor),
                      samples, [&](const HeightAssignment& h) {
                        for (std::size_t v = 1; v < n; ++v) {
                          ++grads[v][h[static_cast<std::size_t>(m.region.parent(static_cast<Vertex>(v)))] - h[v]];
                          height_sum[v] += static_cast<double>(h[v]);
                        }
                      });
  rec.columns = {"vertex", "parent", "depth", "weight", "mean_height", "mean_gradient", "exact_mean_gradient", "gradient_tv"};
  for (std::size_t v = 1; v < n; ++v) {
    const auto vx = static_cast<Vertex>(v);
    const FlowWeight& w = m.flow.at(vx);
    const IntPMF law = geometric_pmf(w.to_double(), eps);
    double mean = 0.0;
    for (const auto& [g, c] : grads[v]) mean += static_cast<double>(g) * static_cast<double>(c);
    const double denom = samples == 0 ? 1.0 : static_cast<double>(samples);
    rec.rows.push_back({std::to_string(v), std::to_string(m.region.parent(vx)), std::to_string(m.region.depth(vx)),
                        w.to_string(), fd(height_sum[v] / denom), fd(mean / denom), fd(moments(law).mean),
                        samples == 0 ? "nan" : fd(empirical_tv(grads[v], law))});
  }
  rec.summary.emplace_back("samples", std::to_string(samples));
}

void flow_localise(const Json& cfg, ExperimentRecord& rec) {
  RaySpec spec;
  const auto family = get_string(cfg, "family");
  if (family == "constant") {
    spec.kind = RaySpec::Kind::constant;
  } else if (family == "geometric") {
    spec.kind = RaySpec::Kind::geometric;
  } else if (family == "table") {
    spec.kind = RaySpec::Kind::table;
  } else {
    bad("family must be constant, geometric or table");
  }
  spec.p = parse_rational(json_text(get(cfg, "p")));
  spec.r = parse_rational(json_text(get(cfg, "r")));
  for (const auto& t : get(cfg, "table")) {
    if (!t.is_number()) bad("table entries must be numbers");
    spec.table.push_back(t.get<double>());
  }
  const auto rep = localisation_test(spec, get_count(cfg, "budget"));
  rec.columns = {"family", "verdict", "partial_sum", "last_term", "terms", "rule"};
  rec.rows.push_back({family, to_string(rep.verdict), fd(rep.partial_sum), fd(rep.last_term), std::to_string(rep.terms),
                      rep.rule});
}

void flow_ray_variance(const Json& cfg, ExperimentRecord& rec) {
  std::vector<FlowWeight> phis;
  for (const auto& w : get(cfg, "weights")) phis.push_back(weight_of(w));
  if (phis.empty()) throw Error(ErrorCode::empty_edge_set, "the ray needs at least one edge");
  const double eps = get_double(cfg, "eps");
  const double exact = ray_variance(phis);
  std::vector<GeometricSampler> draw;
  for (const auto& w : phis) draw.emplace_back(w, eps);
  const auto samples = get_count(cfg, "replicas");
  Rng rng(derive_seed(get_seed(cfg), "ray_variance", 0));
  std::vector<double> xs(samples);
  for (auto& x : xs) {
    Height total = 0;
    for (const auto& g : draw) total += g(rng);
    x = static_cast<double>(total);
  }
  const auto s = summarize(xs);
  const double z = s.variance_se > 0 ? (s.variance - exact) / s.variance_se : 0.0;
  rec.columns = {"edges", "exact_variance", "estimate", "standard_error", "z", "pass"};
  rec.rows.push_back({std::to_string(phis.size()), fd(exact), fd(s.variance), fd(s.variance_se), fd(z),
                      fb(std::abs(z) <= 3.0)});
}

void flow_dlr(const Json& cfg, ExperimentRecord& rec) {
  rec.columns = {"case", "parent_weight", "child_weights", "parent_height", "child_heights", "lo", "hi", "conditional",
                 "pass"};
  const auto emit = [&rec](std::uint64_t i, const DlrCase& c) {
    const auto rep = dlr_single_site_check(c.parent_weight, c.child_weights, c.parent_height, c.child_heights);
    std::string ws, hs;
    for (std::size_t j = 0; j < c.child_weights.size(); ++j) {
      ws += (j ? " " : "") + c.child_weights[j].to_string();
      hs += (j ? " " : "") + std::to_string(c.child_heights[j]);
    }
    rec.rows.push_back({std::to_string(i), c.parent_weight.to_string(), ws, std::to_string(c.parent_height), hs,
                        std::to_string(rep.lo), std::to_string(rep.hi), rep.conditional.to_string(), fb(rep.pass)});
    return rep.pass;
  };
  const auto replicas = get_count(cfg, "replicas");
  std::uint64_t failures = 0;
  if (replicas == 0) {
    DlrCase c;
    c.parent_weight = weight_of(get(cfg, "parent_weight"));
    for (const auto& w : get(cfg, "child_weights")) c.child_weights.push_back(weight_of(w));
    c.parent_height = get_int(cfg, "parent_height");
    for (const auto& h : get(cfg, "child_heights")) {
      if (!h.is_number_integer()) bad("child heights must be integers");
      c.child_heights.push_back(h.get<Height>());
    }
    if (!emit(0, c)) ++failures;
  } else {
    Rng rng(derive_seed(get_seed(cfg), "flow_dlr", 0));
    for (std::uint64_t i = 0; i < replicas; ++i) {
      if (!emit(i, random_dlr_case(rng))) ++failures;
    }
  }
  rec.summary.emplace_back("failures", std::to_string(failures));
}

void mono_count(const Json& cfg, ExperimentRecord& rec) {
  const int d = get_small(cfg, "d");
  const int n = get_small(cfg, "n");
  const Height k = get_int(cfg, "k");
  const CountMode mode = count_mode(cfg);
  const auto table = build_counting_table(d, n, k, mode);
  const Rational bound = child_zero_lower_bound(d, n, k);
  rec.columns = {"d", "n", "k", "total", "log_total", "child_zero", "child_zero_decimal", "lower_bound", "pass"};
  if (mode == CountMode::exact) {
    const Rational p = child_zero_probability(table);
    rec.rows.push_back({std::to_string(d), std::to_string(n), std::to_string(k), to_string(table.total()),
                        fd(table.log_total()), fr(p), fd(to_double(p)), fr(bound), fb(p >= bound)});
  } else {
    const double p = child_zero_probability_log(table);
    rec.rows.push_back({std::to_string(d), std::to_string(n), std::to_string(k), "", fd(table.log_total()), "", fd(p),
                        fr(bound), fb(p >= to_double(bound) * (1 - 1e-9))});
  }
}

void mono_sample(const Json& cfg, ExperimentRecord& rec) {
  const int d = get_small(cfg, "d");
  const int n = get_small(cfg, "n");
  const Height k = get_int(cfg, "k");
  const int depth = get_small(cfg, "depth");
  const auto table = build_counting_table(d, n, k);
  const IntPMF exact = depth_marginal(table, depth);
  const auto region = monotone_region(d, n, k);
  const auto watch = static_cast<std::size_t>(region.descendants_at(0, depth).front());
  const MonotoneSampler sampler(table);
  Rng rng(derive_seed(get_seed(cfg), "mono_sample", 0));
  const auto samples = get_count(cfg, "replicas");
  std::map<Height, std::uint64_t> counts;
  std::vector<std::vector<Height>> minima;
  HeightAssignment h;
  for (std::uint64_t i = 0; i < samples; ++i) {
    sampler.sample(rng, region, h);
    ++counts[h[watch]];
    minima.push_back(level_minima(region, h, 1, n));
  }
  rec.columns = {"depth", "height", "count", "empirical", "exact", "exact_decimal"};
  std::vector<std::uint64_t> observed;
  std::vector<double> probs;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const Height v = exact.at_index(i);
    const auto it = counts.find(v);
    const std::uint64_t c = it == counts.end() ? 0 : it->second;
    observed.push_back(c);
    probs.push_back(exact.prob(v));
    rec.rows.push_back({std::to_string(depth), std::to_string(v), std::to_string(c),
                        fd(samples == 0 ? 0.0 : static_cast<double>(c) / static_cast<double>(samples)),
                        fr(exact.exact(v)), fd(exact.prob(v))});
  }
  rec.summary.emplace_back("total", to_string(table.total()));
  if (samples > 0) {
    rec.summary.emplace_back("chi_square_p", fd(chi_square_gof(observed, probs).p_value));
    const auto ex = exchangeability_statistical(minima);
    rec.summary.emplace_back("exchangeability_min_p", fd(ex.min_p_value));
    rec.summary.emplace_back("exchangeability_threshold", fd(ex.threshold));
    rec.summary.emplace_back("exchangeability", fb(ex.pass));
  }
}

void mono_child_zero(const Json& cfg, ExperimentRecord& rec) {
  const int d = get_small(cfg, "d");
  const CountMode mode = count_mode(cfg);
  rec.columns = {"d", "n", "k", "probability", "probability_decimal", "lower_bound", "lower_bound_decimal", "pass"};
  bool all = true;
  for (int n = get_small(cfg, "n_min"); n <= get_small(cfg, "n_max"); ++n) {
    for (Height k = get_int(cfg, "k_min"); k <= get_int(cfg, "k_max"); ++k) {
      const auto table = build_counting_table(d, n, k, mode);
      const Rational bound = child_zero_lower_bound(d, n, k);
      std::string exact;
      double p = 0;
      bool pass = false;
      if (mode == CountMode::exact) {
        const Rational q = child_zero_probability(table);
        exact = fr(q);
        p = to_double(q);
        pass = q >= bound;
      } else {
        p = child_zero_probability_log(table);
        pass = p >= to_double(bound) * (1 - 1e-9);
      }
      all = all && pass;
      rec.rows.push_back({std::to_string(d), std::to_string(n), std::to_string(k), exact, fd(p), fr(bound),
                          fd(to_double(bound)), fb(pass)});
    }
  }
  rec.summary.emplace_back("all_pass", fb(all));
}

void frozen_region(const Json& cfg, ExperimentRecord& rec) {
  const auto r = frozen_region_experiment(get_small(cfg, "d"), get_small(cfg, "n"), get_double(cfg, "c"),
                                          get_count(cfg, "replicas"), get_seed(cfg), get_double(cfg, "a"));
  rec.columns = {"d", "n", "k", "c", "m", "replicas", "estimate", "standard_error", "exact", "union_bound",
                 "union_bound_exact", "pass"};
  const bool pass = r.estimate >= r.union_bound - 3 * r.standard_error;
  rec.rows.push_back({std::to_string(r.d), std::to_string(r.n), std::to_string(r.k), fd(r.c), std::to_string(r.m),
                      std::to_string(r.replicas), fd(r.estimate), fd(r.standard_error), fd(r.exact),
                      fd(r.union_bound), fr(frozen_union_bound(r.d, r.n, r.k, r.m)), fb(pass)});
}

void verify(const Json& cfg, ExperimentRecord& rec) {
  AcceptanceOptions opt;
  opt.seed = get_seed(cfg);
  opt.fixture_dir = get_string(cfg, "fixtures");
  if (opt.fixture_dir.empty()) opt.fixture_dir = default_fixture_dir();
  const auto report = run_acceptance(opt);
  rec.columns = {"criterion", "name", "result", "detail"};
  for (const auto& c : report.criteria) rec.rows.push_back({std::to_string(c.id), c.name, fb(c.pass), c.detail});
  rec.pass = report.pass();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

const std::vector<std::string>& experiment_commands() {
  static const std::vector<std::string> cmds = {
      "hom-marginal",   "hom-certify",       "hom-variance", "hom-glauber", "offset-demo",
      "flow-validate",  "flow-sample",       "flow-localise", "flow-ray-variance", "flow-dlr",
      "mono-count",     "mono-sample",       "mono-child-zero", "frozen-region", "verify"};
  return cmds;
}

Json default_config(const std::string& command) {
  Json j = Json::object();
  for (auto& p : params_for(command)) j[p.key] = std::move(p.value);
  return j;
}

std::string parameter_help(const std::string& command, const std::string& key) {
  for (const auto& p : params_for(command)) {
    if (p.key == key) return p.help;
  }
  return {};
}

Json read_config_file(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_text(path));
  } catch (const Json::exception& e) {
    bad(path + ": " + e.what());
  }
  if (!j.is_object()) bad(path + ": the config must be a JSON object");
  // region/flow given as paths are relative to the config file
  const auto dir = std::filesystem::path(path).parent_path();
  for (const char* key : {"region", "flow"}) {
    if (j.contains(key) && j[key].is_string()) {
      auto p = std::filesystem::path(j[key].get<std::string>());
      if (p.is_relative()) p = dir / p;
      try {
        j[key] = Json::parse(read_text(p.string()));
      } catch (const Json::exception& e) {
        bad(p.string() + ": " + e.what());
      }
    }
  }
  return j;
}

Json resolve_config(const std::string& command, const Json& file,
                    const std::vector<std::pair<std::string, std::string>>& flags) {
  Json cfg = default_config(command);
  if (!file.is_null()) {
    if (!file.is_object()) bad("the config must be a JSON object");
    for (const auto& [key, value] : file.items()) {
      if (key == "command") {
        if (value != command) bad("config was written for '" + json_text(value) + "', not '" + command + "'");
        continue;
      }
      if (!cfg.contains(key)) bad("unknown parameter '" + key + "' for " + command);
      check_type(key, cfg[key], value);
      cfg[key] = value;
    }
  }
  for (const auto& [key, text] : flags) {
    if (!cfg.contains(key)) bad("unknown parameter '" + key + "' for " + command);
    cfg[key] = parse_flag(key, cfg[key], text);
  }
  for (const char* key : {"region", "flow"}) {
    if (cfg.contains(key)) cfg[key] = canonical_block(key, cfg[key]);
  }
  const auto fmt = cfg.at("format").get<std::string>();
  if (fmt != "csv" && fmt != "json") bad("format must be csv or json");
  return cfg;
}

ExperimentRecord run_experiment(const std::string& command, const Json& config) {
  ExperimentRecord rec;
  rec.command = command;
  rec.config = config;
  try {
    if (command == "hom-marginal") {
      hom_marginal(config, rec);
    } else if (command == "hom-certify") {
      hom_certify(config, rec);
    } else if (command == "hom-variance") {
      hom_variance(config, rec);
    } else if (command == "hom-glauber") {
      hom_glauber(config, rec);
    } else if (command == "offset-demo") {
      offset_demo(config, rec);
    } else if (command == "flow-validate") {
      flow_validate(config, rec);
    } else if (command == "flow-sample") {
      flow_sample(config, rec);
    } else if (command == "flow-localise") {
      flow_localise(config, rec);
    } else if (command == "flow-ray-variance") {
      flow_ray_variance(config, rec);
    } else if (command == "flow-dlr") {
      flow_dlr(config, rec);
    } else if (command == "mono-count") {
      mono_count(config, rec);
    } else if (command == "mono-sample") {
      mono_sample(config, rec);
    } else if (command == "mono-child-zero") {
      mono_child_zero(config, rec);
    } else if (command == "frozen-region") {
      frozen_region(config, rec);
    } else if (command == "verify") {
      verify(config, rec);
    } else {
      bad("unknown subcommand '" + command + "'");
    }
  } catch (const Json::exception& e) {
    bad(std::string("config: ") + e.what());
  }
  return rec;
}

std::string to_csv(const ExperimentRecord& rec) {
  std::string out = "# command: " + rec.command + "\n# config: " + rec.config.dump() + "\n";
  for (const auto& [k, v] : rec.summary) out += "# " + k + ": " + v + "\n";
  for (std::size_t i = 0; i < rec.columns.size(); ++i) out += (i ? "," : "") + csv_field(rec.columns[i]);
  out += "\n";
  for (const auto& row : rec.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_field(row[i]);
    out += "\n";
  }
  return out;
}

std::string to_json(const ExperimentRecord& rec) {
  Json j;
  j["command"] = rec.command;
  j["config"] = rec.config;
  j["columns"] = rec.columns;
  j["rows"] = rec.rows;
  Json s = Json::object();
  for (const auto& [k, v] : rec.summary) s[k] = v;
  j["summary"] = s;
  return j.dump(2) + "\n";
}

std::string render(const ExperimentRecord& rec) {
  return rec.config.value("format", std::string("csv")) == "json" ? to_json(rec) : to_csv(rec);
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::disjoint_support:
    case ErrorCode::infeasible_boundary:
    case ErrorCode::invalid_flow:
    case ErrorCode::empty_interval:
    case ErrorCode::missing_edge_weight: return 3;
    case ErrorCode::size_cap_exceeded:
    case ErrorCode::enumeration_cap_exceeded: return 4;
    default: return 2;
  }
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace htree
