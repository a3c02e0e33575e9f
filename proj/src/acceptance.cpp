#include "htree/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "htree/error.hpp"
#include "htree/flow.hpp"
#include "htree/hom.hpp"
#include "htree/monotone.hpp"
#include "htree/stats.hpp"

#ifndef HTREE_DEFAULT_FIXTURE_DIR
#define HTREE_DEFAULT_FIXTURE_DIR "fixtures"
#endif

namespace htree {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double x, int digits = 6) {
  std::ostringstream s;
  s.precision(digits);
  s << x;
  return s.str();
}

std::uint64_t seed_for(const AcceptanceOptions& o, int criterion) {
  return derive_seed(o.seed, "acceptance", static_cast<std::uint64_t>(criterion));
}

// Step-2 PMF whose consecutive ratios shrink by at least alpha per step.
IntPMF random_slc(Rng& rng, const Rational& alpha, std::size_t max_size) {
  const std::size_t size = 1 + rng.below(max_size);
  Rational ratio(static_cast<long>(1 + rng.below(64)), static_cast<long>(1 + rng.below(64)));
  std::vector<Rational> w{Rational(1)};
  for (std::size_t i = 1; i < size; ++i) {
    w.push_back(w.back() * ratio);
    const Rational slack = rng.below(3) == 0 ? Rational(1) : Rational(static_cast<long>(8 + rng.below(8)), 8);
    ratio /= alpha * slack;
  }
  return IntPMF::from_exact(-2 * static_cast<Height>(rng.below(20)), 2, std::move(w));
}

nlohmann::json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorCode::parse, "cannot open " + p.string());
  return nlohmann::json::parse(in);
}

// ---------------------------------------------------------------------------

CriterionResult c1_oracle(const AcceptanceOptions& o) {
  CriterionResult r{1, "exact marginals equal brute-force enumeration", false, {}, 0};
  const auto t0 = Clock::now();
  Rng rng(seed_for(o, 1));
  const RandomRegionOptions opt;  // <= 16 vertices, heights in [-4,4], degrees 3-5
  const int regions = 250;
  std::size_t targets = 0, mismatches = 0;
  for (int i = 0; i < regions; ++i) {
    const TreeRegion region = random_hom_region(rng, opt);
    std::vector<std::map<Height, std::uint64_t>> counts(region.size());
    const std::uint64_t total = enumerate_homomorphisms(region, [&](const HeightAssignment& h) {
      for (Vertex v : region.interior_vertices()) ++counts[static_cast<std::size_t>(v)][h[static_cast<std::size_t>(v)]];
    });
    for (Vertex x : region.interior_vertices()) {
      ++targets;
      const IntPMF m = exact_marginal(region, x).marginal;
      const auto& c = counts[static_cast<std::size_t>(x)];
      bool same = m.size() == c.size();
      for (const auto& [v, n] : c) same = same && m.exact(v) == Rational(BigInt(n), BigInt(total));
      if (!same) ++mismatches;
    }
  }
  r.seconds = since(t0);
  r.pass = mismatches == 0 && r.seconds < 60.0;
  r.detail = std::to_string(regions) + " regions, " + std::to_string(targets) + " targets, " +
             std::to_string(mismatches) + " mismatches" + (r.seconds < 60.0 ? "" : ", over the 60 s budget");
  return r;
}

CriterionResult c2_lambda(const AcceptanceOptions& o) {
  CriterionResult r{2, "lambda root and the convolution lemma", false, {}, 0};
  const auto t0 = Clock::now();
  const LambdaConstant lam = lambda_root(1e-9);
  const bool bracket = lambda_polynomial(Rational(3)) == -4 && lambda_polynomial(Rational(4)) == 11;
  const bool value = lam.value > 3.3829 && lam.value < 3.3831 && lam.residual <= 1e-9;

  // Inputs are generated at 435/38, a small-denominator rational 0.025% above
  // lambda^2; the dyadic bracket itself makes the weights too large to test 1e4 times.
  const LambdaConstant tight = lambda_root(1e-12);
  const Rational input(435, 38);
  const bool input_ok = input >= tight.upper_squared();
  Rng rng(seed_for(o, 2));
  const int trials = 10000;
  int counterexamples = 0;
  for (int t = 0; t < trials; ++t) {
    const IntPMF p = random_slc(rng, input, 41);
    if (!log_concavity_coefficient(p).at_least(tight.lower_squared())) ++counterexamples;  // generator sanity
    else if (!log_concavity_coefficient(convolve_step(p)).at_least(tight.lower)) ++counterexamples;
  }
  r.seconds = since(t0);
  r.pass = bracket && value && input_ok && counterexamples == 0;
  r.detail = "lambda=" + fmt(lam.value, 12) + " residual=" + fmt(lam.residual, 3) + " bracket " +
             (bracket ? "ok" : "wrong") + ", " + std::to_string(trials) + " trials, " +
             std::to_string(counterexamples) + " counterexamples";
  return r;
}

CriterionResult c3_certify(const AcceptanceOptions& o) {
  CriterionResult r{3, "messages lambda^2-SLC and variances below C(lambda^2)", false, {}, 0};
  const auto t0 = Clock::now();
  const auto constants = read_json(std::filesystem::path(o.fixture_dir) / "constants.json");
  const double frozen = constants.at("C_lambda_squared").get<double>();
  // the frozen constant must agree with the one computed in-process
  const bool consistent = std::abs(frozen - reference_variance_bound()) <= 1e-12 * frozen;

  Rng rng(seed_for(o, 3));
  RandomRegionOptions opt;
  opt.max_depth = 5;
  opt.max_vertices = 40;
  const int regions = 10000;
  std::size_t messages = 0, slc_failures = 0, variance_failures = 0;
  Rational worst = 0;
  const Rational bound = rational_from_double(frozen);
  for (int i = 0; i < regions; ++i) {
    const TreeRegion region = random_hom_region(rng, opt);
    for (Vertex x : region.interior_vertices()) {
      const auto res = exact_marginal(region, x);
      const auto cert = certify_messages(res.table, &res.marginal);
      messages += cert.checked;
      if (!cert.pass) ++slc_failures;
      const Rational var = exact_moments(res.marginal).variance;
      worst = std::max(worst, var);
      if (var > bound) ++variance_failures;
    }
  }
  r.seconds = since(t0);
  r.pass = consistent && slc_failures == 0 && variance_failures == 0;
  r.detail = std::to_string(regions) + " regions, " + std::to_string(messages) + " laws certified, " +
             std::to_string(slc_failures) + " SLC failures, " + std::to_string(variance_failures) +
             " variance failures, max variance " + fmt(to_double(worst)) + " <= C=" + fmt(frozen, 12) +
             (consistent ? "" : ", fixture constant disagrees with the computed one");
  return r;
}

CriterionResult c4_glauber(const AcceptanceOptions& o) {
  CriterionResult r{4, "Glauber dynamics matches exact marginals", false, {}, 0};
  const auto t0 = Clock::now();
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(std::filesystem::path(o.fixture_dir) / "glauber")) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  const std::uint64_t samples = 1000000;
  double worst = 0.0;
  bool ok = files.size() == 10;
  std::string problems;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const TreeRegion region = build_undirected(read_region_file(files[i].string()));
    if (region.interior_vertices().size() > 10 || !validate_hom_boundary(region).feasible) {
      ok = false;
      problems += " " + files[i].filename().string();
      continue;
    }
    const Vertex x = 0;
    const IntPMF exact = exact_marginal(region, x).marginal;
    std::map<Height, std::uint64_t> counts;
    glauber_sampler(region, samples, 1000, derive_seed(seed_for(o, 4), files[i].filename().string(), 0),
                    [&](const HeightAssignment& h) { ++counts[h[0]]; });
    const double tv = empirical_tv(counts, exact);
    worst = std::max(worst, tv);
    if (tv > 0.02) ok = false;
  }
  r.seconds = since(t0);
  r.pass = ok && r.seconds < 300.0;
  r.detail = std::to_string(files.size()) + " fixtures, " + std::to_string(samples) + " samples each, max TV " +
             fmt(worst) + (problems.empty() ? "" : ", bad fixtures:" + problems) +
             (r.seconds < 300.0 ? "" : ", over the 5 min budget");
  return r;
}

CriterionResult c5_flow(const AcceptanceOptions& o) {
  CriterionResult r{5, "flow identities: minimum law, DLR, ray variance", false, {}, 0};
  const auto t0 = Clock::now();

  // P(min >= k) = prod q_i^k, read off the renormalised truncated law
  const std::vector<std::vector<Rational>> sets = {
      {Rational(1, 2), Rational(1, 2)},
      {Rational(1, 3), Rational(2, 3), Rational(3, 4)},
      {Rational(9, 10)},
      {Rational(1, 5), Rational(1, 7), Rational(5, 6), Rational(1, 2)}};
  const Rational eps(1, 1000000);
  std::size_t min_checks = 0, min_failures = 0;
  for (const auto& qs : sets) {
    const IntPMF law = min_gradient_law_exact(qs, eps);
    const auto power_of = [&qs](Height k) {
      Rational p = 1;
      for (const auto& q : qs) p *= pow(q, static_cast<std::uint64_t>(k));
      return p;
    };
    const Rational cut = power_of(law.last() + 1);
    Rational tail = 0;
    for (Height k = law.last(); k >= 0; --k) {
      tail += law.exact(k);
      ++min_checks;
      if (tail * (1 - cut) + cut != power_of(k)) ++min_failures;
    }
  }

  // single-site DLR with an independent floating-point look at the tilt
  Rng rng(seed_for(o, 5));
  const int configs = 10000;
  int dlr_failures = 0;
  for (int i = 0; i < configs; ++i) {
    const DlrCase c = random_dlr_case(rng);
    const auto rep = dlr_single_site_check(c.parent_weight, c.child_weights, c.parent_height, c.child_heights);
    double lo_w = std::numeric_limits<double>::infinity(), hi_w = -lo_w;
    for (Height t = rep.lo; t <= rep.hi; ++t) {
      double logw = -c.parent_weight.to_double() * static_cast<double>(c.parent_height - t);
      for (std::size_t j = 0; j < c.child_weights.size(); ++j) {
        logw -= c.child_weights[j].to_double() * static_cast<double>(t - c.child_heights[j]);
      }
      lo_w = std::min(lo_w, logw);
      hi_w = std::max(hi_w, logw);
    }
    if (!rep.pass || hi_w - lo_w > 1e-9 * (1 + std::abs(hi_w))) ++dlr_failures;
  }

  // ray variance, 5 edges of weight 1
  const std::vector<FlowWeight> phis(5, FlowWeight(Rational(1)));
  const double exact = ray_variance(phis);
  const double q = std::exp(-1.0);
  const double closed = 5 * q / ((1 - q) * (1 - q));
  std::vector<GeometricSampler> draw;
  for (const auto& w : phis) draw.emplace_back(w, 1e-12);
  std::vector<double> xs(100000);
  for (auto& x : xs) {
    Height s = 0;
    for (const auto& g : draw) s += g(rng);
    x = static_cast<double>(s);
  }
  const auto sum = summarize(xs);
  const double z = (sum.variance - exact) / sum.variance_se;

  r.seconds = since(t0);
  r.pass = min_failures == 0 && dlr_failures == 0 && std::abs(z) <= 3.0 && std::abs(exact - closed) <= 1e-12 * closed;
  r.detail = std::to_string(min_checks) + " tail identities (" + std::to_string(min_failures) + " failed), " +
             std::to_string(configs) + " DLR configurations (" + std::to_string(dlr_failures) +
             " failed), ray variance " + fmt(exact) + " vs " + fmt(sum.variance) + " (z=" + fmt(z, 3) + ")";
  return r;
}

CriterionResult c6_localisation(const AcceptanceOptions&) {
  CriterionResult r{6, "localisation criterion on rays", false, {}, 0};
  const auto t0 = Clock::now();
  RaySpec constant;
  constant.kind = RaySpec::Kind::constant;
  constant.p = Rational(1, 2);
  const auto a = localisation_test(constant, 1000).verdict;

  bool geometric_ok = true;
  for (int d : {2, 3}) {
    RaySpec g;
    g.kind = RaySpec::Kind::geometric;
    g.p = 1;
    g.r = d;
    geometric_ok = geometric_ok && localisation_test(g, 1000).verdict == Localisation::localised;
  }
  // the same law read off an actual level-constant flow, as a table
  const auto region = build_regular_directed_region(2, 12);
  const Flow flow = level_constant_flow(region, FlowWeight(Rational(1)));
  RaySpec from_flow;
  from_flow.kind = RaySpec::Kind::table;
  const auto ray = leftmost_ray(region);
  for (auto it = ray.rbegin(); it != ray.rend(); ++it) from_flow.table.push_back(flow.at(*it).to_double());
  const auto b = localisation_test(from_flow, 1000).verdict;

  RaySpec slow;
  slow.kind = RaySpec::Kind::table;
  for (int g = 1; g <= 1000; ++g) {
    const double x = g + 2.0;
    slow.table.push_back(std::log(x) + std::log(std::log(x)));
  }
  const auto c = localisation_test(slow, 1000).verdict;

  r.seconds = since(t0);
  r.pass = a == Localisation::delocalised && geometric_ok && b == Localisation::localised &&
           c == Localisation::undecided;
  r.detail = "constant p=1/2: " + to_string(a) + "; geometric d=2,3: " +
             (geometric_ok ? std::string("Localised") : std::string("misclassified")) + "; level-constant flow ray: " +
             to_string(b) + "; slowly varying table: " + to_string(c);
  return r;
}

CriterionResult c7_counting(const AcceptanceOptions&) {
  CriterionResult r{7, "child-zero lower bound and counting DP", false, {}, 0};
  const auto t0 = Clock::now();
  std::size_t bound_checks = 0, bound_failures = 0;
  for (int d : {2, 3}) {
    for (int n = 2; n <= 10; ++n) {
      for (Height k = 0; k <= 10; ++k) {
        const auto table = build_counting_table(d, n, k);
        ++bound_checks;
        if (child_zero_probability(table) < child_zero_lower_bound(d, n, k)) ++bound_failures;
      }
    }
  }
  // brute force wherever enumeration stays below the cap
  const std::uint64_t cap = kDefaultEnumerationCap;
  std::size_t enumerated = 0, count_failures = 0;
  for (int d : {1, 2, 3}) {
    for (int n = 2; n <= 10; ++n) {
      for (Height k = 0; k <= 10; ++k) {
        const auto table = build_counting_table(d, n, k);
        if (table.total() > cap) continue;
        const auto brute = enumerate_monotone(monotone_region(d, n, k), [](const HeightAssignment&) {}, cap);
        ++enumerated;
        if (table.total() != BigInt(brute)) ++count_failures;
      }
    }
  }
  r.seconds = since(t0);
  r.pass = bound_failures == 0 && count_failures == 0;
  r.detail = std::to_string(bound_checks) + " exact bound comparisons (" + std::to_string(bound_failures) +
             " failed), " + std::to_string(enumerated) + " triples enumerated (" + std::to_string(count_failures) +
             " mismatches)";
  return r;
}

CriterionResult c8_frozen(const AcceptanceOptions& o) {
  CriterionResult r{8, "frozen region at d=2, n=12", false, {}, 0};
  const auto t0 = Clock::now();
  const auto res = frozen_region_experiment(2, 12, 3.0, 1000, seed_for(o, 8));
  // the bound evaluated independently in floating point
  double sum = 0;
  for (int j = 1; j <= res.m; ++j) sum += std::pow(2.0, j) * std::pow(12.0 / 13.0, std::pow(2.0, 12 - j - 1));
  const bool bound_ok = std::abs(res.union_bound - (1 - sum)) <= 1e-12;
  const bool freq_ok = res.estimate >= res.union_bound - 3 * res.standard_error;

  bool monotone = true;
  Rational previous = 0;
  std::string trend;
  for (int n : {4, 6, 8, 10}) {
    const Rational p = depth_marginal(build_counting_table(2, n, n), 2).exact(0);
    monotone = monotone && p >= previous;
    previous = p;
    trend += (trend.empty() ? "" : " ") + fmt(to_double(p), 4);
  }
  r.seconds = since(t0);
  r.pass = res.m == 4 && bound_ok && freq_ok && monotone;
  r.detail = "m=" + std::to_string(res.m) + " bound=" + fmt(res.union_bound, 8) + " estimate=" + fmt(res.estimate) +
             " se=" + fmt(res.standard_error, 3) + "; depth-2 P(h=0) along n=4,6,8,10: " + trend;
  return r;
}

CriterionResult c9_offset(const AcceptanceOptions& o) {
  CriterionResult r{9, "level-average increments and fractional parts", false, {}, 0};
  const auto t0 = Clock::now();
  const auto res = height_offset_demo(3, 20, 10000, seed_for(o, 9), 10);
  double worst_z = 0.0;
  std::vector<double> inc(res.averages.size());
  for (int k = 1; k <= res.depth; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    for (std::size_t i = 0; i < inc.size(); ++i) inc[i] = res.averages[i][ks] - res.averages[i][ks - 1];
    const auto s = summarize(inc);
    const double z = (s.variance - 1.0 / static_cast<double>(res.level_sizes[ks])) / s.variance_se;
    worst_z = std::max(worst_z, std::abs(z));
  }
  const double max_bin = *std::max_element(res.histogram.begin(), res.histogram.end());
  r.seconds = since(t0);
  r.pass = worst_z <= 3.0 && max_bin <= 0.9;
  r.detail = "20 levels, 10000 replicas, max |z| " + fmt(worst_z, 3) + ", largest fractional-part bin " + fmt(max_bin, 4);
  return r;
}

void record(AcceptanceReport& rep, const AcceptanceOptions& o, CriterionResult r) {
  if (o.progress) o.progress(r);
  rep.criteria.push_back(std::move(r));
}

template <class F>
void guarded(AcceptanceReport& rep, const AcceptanceOptions& o, int id, const char* name, F&& f) {
  if (o.only != 0 && o.only != id) return;
  try {
    record(rep, o, f(o));
  } catch (const std::exception& e) {
    record(rep, o, CriterionResult{id, name, false, std::string("error: ") + e.what(), 0});
  }
}

}  // namespace

bool AcceptanceReport::pass() const {
  return !criteria.empty() && std::all_of(criteria.begin(), criteria.end(), [](const auto& c) { return c.pass; });
}

std::string AcceptanceReport::table() const {
  std::string out;
  for (const auto& c : criteria) {
    out += std::string(c.pass ? "PASS" : "FAIL") + "  " + (c.id < 10 ? " " : "") + std::to_string(c.id) + "  " +
           c.name + "  (" + c.detail + ")\n";
  }
  return out;
}

std::string default_fixture_dir() { return HTREE_DEFAULT_FIXTURE_DIR; }

AcceptanceReport run_acceptance_once(const AcceptanceOptions& o) {
  AcceptanceReport rep;
  guarded(rep, o, 1, "exact marginals equal brute-force enumeration", c1_oracle);
  guarded(rep, o, 2, "lambda root and the convolution lemma", c2_lambda);
  guarded(rep, o, 3, "messages lambda^2-SLC and variances below C(lambda^2)", c3_certify);
  guarded(rep, o, 4, "Glauber dynamics matches exact marginals", c4_glauber);
  guarded(rep, o, 5, "flow identities: minimum law, DLR, ray variance", c5_flow);
  guarded(rep, o, 6, "localisation criterion on rays", c6_localisation);
  guarded(rep, o, 7, "child-zero lower bound and counting DP", c7_counting);
  guarded(rep, o, 8, "frozen region at d=2, n=12", c8_frozen);
  guarded(rep, o, 9, "level-average increments and fractional parts", c9_offset);
  return rep;
}

AcceptanceReport run_acceptance(const AcceptanceOptions& o) {
  const auto t0 = Clock::now();
  AcceptanceReport first = run_acceptance_once(o);
  if (o.only != 0) return first;
  AcceptanceOptions quiet = o;
  quiet.progress = nullptr;
  const AcceptanceReport second = run_acceptance_once(quiet);
  const std::string a = first.table();
  const std::string b = second.table();
  CriterionResult r{10, "determinism: second run is byte-identical", a == b, {}, since(t0)};
  r.detail = a == b ? std::to_string(a.size()) + " bytes compared" : "reports differ";
  record(first, o, std::move(r));
  return first;
}

}  // namespace htree
