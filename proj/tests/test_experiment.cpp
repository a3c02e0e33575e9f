#include "doctest.h"
#include "htree/error.hpp"
#include "htree/experiment.hpp"

using namespace htree;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::invalid_argument;
}

}  // namespace

TEST_CASE("every subcommand has defaults with the common keys") {
  for (const auto& cmd : experiment_commands()) {
    const Json cfg = default_config(cmd);
    CHECK(cfg.contains("seed"));
    CHECK(cfg.contains("replicas"));
    CHECK(cfg.at("format") == "csv");
  }
  CHECK(experiment_commands().size() == 15);
  CHECK(code_of([] { default_config("nope"); }) == ErrorCode::parse);
}

TEST_CASE("config resolution: defaults, file, flags") {
  Json file = {{"seed", 5}, {"k", 2}};
  const Json cfg = resolve_config("mono-count", file, {{"k", "4"}, {"mode", "logfloat"}});
  CHECK(cfg.at("seed").get<std::uint64_t>() == 5);
  CHECK(cfg.at("k").get<int>() == 4);
  CHECK(cfg.at("mode") == "logfloat");
  CHECK(cfg.at("n").get<int>() == 4);

  CHECK(code_of([] { resolve_config("mono-count", Json{{"bogus", 1}}, {}); }) == ErrorCode::parse);
  CHECK(code_of([] { resolve_config("mono-count", Json{{"k", "three"}}, {}); }) == ErrorCode::parse);
  CHECK(code_of([] { resolve_config("mono-count", Json(), {{"k", "3.5"}}); }) == ErrorCode::parse);
  CHECK(code_of([] { resolve_config("mono-count", Json(), {{"format", "xml"}}); }) == ErrorCode::parse);
  CHECK(code_of([] { resolve_config("mono-count", Json{{"command", "hom-marginal"}}, {}); }) == ErrorCode::parse);

  const Json arr = resolve_config("flow-dlr", Json(), {{"child_weights", "1/3,2/3"}, {"child_heights", "[0, -1]"}});
  CHECK(arr.at("child_weights") == Json::array({"1/3", "2/3"}));
  CHECK(arr.at("child_heights") == Json::array({0, -1}));
}

TEST_CASE("resolved configs round-trip through their text form") {
  const Json cfg = resolve_config("hom-glauber", Json(), {{"burn_in", "17"}, {"seed", "18446744073709551615"}});
  const Json back = resolve_config("hom-glauber", Json::parse(cfg.dump(2)), {});
  CHECK(back == cfg);
  CHECK(back.dump() == cfg.dump());
  CHECK(back.at("seed").get<std::uint64_t>() == 18446744073709551615ull);
  // region blocks are stored in canonical form
  CHECK(cfg.at("region").at("boundary").at("rule") == "constant");
}

TEST_CASE("records: star marginal and mono-count at k = 0") {
  const auto rec = run_experiment("hom-marginal", resolve_config("hom-marginal", Json(), {}));
  REQUIRE(rec.rows.size() == 1);
  CHECK(rec.rows[0][1] == "{-1:1/2, 1:1/2}");
  const std::string csv = to_csv(rec);
  CHECK(csv.find("0,\"{-1:1/2, 1:1/2}\",0,1\n") != std::string::npos);
  CHECK(csv.rfind("# command: hom-marginal\n# config: {", 0) == 0);
  CHECK(csv.find('\r') == std::string::npos);
  const Json j = Json::parse(to_json(rec));
  CHECK(j.at("rows")[0][1] == "{-1:1/2, 1:1/2}");

  const auto mono = run_experiment("mono-count", resolve_config("mono-count", Json(), {{"k", "0"}}));
  CHECK(mono.rows[0][3] == "1");
}

TEST_CASE("stochastic records depend on the seed only") {
  const Json a = resolve_config("flow-ray-variance", Json(), {{"replicas", "2000"}});
  CHECK(render(run_experiment("flow-ray-variance", a)) == render(run_experiment("flow-ray-variance", a)));
  const Json b = resolve_config("flow-ray-variance", Json(), {{"replicas", "2000"}, {"seed", "2"}});
  const auto ra = run_experiment("flow-ray-variance", a);
  const auto rb = run_experiment("flow-ray-variance", b);
  CHECK(ra.rows[0][1] == rb.rows[0][1]);  // exact variance
  CHECK(ra.rows[0][2] != rb.rows[0][2]);  // estimate
}

TEST_CASE("errors map to exit codes") {
  CHECK(exit_code(ErrorCode::parse) == 2);
  CHECK(exit_code(ErrorCode::invalid_argument) == 2);
  CHECK(exit_code(ErrorCode::infeasible_boundary) == 3);
  CHECK(exit_code(ErrorCode::invalid_flow) == 3);
  CHECK(exit_code(ErrorCode::size_cap_exceeded) == 4);
  CHECK(exit_code(ErrorCode::enumeration_cap_exceeded) == 4);

  const Json bad = resolve_config(
      "hom-marginal",
      Json{{"region", Json::parse(R"({"kind":"undirected","degree":3,"depth":1,"boundary":{"rule":"list","values":[0,2,4]}})")}},
      {});
  CHECK(code_of([&] { run_experiment("hom-marginal", bad); }) == ErrorCode::infeasible_boundary);
}

TEST_CASE("doubles carry 17 significant digits") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
