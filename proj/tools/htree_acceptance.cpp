// Runs the acceptance suite: one PASS/FAIL line per criterion on stdout,
// per-criterion wall-clock on stderr. Exit status 1 on any failure.
//
//   htree_acceptance [--seed N] [--fixtures DIR] [--only K]

#include <cstdio>

#include "CLI11.hpp"

#include "htree/acceptance.hpp"

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  htree::AcceptanceOptions opt;
  opt.fixture_dir = htree::default_fixture_dir();
  app.add_option("--seed", opt.seed, "master seed");
  app.add_option("--fixtures", opt.fixture_dir, "fixture directory");
  app.add_option("--only", opt.only, "run a single criterion (1-9)");
  CLI11_PARSE(app, argc, argv);

  opt.progress = [](const htree::CriterionResult& c) {
    std::fprintf(stderr, "criterion %2d finished in %.2f s\n", c.id, c.seconds);
  };
  const auto report = htree::run_acceptance(opt);
  std::fputs(report.table().c_str(), stdout);
  std::printf("%s\n", report.pass() ? "ALL PASS" : "FAILURES");
  return report.pass() ? 0 : 1;
}
