// htree: command-line front end for the experiments.
//
// Every subcommand accepts --config FILE (JSON), --out FILE, --dump-config,
// --timing and one flag per parameter; flags override the config file, which
// overrides the built-in defaults.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>

#include "CLI11.hpp"

#include "htree/experiment.hpp"

namespace {

struct Subcommand {
  std::string name;
  CLI::App* app = nullptr;
  std::string config;
  std::string out;
  bool dump = false;
  bool timing = false;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
};

const std::map<std::string, std::string>& descriptions() {
  static const std::map<std::string, std::string> d = {
      {"hom-marginal", "exact marginal of h(x) for uniform homomorphisms on a region"},
      {"hom-certify", "certify that every message toward x is strongly log-concave"},
      {"hom-variance", "marginal variances against the uniform bound"},
      {"hom-glauber", "heat-bath Glauber dynamics against the exact marginal"},
      {"offset-demo", "level averages of i.i.d. +-1 gradients"},
      {"flow-validate", "check the flow condition at every vertex"},
      {"flow-sample", "sample the flow measure and compare gradient laws"},
      {"flow-localise", "classify a ray as localised or delocalised"},
      {"flow-ray-variance", "variance of the height difference along a ray"},
      {"flow-dlr", "single-site DLR check of the flow measure"},
      {"mono-count", "exact count of monotone functions on the d-ary tree"},
      {"mono-sample", "exact uniform monotone samples"},
      {"mono-child-zero", "P(h = 0) at a child of the root against its lower bound"},
      {"frozen-region", "frequency of an all-zero neighbourhood of the root"},
      {"verify", "run the acceptance suite and print a PASS/FAIL table"},
  };
  return d;
}

std::string dashed(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

bool write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return true;
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  return static_cast<bool>(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Height functions on trees: exact engines, samplers and experiments"};
  app.require_subcommand(1);

  std::vector<std::unique_ptr<Subcommand>> subs;
  for (const auto& name : htree::experiment_commands()) {
    auto s = std::make_unique<Subcommand>();
    s->name = name;
    s->app = app.add_subcommand(name, descriptions().at(name));
    s->app->add_option("--config", s->config, "JSON config file");
    s->app->add_option("--out", s->out, "output file (default: stdout)");
    s->app->add_flag("--dump-config", s->dump, "print the resolved config as JSON and exit");
    s->app->add_flag("--timing", s->timing, "print wall-clock time to stderr");
    const htree::Json defaults = htree::default_config(name);
    for (const auto& [key, value] : defaults.items()) {
      std::string help = htree::parameter_help(name, key);
      if (!value.is_object()) help += " [default: " + (value.is_string() ? value.get<std::string>() : value.dump()) + "]";
      s->options[key] = s->app->add_option("--" + dashed(key), s->values[key], help);
    }
    subs.push_back(std::move(s));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  for (const auto& s : subs) {
    if (!s->app->parsed()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      std::vector<std::pair<std::string, std::string>> flags;
      for (const auto& [key, opt] : s->options) {
        if (opt->count() > 0) flags.emplace_back(key, s->values[key]);
      }
      const htree::Json file = s->config.empty() ? htree::Json() : htree::read_config_file(s->config);
      const htree::Json cfg = htree::resolve_config(s->name, file, flags);
      if (s->dump) {
        htree::Json withcmd = {{"command", s->name}};
        withcmd.update(cfg);
        return write_output(s->out, withcmd.dump(2) + "\n") ? 0 : 2;
      }
      const auto rec = htree::run_experiment(s->name, cfg);
      if (s->name == "verify") {
        for (const auto& row : rec.rows) {
          std::printf("%s  %2s  %s  (%s)\n", row[2].c_str(), row[0].c_str(), row[1].c_str(), row[3].c_str());
        }
        std::printf("%s\n", rec.pass ? "ALL PASS" : "FAILURES");
        if (!s->out.empty() && !write_output(s->out, htree::render(rec))) {
          std::fprintf(stderr, "error: cannot write %s\n", s->out.c_str());
          return 2;
        }
      } else if (!write_output(s->out, htree::render(rec))) {
        std::fprintf(stderr, "error: cannot write %s\n", s->out.c_str());
        return 2;
      }
      if (s->timing) {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::fprintf(stderr, "wall-clock: %.3f s\n", secs);
      }
      return rec.pass ? 0 : 1;
    } catch (const htree::Error& e) {
      std::fprintf(stderr, "error [%s]: %s\n", htree::to_string(e.code()), e.what());
      return htree::exit_code(e.code());
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 2;
    }
  }
  return 2;
}
