// Experiment runner: presets, custom JSON configs, CSV/SVG output, and the
// cross-module verification suites.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cbopt/labkit.hpp"

namespace {

cbopt::ExperimentSpec spec_from_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config: " + path);
  nlohmann::json j = nlohmann::json::parse(f);
  cbopt::ExperimentSpec s;
  s.name = j.value("name", std::string("custom"));
  s.objective = j.value("objective", s.objective);
  s.distribution = j.value("distribution", s.distribution);
  s.algorithms = j.value("algorithms", std::vector<std::string>{});
  s.band = j.value("band", s.band);
  s.mu = j.value("mu", s.mu);
  s.T = j.value("T", s.T);
  s.trials = j.value("trials", s.trials);
  s.seed = j.value("seed", std::uint64_t(s.seed));
  s.S = j.value("S", s.S);
  s.tail_lambda = j.value("tail_lambda", s.tail_lambda);
  s.qp = j.value("qp", s.qp);
  s.d = j.value("d", s.d);
  s.radial = j.value("radial", s.radial);
  if (s.algorithms.empty()) throw std::runtime_error("config must list algorithms");
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"comparison-based stochastic optimization experiments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an experiment and write CSV (and optionally SVG)");
  std::string preset_name, config_path, out_path, svg_path;
  int trials = -1, iters = -1, threads = 1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  run->add_option("--preset", preset_name, "preset name (see list-presets)");
  run->add_option("--config", config_path, "JSON experiment config");
  run->add_option("--trials", trials, "trial count override");
  run->add_option("--iters", iters, "iteration count override");
  run->add_option("--seed", seed, "base seed override")->each([&](const std::string&) {
    seed_set = true;
  });
  run->add_option("--threads", threads, "worker threads (0 = hardware)");
  run->add_option("--out", out_path, "output CSV path")->required();
  run->add_option("--svg", svg_path, "optional SVG plot path");

  auto* list = app.add_subcommand("list-presets", "list built-in experiment presets");

  auto* ver = app.add_subcommand("verify", "run the cross-module property suites");
  bool quick = false;
  ver->add_flag("--quick", quick, "smaller sample counts, skip the slope suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (list->parsed()) {
      for (const auto& name : cbopt::preset_names()) {
        cbopt::ExperimentSpec s = cbopt::preset(name);
        std::cout << name << ": "
                  << (s.qp ? "qp d=" + std::to_string(s.d)
                           : s.objective + " / " + s.distribution + " / band " + s.band)
                  << ", T=" << s.T << ", " << s.algorithms.size() << " algorithms\n";
      }
      return 0;
    }
    if (ver->parsed()) {
      cbopt::VerifyReport rep = cbopt::verify(quick);
      std::cout << rep.to_string();
      return rep.ok() ? 0 : 3;
    }
    // run
    if (preset_name.empty() == config_path.empty()) {
      std::cerr << "run needs exactly one of --preset or --config\n";
      return 1;
    }
    cbopt::ExperimentSpec spec =
        preset_name.empty() ? spec_from_json(config_path) : cbopt::preset(preset_name);
    if (trials > 0) spec.trials = trials;
    if (iters > 0) spec.T = iters;
    if (seed_set) spec.seed = seed;
    if (threads == 0) threads = int(std::thread::hardware_concurrency());
    cbopt::Results results = cbopt::run_experiment(spec, threads);
    cbopt::write_csv(spec, results, out_path);
    if (!svg_path.empty()) cbopt::plot_svg(spec, results, svg_path);
    std::cout << "wrote " << out_path;
    if (!svg_path.empty()) std::cout << " and " << svg_path;
    std::cout << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
