// SPDX-License-Identifier: Apache-2.0
// qkf: quantum-kernel fraud detection experiments.
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "qkf/error.hpp"
#include "qkf/pipeline.hpp"

namespace {

nlohmann::json read_config_json(const std::string& path) {
  std::ifstream in(path);
  qkf::require(in.good(), qkf::ErrorKind::kIo, "cannot open config " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    qkf::fail(qkf::ErrorKind::kParse, "config " + path + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum-kernel fraud detection pipeline"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::size_t jobs = 0;
  std::optional<std::uint64_t> seed;
  std::string out;
  for (const auto& name : {"generate", "preprocess", "select", "train", "evaluate", "ensemble", "report", "all"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--jobs", jobs, "worker threads (0 = all cores)");
    sub->add_option("--seed", seed, "overrides the config seed");
    sub->add_option("--out", out, "overrides the config output directory");
  }
  CLI11_PARSE(app, argc, argv);

  try {
    auto j = read_config_json(config_path);
    if (seed) j["seed"] = *seed;
    if (!out.empty()) j["out"] = out;
    qkf::pipeline::ExperimentConfig cfg;
    try {
      cfg = qkf::pipeline::ExperimentConfig::from_json(j);
    } catch (const nlohmann::json::exception& e) {
      qkf::fail(qkf::ErrorKind::kSchema, "config " + config_path + ": " + e.what());
    }
    qkf::pipeline::RunOptions opts;
    opts.out = cfg.out;
    opts.jobs = jobs;
    qkf::pipeline::run_command(app.get_subcommands().front()->get_name(), cfg, opts);
  } catch (const qkf::Error& e) {
    std::cerr << "qkf: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "qkf: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
