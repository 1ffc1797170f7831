// Command-line driver for the sign phonology pipeline.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "signphon/pipeline.hpp"

namespace sp = signphon::pipeline;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out, frames, catalog, label_map, features, annotations, model, kind;
  std::optional<std::size_t> workers;
};

sp::PipelineConfig resolve(const Overrides& o) {
  sp::PipelineConfig cfg;
  if (!o.config.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(signphon::read_text_file(o.config));
    } catch (const nlohmann::json::exception& e) {
      throw sp::ConfigError("config " + o.config + ": " + e.what());
    } catch (const signphon::DataError& e) {
      throw sp::ConfigError(e.what());
    }
    cfg = sp::PipelineConfig::from_json(j, std::filesystem::path(o.config).parent_path());
  }
  // Flags win over the config file.
  if (o.seed) cfg.seed = o.seed;
  if (o.workers) cfg.workers = *o.workers;
  if (!o.out.empty()) cfg.out = o.out;
  if (!o.frames.empty()) cfg.frames = o.frames;
  if (!o.catalog.empty()) cfg.catalog = o.catalog;
  if (!o.label_map.empty()) cfg.label_map = o.label_map;
  if (!o.features.empty()) cfg.features = o.features;
  if (!o.annotations.empty()) cfg.annotations = o.annotations;
  if (!o.model.empty()) cfg.model = o.model;
  if (!o.kind.empty()) cfg.synth_kind = o.kind;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pose keypoints to sign phonology annotations"};
  app.require_subcommand(1);
  Overrides o;
  app.add_option("--config", o.config, "JSON pipeline config")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "random seed (overrides the config)");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--frames", o.frames, "directory of <video>_<frame>_keypoints.json files");
  app.add_option("--catalog", o.catalog, "catalog XML");
  app.add_option("--label-map", o.label_map, "catalog text to label code table");
  app.add_option("--features", o.features, "feature CSV");
  app.add_option("--annotations", o.annotations, "annotation file");
  app.add_option("--model", o.model, "trained model JSON");
  app.add_option("--workers", o.workers, "worker threads (0 = all cores)");

  using Cmd = int (*)(const sp::PipelineConfig&, std::ostream&);
  const std::vector<std::tuple<std::string, std::string, Cmd>> commands = {
      {"segment", "drop rest frames before the first and after the last speed maximum", sp::cmd_segment},
      {"featurize", "write raw and distance feature CSVs and the location heatmap", sp::cmd_featurize},
      {"train", "train classifiers on a feature CSV and report metrics", sp::cmd_train},
      {"annotate", "write the annotation file for the kept frames", sp::cmd_annotate},
      {"codep", "orientation/location contingency tables and chi-square screening", sp::cmd_codep},
      {"report", "collect the outputs of earlier commands into report.md", sp::cmd_report},
      {"synth", "write synthetic fixtures", sp::cmd_synth},
  };
  Cmd selected = nullptr;
  for (const auto& [name, help, fn] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->callback([&selected, f = fn] { selected = f; });
    if (name == "synth") sub->add_option("--kind", o.kind, "rest-sign-rest|stationary|handshapes|planted|independent");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    return selected(resolve(o), std::cerr);
  } catch (const sp::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const signphon::TrainingError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const signphon::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
}
