#pragma once

// Batch pipeline behind the command-line tool: segment, featurize, train,
// annotate, codep, report (plus synth for fixtures). Each command reads a
// PipelineConfig, writes its outputs atomically under the output directory
// and produces byte-identical files for identical inputs and seed.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "signphon/codependence.hpp"
#include "signphon/error.hpp"
#include "signphon/feature_csv.hpp"
#include "signphon/features.hpp"
#include "signphon/geometry_params.hpp"
#include "signphon/ingest.hpp"
#include "signphon/learn/chain.hpp"
#include "signphon/learn/metrics.hpp"
#include "signphon/pose_model.hpp"
#include "signphon/segmentation.hpp"
#include "signphon/synthetic.hpp"

namespace signphon::pipeline {

namespace fs = std::filesystem;

// Bad configuration or usage (exit code 1).
struct ConfigError : Error {
  using Error::Error;
};

struct PipelineConfig {
  std::optional<std::uint64_t> seed;
  fs::path frames;       // directory of <video>_<frame>_keypoints.json files
  fs::path catalog;      // catalog XML (optional, supplies handshape labels)
  fs::path label_map;    // catalog text -> label code table
  fs::path features;     // feature CSV for train
  fs::path annotations;  // annotation file for codep
  fs::path model;        // trained model for annotate
  fs::path out = "out";
  std::size_t window = 3;
  LocationConfig location;
  learn::SplitSpec split;
  learn::ChainConfig chain;
  std::string feature_set = "distance";  // which featurize output train reads by default
  std::size_t kfold = 0;                 // 0 disables the k-fold summary
  double frame_width = 720;
  double frame_height = 576;
  double max_skip_fraction = 0.10;
  bool rasters = false;  // featurize also writes PBM skeleton rasters
  std::size_t workers = 0;  // 0 = hardware concurrency
  std::string synth_kind = "rest-sign-rest";

  std::uint64_t require_seed() const {
    if (!seed) throw ConfigError("a seed is required (config \"seed\" or --seed)");
    return *seed;
  }

  // Relative paths are resolved against `base` (the config file's directory).
  static PipelineConfig from_json(const nlohmann::json& j, const fs::path& base = {}) {
    static const std::set<std::string> known = {
        "seed", "paths", "window", "location_threshold", "split", "classifier", "tasks", "coupling", "mode",
        "source_folds", "feature_set", "kfold", "frame_width", "frame_height", "max_skip_fraction", "rasters",
        "workers", "synth"};
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [k, v] : j.items())
      if (!known.contains(k)) throw ConfigError("unknown config key '" + k + "'");
    PipelineConfig c;
    try {
      if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
      if (j.contains("paths")) {
        static const std::set<std::string> path_keys = {"frames", "catalog", "label_map", "features",
                                                        "annotations", "model", "out"};
        for (const auto& [k, v] : j.at("paths").items()) {
          if (!path_keys.contains(k)) throw ConfigError("unknown path key '" + k + "'");
          fs::path p = v.get<std::string>();
          if (p.is_relative() && !base.empty()) p = base / p;
          if (k == "frames") c.frames = p;
          else if (k == "catalog") c.catalog = p;
          else if (k == "label_map") c.label_map = p;
          else if (k == "features") c.features = p;
          else if (k == "annotations") c.annotations = p;
          else if (k == "model") c.model = p;
          else c.out = p;
        }
      }
      c.window = j.value("window", c.window);
      c.location.threshold_fraction = j.value("location_threshold", c.location.threshold_fraction);
      if (j.contains("split")) {
        const auto& s = j.at("split");
        c.split.train = s.value("train", c.split.train);
        c.split.validation = s.value("validation", c.split.validation);
        c.split.test = s.value("test", c.split.test);
      }
      if (j.contains("classifier")) c.chain.classifier = classifier_from_json(j.at("classifier"));
      if (j.contains("tasks")) {
        c.chain.tasks.clear();
        for (const auto& t : j.at("tasks")) c.chain.tasks.push_back(learn::parse_task(t.get<std::string>()));
      }
      if (j.contains("coupling"))
        for (const auto& e : j.at("coupling")) c.chain.coupling.push_back(learn::parse_edge(e.get<std::string>()));
      if (j.contains("mode")) c.chain.mode = learn::parse_mode(j.at("mode").get<std::string>());
      c.chain.source_folds = j.value("source_folds", c.chain.source_folds);
      c.feature_set = j.value("feature_set", c.feature_set);
      c.kfold = j.value("kfold", c.kfold);
      c.frame_width = j.value("frame_width", c.frame_width);
      c.frame_height = j.value("frame_height", c.frame_height);
      c.max_skip_fraction = j.value("max_skip_fraction", c.max_skip_fraction);
      c.rasters = j.value("rasters", c.rasters);
      c.workers = j.value("workers", c.workers);
      c.synth_kind = j.value("synth", c.synth_kind);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    } catch (const ParseError& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
  }

  static learn::ClassifierConfig classifier_from_json(const nlohmann::json& j) {
    static const std::set<std::string> known = {
        "kind", "k", "n_estimators", "max_depth", "max_leaf_nodes", "min_samples_leaf", "min_samples_split",
        "max_features_fraction", "bootstrap", "hidden", "learning_rate", "epochs", "batch_size",
        "validation_fraction", "validate_every", "standardize"};
    for (const auto& [k, v] : j.items())
      if (!known.contains(k)) throw ConfigError("unknown classifier key '" + k + "'");
    learn::ClassifierConfig c;
    c.kind = learn::parse_classifier(j.value("kind", std::string("knn")));
    c.knn.k = j.value("k", c.knn.k);
    auto& f = c.forest;
    f.n_estimators = j.value("n_estimators", f.n_estimators);
    f.max_depth = j.value("max_depth", f.max_depth);
    f.max_leaf_nodes = j.value("max_leaf_nodes", f.max_leaf_nodes);
    f.min_samples_leaf = j.value("min_samples_leaf", f.min_samples_leaf);
    f.min_samples_split = j.value("min_samples_split", f.min_samples_split);
    f.max_features_fraction = j.value("max_features_fraction", f.max_features_fraction);
    f.bootstrap = j.value("bootstrap", f.bootstrap);
    auto& m = c.mlp;
    m.hidden = j.value("hidden", m.hidden);
    m.learning_rate = j.value("learning_rate", m.learning_rate);
    m.epochs = j.value("epochs", m.epochs);
    m.batch_size = j.value("batch_size", m.batch_size);
    m.validation_fraction = j.value("validation_fraction", m.validation_fraction);
    m.validate_every = j.value("validate_every", m.validate_every);
    m.standardize = j.value("standardize", m.standardize);
    return c;
  }

  void validate() const {
    if (window == 0) throw ConfigError("window must be positive");
    if (frame_width <= 0 || frame_height <= 0) throw ConfigError("frame size must be positive");
    if (feature_set != "distance" && feature_set != "raw") throw ConfigError("feature_set must be 'distance' or 'raw'");
    if (max_skip_fraction < 0 || max_skip_fraction > 1) throw ConfigError("max_skip_fraction must lie in [0, 1]");
    try {
      location.validate();
      learn::split_sizes(3, split);
      if (chain.classifier.kind == learn::ClassifierKind::forest) chain.classifier.forest.validate();
      if (chain.classifier.kind == learn::ClassifierKind::mlp) chain.classifier.mlp.validate();
    } catch (const DataError& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    if (chain.classifier.knn.k == 0) throw ConfigError("k must be at least 1");
  }
};

// ---------------------------------------------------------------------------
// Helpers

inline std::size_t worker_count(std::size_t requested, std::size_t jobs) {
  std::size_t w = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(w, jobs));
}

// Runs fn(i) for i in [0, n) on a bounded pool. The first exception is
// rethrown after all workers stop.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  const auto w = worker_count(workers, n);
  for (std::size_t i = 1; i < w; ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct VideoFrames {
  std::string video;
  std::vector<PoseFrame> frames;  // ascending frame index
};

struct LoadedFrames {
  std::vector<VideoFrames> videos;  // ascending video id
  std::size_t files = 0;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

inline LoadedFrames load_frames(const PipelineConfig& cfg) {
  if (cfg.frames.empty()) throw ConfigError("no pose frame directory given (paths.frames or --frames)");
  if (!fs::is_directory(cfg.frames)) throw DataError("pose frame directory " + cfg.frames.string() + " does not exist");
  struct Item {
    fs::path path;
    std::string video;
    std::size_t index;
  };
  std::vector<Item> items;
  for (const auto& e : fs::directory_iterator(cfg.frames)) {
    if (!e.is_regular_file()) continue;
    const auto name = e.path().filename().string();
    if (auto parsed = parse_frame_filename(name)) items.push_back({e.path(), parsed->first, parsed->second});
  }
  if (items.empty()) throw DataError("no *_keypoints.json files in " + cfg.frames.string());
  std::sort(items.begin(), items.end(),
            [](const Item& a, const Item& b) { return std::tie(a.video, a.index) < std::tie(b.video, b.index); });

  std::vector<std::optional<PoseFrame>> parsed(items.size());
  std::vector<std::string> errors(items.size());
  parallel_for(items.size(), cfg.workers, [&](std::size_t i) {
    try {
      parsed[i] = parse_pose_frame(read_text_file(items[i].path),
                                   {items[i].index, items[i].video, cfg.frame_width, cfg.frame_height});
    } catch (const Error& e) {
      errors[i] = items[i].path.filename().string() + ": " + e.what();
    }
  });

  LoadedFrames out;
  out.files = items.size();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!parsed[i]) {
      ++out.skipped;
      out.warnings.push_back("skipping " + errors[i]);
      continue;
    }
    if (out.videos.empty() || out.videos.back().video != items[i].video) out.videos.push_back({items[i].video, {}});
    out.videos.back().frames.push_back(std::move(*parsed[i]));
  }
  return out;
}

inline fs::path segments_dir(const PipelineConfig& cfg) { return cfg.out / "segments"; }

// Frames kept by an earlier `segment` run, or all frames when none exists.
inline std::vector<PoseFrame> kept_frames(const PipelineConfig& cfg, const VideoFrames& v) {
  const auto file = segments_dir(cfg) / (v.video + ".txt");
  if (!fs::exists(file)) return v.frames;
  std::set<std::size_t> keep;
  std::istringstream in(read_text_file(file));
  for (std::size_t idx; in >> idx;) keep.insert(idx);
  std::vector<PoseFrame> out;
  for (const auto& f : v.frames)
    if (keep.contains(f.frame_index)) out.push_back(f);
  return out;
}

inline void log_warnings(std::ostream& log, const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) log << "warning: " << w << '\n';
}

// ---------------------------------------------------------------------------
// segment

inline int cmd_segment(const PipelineConfig& cfg, std::ostream& log) {
  auto loaded = load_frames(cfg);
  log_warnings(log, loaded.warnings);
  std::vector<SegmentResult> results(loaded.videos.size());
  parallel_for(loaded.videos.size(), cfg.workers,
               [&](std::size_t i) { results[i] = segment_range(loaded.videos[i].frames, cfg.window); });

  std::string summary = "video kept total first_frame last_frame dominant maxima\n";
  std::size_t kept_total = 0, frames_total = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& v = loaded.videos[i];
    const auto& r = results[i];
    std::string list;
    const std::size_t kept = r.last_frame - r.first_frame + 1;
    for (std::size_t k = r.first_frame; k <= r.last_frame; ++k) list += std::to_string(v.frames[k].frame_index) + "\n";
    write_text_file_atomic(segments_dir(cfg) / (v.video + ".txt"), list);
    if (!r.found_maxima) log << "warning: " << v.video << ": no maxima, keeping all " << v.frames.size() << " frames\n";
    summary += v.video + " " + std::to_string(kept) + " " + std::to_string(v.frames.size()) + " " +
               std::to_string(v.frames[r.first_frame].frame_index) + " " +
               std::to_string(v.frames[r.last_frame].frame_index) + " " + std::string(render(r.dominant)) + " " +
               (r.found_maxima ? "yes" : "no") + "\n";
    kept_total += kept;
    frames_total += v.frames.size();
  }
  write_text_file_atomic(segments_dir(cfg) / "summary.txt", summary);
  log << "segmented " << loaded.videos.size() << " videos: kept " << kept_total << " of " << frames_total
      << " frames, skipped " << loaded.skipped << " of " << loaded.files << " files\n";
  if (static_cast<double>(loaded.skipped) > cfg.max_skip_fraction * static_cast<double>(loaded.files)) {
    log << "error: skipped more than " << cfg.max_skip_fraction * 100 << "% of the frame files\n";
    return 2;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// featurize

// Video id -> handshape code from single-sequence catalog entries.
inline std::map<std::string, Handshape> catalog_handshapes(const PipelineConfig& cfg, std::ostream& log) {
  std::map<std::string, Handshape> out;
  if (cfg.catalog.empty()) return out;
  if (cfg.label_map.empty()) throw ConfigError("a catalog needs a label map (paths.label_map or --label-map)");
  const auto catalog = parse_catalog(read_text_file(cfg.catalog));
  for (const auto& e : catalog.errors) log << "warning: catalog entry " << e.position << ": " << e.message << '\n';
  const auto map = CatalogLabelMap::parse(read_text_file(cfg.label_map));
  for (const auto& entry : filter_single_sequence(catalog.entries)) {
    const auto h = map.handshape(entry.sequences.front().handshape1);
    if (!h) {
      log << "warning: entry " << entry.entry_no << ": no label for handshape '" << entry.sequences.front().handshape1
          << "'\n";
      continue;
    }
    out[entry.video_id()] = *h;
  }
  return out;
}

inline std::string raster_pbm(const BinaryHandRaster& r) {
  std::string out = "P1\n" + std::to_string(r.size()) + " " + std::to_string(r.size()) + "\n";
  for (std::size_t y = 0; y < r.size(); ++y) {
    for (std::size_t x = 0; x < r.size(); ++x) {
      out += r.at(x, y) ? '1' : '0';
      out += x + 1 < r.size() ? ' ' : '\n';
    }
  }
  return out;
}

inline int cmd_featurize(const PipelineConfig& cfg, std::ostream& log) {
  auto loaded = load_frames(cfg);
  log_warnings(log, loaded.warnings);
  const auto handshapes = catalog_handshapes(cfg, log);

  FeatureTable raw, dist;
  raw.feature_names = raw_feature_names();
  dist.feature_names = distance_feature_names();
  std::vector<PoseFrame> all_kept;
  std::size_t incomplete = 0;
  for (const auto& v : loaded.videos) {
    const auto frames = kept_frames(cfg, v);
    all_kept.insert(all_kept.end(), frames.begin(), frames.end());
    const auto hs = handshapes.find(v.video);
    for (const auto& f : frames)
      for (auto h : {Handedness::right, Handedness::left}) {
        const auto& hand = f.hand(h);
        if (!hand.any_detected()) continue;
        if (!hand.complete()) {
          ++incomplete;
          continue;
        }
        std::string orientation = "-";
        try {
          orientation = render(finger_orientation(hand));
        } catch (const DataError&) {
        }
        const std::string location(render(hand_location(f, h, cfg.location)));
        const std::string shape = hs == handshapes.end() ? "-" : std::string(render(hs->second));
        const auto r = raw_features(hand);
        const auto d = distance_features(hand);
        for (auto* t : {&raw, &dist}) {
          t->labels[learn::Task::handedness].emplace_back(render(handedness_of(h)));
          t->labels[learn::Task::handshape].push_back(shape);
          t->labels[learn::Task::orientation].push_back(orientation);
          t->labels[learn::Task::location].push_back(location);
        }
        raw.rows.emplace_back(r.begin(), r.end());
        dist.rows.emplace_back(d.begin(), d.end());
        if (cfg.rasters) {
          const auto name = v.video + "_" + std::string(render(h)) + "_" + std::to_string(f.frame_index) + ".pbm";
          write_text_file_atomic(cfg.out / "rasters" / name, raster_pbm(render_skeleton(hand)));
        }
      }
  }
  if (incomplete) log << "warning: " << incomplete << " partially detected hands were not featurized\n";
  write_text_file_atomic(cfg.out / "features_raw.csv", write_feature_csv(raw));
  write_text_file_atomic(cfg.out / "features_distance.csv", write_feature_csv(dist));
  if (!all_kept.empty())
    write_text_file_atomic(cfg.out / "location_heatmap.csv", heatmap_csv(distance_heatmap(all_kept, cfg.location)));
  log << "featurized " << raw.size() << " hands from " << loaded.videos.size() << " videos\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

inline std::vector<std::string> task_vocabulary(learn::Task t) {
  switch (t) {
    case learn::Task::handedness: return label_names<Handedness>();
    case learn::Task::handshape: return label_names<Handshape>();
    case learn::Task::orientation: return label_names<Orientation>();
    case learn::Task::location: return label_names<Location>();
  }
  return {};
}

inline fs::path features_path(const PipelineConfig& cfg) {
  if (!cfg.features.empty()) return cfg.features;
  return cfg.out / ("features_" + cfg.feature_set + ".csv");
}

inline std::string format_fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Saved model: the chain plus the feature names it was trained on.
inline nlohmann::json model_file_json(const learn::ChainModel& m, const std::vector<std::string>& feature_names) {
  return {{"format", "signphon-model"},
          {"format_version", learn::kModelFormatVersion},
          {"feature_names", feature_names},
          {"chain", m.to_json()}};
}

struct LoadedModel {
  learn::ChainModel chain;
  std::vector<std::string> feature_names;
};

inline LoadedModel load_model(const fs::path& p) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(p));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("model file " + p.string() + ": " + e.what());
  }
  if (j.value("format", "") != "signphon-model") throw FormatError("model file " + p.string() + ": unknown format");
  if (j.value("format_version", 0) != learn::kModelFormatVersion)
    throw FormatError("model file " + p.string() + ": unsupported format version");
  return {learn::ChainModel::from_json(j.at("chain")), j.at("feature_names").get<std::vector<std::string>>()};
}

inline int cmd_train(const PipelineConfig& cfg, std::ostream& log) {
  auto chain_cfg = cfg.chain;
  chain_cfg.seed = cfg.require_seed();
  auto split_spec = cfg.split;
  split_spec.seed = learn::derive_seed(chain_cfg.seed, 1000);

  const auto path = features_path(cfg);
  const auto table = read_feature_csv(read_text_file(path));
  std::map<learn::Task, std::vector<std::string>> vocab;
  for (auto t : chain_cfg.tasks) vocab[t] = task_vocabulary(t);
  const auto data = to_dataset(table, chain_cfg.tasks, vocab);
  if (data.size() < 3) throw DataError("train: need at least 3 labelled samples, got " + std::to_string(data.size()));
  const auto sizes = learn::split_sizes(data.size(), split_spec);
  if (sizes[0] == 0 || sizes[2] == 0) throw DataError("train: degenerate split (empty train or test part)");

  const auto parts = learn::split(data.size(), split_spec);
  const auto all = learn::ChainData::shared(data);
  const auto train = all.subset(parts.train);
  const auto model = learn::ChainModel::train(train, chain_cfg);

  std::string metrics = "features " + path.filename().string() + "\n";
  metrics += "classifier " + std::string(learn::classifier_name(chain_cfg.classifier.kind)) + "\n";
  metrics += "mode " + std::string(learn::mode_name(chain_cfg.mode)) + "\n";
  metrics += "coupling";
  for (const auto& e : chain_cfg.coupling) metrics += " " + learn::edge_name(e);
  if (chain_cfg.coupling.empty()) metrics += " none";
  metrics += "\nseed " + std::to_string(chain_cfg.seed) + "\n";
  metrics += "samples train " + std::to_string(parts.train.size()) + " validation " +
             std::to_string(parts.validation.size()) + " test " + std::to_string(parts.test.size()) + "\n";
  metrics += "task validation_accuracy test_accuracy\n";

  const auto test = all.subset(parts.test);
  const auto test_pred = model.predict(test);
  std::map<learn::Task, double> val_acc;
  if (!parts.validation.empty()) val_acc = model.accuracy(all.subset(parts.validation));
  for (auto t : model.config().tasks) {
    const auto& truth = test.labels.at(t).y;
    const auto& pred = test_pred.at(t);
    const auto cm = learn::confusion_matrix(truth, pred, model.classes(t));
    const std::string name(learn::task_name(t));
    metrics += name + " " + (val_acc.contains(t) ? format_fixed(val_acc.at(t)) : std::string("NA")) + " " +
               format_fixed(cm.accuracy()) + "\n";
    write_text_file_atomic(cfg.out / ("confusion_" + name + ".csv"), learn::confusion_csv(cm));
    write_text_file_atomic(cfg.out / ("precision_recall_" + name + ".csv"), learn::precision_recall_csv(cm));
  }
  write_text_file_atomic(cfg.out / "metrics.txt", metrics);
  write_text_file_atomic(cfg.out / "model.json", model_file_json(model, data.feature_names).dump(1) + "\n");

  if (chain_cfg.classifier.kind == learn::ClassifierKind::mlp && chain_cfg.mode == learn::ChainMode::separate) {
    for (auto t : model.config().tasks) {
      const auto& curve = model.base(t).as<learn::MlpModel>().network().curve();
      std::string csv = "epoch,train_loss,validation_accuracy\n";
      for (std::size_t e = 0; e < curve.train_loss.size(); ++e) {
        std::string acc = "";
        for (const auto& [ep, a] : curve.validation_accuracy)
          if (ep == e + 1) acc = format_fixed(a, 6);
        csv += std::to_string(e + 1) + "," + format_fixed(curve.train_loss[e], 6) + "," + acc + "\n";
      }
      write_text_file_atomic(cfg.out / ("learning_curve_" + std::string(learn::task_name(t)) + ".csv"), csv);
    }
  }

  if (cfg.kfold > 0) {
    std::map<learn::Task, std::vector<double>> fold_acc;
    learn::kfold(data.size(), cfg.kfold, learn::derive_seed(chain_cfg.seed, 2000),
                 [&](std::span<const std::size_t> tr, std::span<const std::size_t> va) {
                   const auto m = learn::ChainModel::train(all.subset(tr), chain_cfg);
                   for (const auto& [t, a] : m.accuracy(all.subset(va))) fold_acc[t].push_back(a);
                   return 0.0;
                 });
    std::string kf = "folds " + std::to_string(cfg.kfold) + "\ntask mean std\n";
    for (const auto& [t, accs] : fold_acc) {
      double mean = 0, var = 0;
      for (double a : accs) mean += a;
      mean /= static_cast<double>(accs.size());
      for (double a : accs) var += (a - mean) * (a - mean);
      kf += std::string(learn::task_name(t)) + " " + format_fixed(mean) + " " +
            format_fixed(std::sqrt(var / static_cast<double>(accs.size()))) + "\n";
    }
    write_text_file_atomic(cfg.out / "kfold.txt", kf);
  }
  log << metrics;
  return 0;
}

// ---------------------------------------------------------------------------
// annotate

inline int cmd_annotate(const PipelineConfig& cfg, std::ostream& log) {
  auto loaded = load_frames(cfg);
  log_warnings(log, loaded.warnings);

  std::optional<LoadedModel> model;
  bool raw_input = false;
  if (!cfg.model.empty()) {
    model = load_model(cfg.model);
    const auto& tasks = model->chain.config().tasks;
    if (std::find(tasks.begin(), tasks.end(), learn::Task::handshape) == tasks.end())
      throw DataError("model " + cfg.model.string() + " has no handshape task");
    if (model->feature_names == raw_feature_names())
      raw_input = true;
    else if (model->feature_names != distance_feature_names())
      throw DataError("model " + cfg.model.string() + " was trained on unknown features");
  } else {
    log << "warning: no handshape model; writing '" << kHandshapePlaceholder << "' in the handshape column\n";
  }

  std::vector<AnnotationRecord> records;
  std::size_t no_orientation = 0;
  for (const auto& v : loaded.videos)
    for (const auto& f : kept_frames(cfg, v))
      for (auto h : {Handedness::right, Handedness::left}) {
        const auto& hand = f.hand(h);
        const auto c = hand_centroid(hand);
        if (!c) continue;
        AnnotationRecord r;
        r.video_frame = video_frame_name(v.video, f.frame_index);
        std::tie(r.bbox_x, r.bbox_y) = crop_origin(*c, f.frame_width, f.frame_height);
        r.handedness = handedness_of(h);
        try {
          r.orientation = finger_orientation(hand);
        } catch (const DataError&) {
          ++no_orientation;
          continue;
        }
        r.location = hand_location(f, h, cfg.location);
        if (model && hand.complete()) {
          std::vector<double> x;
          if (raw_input) {
            const auto a = raw_features(hand);
            x.assign(a.begin(), a.end());
          } else {
            const auto a = distance_features(hand);
            x.assign(a.begin(), a.end());
          }
          learn::ChainData one;
          for (auto t : model->chain.config().tasks) {
            one.features[t] = learn::Matrix::from_rows({x});
            one.labels[t] = {model->chain.classes(t), {0}};
          }
          const int k = model->chain.predict(one).at(learn::Task::handshape).front();
          r.handshape = parse<Handshape>(model->chain.classes(learn::Task::handshape).at(static_cast<std::size_t>(k)));
        }
        records.push_back(std::move(r));
      }
  if (no_orientation) log << "warning: " << no_orientation << " hands without radius/middle metacarpal were skipped\n";
  const auto path = cfg.out / "annotations.txt";
  write_text_file_atomic(path, write_annotations(records));
  log << "wrote " << records.size() << " annotation rows to " << path.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// codep

inline int cmd_codep(const PipelineConfig& cfg, std::ostream& log) {
  const fs::path path = cfg.annotations.empty() ? cfg.out / "annotations.txt" : cfg.annotations;
  const auto records = read_annotations(read_text_file(path));
  std::set<Orientation> os;
  std::set<Location> ls;
  for (const auto& r : records) {
    os.insert(r.orientation);
    ls.insert(r.location);
  }
  if (os.size() < 2 || ls.size() < 2)
    throw DataError("untestable: need at least 2 distinct orientations and 2 distinct locations (got " +
                    std::to_string(os.size()) + " and " + std::to_string(ls.size()) + ")");
  const auto tables = build_contingency_by_hand(records);
  const auto report = bonferroni_screen(tables);
  if (report.m == 0) throw DataError("untestable: no cell has non-zero margins");
  write_text_file_atomic(cfg.out / "contingency_all.csv", contingency_csv(build_contingency(records)));
  write_text_file_atomic(cfg.out / "contingency_right.csv", contingency_csv(tables[0]));
  write_text_file_atomic(cfg.out / "contingency_left.csv", contingency_csv(tables[1]));
  write_text_file_atomic(cfg.out / "significance.csv", significance_csv(report));
  const auto summary = significance_summary(report);
  write_text_file_atomic(cfg.out / "codep_summary.txt", summary);
  log << summary;
  return 0;
}

// ---------------------------------------------------------------------------
// report

inline int cmd_report(const PipelineConfig& cfg, std::ostream& log) {
  const std::vector<std::pair<std::string, fs::path>> parts = {
      {"Segmentation", segments_dir(cfg) / "summary.txt"},
      {"Classification", cfg.out / "metrics.txt"},
      {"K-fold", cfg.out / "kfold.txt"},
      {"Orientation/location co-dependence", cfg.out / "codep_summary.txt"},
      {"Location heatmap", cfg.out / "location_heatmap.csv"},
  };
  std::string report = "# Pipeline report\n";
  std::size_t found = 0;
  for (const auto& [title, p] : parts) {
    if (!fs::exists(p)) continue;
    ++found;
    report += "\n## " + title + "\n\n```\n" + read_text_file(p) + "```\n";
  }
  if (!found) throw DataError("report: no pipeline outputs found in " + cfg.out.string());
  write_text_file_atomic(cfg.out / "report.md", report);
  log << "wrote " << (cfg.out / "report.md").string() << " from " << found << " sections\n";
  return 0;
}

// ---------------------------------------------------------------------------
// synth

inline std::string catalog_xml(const std::vector<std::pair<std::string, Handshape>>& videos) {
  std::string xml = "<Entries>\n";
  int no = 1;
  for (const auto& [video, h] : videos) {
    xml += "  <Entry>\n    <EntryNo>" + std::to_string(no++) + "</EntryNo>\n    <Gloss>" + video +
           "</Gloss>\n    <SignVideo>" + video + ".mp4</SignVideo>\n    <Phonology>\n      <Seq>\n"
           "        <SeqNo>1</SeqNo>\n        <Handshape1>" + std::string(render(h)) +
           "</Handshape1>\n        <Location>neutralt rum</Location>\n      </Seq>\n    </Phonology>\n  </Entry>\n";
  }
  return xml + "</Entries>\n";
}

// Writes fixture inputs under cfg.out:
//   rest-sign-rest   frames/ with one video whose sign spans frames 5..20
//   stationary       frames/ with one motionless video
//   handshapes       frames/ (one video per handshape instance) + catalog.xml
//   planted          annotations.txt with (n, nose) planted 5x
//   independent      annotations.txt with independent orientation and location
inline int cmd_synth(const PipelineConfig& cfg, std::ostream& log) {
  const auto seed = cfg.require_seed();
  const auto& kind = cfg.synth_kind;
  auto write_frames = [&](const std::vector<PoseFrame>& frames) {
    for (const auto& f : frames)
      write_text_file_atomic(cfg.out / "frames" / frame_filename(f.source_video, f.frame_index), write_pose_frame(f));
  };
  if (kind == "rest-sign-rest") {
    write_frames(synthetic::rest_sign_rest_frames("rsr"));
  } else if (kind == "stationary") {
    const std::vector<double> steps(12, 0.0);
    write_frames(synthetic::trajectory_frames(steps, "still"));
  } else if (kind == "handshapes") {
    synthetic::HandshapeSuiteOptions opt;
    opt.per_class = 20;
    const auto hands = synthetic::handshape_suite(opt, seed);
    std::vector<std::pair<std::string, Handshape>> videos;
    char name[32];
    for (std::size_t i = 0; i < hands.size(); ++i) {
      std::snprintf(name, sizeof name, "hs%04zu", i);
      videos.emplace_back(name, hands[i].label);
      write_frames({synthetic::make_frame(0, name, hands[i].hand, HandSkeleton{})});
    }
    write_text_file_atomic(cfg.out / "catalog.xml", catalog_xml(videos));
  } else if (kind == "planted" || kind == "independent") {
    synthetic::ContingencyGenerator g;
    if (kind == "planted") g.planted = std::pair{Orientation::n, Location::nose};
    write_text_file_atomic(cfg.out / "annotations.txt", write_annotations(synthetic::sample_annotations(10000, g, seed)));
  } else {
    throw ConfigError("unknown synth kind '" + kind + "'");
  }
  log << "wrote " << kind << " fixture to " << cfg.out.string() << '\n';
  return 0;
}

}  // namespace signphon::pipeline
