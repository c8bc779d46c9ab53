#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "reclab/augment/augment.hpp"
#include "reclab/data/synthetic.hpp"
#include "reclab/features/pipeline.hpp"
#include "reclab/train/trainer.hpp"

namespace reclab::cli {

// One configuration file drives every command. Parsing is strict: unknown
// keys anywhere in the document are errors, not warnings.
struct RunConfig {
  struct Data {
    std::string source = "synthetic";  // synthetic | file
    std::string path;                  // reservations file for source=file
    data::SyntheticConfig synthetic;
    int filter_min_cities = 4;
    int filter_max_cities = 10;
    long filter_max_duration_days = 22;
    std::string filter_scope = "train";  // train | all: whether the test
                                         // split is filtered too
    double train_fraction = 0.8;
    double valid_fraction = 0.1;  // share of the training split held out
    std::uint64_t seed = 13;
  };
  struct Model {
    std::string variant = "narm_v2";  // narm | narm_v1 | narm_v2
    int hidden = 100;
    int city_dim = 50;
    int month_dim = 25;
    int duration_dim = 25;
    int cat_dim = 50;
    double dropout = 0.25;
  };
  struct Augmentation {
    augment::PerturbationPolicy policy;  // seed filled from training.seed
    int min_trip_len = 4;
    int similarity_top_k = 10;  // neighbor list depth of the fitted index
  };
  struct Features {
    features::FeatureConfig config;
    features::UserEncoder::Options autoencoder;
  };
  struct Evaluation {
    int k = 4;
  };
  struct Output {
    std::string dir = "run_out";
    std::string data_file = "data.csv";
    std::string metrics_file = "metrics.jsonl";
    std::string timing_file = "timing.jsonl";
    std::string checkpoint_file = "model.ckpt";
    std::string report_file = "report.jsonl";
    std::string summary_file = "summary.json";
    std::string leaderboard_file = "leaderboard.txt";
    std::string leaderboard_records = "leaderboard.jsonl";
    std::string plot_file = "embedding.svg";
    std::string coords_file = "embedding_coords.csv";
    std::string manifest_file = "run_manifest.json";
    int plot_max_points = 500;
  };

  Data data;
  Model model;
  train::TrainConfig training;
  bool loss_explicit = false;  // false: variant picks the loss
  Augmentation augmentation;
  Features features;
  Evaluation evaluation;
  Output output;
  nlohmann::json snapshot;  // the document this config was parsed from

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig from_file(const std::string& path);

  // REC_LAB_OUT overrides output.dir when set.
  std::string out_dir() const;
  // Loss identifier after variant resolution (narm defaults to plain
  // cross-entropy, the improved variants to focal).
  std::string effective_loss() const;
};

// Mutates the raw document (and therefore the manifest snapshot) before
// parsing, so reruns from a manifest replay the overrides too.
void apply_overrides(nlohmann::json& doc, const std::string& out,
                     const std::string& seed, const std::string& variant);

void cmd_generate(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
void cmd_evaluate(const RunConfig& cfg, const std::string& checkpoint_path);
void cmd_compare(const RunConfig& cfg);
void cmd_export_embeddings(const RunConfig& cfg,
                           const std::string& checkpoint_path);

}  // namespace reclab::cli
