#pragma once

#include <map>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "reclab/data/types.hpp"
#include "reclab/features/pipeline.hpp"
#include "reclab/model/narm.hpp"

namespace reclab::train {

// Single-file archive: a magic string, a plain-text JSON manifest (type,
// architecture hyperparameters, vocabulary hash) and named float32 row-major
// tensors. Loading a model verifies the vocabulary hash.
struct Checkpoint {
  nlohmann::json manifest;
  std::map<std::string, Eigen::MatrixXd> tensors;
};

inline constexpr const char* kCheckpointMagic = "RECLAB.CKPT.1\n";

void save_checkpoint(const std::string& path, const Checkpoint& cp);
Checkpoint load_checkpoint(const std::string& path);

// Model + fitted feature pipeline in one archive. `extra` is merged into the
// manifest (best epoch, metrics, config snapshot, ...).
void save_model(const std::string& path, const model::NarmModel& m,
                const features::FeaturePipeline& pipeline,
                const std::string& vocab_hash,
                const nlohmann::json& extra = {});

struct LoadedModel {
  model::NarmModel model;
  features::FeaturePipeline pipeline;
  nlohmann::json manifest;
};

// Throws HashMismatch when `expect_vocab_hash` disagrees with the archive.
LoadedModel load_model(const std::string& path,
                       const std::string& expect_vocab_hash);

}  // namespace reclab::train
