#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "reclab/augment/sample.hpp"
#include "reclab/losses/focal.hpp"
#include "reclab/model/narm.hpp"

namespace reclab::train {

struct TrainConfig {
  double learning_rate = 0.001;
  double weight_decay = 0.01;
  int batch_size = 64;
  int history_window = 10;
  int early_stop_patience = 10;
  int max_epochs = 200;
  std::uint64_t seed = 0;
  std::string optimizer = "radam";
  std::string loss = "focal";  // focal | cross_entropy
  double beta = 0.5;           // city-head weight when both heads are active
  double focal_alpha = 1.0;
  double focal_gamma = 3.0;
  double clip_norm = 5.0;  // global gradient-norm ceiling; 0 disables

  void validate() const;
  // cross_entropy maps to the gamma=0, alpha=1 special case.
  losses::CombinedParams combined_params() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc4 = 0.0;
  double wall_seconds = 0.0;  // kept out of the deterministic metrics file
};

struct TrainResult {
  int best_epoch = -1;  // epoch whose weights the model ends up holding
  double best_val_acc4 = 0.0;
  std::vector<EpochRecord> history;
  bool diverged = false;
};

// Produces the epoch's training samples (1-based epoch index), letting
// augmentation redraw its perturbations every epoch.
using SampleProvider =
    std::function<std::vector<augment::PrefixSample>(std::uint64_t epoch)>;

// Optimizes the model in place. Early-stops when validation Acc@4 fails to
// improve for `early_stop_patience` consecutive epochs; the model is left
// holding the best-validation-epoch weights. A non-finite loss aborts the
// run with the best weights seen so far. Deterministic for a fixed seed.
TrainResult train_model(model::NarmModel& model,
                        const SampleProvider& train_samples,
                        const std::vector<augment::PrefixSample>& valid_samples,
                        const TrainConfig& cfg);

// Share of samples whose label lands in the model's top 4.
double acc_at_4_on_samples(const model::NarmModel& model,
                           const std::vector<augment::PrefixSample>& samples,
                           int window, int batch_size);

// Mean combined loss over samples, inference mode.
double loss_on_samples(const model::NarmModel& model,
                       const std::vector<augment::PrefixSample>& samples,
                       const losses::CombinedParams& params, int window,
                       int batch_size);

}  // namespace reclab::train
