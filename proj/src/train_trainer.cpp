#include "reclab/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <map>

#include "reclab/common/error.hpp"
#include "reclab/common/hash.hpp"
#include "reclab/train/batching.hpp"
#include "reclab/train/optimizer.hpp"

namespace reclab::train {

void TrainConfig::validate() const {
  if (learning_rate <= 0) throw InvalidConfig("learning_rate must be > 0");
  if (weight_decay < 0) throw InvalidConfig("weight_decay must be >= 0");
  if (batch_size < 1) throw InvalidConfig("batch_size must be >= 1");
  if (history_window < 1) throw InvalidConfig("history_window must be >= 1");
  if (early_stop_patience < 1)
    throw InvalidConfig("early_stop_patience must be >= 1");
  if (max_epochs < 1) throw InvalidConfig("max_epochs must be >= 1");
  if (optimizer != "radam")
    throw InvalidConfig("unknown optimizer: " + optimizer);
  if (loss != "focal" && loss != "cross_entropy")
    throw InvalidConfig("unknown loss: " + loss);
  if (beta < 0 || beta > 1) throw InvalidConfig("beta must lie in [0, 1]");
  if (clip_norm < 0) throw InvalidConfig("clip_norm must be >= 0");
}

losses::CombinedParams TrainConfig::combined_params() const {
  losses::CombinedParams p;
  p.beta = beta;
  if (loss == "cross_entropy") {
    p.city = {1.0, 0.0};
    p.country = {1.0, 0.0};
  } else {
    p.city = {focal_alpha, focal_gamma};
    p.country = {focal_alpha, focal_gamma};
  }
  p.validate();
  return p;
}

namespace {

std::map<std::string, nn::Mat> snapshot(const nn::ParamStore& params) {
  std::map<std::string, nn::Mat> s;
  for (const auto* p : params.all()) s[p->name] = p->value;
  return s;
}

void restore(nn::ParamStore& params, const std::map<std::string, nn::Mat>& s) {
  for (auto* p : params.all()) p->value = s.at(p->name);
}

}  // namespace

double acc_at_4_on_samples(const model::NarmModel& model,
                           const std::vector<augment::PrefixSample>& samples,
                           int window, int batch_size) {
  if (samples.empty()) throw InsufficientData("no samples to score");
  long hits = 0;
  auto batches = make_batches(samples, window, batch_size, 0, 0, false);
  for (const auto& b : batches) {
    Eigen::MatrixXd scores = model.city_scores(b);
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
      auto top = model::top_k_cities(scores.row(i), 4);
      int truth = b.label_city[static_cast<std::size_t>(i)];
      for (int id : top)
        if (id == truth) {
          ++hits;
          break;
        }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

double loss_on_samples(const model::NarmModel& model,
                       const std::vector<augment::PrefixSample>& samples,
                       const losses::CombinedParams& params, int window,
                       int batch_size) {
  if (samples.empty()) throw InsufficientData("no samples to score");
  double total = 0;
  auto batches = make_batches(samples, window, batch_size, 0, 0, false);
  for (const auto& b : batches) {
    nn::Graph g;
    nn::Var loss = model.training_loss(g, b, params, false, nullptr);
    total += loss->val()(0, 0) * static_cast<double>(b.size());
  }
  return total / static_cast<double>(samples.size());
}

TrainResult train_model(model::NarmModel& model,
                        const SampleProvider& train_samples,
                        const std::vector<augment::PrefixSample>& valid_samples,
                        const TrainConfig& cfg) {
  cfg.validate();
  if (valid_samples.empty())
    throw InsufficientData("validation samples required for early stopping");
  losses::CombinedParams lparams = cfg.combined_params();

  RAdam optimizer({.learning_rate = cfg.learning_rate,
                   .weight_decay = cfg.weight_decay});
  auto param_ptrs = model.params().all();

  TrainResult result;
  auto best = snapshot(model.params());
  double best_acc = -1.0;
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    auto start = std::chrono::steady_clock::now();
    auto samples = train_samples(static_cast<std::uint64_t>(epoch));
    if (samples.empty()) throw InsufficientData("epoch produced no samples");
    auto batches = make_batches(samples, cfg.history_window, cfg.batch_size,
                                cfg.seed, static_cast<std::uint64_t>(epoch));
    Rng dropout_rng(seed_stream(
        {cfg.seed, fnv1a("dropout"), static_cast<std::uint64_t>(epoch)}));

    double train_loss = 0;
    bool finite = true;
    for (const auto& b : batches) {
      nn::Graph g;
      nn::Var loss = model.training_loss(g, b, lparams, true, &dropout_rng);
      double lv = loss->val()(0, 0);
      if (!std::isfinite(lv)) {
        finite = false;
        break;
      }
      train_loss += lv * static_cast<double>(b.size());
      g.backward(loss);
      if (cfg.clip_norm > 0) clip_global_norm(param_ptrs, cfg.clip_norm);
      model.zero_pad_row_grad();
      optimizer.step(param_ptrs);
    }
    if (!finite) {
      result.diverged = true;
      break;
    }
    train_loss /= static_cast<double>(samples.size());

    double val_loss = loss_on_samples(model, valid_samples, lparams,
                                      cfg.history_window, cfg.batch_size);
    double val_acc = acc_at_4_on_samples(model, valid_samples,
                                         cfg.history_window, cfg.batch_size);
    double wall = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    result.history.push_back({epoch, train_loss, val_loss, val_acc, wall});
    if (!std::isfinite(val_loss)) {
      result.diverged = true;
      break;
    }

    if (val_acc > best_acc + 1e-12) {
      best_acc = val_acc;
      result.best_epoch = epoch;
      best = snapshot(model.params());
      since_best = 0;
    } else if (++since_best >= cfg.early_stop_patience) {
      break;
    }
  }

  restore(model.params(), best);
  result.best_val_acc4 = std::max(best_acc, 0.0);
  return result;
}

}  // namespace reclab::train
