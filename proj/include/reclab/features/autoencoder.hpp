#pragma once

#include <cstdint>

#include "reclab/nn/graph.hpp"

namespace reclab::features {

// Tabular autoencoder producing the dense user embedding. Two-layer encoder
// and decoder with tanh hidden units; trained on normalized user statistics
// with mean-squared reconstruction error, separately from the session model.
class UserEncoder {
public:
  struct Options {
    int latent_dim = 100;
    int hidden_dim = 64;
    int max_epochs = 400;
    int batch_size = 128;
    double learning_rate = 0.005;
    double weight_decay = 0.0;
    double holdout_fraction = 0.1;
    int patience = 25;
  };

  UserEncoder() = default;

  // Deterministic for a fixed (data, options, seed). Inputs must already be
  // normalized. Requires at least 2 distinct rows.
  static UserEncoder train(const nn::Mat& train_stats, Options opt,
                           std::uint64_t seed);

  nn::Mat encode(const nn::Mat& stats) const;     // rows -> latent rows
  nn::Mat reconstruct(const nn::Mat& stats) const;

  int input_dim() const { return input_dim_; }
  int hidden_dim() const { return hidden_dim_; }
  int latent_dim() const { return latent_dim_; }
  double holdout_mse() const { return holdout_mse_; }

  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  // Rebuilds the wiring after parameters were loaded from a checkpoint.
  static UserEncoder from_params(int input_dim, int hidden_dim, int latent_dim);

private:
  void init_params(int input_dim, int hidden_dim, int latent_dim,
                   std::uint64_t seed);
  nn::Var encode_graph(nn::Graph& g, nn::Var x) const;
  nn::Var decode_graph(nn::Graph& g, nn::Var z) const;

  mutable nn::ParamStore params_;
  int input_dim_ = 0;
  int hidden_dim_ = 0;
  int latent_dim_ = 0;
  double holdout_mse_ = 0.0;
};

// Mean-squared error of predicting each column's training mean; the
// reference an autoencoder must beat.
double column_mean_baseline_mse(const nn::Mat& train, const nn::Mat& holdout);

}  // namespace reclab::features
