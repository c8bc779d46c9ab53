#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reclab/common/rng.hpp"
#include "reclab/losses/focal.hpp"
#include "reclab/nn/graph.hpp"

namespace reclab::model {

// Architecture switches for the three ablation variants:
//   narm    — city embeddings only, single city head.
//   narm_v1 — adds month/stay-duration step components and the country head.
//   narm_v2 — adds per-step dense stats, the self-attention pre-layer and
//             the bypass context (user embedding, user stats, device and
//             booker embeddings joining after the recurrent bottleneck).
struct NarmConfig {
  int hidden = 100;
  int city_dim = 50;
  int month_dim = 25;
  int duration_dim = 25;
  int cat_dim = 50;          // device / booker embedding width
  double dropout = 0.25;
  int duration_buckets = 24;  // nights 0..22 plus one overflow bucket

  bool use_time = false;
  bool use_step_stats = false;
  bool use_self_attention = false;
  bool use_bypass = false;
  bool use_country_head = false;

  int step_dense_dim = 0;      // per-step dense width (use_step_stats)
  int user_dense_dim = 0;      // user stats width (use_bypass)
  int user_embedding_dim = 0;  // autoencoder latent width (use_bypass)
  int device_vocab_size = 1;
  int booker_vocab_size = 1;

  int step_dim() const {
    return city_dim + (use_time ? month_dim + duration_dim : 0) +
           (use_step_stats ? step_dense_dim : 0);
  }
  int bypass_dim() const {
    return use_bypass ? user_embedding_dim + user_dense_dim + 2 * cat_dim : 0;
  }
  void validate() const;

  // Variant switches only; dimensions keep their defaults.
  static NarmConfig for_variant(const std::string& name);
};

// One training/inference batch. All per-sample vectors have size() entries;
// id rows are right-padded with the pad id to exactly `window` positions.
struct Batch {
  std::vector<std::vector<int>> city_ids;
  std::vector<std::vector<int>> durations;
  std::vector<int> lengths;       // true prefix lengths, each in [1, window]
  std::vector<int> start_months;  // 1..12
  std::vector<Eigen::MatrixXd> step_dense;  // window x step_dense_dim each
  Eigen::MatrixXd user_dense;               // size() x user_dense_dim (or 0x0)
  Eigen::MatrixXd user_embedding;           // size() x user_embedding_dim
  std::vector<int> device_ids;
  std::vector<int> booker_ids;
  std::vector<int> label_city;
  std::vector<int> label_country;
  int window = 10;

  std::size_t size() const { return city_ids.size(); }
};

// Session encoder-decoder: time-space step embeddings, optional single-head
// self-attention pre-layer, gated recurrent encoder with global/local
// attention readout, optional bypass concatenation, bilinear city head and
// affine country head.
class NarmModel {
public:
  NarmModel(NarmConfig cfg, int city_space, int country_count,
            std::uint64_t seed);

  struct Output {
    nn::Var city_logits = nullptr;     // batch x city_space, pad/mask at -1e30
    nn::Var country_logits = nullptr;  // batch x country_count or null
  };

  Output forward(nn::Graph& g, const Batch& batch, bool training = false,
                 Rng* dropout_rng = nullptr) const;

  // Combined objective: beta-weighted focal losses of the two heads, or the
  // city head alone when the country head is disabled.
  nn::Var training_loss(nn::Graph& g, const Batch& batch,
                        const losses::CombinedParams& params,
                        bool training = false,
                        Rng* dropout_rng = nullptr) const;

  // Inference-mode city logits (no dropout), one row per batch member.
  Eigen::MatrixXd city_scores(const Batch& batch) const;

  // Single-sequence helpers, inference mode.
  // Step features [city ⊕ month ⊕ duration (⊕ dense)]; pad rows are zero.
  Eigen::MatrixXd embed_steps(const std::vector<int>& prefix,
                              const std::vector<int>& durations,
                              int start_month,
                              const Eigen::MatrixXd* step_dense = nullptr) const;
  // The attention pre-layer alone on given step features.
  Eigen::MatrixXd self_attend(const Eigen::MatrixXd& steps,
                              const std::vector<bool>& valid) const;
  struct Session {
    Eigen::MatrixXd c_global;  // batch x hidden
    Eigen::MatrixXd c_local;
  };
  Session encode(const Batch& batch) const;

  const NarmConfig& config() const { return cfg_; }
  int city_space() const { return city_space_; }
  int country_count() const { return country_count_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  // The pad embedding row stays zero and receives no updates.
  void zero_pad_row();
  void zero_pad_row_grad();

private:
  struct Pieces;  // intermediate vars shared by forward/encode
  Pieces build(nn::Graph& g, const Batch& batch, bool training,
               Rng* dropout_rng) const;
  void check_batch(const Batch& batch) const;

  NarmConfig cfg_;
  int city_space_ = 0;
  int country_count_ = 0;
  mutable nn::ParamStore params_;
};

// Indices of the k best scores, ties broken toward the smaller index; the
// pad and mask ids are never returned.
std::vector<int> top_k_cities(const Eigen::RowVectorXd& scores, int k);

}  // namespace reclab::model
