#include "reclab/features/autoencoder.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "reclab/common/error.hpp"
#include "reclab/common/hash.hpp"
#include "reclab/common/rng.hpp"
#include "reclab/train/optimizer.hpp"

namespace reclab::features {

using nn::Graph;
using nn::Mat;
using nn::Var;

namespace {

Mat glorot(int rows, int cols, Rng& rng) {
  double scale = std::sqrt(6.0 / (rows + cols));
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-scale, scale);
  return m;
}

}  // namespace

void UserEncoder::init_params(int input_dim, int hidden_dim, int latent_dim,
                              std::uint64_t seed) {
  input_dim_ = input_dim;
  hidden_dim_ = hidden_dim;
  latent_dim_ = latent_dim;
  Rng rng(seed_stream({seed, fnv1a("user_autoencoder")}));
  params_.add("ae/enc1_w", glorot(input_dim, hidden_dim, rng));
  params_.add("ae/enc1_b", Mat::Zero(1, hidden_dim));
  params_.add("ae/enc2_w", glorot(hidden_dim, latent_dim, rng));
  params_.add("ae/enc2_b", Mat::Zero(1, latent_dim));
  params_.add("ae/dec1_w", glorot(latent_dim, hidden_dim, rng));
  params_.add("ae/dec1_b", Mat::Zero(1, hidden_dim));
  params_.add("ae/dec2_w", glorot(hidden_dim, input_dim, rng));
  params_.add("ae/dec2_b", Mat::Zero(1, input_dim));
}

Var UserEncoder::encode_graph(Graph& g, Var x) const {
  Var h = g.tanh_(g.add_rowvec(g.matmul(x, g.param(params_.get("ae/enc1_w"))),
                               g.param(params_.get("ae/enc1_b"))));
  return g.add_rowvec(g.matmul(h, g.param(params_.get("ae/enc2_w"))),
                      g.param(params_.get("ae/enc2_b")));
}

Var UserEncoder::decode_graph(Graph& g, Var z) const {
  Var h = g.tanh_(g.add_rowvec(g.matmul(z, g.param(params_.get("ae/dec1_w"))),
                               g.param(params_.get("ae/dec1_b"))));
  return g.add_rowvec(g.matmul(h, g.param(params_.get("ae/dec2_w"))),
                      g.param(params_.get("ae/dec2_b")));
}

UserEncoder UserEncoder::train(const Mat& train_stats, Options opt,
                               std::uint64_t seed) {
  if (train_stats.rows() < 2)
    throw InsufficientData("autoencoder needs at least 2 rows");
  std::set<std::vector<double>> distinct;
  for (Eigen::Index i = 0;
       i < train_stats.rows() && distinct.size() < 2; ++i) {
    std::vector<double> row(train_stats.cols());
    for (Eigen::Index j = 0; j < train_stats.cols(); ++j)
      row[static_cast<std::size_t>(j)] = train_stats(i, j);
    distinct.insert(std::move(row));
  }
  if (distinct.size() < 2)
    throw InsufficientData("autoencoder needs at least 2 distinct rows");

  UserEncoder enc;
  enc.init_params(static_cast<int>(train_stats.cols()), opt.hidden_dim,
                  opt.latent_dim, seed);

  // Held-out slice for the reconstruction check (last 10% after a seeded
  // shuffle).
  std::vector<int> order(static_cast<std::size_t>(train_stats.rows()));
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(seed_stream({seed, fnv1a("ae_holdout")}));
  shuffle_rng.shuffle(order);
  auto n_hold = static_cast<std::size_t>(
      std::max(1.0, opt.holdout_fraction * static_cast<double>(order.size())));
  if (n_hold >= order.size()) n_hold = order.size() - 1;
  std::vector<int> fit_rows(order.begin(), order.end() - static_cast<long>(n_hold));
  std::vector<int> hold_rows(order.end() - static_cast<long>(n_hold), order.end());

  auto take = [&](const std::vector<int>& rows) {
    Mat m(static_cast<Eigen::Index>(rows.size()), train_stats.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
      m.row(static_cast<Eigen::Index>(i)) = train_stats.row(rows[i]);
    return m;
  };
  Mat fit = take(fit_rows);
  Mat hold = take(hold_rows);

  train::RAdam optimizer({.learning_rate = opt.learning_rate,
                          .weight_decay = opt.weight_decay});
  auto param_ptrs = enc.params_.all();

  auto holdout_mse = [&]() {
    Mat rec = enc.reconstruct(hold);
    return (rec - hold).array().square().mean();
  };

  double best = holdout_mse();
  int since_best = 0;
  std::vector<int> idx(static_cast<std::size_t>(fit.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  for (int epoch = 0; epoch < opt.max_epochs; ++epoch) {
    Rng erng(seed_stream({seed, fnv1a("ae_epoch"),
                          static_cast<std::uint64_t>(epoch)}));
    erng.shuffle(idx);
    for (std::size_t off = 0; off < idx.size();
         off += static_cast<std::size_t>(opt.batch_size)) {
      auto end = std::min(idx.size(), off + static_cast<std::size_t>(opt.batch_size));
      Mat batch(static_cast<Eigen::Index>(end - off), fit.cols());
      for (std::size_t i = off; i < end; ++i)
        batch.row(static_cast<Eigen::Index>(i - off)) = fit.row(idx[i]);
      Graph g;
      Var x = g.constant(batch);
      Var rec = enc.decode_graph(g, enc.encode_graph(g, x));
      Var diff = g.sub(rec, x);
      Var loss = g.mean_all(g.cmul(diff, diff));
      g.backward(loss);
      optimizer.step(param_ptrs);
    }
    double mse = holdout_mse();
    if (mse < best - 1e-12) {
      best = mse;
      since_best = 0;
    } else if (++since_best >= opt.patience) {
      break;
    }
  }
  enc.holdout_mse_ = best;
  return enc;
}

Mat UserEncoder::encode(const Mat& stats) const {
  if (stats.cols() != input_dim_)
    throw DimensionMismatch("stats width " + std::to_string(stats.cols()) +
                            " vs encoder input " + std::to_string(input_dim_));
  Graph g;
  Var z = encode_graph(g, g.constant(stats));
  return z->val();
}

Mat UserEncoder::reconstruct(const Mat& stats) const {
  if (stats.cols() != input_dim_)
    throw DimensionMismatch("stats width vs encoder input");
  Graph g;
  Var rec = decode_graph(g, encode_graph(g, g.constant(stats)));
  return rec->val();
}

UserEncoder UserEncoder::from_params(int input_dim, int hidden_dim,
                                     int latent_dim) {
  UserEncoder enc;
  enc.input_dim_ = input_dim;
  enc.hidden_dim_ = hidden_dim;
  enc.latent_dim_ = latent_dim;
  enc.params_.add("ae/enc1_w", Mat::Zero(input_dim, hidden_dim));
  enc.params_.add("ae/enc1_b", Mat::Zero(1, hidden_dim));
  enc.params_.add("ae/enc2_w", Mat::Zero(hidden_dim, latent_dim));
  enc.params_.add("ae/enc2_b", Mat::Zero(1, latent_dim));
  enc.params_.add("ae/dec1_w", Mat::Zero(latent_dim, hidden_dim));
  enc.params_.add("ae/dec1_b", Mat::Zero(1, hidden_dim));
  enc.params_.add("ae/dec2_w", Mat::Zero(hidden_dim, input_dim));
  enc.params_.add("ae/dec2_b", Mat::Zero(1, input_dim));
  return enc;
}

double column_mean_baseline_mse(const Mat& train, const Mat& holdout) {
  if (train.cols() != holdout.cols())
    throw DimensionMismatch("train/holdout column mismatch");
  if (train.rows() == 0 || holdout.rows() == 0)
    throw InsufficientData("baseline needs nonempty train and holdout");
  Eigen::RowVectorXd mean = train.colwise().mean();
  return (holdout.rowwise() - mean).array().square().mean();
}

}  // namespace reclab::features
