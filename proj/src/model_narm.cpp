#include "reclab/model/narm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "reclab/common/error.hpp"
#include "reclab/common/hash.hpp"
#include "reclab/data/types.hpp"

namespace reclab::model {

using nn::Graph;
using nn::Mat;
using nn::Var;

namespace {

constexpr double kExcluded = -1e30;
constexpr int kPad = data::Vocabulary::kPadId;

Mat glorot(int rows, int cols, Rng& rng) {
  double scale = std::sqrt(6.0 / (rows + cols));
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-scale, scale);
  return m;
}

Mat embedding_init(int rows, int cols, Rng& rng) {
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-0.1, 0.1);
  return m;
}

}  // namespace

void NarmConfig::validate() const {
  if (hidden < 1 || city_dim < 1 || duration_buckets < 2)
    throw InvalidConfig("model dimensions must be positive");
  if (use_time && (month_dim < 1 || duration_dim < 1))
    throw InvalidConfig("time component widths must be positive");
  if (use_step_stats && step_dense_dim < 1)
    throw InvalidConfig("use_step_stats requires step_dense_dim");
  if (use_bypass &&
      (user_embedding_dim < 0 || user_dense_dim < 0 || cat_dim < 1 ||
       user_embedding_dim + user_dense_dim + 2 * cat_dim < 1))
    throw InvalidConfig("bypass dimensions must be positive");
  if (use_bypass && (device_vocab_size < 1 || booker_vocab_size < 1))
    throw InvalidConfig("categorical vocabulary sizes must be positive");
  if (dropout < 0.0 || dropout >= 1.0)
    throw InvalidConfig("dropout must lie in [0, 1)");
}

NarmConfig NarmConfig::for_variant(const std::string& name) {
  NarmConfig cfg;
  if (name == "narm") return cfg;
  cfg.use_time = true;
  cfg.use_country_head = true;
  if (name == "narm_v1") return cfg;
  if (name == "narm_v2") {
    cfg.use_step_stats = true;
    cfg.use_self_attention = true;
    cfg.use_bypass = true;
    return cfg;
  }
  throw InvalidConfig("unknown variant: " + name);
}

NarmModel::NarmModel(NarmConfig cfg, int city_space, int country_count,
                     std::uint64_t seed)
    : cfg_(cfg), city_space_(city_space), country_count_(country_count) {
  cfg_.validate();
  if (city_space < 3) throw InvalidConfig("need at least one real city id");
  if (cfg_.use_country_head && country_count < 1)
    throw InvalidConfig("country head needs countries");

  Rng rng(seed_stream({seed, fnv1a("narm_model")}));
  int d = cfg_.step_dim();
  int h = cfg_.hidden;

  params_.add("city_emb", embedding_init(city_space, cfg_.city_dim, rng));
  params_.get("city_emb").value.row(kPad).setZero();
  if (cfg_.use_time) {
    params_.add("month_emb", embedding_init(12, cfg_.month_dim, rng));
    params_.add("dur_emb",
                embedding_init(cfg_.duration_buckets, cfg_.duration_dim, rng));
  }
  if (cfg_.use_self_attention) {
    params_.add("attn/wq", glorot(d, d, rng));
    params_.add("attn/wk", glorot(d, d, rng));
    params_.add("attn/wv", glorot(d, d, rng));
  }
  for (const char* gate : {"r", "z", "n"}) {
    params_.add(std::string("gru/wx") + gate, glorot(d, h, rng));
    params_.add(std::string("gru/wh") + gate, glorot(h, h, rng));
    params_.add(std::string("gru/b") + gate, Mat::Zero(1, h));
  }
  params_.add("narm/a1", glorot(h, h, rng));
  params_.add("narm/a2", glorot(h, h, rng));
  params_.add("narm/v", glorot(h, 1, rng));
  if (cfg_.use_bypass) {
    params_.add("device_emb",
                embedding_init(cfg_.device_vocab_size, cfg_.cat_dim, rng));
    params_.add("booker_emb",
                embedding_init(cfg_.booker_vocab_size, cfg_.cat_dim, rng));
  }
  params_.add("dec/bilinear",
              glorot(2 * h + cfg_.bypass_dim(), cfg_.city_dim, rng));
  if (cfg_.use_country_head) {
    params_.add("head/country_w",
                glorot(2 * h + cfg_.bypass_dim(), country_count, rng));
    params_.add("head/country_b", Mat::Zero(1, country_count));
  }
}

void NarmModel::zero_pad_row() {
  params_.get("city_emb").value.row(kPad).setZero();
}

void NarmModel::zero_pad_row_grad() {
  params_.get("city_emb").grad.row(kPad).setZero();
}

void NarmModel::check_batch(const Batch& b) const {
  std::size_t n = b.size();
  if (n == 0) throw ShapeMismatch("empty batch");
  if (b.window < 1) throw ShapeMismatch("window must be >= 1");
  if (b.durations.size() != n || b.lengths.size() != n ||
      b.start_months.size() != n)
    throw ShapeMismatch("batch arrays disagree on size");
  for (std::size_t i = 0; i < n; ++i) {
    if (b.city_ids[i].size() != static_cast<std::size_t>(b.window) ||
        b.durations[i].size() != static_cast<std::size_t>(b.window))
      throw ShapeMismatch("row " + std::to_string(i) + " not padded to window");
    int len = b.lengths[i];
    if (len < 1) throw AllPadInput("row " + std::to_string(i) + " has no steps");
    if (len > b.window) throw ShapeMismatch("length exceeds window");
    if (b.start_months[i] < 1 || b.start_months[i] > 12)
      throw MalformedInput("start month out of range");
    for (int t = 0; t < b.window; ++t) {
      int id = b.city_ids[i][t];
      if (id < 0 || id >= city_space_)
        throw UnknownCityId("city id " + std::to_string(id));
      if (t < len && id == kPad)
        throw MalformedInput("pad id inside the valid prefix");
      if (t >= len && id != kPad)
        throw MalformedInput("non-pad id beyond the prefix length");
      if (t < len && b.durations[i][t] < 0)
        throw MalformedInput("negative stay duration");
    }
  }
  if (cfg_.use_step_stats) {
    if (b.step_dense.size() != n)
      throw ShapeMismatch("step_dense missing rows");
    for (const auto& m : b.step_dense)
      if (m.rows() != b.window || m.cols() != cfg_.step_dense_dim)
        throw ShapeMismatch("step_dense shape");
  }
  if (cfg_.use_bypass) {
    if (b.user_dense.rows() != static_cast<Eigen::Index>(n) ||
        b.user_dense.cols() != cfg_.user_dense_dim ||
        b.user_embedding.rows() != static_cast<Eigen::Index>(n) ||
        b.user_embedding.cols() != cfg_.user_embedding_dim)
      throw ShapeMismatch("bypass feature shape");
    if (b.device_ids.size() != n || b.booker_ids.size() != n)
      throw ShapeMismatch("categorical id count");
    for (std::size_t i = 0; i < n; ++i) {
      if (b.device_ids[i] < 0 || b.device_ids[i] >= cfg_.device_vocab_size ||
          b.booker_ids[i] < 0 || b.booker_ids[i] >= cfg_.booker_vocab_size)
        throw ShapeMismatch("categorical id out of range");
    }
  }
}

struct NarmModel::Pieces {
  Var c_global = nullptr;
  Var c_local = nullptr;
  Var rep = nullptr;  // [c_global ⊕ c_local ⊕ bypass], after dropout
};

NarmModel::Pieces NarmModel::build(Graph& g, const Batch& b, bool training,
                                   Rng* dropout_rng) const {
  check_batch(b);
  auto n = static_cast<Eigen::Index>(b.size());
  int w = b.window;
  bool drop = training && cfg_.dropout > 0.0 && dropout_rng != nullptr;

  // 0/1 column per position, plus the additive key mask shared by both
  // attention softmaxes.
  std::vector<Var> mask_col(static_cast<std::size_t>(w));
  Mat att_mask = Mat::Zero(n, w);
  for (int t = 0; t < w; ++t) {
    Mat col(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      bool valid = t < b.lengths[static_cast<std::size_t>(i)];
      col(i, 0) = valid ? 1.0 : 0.0;
      if (!valid) att_mask(i, t) = kExcluded;
    }
    mask_col[static_cast<std::size_t>(t)] = g.constant(std::move(col));
  }

  // Step features: city ⊕ month ⊕ duration (⊕ dense stats), zeroed at pads.
  Var city_table = g.param(params_.get("city_emb"));
  Var month_rows = nullptr;
  Var month_table = nullptr;
  Var dur_table = nullptr;
  if (cfg_.use_time) {
    month_table = g.param(params_.get("month_emb"));
    dur_table = g.param(params_.get("dur_emb"));
    std::vector<int> month_ids(b.size());
    for (std::size_t i = 0; i < b.size(); ++i)
      month_ids[i] = b.start_months[i] - 1;
    month_rows = g.gather_rows(month_table, std::move(month_ids));
  }
  std::vector<Var> steps;
  steps.reserve(static_cast<std::size_t>(w));
  for (int t = 0; t < w; ++t) {
    std::vector<int> ids(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) ids[i] = b.city_ids[i][t];
    Var x = g.gather_rows(city_table, std::move(ids));
    if (cfg_.use_time) {
      std::vector<int> buckets(b.size());
      for (std::size_t i = 0; i < b.size(); ++i)
        buckets[i] = std::min(std::max(b.durations[i][t], 0),
                              cfg_.duration_buckets - 1);
      Var dur_rows = g.gather_rows(dur_table, std::move(buckets));
      x = g.concat_cols({x, month_rows, dur_rows});
    }
    if (cfg_.use_step_stats) {
      Mat sd(n, cfg_.step_dense_dim);
      for (Eigen::Index i = 0; i < n; ++i)
        sd.row(i) = b.step_dense[static_cast<std::size_t>(i)].row(t);
      x = g.concat_cols({x, g.constant(std::move(sd))});
    }
    x = g.mul_colvec(x, mask_col[static_cast<std::size_t>(t)]);
    if (drop) x = g.dropout(x, cfg_.dropout, *dropout_rng, true);
    steps.push_back(x);
  }

  // Single-head scaled-dot-product pre-layer with a residual connection.
  if (cfg_.use_self_attention) {
    Var wq = g.param(params_.get("attn/wq"));
    Var wk = g.param(params_.get("attn/wk"));
    Var wv = g.param(params_.get("attn/wv"));
    std::vector<Var> q(steps.size()), k(steps.size()), v(steps.size());
    for (std::size_t t = 0; t < steps.size(); ++t) {
      q[t] = g.matmul(steps[t], wq);
      k[t] = g.matmul(steps[t], wk);
      v[t] = g.matmul(steps[t], wv);
    }
    double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(cfg_.step_dim()));
    std::vector<Var> attended(steps.size());
    for (std::size_t t = 0; t < steps.size(); ++t) {
      std::vector<Var> scores(steps.size());
      for (std::size_t u = 0; u < steps.size(); ++u)
        scores[u] = g.scale(g.rowdot(q[t], k[u]), inv_sqrt_d);
      Var weights = g.softmax_rows(g.concat_cols(scores), &att_mask);
      Var mixed = nullptr;
      for (std::size_t u = 0; u < steps.size(); ++u) {
        Var term = g.mul_colvec(v[u], g.slice_cols(weights, static_cast<int>(u), 1));
        mixed = mixed ? g.add(mixed, term) : term;
      }
      attended[t] = g.mul_colvec(g.add(steps[t], mixed),
                                 mask_col[t]);
    }
    steps = std::move(attended);
  }

  // Gated recurrent encoder; pad positions hold the previous state.
  Var wxr = g.param(params_.get("gru/wxr"));
  Var whr = g.param(params_.get("gru/whr"));
  Var br = g.param(params_.get("gru/br"));
  Var wxz = g.param(params_.get("gru/wxz"));
  Var whz = g.param(params_.get("gru/whz"));
  Var bz = g.param(params_.get("gru/bz"));
  Var wxn = g.param(params_.get("gru/wxn"));
  Var whn = g.param(params_.get("gru/whn"));
  Var bn = g.param(params_.get("gru/bn"));
  Var h = g.constant(Mat::Zero(n, cfg_.hidden));
  std::vector<Var> hidden;
  hidden.reserve(steps.size());
  for (std::size_t t = 0; t < steps.size(); ++t) {
    Var x = steps[t];
    Var r = g.sigmoid(g.add_rowvec(
        g.add(g.matmul(x, wxr), g.matmul(h, whr)), br));
    Var z = g.sigmoid(g.add_rowvec(
        g.add(g.matmul(x, wxz), g.matmul(h, whz)), bz));
    Var cand = g.tanh_(g.add_rowvec(
        g.add(g.matmul(x, wxn), g.cmul(r, g.matmul(h, whn))), bn));
    // h' = (1-z)*cand + z*h, then hold the old state at pad positions.
    Var hnew = g.add(g.sub(cand, g.cmul(z, cand)), g.cmul(z, h));
    h = g.add(h, g.mul_colvec(g.sub(hnew, h), mask_col[t]));
    hidden.push_back(h);
  }

  // Global readout: the final state. Local readout: the original attention
  // with scores v^T sigmoid(A1 h_n + A2 h_j) over valid positions.
  Var c_global = hidden.back();
  Var a1 = g.param(params_.get("narm/a1"));
  Var a2 = g.param(params_.get("narm/a2"));
  Var va = g.param(params_.get("narm/v"));
  Var hn_a1 = g.matmul(c_global, a1);
  std::vector<Var> scores(hidden.size());
  for (std::size_t j = 0; j < hidden.size(); ++j)
    scores[j] = g.matmul(g.sigmoid(g.add(hn_a1, g.matmul(hidden[j], a2))), va);
  Var alpha = g.softmax_rows(g.concat_cols(scores), &att_mask);
  Var c_local = nullptr;
  for (std::size_t j = 0; j < hidden.size(); ++j) {
    Var term = g.mul_colvec(hidden[j], g.slice_cols(alpha, static_cast<int>(j), 1));
    c_local = c_local ? g.add(c_local, term) : term;
  }

  std::vector<Var> parts = {c_global, c_local};
  if (cfg_.use_bypass) {
    parts.push_back(g.constant(b.user_embedding));
    parts.push_back(g.constant(b.user_dense));
    parts.push_back(g.gather_rows(g.param(params_.get("device_emb")),
                                  b.device_ids));
    parts.push_back(g.gather_rows(g.param(params_.get("booker_emb")),
                                  b.booker_ids));
  }
  Var rep = g.concat_cols(parts);
  if (drop) rep = g.dropout(rep, cfg_.dropout, *dropout_rng, true);

  Pieces p;
  p.c_global = c_global;
  p.c_local = c_local;
  p.rep = rep;
  return p;
}

NarmModel::Output NarmModel::forward(Graph& g, const Batch& b, bool training,
                                     Rng* dropout_rng) const {
  Pieces p = build(g, b, training, dropout_rng);

  // Bilinear city head sharing the input embedding table; pad and mask are
  // pushed out of every ranking here.
  Var proj = g.matmul(p.rep, g.param(params_.get("dec/bilinear")));
  Var city = g.matmul_nt(proj, g.param(params_.get("city_emb")));
  Mat excl = Mat::Zero(1, city_space_);
  excl(0, data::Vocabulary::kPadId) = kExcluded;
  excl(0, data::Vocabulary::kMaskId) = kExcluded;
  city = g.add_rowvec(city, g.constant(std::move(excl)));

  Output out;
  out.city_logits = city;
  if (cfg_.use_country_head) {
    out.country_logits =
        g.add_rowvec(g.matmul(p.rep, g.param(params_.get("head/country_w"))),
                     g.param(params_.get("head/country_b")));
  }
  return out;
}

Var NarmModel::training_loss(Graph& g, const Batch& b,
                             const losses::CombinedParams& params,
                             bool training, Rng* dropout_rng) const {
  params.validate();
  if (b.label_city.size() != b.size())
    throw ShapeMismatch("city labels missing");
  Output out = forward(g, b, training, dropout_rng);
  Var city_probs = g.softmax_rows(out.city_logits);
  Var city_loss = g.focal_loss(city_probs, b.label_city, params.city.alpha,
                               params.city.gamma);
  if (!cfg_.use_country_head) return city_loss;
  if (b.label_country.size() != b.size())
    throw ShapeMismatch("country labels missing");
  Var country_probs = g.softmax_rows(out.country_logits);
  Var country_loss = g.focal_loss(country_probs, b.label_country,
                                  params.country.alpha, params.country.gamma);
  return g.add(g.scale(city_loss, params.beta),
               g.scale(country_loss, 1.0 - params.beta));
}

Eigen::MatrixXd NarmModel::city_scores(const Batch& b) const {
  Graph g;
  return forward(g, b).city_logits->val();
}

Eigen::MatrixXd NarmModel::embed_steps(const std::vector<int>& prefix,
                                       const std::vector<int>& durations,
                                       int start_month,
                                       const Eigen::MatrixXd* step_dense) const {
  if (prefix.size() != durations.size())
    throw ShapeMismatch("prefix/durations disagree");
  if (start_month < 1 || start_month > 12)
    throw MalformedInput("start month out of range");
  if (cfg_.use_step_stats) {
    if (!step_dense || step_dense->rows() != static_cast<Eigen::Index>(prefix.size()) ||
        step_dense->cols() != cfg_.step_dense_dim)
      throw ShapeMismatch("step_dense shape");
  }
  const Mat& city = params_.get("city_emb").value;
  Mat out = Mat::Zero(static_cast<Eigen::Index>(prefix.size()), cfg_.step_dim());
  for (std::size_t t = 0; t < prefix.size(); ++t) {
    int id = prefix[t];
    if (id < 0 || id >= city_space_)
      throw UnknownCityId("city id " + std::to_string(id));
    if (id == kPad) continue;  // pad steps stay all-zero
    auto row = static_cast<Eigen::Index>(t);
    int off = 0;
    out.block(row, off, 1, cfg_.city_dim) = city.row(id);
    off += cfg_.city_dim;
    if (cfg_.use_time) {
      out.block(row, off, 1, cfg_.month_dim) =
          params_.get("month_emb").value.row(start_month - 1);
      off += cfg_.month_dim;
      int bucket = std::min(std::max(durations[t], 0), cfg_.duration_buckets - 1);
      out.block(row, off, 1, cfg_.duration_dim) =
          params_.get("dur_emb").value.row(bucket);
      off += cfg_.duration_dim;
    }
    if (cfg_.use_step_stats)
      out.block(row, off, 1, cfg_.step_dense_dim) = step_dense->row(row);
  }
  return out;
}

Eigen::MatrixXd NarmModel::self_attend(const Eigen::MatrixXd& steps,
                                       const std::vector<bool>& valid) const {
  if (!cfg_.use_self_attention)
    throw InvalidConfig("model has no attention pre-layer");
  if (steps.cols() != cfg_.step_dim()) throw ShapeMismatch("step width");
  if (valid.size() != static_cast<std::size_t>(steps.rows()))
    throw ShapeMismatch("valid flags vs steps");
  if (std::none_of(valid.begin(), valid.end(), [](bool b) { return b; }))
    throw AllPadInput("every step is padding");

  // Same wiring as the batched path, with batch size 1 and one var per step.
  Graph g;
  auto w = static_cast<std::size_t>(steps.rows());
  Mat att_mask = Mat::Zero(1, static_cast<Eigen::Index>(w));
  std::vector<Var> xs(w);
  for (std::size_t t = 0; t < w; ++t) {
    xs[t] = g.constant(steps.row(static_cast<Eigen::Index>(t)));
    if (!valid[t]) att_mask(0, static_cast<Eigen::Index>(t)) = kExcluded;
  }
  Var wq = g.param(params_.get("attn/wq"));
  Var wk = g.param(params_.get("attn/wk"));
  Var wv = g.param(params_.get("attn/wv"));
  double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(cfg_.step_dim()));
  Mat out = Mat::Zero(steps.rows(), steps.cols());
  for (std::size_t t = 0; t < w; ++t) {
    if (!valid[t]) continue;
    Var qt = g.matmul(xs[t], wq);
    std::vector<Var> scores(w);
    for (std::size_t u = 0; u < w; ++u)
      scores[u] = g.scale(g.rowdot(qt, g.matmul(xs[u], wk)), inv_sqrt_d);
    Var weights = g.softmax_rows(g.concat_cols(scores), &att_mask);
    Var mixed = nullptr;
    for (std::size_t u = 0; u < w; ++u) {
      Var term = g.mul_colvec(g.matmul(xs[u], wv),
                              g.slice_cols(weights, static_cast<int>(u), 1));
      mixed = mixed ? g.add(mixed, term) : term;
    }
    out.row(static_cast<Eigen::Index>(t)) = g.add(xs[t], mixed)->val();
  }
  return out;
}

NarmModel::Session NarmModel::encode(const Batch& b) const {
  Graph g;
  Pieces p = build(g, b, false, nullptr);
  return Session{p.c_global->val(), p.c_local->val()};
}

std::vector<int> top_k_cities(const Eigen::RowVectorXd& scores, int k) {
  if (k < 1) throw InvalidConfig("k must be >= 1");
  std::vector<int> ids;
  ids.reserve(static_cast<std::size_t>(scores.size()));
  for (int i = 2; i < scores.size(); ++i) ids.push_back(i);
  std::sort(ids.begin(), ids.end(), [&](int a, int bb) {
    if (scores(a) != scores(bb)) return scores(a) > scores(bb);
    return a < bb;
  });
  if (static_cast<int>(ids.size()) > k) ids.resize(static_cast<std::size_t>(k));
  return ids;
}

}  // namespace reclab::model
