#include "reclab/train/batching.hpp"

#include <numeric>

#include "reclab/augment/augment.hpp"
#include "reclab/common/error.hpp"
#include "reclab/common/hash.hpp"
#include "reclab/common/rng.hpp"

namespace reclab::train {

model::Batch to_batch(const std::vector<augment::PrefixSample>& samples,
                      std::size_t begin, std::size_t end, int window) {
  if (window < 1) throw InvalidConfig("window must be >= 1");
  if (begin >= end || end > samples.size())
    throw InvalidConfig("bad batch range");
  std::size_t n = end - begin;

  model::Batch b;
  b.window = window;
  b.city_ids.resize(n);
  b.durations.resize(n);
  b.lengths.resize(n);
  b.start_months.resize(n);
  b.label_city.resize(n);
  b.label_country.resize(n);
  b.device_ids.resize(n);
  b.booker_ids.resize(n);

  const auto& first = samples[begin];
  bool dense_steps = !first.step_dense.empty();
  auto user_dense_dim = first.user_dense.size();
  auto user_emb_dim = first.user_embedding.size();
  if (dense_steps) b.step_dense.resize(n);
  b.user_dense.resize(user_dense_dim > 0 ? static_cast<Eigen::Index>(n) : 0,
                      user_dense_dim);
  b.user_embedding.resize(user_emb_dim > 0 ? static_cast<Eigen::Index>(n) : 0,
                          user_emb_dim);

  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = samples[begin + i];
    auto len = s.prefix.size();
    // keep the most recent `window` steps
    std::size_t off = len > static_cast<std::size_t>(window)
                          ? len - static_cast<std::size_t>(window)
                          : 0;
    std::size_t kept = len - off;
    b.city_ids[i].assign(static_cast<std::size_t>(window),
                         data::Vocabulary::kPadId);
    b.durations[i].assign(static_cast<std::size_t>(window), 0);
    for (std::size_t t = 0; t < kept; ++t) {
      b.city_ids[i][t] = s.prefix[off + t];
      b.durations[i][t] = s.durations[off + t];
    }
    b.lengths[i] = static_cast<int>(kept);
    b.start_months[i] = s.start_month;
    b.label_city[i] = s.label_city;
    b.label_country[i] = s.label_country;
    b.device_ids[i] = s.device_id;
    b.booker_ids[i] = s.booker_id;
    if (dense_steps) {
      if (s.step_dense.empty()) throw ShapeMismatch("mixed dense batching");
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(window, s.step_dense[0].size());
      for (std::size_t t = 0; t < kept; ++t)
        m.row(static_cast<Eigen::Index>(t)) = s.step_dense[off + t];
      b.step_dense[i] = std::move(m);
    }
    if (user_dense_dim > 0)
      b.user_dense.row(static_cast<Eigen::Index>(i)) = s.user_dense;
    if (user_emb_dim > 0)
      b.user_embedding.row(static_cast<Eigen::Index>(i)) = s.user_embedding;
  }
  return b;
}

std::vector<model::Batch> make_batches(
    const std::vector<augment::PrefixSample>& samples, int window,
    int batch_size, std::uint64_t seed, std::uint64_t epoch, bool shuffle) {
  if (samples.empty()) throw InsufficientData("no samples to batch");
  if (batch_size < 1) throw InvalidConfig("batch_size must be >= 1");

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  if (shuffle) {
    Rng rng(seed_stream({seed, fnv1a("make_batches"), epoch}));
    rng.shuffle(order);
  }
  std::vector<augment::PrefixSample> shuffled;
  shuffled.reserve(samples.size());
  for (auto idx : order) shuffled.push_back(samples[idx]);

  std::vector<model::Batch> out;
  for (std::size_t off = 0; off < shuffled.size();
       off += static_cast<std::size_t>(batch_size)) {
    std::size_t end =
        std::min(shuffled.size(), off + static_cast<std::size_t>(batch_size));
    out.push_back(to_batch(shuffled, off, end, window));
  }
  return out;
}

augment::PrefixSample final_transition(const augment::TripSample& trip) {
  auto samples = augment::expand_prefixes(trip);
  return samples.back();
}

std::vector<augment::PrefixSample> final_transitions(
    const std::vector<augment::TripSample>& trips) {
  std::vector<augment::PrefixSample> out;
  out.reserve(trips.size());
  for (const auto& t : trips) out.push_back(final_transition(t));
  return out;
}

}  // namespace reclab::train
