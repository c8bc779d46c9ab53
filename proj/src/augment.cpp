#include "reclab/augment/augment.hpp"

#include <array>
#include <cmath>

#include "reclab/common/error.hpp"
#include "reclab/common/hash.hpp"

namespace reclab::augment {

void PerturbationPolicy::validate() const {
  if (p_drop < 0 || p_mask < 0 || p_substitute < 0 || p_none < 0)
    throw InvalidConfig("perturbation probabilities must be >= 0");
  double sum = p_drop + p_mask + p_substitute + p_none;
  if (std::abs(sum - 1.0) > 1e-12)
    throw InvalidConfig("perturbation probabilities sum to " +
                        std::to_string(sum) + ", expected 1");
  if (substitute_top_k < 1)
    throw InvalidConfig("substitute_top_k must be >= 1");
}

std::vector<PrefixSample> expand_prefixes(const TripSample& trip) {
  std::size_t n = trip.cities.size();
  if (n < 2) throw TripTooShort("trip " + trip.trip_id + " has " +
                                std::to_string(n) + " cities, need >= 2");
  std::vector<PrefixSample> out;
  out.reserve(n - 1);
  for (std::size_t len = 1; len < n; ++len) {
    PrefixSample s;
    s.trip_id = trip.trip_id;
    s.prefix.assign(trip.cities.begin(),
                    trip.cities.begin() + static_cast<long>(len));
    s.durations.assign(trip.durations.begin(),
                       trip.durations.begin() + static_cast<long>(len));
    if (!trip.step_dense.empty())
      s.step_dense.assign(trip.step_dense.begin(),
                          trip.step_dense.begin() + static_cast<long>(len));
    s.start_month = trip.start_month;
    s.label_city = trip.cities[len];
    s.label_country = trip.countries[len];
    s.user_dense = trip.user_dense;
    s.user_embedding = trip.user_embedding;
    s.device_id = trip.device_id;
    s.booker_id = trip.booker_id;
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

enum class Mode { drop, mask, substitute, none };

void apply_mask(PrefixSample& s, std::size_t pos) {
  s.prefix[pos] = data::Vocabulary::kMaskId;
}

void apply_drop(PrefixSample& s, std::size_t pos) {
  s.prefix.erase(s.prefix.begin() + static_cast<long>(pos));
  s.durations.erase(s.durations.begin() + static_cast<long>(pos));
  if (!s.step_dense.empty())
    s.step_dense.erase(s.step_dense.begin() + static_cast<long>(pos));
}

}  // namespace

PrefixSample perturb(const PrefixSample& sample,
                     const PerturbationPolicy& policy,
                     const baselines::SimilarityIndex& similarity,
                     const data::Vocabulary& vocab, Rng& rng) {
  policy.validate();
  std::array<double, 4> probs = {policy.p_drop, policy.p_mask,
                                 policy.p_substitute, policy.p_none};
  auto mode = static_cast<Mode>(rng.categorical(probs));
  if (mode == Mode::none) return sample;

  PrefixSample out = sample;
  std::size_t pos = static_cast<std::size_t>(rng.uniform_index(out.prefix.size()));
  switch (mode) {
    case Mode::drop:
      if (out.prefix.size() == 1)
        apply_mask(out, pos);  // never empty the prefix
      else
        apply_drop(out, pos);
      break;
    case Mode::mask:
      apply_mask(out, pos);
      break;
    case Mode::substitute: {
      std::vector<int> candidates;
      int original = out.prefix[pos];
      if (original >= 2) {
        const auto& nbrs = similarity.neighbors(vocab.id_to_city[
            static_cast<std::size_t>(original)]);
        for (const auto& nb : nbrs) {
          if (static_cast<int>(candidates.size()) >= policy.substitute_top_k)
            break;
          int id = vocab.city_id(nb.city);
          if (id >= 2 && id != original) candidates.push_back(id);
        }
      }
      if (candidates.empty())
        apply_mask(out, pos);
      else
        out.prefix[pos] =
            candidates[static_cast<std::size_t>(rng.uniform_index(candidates.size()))];
      break;
    }
    case Mode::none:
      break;
  }
  return out;
}

std::vector<PrefixSample> augment_dataset(
    const std::vector<TripSample>& trips, const PerturbationPolicy& policy,
    const baselines::SimilarityIndex& similarity, const data::Vocabulary& vocab,
    int min_trip_len, std::uint64_t epoch) {
  policy.validate();
  std::vector<PrefixSample> out;
  for (const auto& trip : trips) {
    if (static_cast<int>(trip.cities.size()) < std::max(2, min_trip_len))
      continue;
    auto samples = expand_prefixes(trip);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      Rng rng(seed_stream(
          {policy.seed, fnv1a("augment"), epoch, fnv1a(trip.trip_id), i}));
      out.push_back(perturb(samples[i], policy, similarity, vocab, rng));
    }
  }
  return out;
}

}  // namespace reclab::augment
