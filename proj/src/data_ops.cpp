#include "reclab/data/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "reclab/common/error.hpp"
#include "reclab/common/hash.hpp"
#include "reclab/common/rng.hpp"

namespace reclab::data {

TripDataset filter_trips(const TripDataset& ds, int min_cities, int max_cities,
                         long max_duration_days) {
  if (min_cities < 1) throw InvalidConfig("min_cities must be >= 1");
  if (max_cities < min_cities)
    throw InvalidConfig("max_cities must be >= min_cities");
  TripDataset out;
  out.provenance = ds.provenance;
  out.seed = ds.seed;
  for (const auto& t : ds.trips) {
    auto n = static_cast<int>(t.size());
    if (n >= min_cities && n <= max_cities &&
        t.total_duration_days() <= max_duration_days)
      out.trips.push_back(t);
  }
  return out;
}

std::pair<TripDataset, TripDataset> split_by_trip(const TripDataset& ds,
                                                  double train_fraction,
                                                  std::uint64_t seed) {
  if (ds.trips.empty()) throw DegenerateSplit("empty dataset");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw InvalidConfig("train_fraction must be in (0,1)");
  const auto n = ds.trips.size();
  auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train == n)
    throw DegenerateSplit("split would leave one side empty");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed_stream({seed, fnv1a("split_by_trip")}));
  rng.shuffle(order);

  TripDataset train, test;
  train.provenance = test.provenance = ds.provenance;
  train.seed = test.seed = ds.seed;
  std::vector<bool> in_train(n, false);
  for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = true;
  for (std::size_t i = 0; i < n; ++i)
    (in_train[i] ? train : test).trips.push_back(ds.trips[i]);
  return {std::move(train), std::move(test)};
}

Vocabulary build_vocab(const TripDataset& ds) {
  if (ds.trips.empty()) throw InvalidConfig("build_vocab on empty dataset");
  std::set<std::string> cities, countries;
  for (const auto& t : ds.trips)
    for (const auto& r : t.reservations) {
      cities.insert(r.city_id);
      countries.insert(r.country_id);
    }
  Vocabulary v;
  v.id_to_city = {"<pad>", "<mask>"};
  for (const auto& c : cities) {
    v.city_to_id.emplace(c, static_cast<int>(v.id_to_city.size()));
    v.id_to_city.push_back(c);
  }
  for (const auto& c : countries) {
    v.country_to_id.emplace(c, static_cast<int>(v.id_to_country.size()));
    v.id_to_country.push_back(c);
  }
  return v;
}

std::uint64_t vocab_hash(const Vocabulary& vocab) {
  std::uint64_t h = fnv1a("vocab-v1");
  for (const auto& c : vocab.id_to_city) h = fnv1a(c, fnv1a("\x1f", h));
  h = fnv1a("|countries|", h);
  for (const auto& c : vocab.id_to_country) h = fnv1a(c, fnv1a("\x1f", h));
  return h;
}

}  // namespace reclab::data
