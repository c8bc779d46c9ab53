#pragma once

#include <cstdint>
#include <utility>

#include "reclab/data/types.hpp"

namespace reclab::data {

// Keeps trips with min_cities <= |reservations| <= max_cities and a total
// duration of at most max_duration_days. Idempotent; input untouched.
TripDataset filter_trips(const TripDataset& ds, int min_cities = 4,
                         int max_cities = 10, long max_duration_days = 22);

// Whole-trip partition; |train| = round(train_fraction * |trips|).
// Deterministic for a fixed seed.
std::pair<TripDataset, TripDataset> split_by_trip(const TripDataset& ds,
                                                  double train_fraction,
                                                  std::uint64_t seed);

// Cities sorted lexicographically get ids 2,3,...; countries sorted get 0,1,...
Vocabulary build_vocab(const TripDataset& ds);

std::uint64_t vocab_hash(const Vocabulary& vocab);

}  // namespace reclab::data
