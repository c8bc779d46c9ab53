#pragma once

#include <cstdint>
#include <vector>

#include "reclab/data/types.hpp"

namespace reclab::data {

// Knobs for the seeded synthetic trip world.
//
// Generative process (deterministic in (config, seed)):
//   * Cities are partitioned evenly among countries, in index order.
//   * Within a country, the j-th city carries popularity weight 1/(1+j)
//     (normalized); this is the next-city distribution when route_strength
//     and seasonality are both zero.
//   * Each (country, previous city) has a preferred-successor ranking (a
//     seeded permutation of the country's cities) and each
//     (country, previous city, month) a month-specific ranking. Successor
//     weights decay geometrically down the ranking (factor kSuccessorDecay).
//   * A step's next-city distribution is
//       (1-r) * popularity + r * [ (1-s) * route(prev) + s * route(prev, month) ]
//     with r = route_strength and s = seasonality. Every transition,
//     including the final one, is drawn from it, so the final city carries
//     sequence and month signal whenever r > 0.
//   * Stay lengths are 1 + G days where G follows a per-city truncated
//     geometric distribution; reservations are back-to-back, so the trip
//     duration is the sum of stays.
struct SyntheticConfig {
  int n_users = 15000;
  int n_trips = 20000;
  int n_cities = 200;
  int n_countries = 10;
  int min_trip_len = 4;
  int max_trip_len = 10;
  // Optional weights over lengths min..max; empty = uniform.
  std::vector<double> trip_len_weights;
  double seasonality = 0.5;      // s in [0,1]
  double route_strength = 0.9;   // r in [0,1]
  double multi_trip_fraction = 0.05;
  int start_year = 2016;
};

inline constexpr double kSuccessorDecay = 0.45;

TripDataset generate_synthetic(const SyntheticConfig& config,
                               std::uint64_t seed);

// Normalized within-country popularity over the k cities of a country
// (weight of rank j is 1/(1+j)). Exposed so tests can derive closed-form
// top-k mass without sampling.
std::vector<double> country_popularity_weights(int k);

}  // namespace reclab::data
