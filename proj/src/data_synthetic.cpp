#include "reclab/data/synthetic.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "reclab/common/error.hpp"
#include "reclab/common/hash.hpp"
#include "reclab/common/rng.hpp"

namespace reclab::data {

namespace {

std::string label(const char* prefix, int i, int width) {
  std::ostringstream ss;
  ss << prefix << '_' << std::setw(width) << std::setfill('0') << i;
  return ss.str();
}

// Seeded permutation of 0..k-1, independent of the trip stream.
std::vector<int> route_permutation(std::uint64_t seed, int country, int prev,
                                   int month, int k) {
  std::vector<int> p(static_cast<std::size_t>(k));
  std::iota(p.begin(), p.end(), 0);
  Rng rng(seed_stream({seed, fnv1a("route"), static_cast<std::uint64_t>(country),
                       static_cast<std::uint64_t>(prev),
                       static_cast<std::uint64_t>(month)}));
  rng.shuffle(p);
  return p;
}

std::vector<double> ranked_weights(const std::vector<int>& perm) {
  std::vector<double> w(perm.size());
  double v = 1.0;
  double total = 0.0;
  std::vector<double> by_rank(perm.size());
  for (std::size_t t = 0; t < perm.size(); ++t) {
    by_rank[t] = v;
    total += v;
    v *= kSuccessorDecay;
  }
  for (std::size_t t = 0; t < perm.size(); ++t)
    w[static_cast<std::size_t>(perm[t])] = by_rank[t] / total;
  return w;
}

}  // namespace

std::vector<double> country_popularity_weights(int k) {
  std::vector<double> w(static_cast<std::size_t>(k));
  double total = 0.0;
  for (int j = 0; j < k; ++j) {
    w[static_cast<std::size_t>(j)] = 1.0 / (1.0 + j);
    total += w[static_cast<std::size_t>(j)];
  }
  for (auto& x : w) x /= total;
  return w;
}

TripDataset generate_synthetic(const SyntheticConfig& config,
                               std::uint64_t seed) {
  if (config.n_users <= 0 || config.n_trips <= 0 || config.n_cities <= 0 ||
      config.n_countries <= 0)
    throw InvalidConfig("synthetic counts must be positive");
  if (config.n_countries > config.n_cities)
    throw InvalidConfig("more countries than cities");
  if (config.seasonality < 0.0 || config.seasonality > 1.0)
    throw InvalidConfig("seasonality outside [0,1]");
  if (config.route_strength < 0.0 || config.route_strength > 1.0)
    throw InvalidConfig("route_strength outside [0,1]");
  if (config.min_trip_len < 2 || config.max_trip_len < config.min_trip_len)
    throw InvalidConfig("bad trip length bounds");
  const int n_lengths = config.max_trip_len - config.min_trip_len + 1;
  if (!config.trip_len_weights.empty() &&
      static_cast<int>(config.trip_len_weights.size()) != n_lengths)
    throw InvalidConfig("trip_len_weights size mismatch");
  if (config.multi_trip_fraction < 0.0 || config.multi_trip_fraction > 1.0)
    throw InvalidConfig("multi_trip_fraction outside [0,1]");

  // Even partition of cities among countries; remainder spread from the front.
  std::vector<int> city_country(static_cast<std::size_t>(config.n_cities));
  std::vector<std::vector<int>> country_cities(
      static_cast<std::size_t>(config.n_countries));
  {
    int base = config.n_cities / config.n_countries;
    int extra = config.n_cities % config.n_countries;
    int city = 0;
    for (int c = 0; c < config.n_countries; ++c) {
      int k = base + (c < extra ? 1 : 0);
      for (int j = 0; j < k; ++j) {
        city_country[static_cast<std::size_t>(city)] = c;
        country_cities[static_cast<std::size_t>(c)].push_back(city);
        ++city;
      }
    }
  }

  // Per-city truncated-geometric stay parameters.
  std::vector<double> stay_p(static_cast<std::size_t>(config.n_cities));
  for (int c = 0; c < config.n_cities; ++c) {
    Rng r(seed_stream({seed, fnv1a("stay"), static_cast<std::uint64_t>(c)}));
    stay_p[static_cast<std::size_t>(c)] = 0.35 + 0.3 * r.uniform();
  }
  constexpr int kMaxExtraNights = 6;
  auto draw_stay = [&](int city, Rng& rng) {
    double p = stay_p[static_cast<std::size_t>(city)];
    double w[kMaxExtraNights + 1];
    double q = 1.0;
    for (int t = 0; t <= kMaxExtraNights; ++t) {
      w[t] = q * p;
      q *= 1.0 - p;
    }
    return 1 + rng.categorical({w, kMaxExtraNights + 1});
  };

  const double r_mix = config.route_strength;
  const double s_mix = config.seasonality;

  // Next-city weights over the country's cities, by local index.
  auto transition_weights = [&](int country, int prev_local, int month) {
    const int k = static_cast<int>(country_cities[static_cast<std::size_t>(country)].size());
    std::vector<double> w = country_popularity_weights(k);
    if (r_mix > 0.0) {
      auto base = ranked_weights(
          route_permutation(seed, country, prev_local, 0, k));
      auto seasonal = s_mix > 0.0
                          ? ranked_weights(route_permutation(seed, country,
                                                             prev_local, month, k))
                          : std::vector<double>();
      for (int j = 0; j < k; ++j) {
        double route = (1.0 - s_mix) * base[static_cast<std::size_t>(j)];
        if (s_mix > 0.0) route += s_mix * seasonal[static_cast<std::size_t>(j)];
        w[static_cast<std::size_t>(j)] =
            (1.0 - r_mix) * w[static_cast<std::size_t>(j)] + r_mix * route;
      }
    }
    return w;
  };

  std::vector<double> country_weights(
      static_cast<std::size_t>(config.n_countries));
  for (int c = 0; c < config.n_countries; ++c)
    country_weights[static_cast<std::size_t>(c)] = 1.0 / (1.0 + c);

  // Per-user attributes.
  const char* devices[3] = {"desktop", "mobile", "tablet"};
  const double device_w[3] = {0.6, 0.3, 0.1};

  const int user_width = std::max(6, static_cast<int>(
      std::to_string(config.n_users).size()));
  const int trip_width = std::max(6, static_cast<int>(
      std::to_string(config.n_trips).size()));
  const int city_width = std::max(4, static_cast<int>(
      std::to_string(config.n_cities).size()));
  const int country_width =
      std::max(2, static_cast<int>(std::to_string(config.n_countries).size()));

  // Trip -> user assignment: a multi_trip_fraction slice of the user pool
  // takes repeat trips; everyone else books once, cycling if trips exceed
  // users.
  Rng assign_rng(seed_stream({seed, fnv1a("assign")}));
  const int n_multi = std::max(
      0, static_cast<int>(config.multi_trip_fraction * config.n_users));
  std::vector<int> trip_user(static_cast<std::size_t>(config.n_trips));
  {
    int fresh = n_multi;  // single-trip users start after the multi pool
    for (int i = 0; i < config.n_trips; ++i) {
      bool repeat = n_multi > 0 && assign_rng.uniform() < 0.12;
      if (repeat || fresh >= config.n_users) {
        trip_user[static_cast<std::size_t>(i)] =
            n_multi > 0 ? assign_rng.uniform_index(static_cast<std::size_t>(n_multi))
                        : assign_rng.uniform_index(
                              static_cast<std::size_t>(config.n_users));
      } else {
        trip_user[static_cast<std::size_t>(i)] = fresh++;
      }
    }
  }

  TripDataset ds;
  ds.provenance = Provenance::synthetic;
  ds.seed = seed;
  ds.trips.reserve(static_cast<std::size_t>(config.n_trips));

  std::vector<double> len_w = config.trip_len_weights;
  if (len_w.empty()) len_w.assign(static_cast<std::size_t>(n_lengths), 1.0);

  for (int i = 0; i < config.n_trips; ++i) {
    Rng rng(seed_stream({seed, fnv1a("trip"), static_cast<std::uint64_t>(i)}));
    const int user = trip_user[static_cast<std::size_t>(i)];
    Rng urng(seed_stream({seed, fnv1a("user"), static_cast<std::uint64_t>(user)}));
    const std::string device = devices[urng.categorical({device_w, 3})];
    const std::string booker =
        label("country", urng.categorical(country_weights), country_width);

    const int country = rng.categorical(country_weights);
    const auto& cities = country_cities[static_cast<std::size_t>(country)];
    const int k = static_cast<int>(cities.size());
    const int length = config.min_trip_len + rng.categorical(len_w);
    const int month = 1 + rng.uniform_index(12);
    const int day = 1 + rng.uniform_index(28);

    Trip trip;
    trip.trip_id = label("trip", i, trip_width);
    trip.user_id = label("user", user, user_width);

    Date checkin{config.start_year, month, day};
    int prev_local = rng.categorical(country_popularity_weights(k));
    for (int step = 0; step < length; ++step) {
      if (step > 0) {
        auto w = transition_weights(country, prev_local, month);
        prev_local = rng.categorical(w);
      }
      const int city = cities[static_cast<std::size_t>(prev_local)];
      Reservation res;
      res.user_id = trip.user_id;
      res.trip_id = trip.trip_id;
      res.city_id = label("city", city, city_width);
      res.country_id = label("country", country, country_width);
      res.device_class = device;
      res.booker_country = booker;
      res.checkin = checkin;
      res.checkout = checkin.plus_days(draw_stay(city, rng));
      res.step_index = step;
      checkin = res.checkout;
      trip.reservations.push_back(std::move(res));
    }
    ds.trips.push_back(std::move(trip));
  }
  return ds;
}

}  // namespace reclab::data
