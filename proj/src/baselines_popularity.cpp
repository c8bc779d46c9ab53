#include "reclab/baselines/popularity.hpp"

#include <algorithm>
#include <set>

namespace reclab::baselines {

CountryPopularity CountryPopularity::fit(const data::TripDataset& train) {
  CountryPopularity model;
  for (const auto& t : train.trips)
    for (const auto& r : t.reservations)
      ++model.counts_[r.country_id][r.city_id];
  model.build_rankings();
  return model;
}

void CountryPopularity::build_rankings() {
  ranked_.clear();
  std::map<std::string, long> global_counts;
  for (const auto& [country, cities] : counts_) {
    auto& ranked = ranked_[country];
    ranked.assign(cities.begin(), cities.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    for (const auto& [city, n] : cities) global_counts[city] += n;
  }
  std::vector<std::pair<std::string, long>> g(global_counts.begin(),
                                              global_counts.end());
  std::sort(g.begin(), g.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  global_.clear();
  for (const auto& [city, n] : g) global_.push_back(city);
}

std::vector<std::string> CountryPopularity::recommend(
    const std::string& last_city_country, int k) const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto push = [&](const std::string& city) {
    if (static_cast<int>(out.size()) < k && seen.insert(city).second)
      out.push_back(city);
  };
  auto it = ranked_.find(last_city_country);
  if (it != ranked_.end())
    for (const auto& [city, n] : it->second) push(city);
  for (const auto& city : global_) {
    if (static_cast<int>(out.size()) >= k) break;
    push(city);
  }
  return out;
}

long CountryPopularity::count(const std::string& country,
                              const std::string& city) const {
  auto it = counts_.find(country);
  if (it == counts_.end()) return 0;
  auto jt = it->second.find(city);
  return jt == it->second.end() ? 0 : jt->second;
}

std::map<std::string, std::vector<std::pair<std::string, long>>>
CountryPopularity::ranked_counts() const {
  std::map<std::string, std::vector<std::pair<std::string, long>>> out;
  for (const auto& [country, cities] : counts_)
    out[country].assign(cities.begin(), cities.end());
  return out;
}

CountryPopularity CountryPopularity::from_counts(
    const std::map<std::string, std::vector<std::pair<std::string, long>>>&
        counts) {
  CountryPopularity model;
  for (const auto& [country, cities] : counts)
    for (const auto& [city, n] : cities) model.counts_[country][city] = n;
  model.build_rankings();
  return model;
}

}  // namespace reclab::baselines
