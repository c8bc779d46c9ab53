#include "reclab/baselines/itemknn.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "reclab/common/error.hpp"

namespace reclab::baselines {

const std::vector<Neighbor> SimilarityIndex::kEmpty;

SimilarityIndex SimilarityIndex::fit(const data::TripDataset& train, int top_k,
                                     bool count_weighted) {
  if (top_k < 1) throw InvalidConfig("top_k must be >= 1");

  // Incidence vectors over trips: city -> {trip index -> weight}.
  std::map<std::string, std::map<int, double>> vectors;
  for (std::size_t ti = 0; ti < train.trips.size(); ++ti)
    for (const auto& r : train.trips[ti].reservations) {
      double& w = vectors[r.city_id][static_cast<int>(ti)];
      w = count_weighted ? w + 1.0 : 1.0;
    }

  std::map<std::string, double> norms;
  for (const auto& [city, vec] : vectors) {
    double n = 0.0;
    for (const auto& [trip, w] : vec) n += w * w;
    norms[city] = std::sqrt(n);
  }

  SimilarityIndex index;
  index.top_k_ = top_k;
  for (const auto& [a, va] : vectors) {
    // Candidate cities share at least one trip with a.
    std::set<std::string> candidates;
    for (const auto& [trip, wa] : va)
      for (const auto& r : train.trips[static_cast<std::size_t>(trip)].reservations)
        if (r.city_id != a) candidates.insert(r.city_id);

    std::vector<Neighbor> nb;
    nb.reserve(candidates.size());
    for (const auto& b : candidates) {
      const auto& vb = vectors.at(b);
      double dot = 0.0;
      for (const auto& [trip, wa] : va) {
        auto it = vb.find(trip);
        if (it != vb.end()) dot += wa * it->second;
      }
      nb.push_back({b, dot / (norms.at(a) * norms.at(b))});
    }
    std::sort(nb.begin(), nb.end(), [](const Neighbor& x, const Neighbor& y) {
      if (x.score != y.score) return x.score > y.score;
      return x.city < y.city;
    });
    if (static_cast<int>(nb.size()) > top_k)
      nb.resize(static_cast<std::size_t>(top_k));
    index.neighbors_[a] = std::move(nb);
  }
  return index;
}

const std::vector<Neighbor>& SimilarityIndex::neighbors(
    const std::string& city) const {
  auto it = neighbors_.find(city);
  return it == neighbors_.end() ? kEmpty : it->second;
}

bool SimilarityIndex::knows(const std::string& city) const {
  return neighbors_.count(city) > 0;
}

double SimilarityIndex::similarity(const std::string& a,
                                   const std::string& b) const {
  for (const auto& n : neighbors(a))
    if (n.city == b) return n.score;
  return 0.0;
}

SimilarityIndex SimilarityIndex::from_neighbors(
    std::map<std::string, std::vector<Neighbor>> neighbors, int top_k) {
  SimilarityIndex index;
  index.neighbors_ = std::move(neighbors);
  index.top_k_ = top_k;
  return index;
}

std::vector<std::string> itemknn_recommend(const SimilarityIndex& index,
                                           const CountryPopularity& popularity,
                                           const std::string& last_city,
                                           const std::string& last_city_country,
                                           int k) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto push = [&](const std::string& city) {
    if (static_cast<int>(out.size()) < k && seen.insert(city).second)
      out.push_back(city);
  };
  if (index.knows(last_city))
    for (const auto& n : index.neighbors(last_city)) push(n.city);
  if (static_cast<int>(out.size()) < k)
    for (const auto& city : popularity.recommend(last_city_country, k + k))
      push(city);
  return out;
}

}  // namespace reclab::baselines
