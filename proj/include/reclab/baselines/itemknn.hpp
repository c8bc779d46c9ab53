#pragma once

#include <map>
#include <string>
#include <vector>

#include "reclab/baselines/popularity.hpp"
#include "reclab/data/types.hpp"

namespace reclab::baselines {

struct Neighbor {
  std::string city;
  double score = 0.0;  // cosine in [0,1]
};

// Cosine similarity between city trip-incidence vectors. Binary incidence
// by default; a count-weighted variant is available behind a flag.
class SimilarityIndex {
public:
  static SimilarityIndex fit(const data::TripDataset& train, int top_k,
                             bool count_weighted = false);

  // Neighbors sorted by (score desc, city id asc); self excluded.
  const std::vector<Neighbor>& neighbors(const std::string& city) const;
  bool knows(const std::string& city) const;
  double similarity(const std::string& a, const std::string& b) const;
  const std::map<std::string, std::vector<Neighbor>>& all() const {
    return neighbors_;
  }
  int top_k() const { return top_k_; }

  static SimilarityIndex from_neighbors(
      std::map<std::string, std::vector<Neighbor>> neighbors, int top_k);

private:
  std::map<std::string, std::vector<Neighbor>> neighbors_;
  int top_k_ = 0;
  static const std::vector<Neighbor> kEmpty;
};

// Top-k most similar cities to the last city; unseen cities fall back to the
// popularity list, and short neighbor lists are completed from it.
std::vector<std::string> itemknn_recommend(const SimilarityIndex& index,
                                           const CountryPopularity& popularity,
                                           const std::string& last_city,
                                           const std::string& last_city_country,
                                           int k = 4);

}  // namespace reclab::baselines
