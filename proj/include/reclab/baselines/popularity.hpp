#pragma once

#include <map>
#include <string>
#include <vector>

#include "reclab/data/types.hpp"

namespace reclab::baselines {

// Per-country city rankings by reservation count, with a global ranking as
// fallback for unseen countries or short country catalogs. Counts cover
// every reservation, not only trip-final cities.
class CountryPopularity {
public:
  static CountryPopularity fit(const data::TripDataset& train);

  // Top-k cities of the country's ranking; slots beyond the country catalog
  // are filled from the global ranking (duplicates skipped).
  std::vector<std::string> recommend(const std::string& last_city_country,
                                     int k = 4) const;

  long count(const std::string& country, const std::string& city) const;
  const std::vector<std::string>& global_ranking() const { return global_; }

  // Checkpoint support.
  std::map<std::string, std::vector<std::pair<std::string, long>>> ranked_counts()
      const;
  static CountryPopularity from_counts(
      const std::map<std::string, std::vector<std::pair<std::string, long>>>&
          counts);

private:
  // country -> cities ranked by (count desc, city id asc)
  std::map<std::string, std::vector<std::pair<std::string, long>>> ranked_;
  std::vector<std::string> global_;
  std::map<std::string, std::map<std::string, long>> counts_;

  void build_rankings();
};

}  // namespace reclab::baselines
