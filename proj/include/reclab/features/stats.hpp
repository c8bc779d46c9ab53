#pragma once

#include <map>
#include <queue>
#include <string>
#include <vector>

#include "reclab/data/types.hpp"

namespace reclab::features {

struct UserStats {
  long n_trips = 0;
  long n_cities_visited = 0;  // reservations across prior trips, with repeats
  double avg_unique_cities_per_trip = 0.0;
  double avg_trip_size = 0.0;
  double avg_trip_duration_days = 0.0;
  int most_frequent_month = 0;
  long n_unique_cities = 0;
  long n_unique_countries = 0;
  std::string device_class;     // taken from the current trip's booking
  std::string booker_country;
};

struct CityStepStats {
  long city_global_prior_count = 0;
  long city_user_prior_count = 0;
  long city_in_trip_count = 0;
  long country_global_prior_count = 0;
  long country_user_prior_count = 0;
};

// Statistics over the user's trips that fully precede `as_of_trip`
// (last checkout <= its first checkin and strictly earlier start). Users
// with no prior trips get zero counts and `default_month`.
UserStats user_statistics(const data::TripDataset& ds,
                          const std::string& user_id,
                          const std::string& as_of_trip,
                          int default_month = 6);

// Streaming prior-interaction counter. Trips must be fed in nondecreasing
// first-checkin order; inside a trip, steps in order. For each reservation
// the returned counts cover every interaction with checkin strictly before
// the current trip's first checkin, plus earlier steps of the same trip.
class InteractionCounter {
public:
  // Returns the stats visible at this reservation, then ingests it.
  CityStepStats observe(const data::Reservation& r);

private:
  struct PendingEvent {
    long checkin_serial;
    std::string city;
    std::string country;
    std::string user;
    bool operator>(const PendingEvent& other) const {
      return checkin_serial > other.checkin_serial;
    }
  };

  void start_trip(const data::Reservation& r);
  void commit_before(long serial);

  std::map<std::string, long> city_global_;
  std::map<std::string, long> country_global_;
  std::map<std::pair<std::string, std::string>, long> city_user_;
  std::map<std::pair<std::string, std::string>, long> country_user_;
  std::priority_queue<PendingEvent, std::vector<PendingEvent>,
                      std::greater<PendingEvent>>
      pending_;
  std::map<std::string, long> in_trip_city_;
  std::string current_trip_;
  long current_trip_start_ = 0;
  int expected_step_ = 0;
  bool any_trip_ = false;
};

}  // namespace reclab::features
