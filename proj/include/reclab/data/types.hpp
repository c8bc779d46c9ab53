#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "reclab/common/date.hpp"

namespace reclab::data {

struct Reservation {
  std::string user_id;
  std::string trip_id;
  std::string city_id;
  std::string country_id;
  Date checkin;
  Date checkout;
  std::string device_class;    // desktop | mobile | tablet
  std::string booker_country;
  int step_index = 0;

  long stay_days() const { return checkout - checkin; }
};

struct Trip {
  std::string trip_id;
  std::string user_id;
  std::vector<Reservation> reservations;  // checkin order, step_index 0..n-1

  int start_month() const { return reservations.front().checkin.month; }
  Date first_checkin() const { return reservations.front().checkin; }
  Date last_checkout() const { return reservations.back().checkout; }
  long total_duration_days() const {
    return last_checkout() - first_checkin();
  }
  std::size_t size() const { return reservations.size(); }
};

enum class Provenance { loaded, synthetic };

struct TripDataset {
  std::vector<Trip> trips;
  Provenance provenance = Provenance::loaded;
  std::optional<std::uint64_t> seed;
};

// pad=0 and mask=1 are reserved; real city ids start at 2 and are assigned
// in lexicographic city order. Country ids start at 0.
struct Vocabulary {
  static constexpr int kPadId = 0;
  static constexpr int kMaskId = 1;

  std::map<std::string, int> city_to_id;
  std::vector<std::string> id_to_city;  // indexed by id; [0]="<pad>", [1]="<mask>"
  std::map<std::string, int> country_to_id;
  std::vector<std::string> id_to_country;

  int city_count() const { return static_cast<int>(city_to_id.size()); }
  int country_count() const { return static_cast<int>(country_to_id.size()); }
  // Rows of the city embedding / score space, including pad and mask.
  int city_space() const { return city_count() + 2; }

  int city_id(const std::string& name) const {
    auto it = city_to_id.find(name);
    return it == city_to_id.end() ? -1 : it->second;
  }
  // Unseen cities map to the mask token (inference-mode semantics).
  int city_id_or_mask(const std::string& name) const {
    int id = city_id(name);
    return id < 0 ? kMaskId : id;
  }
  int country_id(const std::string& name) const {
    auto it = country_to_id.find(name);
    return it == country_to_id.end() ? -1 : it->second;
  }
};

}  // namespace reclab::data
