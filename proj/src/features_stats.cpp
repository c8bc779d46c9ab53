#include "reclab/features/stats.hpp"

#include <algorithm>
#include <set>

#include "reclab/common/error.hpp"

namespace reclab::features {

UserStats user_statistics(const data::TripDataset& ds,
                          const std::string& user_id,
                          const std::string& as_of_trip, int default_month) {
  const data::Trip* current = nullptr;
  bool user_seen = false;
  std::vector<const data::Trip*> prior;
  for (const auto& t : ds.trips) {
    if (t.user_id == user_id) user_seen = true;
    if (t.trip_id == as_of_trip) current = &t;
  }
  if (!user_seen) throw UnknownUser(user_id);
  if (!current || current->user_id != user_id)
    throw UnknownUser("trip " + as_of_trip + " does not belong to " + user_id);

  for (const auto& t : ds.trips)
    if (t.user_id == user_id && t.trip_id != as_of_trip &&
        t.first_checkin() < current->first_checkin() &&
        t.last_checkout() <= current->first_checkin())
      prior.push_back(&t);

  UserStats s;
  s.device_class = current->reservations.front().device_class;
  s.booker_country = current->reservations.front().booker_country;
  if (prior.empty()) {
    s.most_frequent_month = default_month;
    return s;
  }

  std::set<std::string> unique_cities, unique_countries;
  std::map<int, long> month_counts;
  double sum_unique_per_trip = 0.0;
  double sum_size = 0.0;
  double sum_duration = 0.0;
  for (const data::Trip* t : prior) {
    std::set<std::string> trip_cities;
    for (const auto& r : t->reservations) {
      trip_cities.insert(r.city_id);
      unique_cities.insert(r.city_id);
      unique_countries.insert(r.country_id);
      ++s.n_cities_visited;
    }
    sum_unique_per_trip += static_cast<double>(trip_cities.size());
    sum_size += static_cast<double>(t->size());
    sum_duration += static_cast<double>(t->total_duration_days());
    ++month_counts[t->start_month()];
  }
  s.n_trips = static_cast<long>(prior.size());
  auto n = static_cast<double>(prior.size());
  s.avg_unique_cities_per_trip = sum_unique_per_trip / n;
  s.avg_trip_size = sum_size / n;
  s.avg_trip_duration_days = sum_duration / n;
  s.n_unique_cities = static_cast<long>(unique_cities.size());
  s.n_unique_countries = static_cast<long>(unique_countries.size());
  // Mode; ties resolved toward the earliest month.
  long best = 0;
  for (const auto& [month, count] : month_counts)
    if (count > best) {
      best = count;
      s.most_frequent_month = month;
    }
  return s;
}

void InteractionCounter::commit_before(long serial) {
  while (!pending_.empty() && pending_.top().checkin_serial < serial) {
    const auto& e = pending_.top();
    ++city_global_[e.city];
    ++country_global_[e.country];
    ++city_user_[{e.user, e.city}];
    ++country_user_[{e.user, e.country}];
    pending_.pop();
  }
}

void InteractionCounter::start_trip(const data::Reservation& r) {
  long start = r.checkin.serial();
  if (any_trip_ && start < current_trip_start_)
    throw OutOfOrderEvent("trip " + r.trip_id + " starts before trip " +
                          current_trip_ + " already in progress");
  current_trip_ = r.trip_id;
  current_trip_start_ = start;
  expected_step_ = 0;
  in_trip_city_.clear();
  any_trip_ = true;
  commit_before(start);
}

CityStepStats InteractionCounter::observe(const data::Reservation& r) {
  if (!any_trip_ || r.trip_id != current_trip_) {
    if (r.step_index != 0)
      throw OutOfOrderEvent("trip " + r.trip_id + " began at step " +
                            std::to_string(r.step_index));
    start_trip(r);
  } else {
    if (r.step_index != expected_step_)
      throw OutOfOrderEvent("trip " + r.trip_id + " step " +
                            std::to_string(r.step_index) + ", expected " +
                            std::to_string(expected_step_));
    if (r.checkin.serial() < current_trip_start_)
      throw OutOfOrderEvent("reservation predates its trip start");
  }

  CityStepStats out;
  auto git = city_global_.find(r.city_id);
  if (git != city_global_.end()) out.city_global_prior_count = git->second;
  auto cit = country_global_.find(r.country_id);
  if (cit != country_global_.end())
    out.country_global_prior_count = cit->second;
  auto uit = city_user_.find({r.user_id, r.city_id});
  if (uit != city_user_.end()) out.city_user_prior_count = uit->second;
  auto vit = country_user_.find({r.user_id, r.country_id});
  if (vit != country_user_.end()) out.country_user_prior_count = vit->second;
  auto tit = in_trip_city_.find(r.city_id);
  if (tit != in_trip_city_.end()) out.city_in_trip_count = tit->second;

  ++in_trip_city_[r.city_id];
  pending_.push({r.checkin.serial(), r.city_id, r.country_id, r.user_id});
  ++expected_step_;
  return out;
}

}  // namespace reclab::features
