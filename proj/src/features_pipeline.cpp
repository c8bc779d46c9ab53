#include "reclab/features/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "reclab/common/csv.hpp"
#include "reclab/common/error.hpp"

namespace reclab::features {

namespace {

// Trips ordered by (first checkin, trip_id): the streaming order under which
// prior-interaction counts never look ahead.
std::vector<const data::Trip*> time_ordered(const data::TripDataset& ds) {
  std::vector<const data::Trip*> out;
  out.reserve(ds.trips.size());
  for (const auto& t : ds.trips) out.push_back(&t);
  std::sort(out.begin(), out.end(),
            [](const data::Trip* a, const data::Trip* b) {
              long sa = a->first_checkin().serial();
              long sb = b->first_checkin().serial();
              if (sa != sb) return sa < sb;
              return a->trip_id < b->trip_id;
            });
  return out;
}

}  // namespace

std::vector<std::string> user_feature_names(const FeatureConfig& cfg) {
  std::vector<std::string> names = {
      "n_trips",
      "n_cities_visited",
      "avg_unique_cities_per_trip",
      "avg_trip_size",
      "avg_trip_duration_days",
      "most_frequent_month",
      "n_unique_cities",
      "n_unique_countries",
  };
  if (cfg.include_extended) {
    names.insert(names.end(), {"log1p_n_trips", "log1p_n_cities_visited",
                               "log1p_n_unique_cities",
                               "unique_cities_per_trip_ratio",
                               "countries_per_city_ratio"});
    for (int m = 1; m <= 12; ++m)
      names.push_back("frequent_month_is_" + std::to_string(m));
  }
  return names;
}

std::vector<std::string> step_feature_names(const FeatureConfig& cfg) {
  std::vector<std::string> names = {
      "city_global_prior_count", "city_user_prior_count", "city_in_trip_count",
      "country_global_prior_count", "country_user_prior_count"};
  if (cfg.include_extended) {
    names.insert(names.end(),
                 {"log1p_city_global_prior", "log1p_city_user_prior",
                  "log1p_city_in_trip", "log1p_country_global_prior",
                  "log1p_country_user_prior", "step_index",
                  "user_share_of_city_interactions"});
  }
  return names;
}

Eigen::RowVectorXd user_feature_vector(const UserStats& s,
                                       const FeatureConfig& cfg) {
  std::vector<double> v = {
      static_cast<double>(s.n_trips),
      static_cast<double>(s.n_cities_visited),
      s.avg_unique_cities_per_trip,
      s.avg_trip_size,
      s.avg_trip_duration_days,
      static_cast<double>(s.most_frequent_month),
      static_cast<double>(s.n_unique_cities),
      static_cast<double>(s.n_unique_countries),
  };
  if (cfg.include_extended) {
    v.push_back(std::log1p(static_cast<double>(s.n_trips)));
    v.push_back(std::log1p(static_cast<double>(s.n_cities_visited)));
    v.push_back(std::log1p(static_cast<double>(s.n_unique_cities)));
    v.push_back(static_cast<double>(s.n_unique_cities) /
                std::max<double>(1.0, static_cast<double>(s.n_trips)));
    v.push_back(static_cast<double>(s.n_unique_countries) /
                std::max<double>(1.0, static_cast<double>(s.n_unique_cities)));
    for (int m = 1; m <= 12; ++m)
      v.push_back(s.most_frequent_month == m ? 1.0 : 0.0);
  }
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i)
    row(static_cast<Eigen::Index>(i)) = v[i];
  return row;
}

Eigen::RowVectorXd step_feature_vector(const CityStepStats& s, int step_index,
                                       const FeatureConfig& cfg) {
  std::vector<double> v = {
      static_cast<double>(s.city_global_prior_count),
      static_cast<double>(s.city_user_prior_count),
      static_cast<double>(s.city_in_trip_count),
      static_cast<double>(s.country_global_prior_count),
      static_cast<double>(s.country_user_prior_count),
  };
  if (cfg.include_extended) {
    v.push_back(std::log1p(static_cast<double>(s.city_global_prior_count)));
    v.push_back(std::log1p(static_cast<double>(s.city_user_prior_count)));
    v.push_back(std::log1p(static_cast<double>(s.city_in_trip_count)));
    v.push_back(std::log1p(static_cast<double>(s.country_global_prior_count)));
    v.push_back(std::log1p(static_cast<double>(s.country_user_prior_count)));
    v.push_back(static_cast<double>(step_index));
    v.push_back(static_cast<double>(s.city_user_prior_count) /
                (1.0 + static_cast<double>(s.city_global_prior_count)));
  }
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i)
    row(static_cast<Eigen::Index>(i)) = v[i];
  return row;
}

void write_feature_matrix(const std::string& path,
                          const std::vector<std::string>& names,
                          const Eigen::MatrixXd& m) {
  if (names.size() != static_cast<std::size_t>(m.cols()))
    throw DimensionMismatch("column names vs matrix width");
  std::ostringstream out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out << ',';
    out << names[i];
  }
  out << '\n';
  out.precision(17);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << m(r, c);
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

CategoricalVocab CategoricalVocab::fit(const std::set<std::string>& values) {
  CategoricalVocab v;
  v.values_.assign(values.begin(), values.end());
  return v;
}

CategoricalVocab CategoricalVocab::from_values(
    std::vector<std::string> sorted_values) {
  if (!std::is_sorted(sorted_values.begin(), sorted_values.end()))
    throw InvalidConfig("categorical values must be sorted");
  CategoricalVocab v;
  v.values_ = std::move(sorted_values);
  return v;
}

int CategoricalVocab::id(const std::string& value) const {
  auto it = std::lower_bound(values_.begin(), values_.end(), value);
  if (it == values_.end() || *it != value) return 0;
  return static_cast<int>(it - values_.begin()) + 1;
}

Eigen::MatrixXd FeaturePipeline::user_matrix(const data::TripDataset& ds) const {
  auto order = time_ordered(ds);
  auto names = user_feature_names(cfg_);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(order.size()),
                    static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < order.size(); ++i) {
    UserStats s = user_statistics(ds, order[i]->user_id, order[i]->trip_id,
                                  cfg_.default_month);
    m.row(static_cast<Eigen::Index>(i)) = user_feature_vector(s, cfg_);
  }
  return m;
}

FeaturePipeline FeaturePipeline::fit(const data::TripDataset& train,
                                     const data::Vocabulary& vocab,
                                     FeatureConfig cfg, std::uint64_t seed,
                                     bool with_dense,
                                     UserEncoder::Options encoder_opt) {
  (void)vocab;
  FeaturePipeline p;
  p.cfg_ = cfg;
  p.with_dense_ = with_dense;
  if (!with_dense) return p;

  Eigen::MatrixXd users = p.user_matrix(train);
  p.user_norm_ = NormalizationStats::fit(users);
  p.encoder_ =
      UserEncoder::train(p.user_norm_.apply(users), encoder_opt, seed);

  auto order = time_ordered(train);
  std::size_t n_steps = 0;
  for (const auto* t : order) n_steps += t->size();
  auto step_names = step_feature_names(cfg);
  Eigen::MatrixXd steps(static_cast<Eigen::Index>(n_steps),
                        static_cast<Eigen::Index>(step_names.size()));
  InteractionCounter counter;
  Eigen::Index row = 0;
  std::set<std::string> devices, bookers;
  for (const auto* t : order) {
    devices.insert(t->reservations.front().device_class);
    bookers.insert(t->reservations.front().booker_country);
    for (const auto& r : t->reservations)
      steps.row(row++) = step_feature_vector(counter.observe(r), r.step_index, cfg);
  }
  p.step_norm_ = NormalizationStats::fit(steps);
  p.device_vocab_ = CategoricalVocab::fit(devices);
  p.booker_vocab_ = CategoricalVocab::fit(bookers);
  return p;
}

FeaturePipeline FeaturePipeline::from_parts(
    FeatureConfig cfg, bool with_dense, NormalizationStats user_norm,
    NormalizationStats step_norm, CategoricalVocab device_vocab,
    CategoricalVocab booker_vocab, UserEncoder encoder) {
  FeaturePipeline p;
  p.cfg_ = cfg;
  p.with_dense_ = with_dense;
  p.user_norm_ = std::move(user_norm);
  p.step_norm_ = std::move(step_norm);
  p.device_vocab_ = std::move(device_vocab);
  p.booker_vocab_ = std::move(booker_vocab);
  p.encoder_ = std::move(encoder);
  return p;
}

std::vector<augment::TripSample> FeaturePipeline::featurize(
    const data::TripDataset& ds, const data::Vocabulary& vocab) const {
  auto order = time_ordered(ds);
  std::vector<augment::TripSample> out;
  out.reserve(order.size());
  InteractionCounter counter;
  for (const auto* t : order) {
    augment::TripSample s;
    s.trip_id = t->trip_id;
    s.start_month = t->start_month();
    s.cities.reserve(t->size());
    s.countries.reserve(t->size());
    s.durations.reserve(t->size());
    for (const auto& r : t->reservations) {
      s.cities.push_back(vocab.city_id_or_mask(r.city_id));
      s.countries.push_back(std::max(0, vocab.country_id(r.country_id)));
      s.durations.push_back(static_cast<int>(r.stay_days()));
    }
    if (with_dense_) {
      UserStats us =
          user_statistics(ds, t->user_id, t->trip_id, cfg_.default_month);
      s.user_dense = user_norm_.apply(user_feature_vector(us, cfg_));
      s.user_embedding = encoder_.encode(s.user_dense);
      s.device_id = device_vocab_.id(us.device_class);
      s.booker_id = booker_vocab_.id(us.booker_country);
      s.step_dense.reserve(t->size());
      for (const auto& r : t->reservations)
        s.step_dense.push_back(step_norm_.apply(
            step_feature_vector(counter.observe(r), r.step_index, cfg_)));
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace reclab::features
