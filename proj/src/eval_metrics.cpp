#include "reclab/eval/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

#include "reclab/common/error.hpp"
#include "reclab/train/batching.hpp"

namespace reclab::eval {

int accuracy_at_k(const std::vector<std::string>& ranked,
                  const std::string& truth, int k) {
  if (ranked.empty()) throw EmptyRanking("empty recommendation list");
  if (k < 1) throw InvalidConfig("k must be >= 1");
  std::set<std::string> seen;
  for (const auto& c : ranked)
    if (!seen.insert(c).second)
      throw MalformedInput("duplicate suggestion: " + c);
  auto end = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < end; ++i)
    if (ranked[i] == truth) return 1;
  return 0;
}

namespace {

std::vector<std::string> visible_cities(const data::Trip& t) {
  std::vector<std::string> cities;
  cities.reserve(t.reservations.size());
  for (const auto& r : t.reservations) cities.push_back(r.city_id);
  return cities;
}

// The recommender's consumed window must be a suffix of what it was allowed
// to see.
void check_window(const std::vector<std::string>& window,
                  const std::vector<std::string>& visible,
                  const std::string& trip_id) {
  if (window.size() > visible.size())
    throw LeakageGuard("trip " + trip_id +
                       ": input window longer than the visible history");
  std::size_t off = visible.size() - window.size();
  for (std::size_t i = 0; i < window.size(); ++i)
    if (window[i] != visible[off + i])
      throw LeakageGuard("trip " + trip_id +
                         ": input window is not a suffix of the visible history");
}

}  // namespace

MetricsReport evaluate(Recommender& rec, const data::TripDataset& test, int k) {
  // Strip every final reservation first: the recommender never holds a
  // dataset that contains a prediction target.
  data::TripDataset visible;
  visible.provenance = test.provenance;
  visible.seed = test.seed;
  visible.trips.reserve(test.trips.size());
  for (const auto& t : test.trips) {
    if (t.reservations.size() < 2)
      throw TripTooShort("trip " + t.trip_id + " cannot be evaluated");
    data::Trip v = t;
    v.reservations.pop_back();
    visible.trips.push_back(std::move(v));
  }
  rec.prepare(visible);

  std::vector<std::size_t> order(test.trips.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return test.trips[a].trip_id < test.trips[b].trip_id;
  });

  MetricsReport report;
  report.model_name = rec.name();
  long hits = 0;
  for (std::size_t idx : order) {
    const data::Trip& full = test.trips[idx];
    const data::Trip& vis = visible.trips[idx];
    std::string truth = full.reservations.back().city_id;

    auto window = rec.input_window(vis);
    check_window(window, visible_cities(vis), full.trip_id);

    auto ranked = rec.recommend(vis, k);
    int hit = accuracy_at_k(ranked, truth, k);
    hits += hit;
    report.records.push_back(
        {full.trip_id, std::move(ranked), truth, hit == 1});
  }
  report.n_evaluated = static_cast<long>(report.records.size());
  report.acc_at_4 =
      report.n_evaluated == 0
          ? 0.0
          : static_cast<double>(hits) / static_cast<double>(report.n_evaluated);
  return report;
}

std::vector<LeaderboardRow> leaderboard(
    const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw InsufficientData("no reports to rank");
  std::vector<LeaderboardRow> rows;
  rows.reserve(reports.size());
  for (const auto& r : reports)
    rows.push_back({r.model_name, r.acc_at_4, r.n_evaluated});
  std::stable_sort(rows.begin(), rows.end(),
                   [](const LeaderboardRow& a, const LeaderboardRow& b) {
                     if (a.acc_at_4 != b.acc_at_4)
                       return a.acc_at_4 > b.acc_at_4;
                     return a.model_name < b.model_name;
                   });
  return rows;
}

std::string leaderboard_table(const std::vector<LeaderboardRow>& rows) {
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.model_name.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "model"
      << "  acc@4   n\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(static_cast<int>(width)) << r.model_name
        << "  " << std::fixed << std::setprecision(4) << r.acc_at_4 << "  "
        << r.n_evaluated << "\n";
  }
  return out.str();
}

std::vector<std::string> PopularityRecommender::recommend(const data::Trip& t,
                                                          int k) {
  return pop_.recommend(t.reservations.back().country_id, k);
}

std::vector<std::string> PopularityRecommender::input_window(
    const data::Trip& t) const {
  return {t.reservations.back().city_id};
}

std::vector<std::string> ItemKnnRecommender::recommend(const data::Trip& t,
                                                       int k) {
  const auto& last = t.reservations.back();
  return baselines::itemknn_recommend(index_, pop_, last.city_id,
                                      last.country_id, k);
}

std::vector<std::string> ItemKnnRecommender::input_window(
    const data::Trip& t) const {
  return {t.reservations.back().city_id};
}

void NarmRecommender::prepare(const data::TripDataset& visible) {
  featurized_.clear();
  for (auto& ts : pipeline_->featurize(visible, *vocab_))
    featurized_.emplace(ts.trip_id, std::move(ts));
}

std::vector<std::string> NarmRecommender::recommend(const data::Trip& t, int k) {
  auto it = featurized_.find(t.trip_id);
  if (it == featurized_.end())
    throw InvalidConfig("trip " + t.trip_id + " was not prepared");
  const augment::TripSample& ts = it->second;

  augment::PrefixSample s;
  s.trip_id = ts.trip_id;
  s.prefix = ts.cities;
  s.durations = ts.durations;
  s.step_dense = ts.step_dense;
  s.start_month = ts.start_month;
  s.user_dense = ts.user_dense;
  s.user_embedding = ts.user_embedding;
  s.device_id = ts.device_id;
  s.booker_id = ts.booker_id;
  s.label_city = data::Vocabulary::kPadId;  // unused
  std::vector<augment::PrefixSample> one = {std::move(s)};
  model::Batch b = train::to_batch(one, 0, 1, window_);

  Eigen::MatrixXd scores = model_->city_scores(b);
  auto ids = model::top_k_cities(scores.row(0), k);
  std::vector<std::string> names;
  names.reserve(ids.size());
  for (int id : ids) names.push_back(vocab_->id_to_city[static_cast<std::size_t>(id)]);
  return names;
}

std::vector<std::string> NarmRecommender::input_window(
    const data::Trip& t) const {
  auto cities = visible_cities(t);
  if (cities.size() > static_cast<std::size_t>(window_))
    cities.erase(cities.begin(),
                 cities.end() - static_cast<std::ptrdiff_t>(window_));
  return cities;
}

}  // namespace reclab::eval
