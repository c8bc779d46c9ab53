#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "reclab/baselines/itemknn.hpp"
#include "reclab/baselines/popularity.hpp"
#include "reclab/data/types.hpp"
#include "reclab/features/pipeline.hpp"
#include "reclab/model/narm.hpp"

namespace reclab::eval {

// 1 iff the truth appears among the first k suggestions.
int accuracy_at_k(const std::vector<std::string>& ranked,
                  const std::string& truth, int k = 4);

// Anything that can rank next cities for a trip whose final reservation has
// been hidden. `input_window` reports the city sequence the recommender
// actually consumed — the evaluator checks it against the visible history.
class Recommender {
public:
  virtual ~Recommender() = default;
  virtual std::string name() const = 0;
  // Called once with the test split minus every final reservation, before
  // any recommend() call. Fitting happened earlier, on training data.
  virtual void prepare(const data::TripDataset& /*visible*/) {}
  virtual std::vector<std::string> recommend(const data::Trip& visible_trip,
                                             int k) = 0;
  virtual std::vector<std::string> input_window(
      const data::Trip& visible_trip) const = 0;
};

struct TripRecord {
  std::string trip_id;
  std::vector<std::string> top;
  std::string truth;
  bool hit = false;
};

struct MetricsReport {
  std::string model_name;
  double acc_at_4 = 0.0;
  long n_evaluated = 0;
  std::vector<TripRecord> records;  // sorted by trip_id
  std::string config_hash;
  std::uint64_t seed = 0;
};

// Hides each trip's final reservation, queries the recommender on the
// remainder and scores Accuracy@k. Raises LeakageGuard when a recommender's
// input window is not a suffix of the visible history (that is, it saw the
// hidden step).
MetricsReport evaluate(Recommender& rec, const data::TripDataset& test,
                       int k = 4);

struct LeaderboardRow {
  std::string model_name;
  double acc_at_4 = 0.0;
  long n_evaluated = 0;
};

// Rows sorted by Acc@4 descending, ties by model name.
std::vector<LeaderboardRow> leaderboard(
    const std::vector<MetricsReport>& reports);
std::string leaderboard_table(const std::vector<LeaderboardRow>& rows);

// --- concrete recommenders -------------------------------------------------

class PopularityRecommender : public Recommender {
public:
  explicit PopularityRecommender(baselines::CountryPopularity pop)
      : pop_(std::move(pop)) {}
  std::string name() const override { return "popularity"; }
  std::vector<std::string> recommend(const data::Trip& t, int k) override;
  std::vector<std::string> input_window(const data::Trip& t) const override;

private:
  baselines::CountryPopularity pop_;
};

class ItemKnnRecommender : public Recommender {
public:
  ItemKnnRecommender(baselines::SimilarityIndex index,
                     baselines::CountryPopularity pop)
      : index_(std::move(index)), pop_(std::move(pop)) {}
  std::string name() const override { return "itemknn"; }
  std::vector<std::string> recommend(const data::Trip& t, int k) override;
  std::vector<std::string> input_window(const data::Trip& t) const override;

private:
  baselines::SimilarityIndex index_;
  baselines::CountryPopularity pop_;
};

class NarmRecommender : public Recommender {
public:
  // All three referents must outlive the recommender.
  NarmRecommender(std::string name, const model::NarmModel& model,
                  const features::FeaturePipeline& pipeline,
                  const data::Vocabulary& vocab, int window = 10)
      : name_(std::move(name)), model_(&model), pipeline_(&pipeline),
        vocab_(&vocab), window_(window) {}
  std::string name() const override { return name_; }
  void prepare(const data::TripDataset& visible) override;
  std::vector<std::string> recommend(const data::Trip& t, int k) override;
  std::vector<std::string> input_window(const data::Trip& t) const override;

private:
  std::string name_;
  const model::NarmModel* model_;
  const features::FeaturePipeline* pipeline_;
  const data::Vocabulary* vocab_;
  int window_;
  std::map<std::string, augment::TripSample> featurized_;
};

}  // namespace reclab::eval
