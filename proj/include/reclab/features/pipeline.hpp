#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "reclab/augment/sample.hpp"
#include "reclab/data/types.hpp"
#include "reclab/features/autoencoder.hpp"
#include "reclab/features/normalize.hpp"
#include "reclab/features/stats.hpp"

namespace reclab::features {

struct FeatureConfig {
  // The listed base statistics alone are 13 numeric columns; the extended
  // set (log1p counts, ratios, month one-hot, step position) brings the
  // total above 30. Each extension can be switched off here.
  bool include_extended = true;
  int default_month = 6;  // month assigned to users with no prior trips
};

// Column labels matching the vectors below, in order (for persisted matrices).
std::vector<std::string> user_feature_names(const FeatureConfig& cfg);
std::vector<std::string> step_feature_names(const FeatureConfig& cfg);

// Raw (un-normalized) numeric feature rows.
Eigen::RowVectorXd user_feature_vector(const UserStats& s,
                                       const FeatureConfig& cfg);
Eigen::RowVectorXd step_feature_vector(const CityStepStats& s, int step_index,
                                       const FeatureConfig& cfg);

// Writes a header line plus one comma-separated row per matrix row.
void write_feature_matrix(const std::string& path,
                          const std::vector<std::string>& names,
                          const Eigen::MatrixXd& m);

// String-valued categorical vocabulary; id 0 is reserved for values unseen
// at fit time, known values get ids 1.. in lexicographic order.
class CategoricalVocab {
public:
  CategoricalVocab() = default;
  static CategoricalVocab fit(const std::set<std::string>& values);
  static CategoricalVocab from_values(std::vector<std::string> sorted_values);

  int id(const std::string& value) const;
  int size() const { return static_cast<int>(values_.size()) + 1; }
  const std::vector<std::string>& known_values() const { return values_; }

private:
  std::vector<std::string> values_;  // sorted
};

// Everything fitted on the training split that featurization needs:
// normalizers, categorical vocabularies and the user autoencoder. When
// `with_dense` is false only the cheap sequence context (vocabulary ids,
// durations, start month) is attached to samples.
class FeaturePipeline {
public:
  FeaturePipeline() = default;

  static FeaturePipeline fit(const data::TripDataset& train,
                             const data::Vocabulary& vocab, FeatureConfig cfg,
                             std::uint64_t seed, bool with_dense,
                             UserEncoder::Options encoder_opt = {});

  // Reassembly from persisted state (checkpoint loading).
  static FeaturePipeline from_parts(FeatureConfig cfg, bool with_dense,
                                    NormalizationStats user_norm,
                                    NormalizationStats step_norm,
                                    CategoricalVocab device_vocab,
                                    CategoricalVocab booker_vocab,
                                    UserEncoder encoder);

  // Featurizes every trip of `ds`, streaming in first-checkin order so prior
  // counts never look ahead. Output order: (first_checkin, trip_id).
  std::vector<augment::TripSample> featurize(const data::TripDataset& ds,
                                             const data::Vocabulary& vocab) const;

  // Raw user-statistic rows, one per trip of `ds` in (first_checkin, trip_id)
  // order; the matrix the normalizer and autoencoder are fitted on.
  Eigen::MatrixXd user_matrix(const data::TripDataset& ds) const;

  bool with_dense() const { return with_dense_; }
  const FeatureConfig& config() const { return cfg_; }
  const NormalizationStats& user_norm() const { return user_norm_; }
  const NormalizationStats& step_norm() const { return step_norm_; }
  const CategoricalVocab& device_vocab() const { return device_vocab_; }
  const CategoricalVocab& booker_vocab() const { return booker_vocab_; }
  const UserEncoder& encoder() const { return encoder_; }
  UserEncoder& encoder() { return encoder_; }

private:
  FeatureConfig cfg_;
  bool with_dense_ = false;
  NormalizationStats user_norm_;
  NormalizationStats step_norm_;
  CategoricalVocab device_vocab_;
  CategoricalVocab booker_vocab_;
  UserEncoder encoder_;
};

}  // namespace reclab::features
