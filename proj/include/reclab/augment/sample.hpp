#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace reclab::augment {

// A fully featurized trip: aligned per-step arrays plus trip-level context.
// Produced by the feature pipeline; consumed by prefix expansion.
struct TripSample {
  std::string trip_id;
  std::vector<int> cities;        // vocabulary ids, one per reservation
  std::vector<int> countries;     // country ids aligned with cities
  std::vector<int> durations;     // nights spent in each city
  std::vector<Eigen::RowVectorXd> step_dense;  // aligned; may be empty
  int start_month = 1;
  Eigen::RowVectorXd user_dense;      // normalized user statistics (may be empty)
  Eigen::RowVectorXd user_embedding;  // autoencoder latent (may be empty)
  int device_id = 0;
  int booker_id = 0;
};

// One training example: an observed prefix and the city that followed it.
// Per-step arrays stay aligned with `prefix` through every perturbation.
struct PrefixSample {
  std::string trip_id;
  std::vector<int> prefix;        // vocabulary city ids (may contain mask_id)
  std::vector<int> durations;
  std::vector<Eigen::RowVectorXd> step_dense;
  int start_month = 1;
  int label_city = 0;
  int label_country = 0;
  Eigen::RowVectorXd user_dense;
  Eigen::RowVectorXd user_embedding;
  int device_id = 0;
  int booker_id = 0;
};

}  // namespace reclab::augment
