#pragma once

#include <Eigen/Dense>
#include <vector>

namespace reclab::losses {

using Mat = Eigen::MatrixXd;

// FL(p) = -alpha * (1 - p)^gamma * log(p), evaluated at the probability of
// the true class and averaged over the batch.
struct FocalParams {
  double alpha = 1.0;  // in [0,1]
  double gamma = 3.0;  // >= 0

  void validate() const;
};

struct CombinedParams {
  double beta = 0.5;  // city weight; country gets 1 - beta
  FocalParams city;
  FocalParams country;

  void validate() const;
};

inline constexpr double kProbFloor = 1e-12;

// `probabilities`: one simplex row per sample (validated to 1e-5);
// `targets`: true-class column index per row.
double focal_loss(const Mat& probabilities, const std::vector<int>& targets,
                  const FocalParams& params);

double cross_entropy(const Mat& probabilities, const std::vector<int>& targets);

// beta * FL(city) + (1 - beta) * FL(country).
double combined_loss(const Mat& city_probs, const Mat& country_probs,
                     const std::vector<int>& city_targets,
                     const std::vector<int>& country_targets,
                     const CombinedParams& params);

}  // namespace reclab::losses
