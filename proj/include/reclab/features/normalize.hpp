#pragma once

#include <Eigen/Dense>

namespace reclab::features {

using Mat = Eigen::MatrixXd;

// Per-feature standardization fitted on the training split only.
// Population standard deviation, floored so constant columns map to zero.
struct NormalizationStats {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd std;  // >= kStdFloor

  static constexpr double kStdFloor = 1e-8;

  static NormalizationStats fit(const Mat& train_features);
  Mat apply(const Mat& features) const;
};

}  // namespace reclab::features
