#include "reclab/features/normalize.hpp"

#include "reclab/common/error.hpp"

namespace reclab::features {

NormalizationStats NormalizationStats::fit(const Mat& train) {
  if (train.rows() == 0) throw InsufficientData("empty feature matrix");
  NormalizationStats s;
  s.mean = train.colwise().mean();
  Mat centered = train.rowwise() - s.mean;
  s.std = (centered.array().square().colwise().mean()).sqrt();
  s.std = s.std.cwiseMax(kStdFloor);
  return s;
}

Mat NormalizationStats::apply(const Mat& features) const {
  if (features.cols() != mean.cols())
    throw DimensionMismatch("feature width vs fitted stats");
  Mat out = features.rowwise() - mean;
  out.array().rowwise() /= std.array();
  return out;
}

}  // namespace reclab::features
