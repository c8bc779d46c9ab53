#include "reclab/losses/focal.hpp"

#include <cmath>

#include "reclab/common/error.hpp"

namespace reclab::losses {

void FocalParams::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw InvalidConfig("focal alpha outside [0,1]");
  if (!(gamma >= 0.0)) throw InvalidConfig("focal gamma must be >= 0");
}

void CombinedParams::validate() const {
  if (!(beta >= 0.0 && beta <= 1.0))
    throw InvalidConfig("beta outside [0,1]");
  city.validate();
  country.validate();
}

namespace {

void check_simplex(const Mat& p) {
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    double s = p.row(i).sum();
    if (std::abs(s - 1.0) > 1e-5)
      throw NonSimplexInput("row " + std::to_string(i) + " sums to " +
                            std::to_string(s));
  }
}

double true_class_prob(const Mat& p, const std::vector<int>& targets,
                       Eigen::Index i) {
  int t = targets[static_cast<std::size_t>(i)];
  if (t < 0 || t >= p.cols())
    throw InvalidTarget("index " + std::to_string(t) + " out of range");
  return p(i, t);
}

}  // namespace

double focal_loss(const Mat& probabilities, const std::vector<int>& targets,
                  const FocalParams& params) {
  params.validate();
  if (static_cast<Eigen::Index>(targets.size()) != probabilities.rows())
    throw BatchSizeMismatch("targets vs probability rows");
  check_simplex(probabilities);
  double total = 0.0;
  for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
    double pt = std::max(true_class_prob(probabilities, targets, i), kProbFloor);
    total += -params.alpha * std::pow(1.0 - pt, params.gamma) * std::log(pt);
  }
  return total / static_cast<double>(probabilities.rows());
}

double cross_entropy(const Mat& probabilities, const std::vector<int>& targets) {
  if (static_cast<Eigen::Index>(targets.size()) != probabilities.rows())
    throw BatchSizeMismatch("targets vs probability rows");
  check_simplex(probabilities);
  double total = 0.0;
  for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
    double pt = std::max(true_class_prob(probabilities, targets, i), kProbFloor);
    total += -std::log(pt);
  }
  return total / static_cast<double>(probabilities.rows());
}

double combined_loss(const Mat& city_probs, const Mat& country_probs,
                     const std::vector<int>& city_targets,
                     const std::vector<int>& country_targets,
                     const CombinedParams& params) {
  params.validate();
  if (city_probs.rows() != country_probs.rows())
    throw BatchSizeMismatch("city vs country batch");
  double fl_city = focal_loss(city_probs, city_targets, params.city);
  double fl_country = focal_loss(country_probs, country_targets, params.country);
  return params.beta * fl_city + (1.0 - params.beta) * fl_country;
}

}  // namespace reclab::losses
