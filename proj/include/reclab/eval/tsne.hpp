#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace reclab::eval {

struct TsneOptions {
  double perplexity = 30.0;  // clamped to (n-1)/3 for small inputs
  int max_iter = 400;
  int exaggeration_iters = 100;
  double exaggeration = 12.0;
  double learning_rate = 200.0;
  std::uint64_t seed = 0;
};

// Exact (O(n^2)) t-distributed stochastic neighbor embedding into 2-D.
// Deterministic for fixed (input, options). Requires n >= 10 (TooFewPoints)
// and finite inputs.
Eigen::MatrixXd tsne_2d(const Eigen::MatrixXd& x, TsneOptions opt = {});

// Projects the vectors, writes an SVG scatter colored by month label (1..12)
// and the raw coordinates as "x,y,month" records — the testable artifact.
Eigen::MatrixXd export_embedding_plot(const Eigen::MatrixXd& vectors,
                                      const std::vector<int>& month_labels,
                                      const std::string& svg_path,
                                      const std::string& coords_path,
                                      TsneOptions opt = {});

}  // namespace reclab::eval
