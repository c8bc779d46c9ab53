#include "reclab/eval/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "reclab/common/csv.hpp"
#include "reclab/common/error.hpp"
#include "reclab/common/hash.hpp"
#include "reclab/common/rng.hpp"

namespace reclab::eval {

namespace {

// Conditional distribution row with the precision tuned so the entropy
// matches log(perplexity).
Eigen::VectorXd binary_search_row(const Eigen::VectorXd& sq_dist,
                                  Eigen::Index self, double perplexity) {
  double target = std::log(perplexity);
  double beta = 1.0, beta_lo = 0.0, beta_hi = 1e12;
  Eigen::VectorXd p(sq_dist.size());
  for (int iter = 0; iter < 64; ++iter) {
    double sum = 0.0, dot = 0.0;
    for (Eigen::Index j = 0; j < sq_dist.size(); ++j) {
      if (j == self) {
        p(j) = 0.0;
        continue;
      }
      p(j) = std::exp(-beta * sq_dist(j));
      sum += p(j);
      dot += p(j) * sq_dist(j);
    }
    if (sum <= 0) {
      beta = beta_lo;  // degenerate: all mass collapsed; relax
      for (Eigen::Index j = 0; j < sq_dist.size(); ++j)
        p(j) = j == self ? 0.0 : 1.0;
      p /= p.sum();
      return p;
    }
    double entropy = std::log(sum) + beta * dot / sum;
    p /= sum;
    double diff = entropy - target;
    if (std::abs(diff) < 1e-7) break;
    if (diff > 0) {
      beta_lo = beta;
      beta = beta_hi >= 1e12 ? beta * 2 : (beta + beta_hi) / 2;
    } else {
      beta_hi = beta;
      beta = (beta + beta_lo) / 2;
    }
  }
  return p;
}

}  // namespace

Eigen::MatrixXd tsne_2d(const Eigen::MatrixXd& x, TsneOptions opt) {
  auto n = x.rows();
  if (n < 10) throw TooFewPoints("need at least 10 points, got " +
                                 std::to_string(n));
  if (!x.allFinite()) throw MalformedInput("non-finite embedding input");
  double perplexity = std::min(opt.perplexity, static_cast<double>(n - 1) / 3.0);
  perplexity = std::max(perplexity, 2.0);

  // Symmetrized affinities.
  Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double d = (x.row(i) - x.row(j)).squaredNorm();
      sq(i, j) = d;
      sq(j, i) = d;
    }
  Eigen::MatrixXd p(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    p.row(i) = binary_search_row(sq.row(i), i, perplexity).transpose();
  Eigen::MatrixXd psym = (p + p.transpose()) / (2.0 * static_cast<double>(n));
  psym = psym.cwiseMax(1e-12);

  Rng rng(seed_stream({opt.seed, fnv1a("tsne_init")}));
  Eigen::MatrixXd y(n, 2);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int d = 0; d < 2; ++d) y(i, d) = rng.normal() * 1e-2;

  Eigen::MatrixXd vel = Eigen::MatrixXd::Zero(n, 2);
  Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(n, 2);
  for (int iter = 0; iter < opt.max_iter; ++iter) {
    double exaggeration = iter < opt.exaggeration_iters ? opt.exaggeration : 1.0;
    // Student-t affinities in the plane.
    Eigen::MatrixXd num(n, n);
    double qsum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      num(i, i) = 0.0;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        double d = 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
        num(i, j) = d;
        num(j, i) = d;
        qsum += 2.0 * d;
      }
    }
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(n, 2);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        double q = std::max(num(i, j) / qsum, 1e-12);
        double mult = (exaggeration * psym(i, j) - q) * num(i, j);
        grad.row(i) += 4.0 * mult * (y.row(i) - y.row(j));
      }
    double momentum = iter < 250 ? 0.5 : 0.8;
    for (Eigen::Index i = 0; i < n; ++i)
      for (int d = 0; d < 2; ++d) {
        bool same_sign = (grad(i, d) > 0) == (vel(i, d) > 0);
        gains(i, d) = std::max(0.01, same_sign ? gains(i, d) * 0.8
                                               : gains(i, d) + 0.2);
        vel(i, d) = momentum * vel(i, d) -
                    opt.learning_rate * gains(i, d) * grad(i, d);
        y(i, d) += vel(i, d);
      }
    y.rowwise() -= y.colwise().mean();
  }
  return y;
}

Eigen::MatrixXd export_embedding_plot(const Eigen::MatrixXd& vectors,
                                      const std::vector<int>& month_labels,
                                      const std::string& svg_path,
                                      const std::string& coords_path,
                                      TsneOptions opt) {
  if (month_labels.size() != static_cast<std::size_t>(vectors.rows()))
    throw DimensionMismatch("one month label per vector required");
  Eigen::MatrixXd y = tsne_2d(vectors, opt);

  std::ostringstream coords;
  coords << "x,y,month\n";
  coords.precision(17);
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    coords << y(i, 0) << ',' << y(i, 1) << ','
           << month_labels[static_cast<std::size_t>(i)] << '\n';
  write_text_file(coords_path, coords.str());

  // Scatter plot; one fixed color per month.
  static const char* kPalette[12] = {
      "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
      "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78"};
  double xmin = y.col(0).minCoeff(), xmax = y.col(0).maxCoeff();
  double ymin = y.col(1).minCoeff(), ymax = y.col(1).maxCoeff();
  double xspan = std::max(xmax - xmin, 1e-9);
  double yspan = std::max(ymax - ymin, 1e-9);
  const double size = 640.0, pad = 40.0;
  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << size
      << "' height='" << size << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n";
  svg.precision(6);
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    double px = pad + (y(i, 0) - xmin) / xspan * (size - 2 * pad);
    double py = size - pad - (y(i, 1) - ymin) / yspan * (size - 2 * pad);
    int month = month_labels[static_cast<std::size_t>(i)];
    const char* color =
        (month >= 1 && month <= 12) ? kPalette[month - 1] : "#000000";
    svg << "<circle cx='" << px << "' cy='" << py
        << "' r='3' fill='" << color << "' fill-opacity='0.7'/>\n";
  }
  svg << "</svg>\n";
  write_text_file(svg_path, svg.str());
  return y;
}

}  // namespace reclab::eval
