#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "reclab/common/rng.hpp"

namespace reclab::nn {

using Mat = Eigen::MatrixXd;

// Named learnable tensor. Gradients persist across a batch's backward pass
// and are consumed (and zeroed) by the optimizer.
struct Param {
  std::string name;
  Mat value;
  Mat grad;

  Param(std::string n, Mat v)
      : name(std::move(n)), value(std::move(v)),
        grad(Mat::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }
};

class ParamStore {
public:
  Param& add(const std::string& name, Mat value);
  Param& get(const std::string& name);
  const Param& get(const std::string& name) const;
  bool has(const std::string& name) const;
  std::vector<Param*> all();
  std::vector<const Param*> all() const;
  void zero_grads();
  std::size_t size() const { return params_.size(); }

private:
  std::vector<std::unique_ptr<Param>> params_;
};

// One value in the computation tape. Parameter leaves reference external
// storage; every other node owns its value.
struct Node {
  Mat owned;
  const Mat* external = nullptr;
  Mat grad;
  bool needs_grad = false;
  std::function<void()> backward;

  const Mat& val() const { return external ? *external : owned; }
  void ensure_grad() {
    if (grad.size() == 0) grad = Mat::Zero(val().rows(), val().cols());
  }
};

using Var = Node*;

// Reverse-mode tape over Eigen matrices. Nodes are created in topological
// order; backward() walks them in reverse. One Graph instance per batch.
class Graph {
public:
  Var constant(Mat m);
  Var param(Param& p);

  Var matmul(Var a, Var b);
  Var matmul_nt(Var a, Var b);              // a * b^T
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var add_rowvec(Var a, Var bias);          // bias: 1 x n
  Var mul_colvec(Var a, Var col);           // col:  m x 1, broadcast over columns
  Var cmul(Var a, Var b);
  Var scale(Var a, double k);
  Var add_scalar(Var a, double k);
  Var sigmoid(Var a);
  Var tanh_(Var a);
  Var softmax_rows(Var a, const Mat* additive_mask = nullptr);
  Var concat_cols(const std::vector<Var>& parts);
  Var slice_cols(Var a, int offset, int n);
  Var gather_rows(Var table, std::vector<int> rows);
  Var rowdot(Var a, Var b);                 // m x 1 row-wise inner products
  Var mean_all(Var a);
  Var sum_all(Var a);
  Var dropout(Var a, double rate, Rng& rng, bool enabled);

  // Mean over rows of -alpha * (1 - p_t)^gamma * log(max(p_t, floor)).
  Var focal_loss(Var probs, std::vector<int> targets, double alpha,
                 double gamma, double floor = 1e-12);

  void backward(Var loss);

  std::size_t node_count() const { return nodes_.size(); }

private:
  Var make(Mat value, bool needs_grad);
  std::vector<std::unique_ptr<Node>> nodes_;
};

}  // namespace reclab::nn
