#pragma once

#include <map>
#include <string>
#include <vector>

#include "reclab/nn/graph.hpp"

namespace reclab::train {

// Rectified adaptive-moment optimizer with decoupled weight decay.
// The variance-rectification factor is applied once the approximated
// simple-moving-average length rho_t exceeds 4; before that the update is
// plain bias-corrected momentum.
class RAdam {
public:
  struct Options {
    double learning_rate = 0.001;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
  };

  RAdam() = default;
  explicit RAdam(Options opt) : opt_(opt) {}

  // Applies one update from p.grad and clears the gradient.
  void step(std::vector<nn::Param*> params);

  void reset();
  long step_count() const { return t_; }
  const Options& options() const { return opt_; }

private:
  struct Moments {
    nn::Mat m;
    nn::Mat v;
  };
  Options opt_;
  std::map<std::string, Moments> state_;
  long t_ = 0;
};

// Scales gradients so their global L2 norm is at most max_norm.
// Returns the pre-clip norm.
double clip_global_norm(std::vector<nn::Param*> params, double max_norm);

}  // namespace reclab::train
