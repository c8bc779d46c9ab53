#include "reclab/train/optimizer.hpp"

#include <cmath>

#include "reclab/common/error.hpp"

namespace reclab::train {

void RAdam::step(std::vector<nn::Param*> params) {
  ++t_;
  const double b1 = opt_.beta1;
  const double b2 = opt_.beta2;
  const double t = static_cast<double>(t_);
  const double b1t = std::pow(b1, t);
  const double b2t = std::pow(b2, t);
  const double rho_inf = 2.0 / (1.0 - b2) - 1.0;
  const double rho_t = rho_inf - 2.0 * t * b2t / (1.0 - b2t);

  double rect = 0.0;
  const bool rectified = rho_t > 4.0;
  if (rectified)
    rect = std::sqrt(((rho_t - 4.0) * (rho_t - 2.0) * rho_inf) /
                     ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t));

  for (nn::Param* p : params) {
    auto [it, fresh] = state_.try_emplace(p->name);
    Moments& st = it->second;
    if (fresh) {
      st.m = nn::Mat::Zero(p->value.rows(), p->value.cols());
      st.v = nn::Mat::Zero(p->value.rows(), p->value.cols());
    }
    if (st.m.rows() != p->value.rows() || st.m.cols() != p->value.cols())
      throw ShapeMismatch("optimizer state for " + p->name);

    st.m = b1 * st.m + (1.0 - b1) * p->grad;
    st.v = b2 * st.v + (1.0 - b2) * p->grad.cwiseProduct(p->grad);
    nn::Mat m_hat = st.m / (1.0 - b1t);

    if (rectified) {
      nn::Mat denom = (st.v / (1.0 - b2t)).cwiseSqrt().array() + opt_.epsilon;
      p->value.array() -=
          opt_.learning_rate * rect * m_hat.array() / denom.array();
    } else {
      p->value -= opt_.learning_rate * m_hat;
    }
    if (opt_.weight_decay > 0.0)
      p->value -= opt_.learning_rate * opt_.weight_decay * p->value;
    p->zero_grad();
  }
}

void RAdam::reset() {
  state_.clear();
  t_ = 0;
}

double clip_global_norm(std::vector<nn::Param*> params, double max_norm) {
  double sq = 0.0;
  for (nn::Param* p : params) sq += p->grad.squaredNorm();
  double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    double scale = max_norm / norm;
    for (nn::Param* p : params) p->grad *= scale;
  }
  return norm;
}

}  // namespace reclab::train
