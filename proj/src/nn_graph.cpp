#include "reclab/nn/graph.hpp"

#include <algorithm>
#include <cmath>

#include "reclab/common/error.hpp"

namespace reclab::nn {

Param& ParamStore::add(const std::string& name, Mat value) {
  for (auto& p : params_)
    if (p->name == name) throw InvalidConfig("duplicate param " + name);
  params_.push_back(std::make_unique<Param>(name, std::move(value)));
  return *params_.back();
}

Param& ParamStore::get(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return *p;
  throw InvalidConfig("unknown param " + name);
}

const Param& ParamStore::get(const std::string& name) const {
  for (auto& p : params_)
    if (p->name == name) return *p;
  throw InvalidConfig("unknown param " + name);
}

bool ParamStore::has(const std::string& name) const {
  for (auto& p : params_)
    if (p->name == name) return true;
  return false;
}

std::vector<Param*> ParamStore::all() {
  std::vector<Param*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Param*> ParamStore::all() const {
  std::vector<const Param*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

void ParamStore::zero_grads() {
  for (auto& p : params_) p->zero_grad();
}

Var Graph::make(Mat value, bool needs_grad) {
  auto n = std::make_unique<Node>();
  n->owned = std::move(value);
  n->needs_grad = needs_grad;
  nodes_.push_back(std::move(n));
  return nodes_.back().get();
}

Var Graph::constant(Mat m) { return make(std::move(m), false); }

Var Graph::param(Param& p) {
  auto n = std::make_unique<Node>();
  n->external = &p.value;
  n->needs_grad = true;
  Node* raw = n.get();
  n->backward = [raw, &p]() { p.grad += raw->grad; };
  nodes_.push_back(std::move(n));
  return nodes_.back().get();
}

Var Graph::matmul(Var a, Var b) {
  if (a->val().cols() != b->val().rows())
    throw ShapeMismatch("matmul inner dims");
  Var out = make(a->val() * b->val(), a->needs_grad || b->needs_grad);
  if (out->needs_grad)
    out->backward = [out, a, b]() {
      if (a->needs_grad) {
        a->ensure_grad();
        a->grad.noalias() += out->grad * b->val().transpose();
      }
      if (b->needs_grad) {
        b->ensure_grad();
        b->grad.noalias() += a->val().transpose() * out->grad;
      }
    };
  return out;
}

Var Graph::matmul_nt(Var a, Var b) {
  if (a->val().cols() != b->val().cols())
    throw ShapeMismatch("matmul_nt inner dims");
  Var out =
      make(a->val() * b->val().transpose(), a->needs_grad || b->needs_grad);
  if (out->needs_grad)
    out->backward = [out, a, b]() {
      if (a->needs_grad) {
        a->ensure_grad();
        a->grad.noalias() += out->grad * b->val();
      }
      if (b->needs_grad) {
        b->ensure_grad();
        b->grad.noalias() += out->grad.transpose() * a->val();
      }
    };
  return out;
}

Var Graph::add(Var a, Var b) {
  if (a->val().rows() != b->val().rows() || a->val().cols() != b->val().cols())
    throw ShapeMismatch("add shapes");
  Var out = make(a->val() + b->val(), a->needs_grad || b->needs_grad);
  if (out->needs_grad)
    out->backward = [out, a, b]() {
      if (a->needs_grad) {
        a->ensure_grad();
        a->grad += out->grad;
      }
      if (b->needs_grad) {
        b->ensure_grad();
        b->grad += out->grad;
      }
    };
  return out;
}

Var Graph::sub(Var a, Var b) {
  Var out = make(a->val() - b->val(), a->needs_grad || b->needs_grad);
  if (out->needs_grad)
    out->backward = [out, a, b]() {
      if (a->needs_grad) {
        a->ensure_grad();
        a->grad += out->grad;
      }
      if (b->needs_grad) {
        b->ensure_grad();
        b->grad -= out->grad;
      }
    };
  return out;
}

Var Graph::add_rowvec(Var a, Var bias) {
  if (bias->val().rows() != 1 || bias->val().cols() != a->val().cols())
    throw ShapeMismatch("add_rowvec bias shape");
  Mat v = a->val();
  v.rowwise() += bias->val().row(0);
  Var out = make(std::move(v), a->needs_grad || bias->needs_grad);
  if (out->needs_grad)
    out->backward = [out, a, bias]() {
      if (a->needs_grad) {
        a->ensure_grad();
        a->grad += out->grad;
      }
      if (bias->needs_grad) {
        bias->ensure_grad();
        bias->grad.row(0) += out->grad.colwise().sum();
      }
    };
  return out;
}

Var Graph::mul_colvec(Var a, Var col) {
  if (col->val().cols() != 1 || col->val().rows() != a->val().rows())
    throw ShapeMismatch("mul_colvec col shape");
  Mat v = a->val().array().colwise() * col->val().col(0).array();
  Var out = make(std::move(v), a->needs_grad || col->needs_grad);
  if (out->needs_grad)
    out->backward = [out, a, col]() {
      if (a->needs_grad) {
        a->ensure_grad();
        a->grad.array() +=
            out->grad.array().colwise() * col->val().col(0).array();
      }
      if (col->needs_grad) {
        col->ensure_grad();
        col->grad.col(0) +=
            (out->grad.array() * a->val().array()).rowwise().sum().matrix();
      }
    };
  return out;
}

Var Graph::cmul(Var a, Var b) {
  if (a->val().rows() != b->val().rows() || a->val().cols() != b->val().cols())
    throw ShapeMismatch("cmul shapes");
  Var out = make(a->val().cwiseProduct(b->val()), a->needs_grad || b->needs_grad);
  if (out->needs_grad)
    out->backward = [out, a, b]() {
      if (a->needs_grad) {
        a->ensure_grad();
        a->grad += out->grad.cwiseProduct(b->val());
      }
      if (b->needs_grad) {
        b->ensure_grad();
        b->grad += out->grad.cwiseProduct(a->val());
      }
    };
  return out;
}

Var Graph::scale(Var a, double k) {
  Var out = make(a->val() * k, a->needs_grad);
  if (out->needs_grad)
    out->backward = [out, a, k]() {
      a->ensure_grad();
      a->grad += out->grad * k;
    };
  return out;
}

Var Graph::add_scalar(Var a, double k) {
  Var out = make(a->val().array() + k, a->needs_grad);
  if (out->needs_grad)
    out->backward = [out, a]() {
      a->ensure_grad();
      a->grad += out->grad;
    };
  return out;
}

Var Graph::sigmoid(Var a) {
  Mat v = (1.0 / (1.0 + (-a->val().array()).exp())).matrix();
  Var out = make(std::move(v), a->needs_grad);
  if (out->needs_grad)
    out->backward = [out, a]() {
      a->ensure_grad();
      a->grad.array() += out->grad.array() * out->val().array() *
                         (1.0 - out->val().array());
    };
  return out;
}

Var Graph::tanh_(Var a) {
  Mat v = a->val().array().tanh().matrix();
  Var out = make(std::move(v), a->needs_grad);
  if (out->needs_grad)
    out->backward = [out, a]() {
      a->ensure_grad();
      a->grad.array() +=
          out->grad.array() * (1.0 - out->val().array().square());
    };
  return out;
}

Var Graph::softmax_rows(Var a, const Mat* additive_mask) {
  Mat z = a->val();
  if (additive_mask) {
    if (z.rows() != additive_mask->rows() || z.cols() != additive_mask->cols())
      throw ShapeMismatch("softmax mask shape");
    z += *additive_mask;
  }
  Mat v(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    double mx = z.row(i).maxCoeff();
    Eigen::ArrayXd e = (z.row(i).array() - mx).exp();
    v.row(i) = (e / e.sum()).matrix();
  }
  Var out = make(std::move(v), a->needs_grad);
  if (out->needs_grad)
    out->backward = [out, a]() {
      a->ensure_grad();
      const Mat& s = out->val();
      for (Eigen::Index i = 0; i < s.rows(); ++i) {
        double dot = out->grad.row(i).dot(s.row(i));
        a->grad.row(i).array() +=
            (out->grad.row(i).array() - dot) * s.row(i).array();
      }
    };
  return out;
}

Var Graph::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeMismatch("concat of nothing");
  Eigen::Index rows = parts[0]->val().rows();
  Eigen::Index cols = 0;
  bool needs = false;
  for (Var p : parts) {
    if (p->val().rows() != rows) throw ShapeMismatch("concat row mismatch");
    cols += p->val().cols();
    needs = needs || p->needs_grad;
  }
  Mat v(rows, cols);
  Eigen::Index off = 0;
  for (Var p : parts) {
    v.middleCols(off, p->val().cols()) = p->val();
    off += p->val().cols();
  }
  Var out = make(std::move(v), needs);
  if (needs) {
    std::vector<Var> ps = parts;
    out->backward = [out, ps]() {
      Eigen::Index off2 = 0;
      for (Var p : ps) {
        if (p->needs_grad) {
          p->ensure_grad();
          p->grad += out->grad.middleCols(off2, p->val().cols());
        }
        off2 += p->val().cols();
      }
    };
  }
  return out;
}

Var Graph::slice_cols(Var a, int offset, int n) {
  if (offset < 0 || offset + n > a->val().cols())
    throw ShapeMismatch("slice out of range");
  Var out = make(a->val().middleCols(offset, n), a->needs_grad);
  if (out->needs_grad)
    out->backward = [out, a, offset, n]() {
      a->ensure_grad();
      a->grad.middleCols(offset, n) += out->grad;
    };
  return out;
}

Var Graph::gather_rows(Var table, std::vector<int> rows) {
  const Mat& t = table->val();
  Mat v(static_cast<Eigen::Index>(rows.size()), t.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= t.rows())
      throw ShapeMismatch("gather row out of range");
    v.row(static_cast<Eigen::Index>(i)) = t.row(rows[i]);
  }
  Var out = make(std::move(v), table->needs_grad);
  if (out->needs_grad) {
    out->backward = [out, table, rows = std::move(rows)]() {
      table->ensure_grad();
      for (std::size_t i = 0; i < rows.size(); ++i)
        table->grad.row(rows[i]) += out->grad.row(static_cast<Eigen::Index>(i));
    };
  }
  return out;
}

Var Graph::rowdot(Var a, Var b) {
  if (a->val().rows() != b->val().rows() || a->val().cols() != b->val().cols())
    throw ShapeMismatch("rowdot shapes");
  Mat v = (a->val().array() * b->val().array()).rowwise().sum().matrix();
  Var out = make(std::move(v), a->needs_grad || b->needs_grad);
  if (out->needs_grad)
    out->backward = [out, a, b]() {
      if (a->needs_grad) {
        a->ensure_grad();
        a->grad.array() += b->val().array().colwise() * out->grad.col(0).array();
      }
      if (b->needs_grad) {
        b->ensure_grad();
        b->grad.array() += a->val().array().colwise() * out->grad.col(0).array();
      }
    };
  return out;
}

Var Graph::mean_all(Var a) {
  Mat v(1, 1);
  v(0, 0) = a->val().mean();
  Var out = make(std::move(v), a->needs_grad);
  if (out->needs_grad)
    out->backward = [out, a]() {
      a->ensure_grad();
      a->grad.array() += out->grad(0, 0) / static_cast<double>(a->val().size());
    };
  return out;
}

Var Graph::sum_all(Var a) {
  Mat v(1, 1);
  v(0, 0) = a->val().sum();
  Var out = make(std::move(v), a->needs_grad);
  if (out->needs_grad)
    out->backward = [out, a]() {
      a->ensure_grad();
      a->grad.array() += out->grad(0, 0);
    };
  return out;
}

Var Graph::dropout(Var a, double rate, Rng& rng, bool enabled) {
  if (!enabled || rate <= 0.0) return a;
  double keep = 1.0 - rate;
  Mat mask(a->val().rows(), a->val().cols());
  for (Eigen::Index i = 0; i < mask.rows(); ++i)
    for (Eigen::Index j = 0; j < mask.cols(); ++j)
      mask(i, j) = rng.uniform() < keep ? 1.0 / keep : 0.0;
  Var out = make(a->val().cwiseProduct(mask), a->needs_grad);
  if (out->needs_grad)
    out->backward = [out, a, mask = std::move(mask)]() {
      a->ensure_grad();
      a->grad += out->grad.cwiseProduct(mask);
    };
  return out;
}

Var Graph::focal_loss(Var probs, std::vector<int> targets, double alpha,
                      double gamma, double floor) {
  const Mat& p = probs->val();
  if (static_cast<Eigen::Index>(targets.size()) != p.rows())
    throw BatchSizeMismatch("targets vs probability rows");
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    int t = targets[static_cast<std::size_t>(i)];
    if (t < 0 || t >= p.cols()) throw InvalidTarget("index out of range");
    double pt = std::max(p(i, t), floor);
    total += -alpha * std::pow(1.0 - pt, gamma) * std::log(pt);
  }
  Mat v(1, 1);
  double n = static_cast<double>(p.rows());
  v(0, 0) = total / n;
  Var out = make(std::move(v), probs->needs_grad);
  if (out->needs_grad)
    out->backward = [out, probs, targets = std::move(targets), alpha, gamma,
                     floor]() {
      probs->ensure_grad();
      const Mat& pv = probs->val();
      double n2 = static_cast<double>(pv.rows());
      double g = out->grad(0, 0);
      for (Eigen::Index i = 0; i < pv.rows(); ++i) {
        int t = targets[static_cast<std::size_t>(i)];
        double pt = pv(i, t);
        if (pt < floor) continue;  // clamped region is flat
        double om = 1.0 - pt;
        double d = -alpha * std::pow(om, gamma) / pt;
        if (gamma > 0.0 && om > 0.0)
          d += alpha * gamma * std::pow(om, gamma - 1.0) * std::log(pt);
        probs->grad(i, t) += g * d / n2;
      }
    };
  return out;
}

void Graph::backward(Var loss) {
  if (loss->val().rows() != 1 || loss->val().cols() != 1)
    throw ShapeMismatch("backward expects a scalar loss");
  loss->grad = Mat::Ones(1, 1);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node* n = it->get();
    if (n->needs_grad && n->grad.size() != 0 && n->backward) n->backward();
  }
}

}  // namespace reclab::nn
