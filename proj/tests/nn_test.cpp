#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "reclab/common/error.hpp"
#include "reclab/common/rng.hpp"
#include "reclab/nn/graph.hpp"

using namespace reclab;
using nn::Graph;
using nn::Mat;
using nn::Param;
using nn::Var;

namespace {

Mat random_mat(int r, int c, Rng& rng) {
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

// Central finite differences of a scalar-valued builder with respect to one
// parameter, compared against the tape's analytic gradient.
double max_rel_grad_error(
    std::vector<Param*> params,
    const std::function<double(Graph&, bool record)>& build_loss) {
  {
    Graph g;
    build_loss(g, true);
  }
  double worst = 0.0;
  const double eps = 1e-5;
  for (Param* p : params) {
    Mat analytic = p->grad;
    for (int i = 0; i < p->value.rows(); ++i) {
      for (int j = 0; j < p->value.cols(); ++j) {
        double orig = p->value(i, j);
        p->value(i, j) = orig + eps;
        Graph gp;
        double up = build_loss(gp, false);
        p->value(i, j) = orig - eps;
        Graph gm;
        double down = build_loss(gm, false);
        p->value(i, j) = orig;
        double numeric = (up - down) / (2 * eps);
        double denom = std::max({std::abs(numeric), std::abs(analytic(i, j)),
                                 1e-8});
        worst = std::max(worst, std::abs(numeric - analytic(i, j)) / denom);
      }
    }
    p->zero_grad();
  }
  return worst;
}

}  // namespace

TEST_CASE("elementwise and matmul ops match finite differences") {
  Rng rng(1);
  nn::ParamStore store;
  Param& a = store.add("a", random_mat(3, 4, rng));
  Param& b = store.add("b", random_mat(4, 2, rng));
  Param& c = store.add("c", random_mat(3, 2, rng));
  Param& bias = store.add("bias", random_mat(1, 2, rng));
  Param& col = store.add("col", random_mat(3, 1, rng));

  auto build = [&](Graph& g, bool record) {
    Var x = g.matmul(g.param(a), g.param(b));
    x = g.add_rowvec(x, g.param(bias));
    x = g.add(x, g.param(c));
    x = g.sub(x, g.scale(g.param(c), 0.25));
    x = g.cmul(x, g.sigmoid(g.param(c)));
    x = g.mul_colvec(x, g.param(col));
    x = g.tanh_(x);
    x = g.add_scalar(x, 0.3);
    Var loss = g.mean_all(g.cmul(x, x));
    if (record) g.backward(loss);
    return loss->val()(0, 0);
  };
  CHECK(max_rel_grad_error(store.all(), build) < 1e-6);
}

TEST_CASE("matmul_nt computes a*b^T and differentiates") {
  Rng rng(2);
  nn::ParamStore store;
  Param& a = store.add("a", random_mat(3, 5, rng));
  Param& b = store.add("b", random_mat(4, 5, rng));
  {
    Graph g;
    Var out = g.matmul_nt(g.param(a), g.param(b));
    Mat expect = a.value * b.value.transpose();
    CHECK((out->val() - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
  auto build = [&](Graph& g, bool record) {
    Var out = g.matmul_nt(g.param(a), g.param(b));
    Var loss = g.sum_all(g.cmul(out, out));
    if (record) g.backward(loss);
    return loss->val()(0, 0);
  };
  CHECK(max_rel_grad_error(store.all(), build) < 1e-6);

  Graph g;
  Mat bad = Mat::Zero(4, 6);
  CHECK_THROWS_AS(g.matmul_nt(g.param(a), g.constant(bad)), ShapeMismatch);
}

TEST_CASE("softmax rows sum to one and differentiate") {
  Rng rng(3);
  nn::ParamStore store;
  Param& a = store.add("a", random_mat(4, 6, rng));
  {
    Graph g;
    Var s = g.softmax_rows(g.param(a));
    for (int i = 0; i < 4; ++i)
      CHECK(std::abs(s->val().row(i).sum() - 1.0) < 1e-12);
  }
  std::vector<int> targets = {1, 0, 5, 2};
  auto build = [&](Graph& g, bool record) {
    Var s = g.softmax_rows(g.param(a));
    Var loss = g.focal_loss(s, targets, 1.0, 0.0);
    if (record) g.backward(loss);
    return loss->val()(0, 0);
  };
  CHECK(max_rel_grad_error(store.all(), build) < 1e-6);
}

TEST_CASE("additive softmax mask zeroes masked probabilities exactly") {
  Rng rng(4);
  nn::ParamStore store;
  Param& a = store.add("a", random_mat(3, 5, rng));
  Mat mask = Mat::Zero(3, 5);
  mask(0, 3) = -1e30;
  mask(0, 4) = -1e30;
  mask(2, 0) = -1e30;

  Graph g;
  Var s = g.softmax_rows(g.param(a), &mask);
  CHECK(s->val()(0, 3) == 0.0);
  CHECK(s->val()(0, 4) == 0.0);
  CHECK(s->val()(2, 0) == 0.0);
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(s->val().row(i).sum() - 1.0) < 1e-12);

  // masked inputs must also receive zero gradient
  Var loss = g.sum_all(g.cmul(s, s));
  g.backward(loss);
  CHECK(a.grad(0, 3) == 0.0);
  CHECK(a.grad(0, 4) == 0.0);
  CHECK(a.grad(2, 0) == 0.0);
  a.zero_grad();

  // and the unmasked entries still match finite differences
  auto build = [&](Graph& gg, bool record) {
    Var ss = gg.softmax_rows(gg.param(a), &mask);
    Var l = gg.sum_all(gg.cmul(ss, ss));
    if (record) gg.backward(l);
    return l->val()(0, 0);
  };
  CHECK(max_rel_grad_error(store.all(), build) < 1e-6);
}

TEST_CASE("gather_rows selects rows and scatter-adds gradients") {
  Rng rng(5);
  nn::ParamStore store;
  Param& table = store.add("t", random_mat(6, 3, rng));
  std::vector<int> rows = {2, 2, 0, 5};
  {
    Graph g;
    Var out = g.gather_rows(g.param(table), rows);
    REQUIRE(out->val().rows() == 4);
    CHECK((out->val().row(0) - table.value.row(2)).cwiseAbs().maxCoeff() == 0);
    CHECK((out->val().row(1) - table.value.row(2)).cwiseAbs().maxCoeff() == 0);
    CHECK((out->val().row(3) - table.value.row(5)).cwiseAbs().maxCoeff() == 0);

    // duplicate indices must accumulate: d(sum)/d(table[2]) = 2
    Var loss = g.sum_all(out);
    g.backward(loss);
    CHECK(table.grad(2, 0) == 2.0);
    CHECK(table.grad(0, 0) == 1.0);
    CHECK(table.grad(1, 0) == 0.0);  // untouched row
    table.zero_grad();
  }
  auto build = [&](Graph& g, bool record) {
    Var out = g.gather_rows(g.param(table), rows);
    Var loss = g.mean_all(g.cmul(out, out));
    if (record) g.backward(loss);
    return loss->val()(0, 0);
  };
  CHECK(max_rel_grad_error(store.all(), build) < 1e-6);
}

TEST_CASE("concat slice rowdot differentiate") {
  Rng rng(6);
  nn::ParamStore store;
  Param& a = store.add("a", random_mat(3, 2, rng));
  Param& b = store.add("b", random_mat(3, 4, rng));
  Param& c = store.add("c", random_mat(3, 6, rng));
  {
    Graph g;
    Var cat = g.concat_cols({g.param(a), g.param(b)});
    REQUIRE(cat->val().cols() == 6);
    CHECK((cat->val().leftCols(2) - a.value).cwiseAbs().maxCoeff() == 0);
    Var sl = g.slice_cols(cat, 2, 4);
    CHECK((sl->val() - b.value).cwiseAbs().maxCoeff() == 0);
  }
  auto build = [&](Graph& g, bool record) {
    Var cat = g.concat_cols({g.param(a), g.param(b)});
    Var d = g.rowdot(cat, g.param(c));  // 3x1
    Var loss = g.mean_all(g.cmul(d, d));
    if (record) g.backward(loss);
    return loss->val()(0, 0);
  };
  CHECK(max_rel_grad_error(store.all(), build) < 1e-6);
}

TEST_CASE("focal loss analytic values") {
  // FL(p_t; alpha=1, gamma=3) = -(1-p_t)^3 log(p_t)
  Graph g;
  Mat probs(2, 2);
  probs << 0.5, 0.5, 0.25, 0.75;
  Var p = g.constant(probs);
  Var l = g.focal_loss(p, {0, 1}, 1.0, 3.0);
  double expect0 = -std::pow(0.5, 3) * std::log(0.5);
  double expect1 = -std::pow(0.25, 3) * std::log(0.75);
  CHECK(l->val()(0, 0) == doctest::Approx((expect0 + expect1) / 2).epsilon(1e-12));

  // perfect prediction -> zero loss
  Graph g2;
  Mat perfect(1, 3);
  perfect << 0.0, 1.0, 0.0;
  Var l2 = g2.focal_loss(g2.constant(perfect), {1}, 1.0, 3.0);
  CHECK(l2->val()(0, 0) == 0.0);
}

TEST_CASE("focal loss validates targets") {
  Graph g;
  Mat probs(1, 3);
  probs << 0.2, 0.3, 0.5;
  CHECK_THROWS_AS(g.focal_loss(g.constant(probs), {3}, 1.0, 0.0), InvalidTarget);
  CHECK_THROWS_AS(g.focal_loss(g.constant(probs), {-1}, 1.0, 0.0),
                  InvalidTarget);
}

TEST_CASE("focal loss gradient matches finite differences across gammas") {
  Rng rng(7);
  nn::ParamStore store;
  Param& a = store.add("a", random_mat(5, 7, rng));
  std::vector<int> targets = {0, 6, 3, 3, 1};
  for (double gamma : {0.0, 1.0, 3.0}) {
    auto build = [&](Graph& g, bool record) {
      Var s = g.softmax_rows(g.param(a));
      Var loss = g.focal_loss(s, targets, 0.8, gamma);
      if (record) g.backward(loss);
      return loss->val()(0, 0);
    };
    CHECK(max_rel_grad_error(store.all(), build) < 1e-6);
  }
}

TEST_CASE("dropout scales kept entries and is disabled on request") {
  Rng rng(8);
  nn::ParamStore store;
  Param& a = store.add("a", Mat::Ones(50, 40));
  Graph g;
  Rng drop_rng(123);
  Var d = g.dropout(g.param(a), 0.25, drop_rng, true);
  int kept = 0, zeros = 0;
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 40; ++j) {
      double v = d->val()(i, j);
      if (v == 0.0) {
        ++zeros;
      } else {
        CHECK(v == doctest::Approx(1.0 / 0.75));
        ++kept;
      }
    }
  CHECK(kept + zeros == 2000);
  CHECK(std::abs(zeros / 2000.0 - 0.25) < 0.05);

  Graph g2;
  Rng r2(123);
  Var same = g2.dropout(g2.param(a), 0.25, r2, false);
  CHECK((same->val() - a.value).cwiseAbs().maxCoeff() == 0.0);
  (void)rng;
}

TEST_CASE("backward accumulates through shared subexpressions") {
  // loss = sum(x*x + x) -> d/dx = 2x + 1
  nn::ParamStore store;
  Mat init(2, 2);
  init << 1.0, -2.0, 0.5, 3.0;
  Param& x = store.add("x", init);
  Graph g;
  Var xv = g.param(x);
  Var loss = g.sum_all(g.add(g.cmul(xv, xv), xv));
  g.backward(loss);
  Mat expect = 2.0 * init + Mat::Ones(2, 2);
  CHECK((x.grad - expect).cwiseAbs().maxCoeff() < 1e-12);
}
