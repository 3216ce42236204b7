#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <doctest.h>

#include "webvln/autodiff.hpp"
#include "webvln/rng.hpp"

using namespace webvln;
using Mat = Matrix<double>;
using Tape = ad::Tape<double>;
using ad::Var;

namespace {

Mat random_mat(Rng& rng, int r, int c) {
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = 2.0 * uniform01(rng) - 1.0;
  return m;
}

// Builds a scalar from parameter leaves; returns the largest relative error
// between backprop and central differences over every coordinate.
double check(std::vector<Mat> params, const std::function<Var(Tape&, const std::vector<Var>&)>& f) {
  auto eval = [&](const std::vector<Mat>& ps) {
    Tape tape(ps.size());
    std::vector<Var> vs;
    for (std::size_t i = 0; i < ps.size(); ++i) vs.push_back(tape.parameter(i, ps[i]));
    return tape.scalar(f(tape, vs));
  };
  Tape tape(params.size());
  std::vector<Var> vs;
  for (std::size_t i = 0; i < params.size(); ++i) vs.push_back(tape.parameter(i, params[i]));
  Var out = f(tape, vs);
  tape.backward(out);
  std::vector<Mat> grads;
  for (const auto& p : params) grads.push_back(Mat::Zero(p.rows(), p.cols()));
  tape.for_each_param_grad([&](std::size_t i, const Mat& g) { grads[i] = g; });

  double worst = 0;
  const double eps = 1e-6;
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (Eigen::Index k = 0; k < params[i].size(); ++k) {
      const double orig = params[i].data()[k];
      params[i].data()[k] = orig + eps;
      const double up = eval(params);
      params[i].data()[k] = orig - eps;
      const double down = eval(params);
      params[i].data()[k] = orig;
      const double numeric = (up - down) / (2 * eps);
      const double analytic = grads[i].data()[k];
      const double denom = std::max({std::fabs(numeric), std::fabs(analytic), 1e-6});
      worst = std::max(worst, std::fabs(numeric - analytic) / denom);
    }
  }
  return worst;
}

// Weighted sum so that every output coordinate matters.
Var weighted(Tape& t, Var x, Rng& rng) {
  // Copies: adding nodes may reallocate the tape.
  const auto rows = t.value(x).rows();
  const auto cols = t.value(x).cols();
  Var w = t.constant(random_mat(rng, static_cast<int>(cols), 1));
  Var y = t.matmul(x, w);  // rows x 1
  Var ones = t.constant(Mat::Ones(1, rows));
  return t.matmul(ones, y);
}

}  // namespace

TEST_SUITE("autodiff") {
  TEST_CASE("matmul, matmul_nt, add, add_row, scale") {
    Rng rng(1);
    Rng wr(2);
    const double e = check({random_mat(rng, 3, 4), random_mat(rng, 4, 2), random_mat(rng, 5, 4),
                            random_mat(rng, 3, 2), random_mat(rng, 1, 2)},
                           [&](Tape& t, const std::vector<Var>& p) {
                             Rng r = wr;
                             Var a = t.matmul(p[0], p[1]);
                             Var b = t.matmul_nt(p[0], p[2]);   // 3 x 5
                             Var c = t.add_row(t.add(a, p[3]), p[4]);
                             Var d = t.scale(c, 0.7);
                             Var parts[] = {weighted(t, d, r), weighted(t, b, r)};
                             return t.sum(parts);
                           });
    CHECK(e < 1e-6);
  }

  TEST_CASE("gelu and layer_norm") {
    Rng rng(3);
    Rng wr(4);
    const double e = check({random_mat(rng, 3, 6), random_mat(rng, 1, 6), random_mat(rng, 1, 6)},
                           [&](Tape& t, const std::vector<Var>& p) {
                             Rng r = wr;
                             return weighted(t, t.gelu(t.layer_norm(p[0], p[1], p[2])), r);
                           });
    CHECK(e < 1e-6);
  }

  TEST_CASE("masked softmax") {
    Rng rng(5);
    Rng wr(6);
    Mat mask = Mat::Zero(3, 4);
    mask(0, 3) = -std::numeric_limits<double>::infinity();
    mask(2, 0) = -std::numeric_limits<double>::infinity();
    const double e = check({random_mat(rng, 3, 4)}, [&](Tape& t, const std::vector<Var>& p) {
      Rng r = wr;
      return weighted(t, t.softmax(p[0], &mask), r);
    });
    CHECK(e < 1e-6);
    Tape t;
    Var s = t.softmax(t.constant(Mat::Zero(3, 4)), &mask);
    CHECK(t.value(s)(0, 3) == 0.0);
    CHECK(t.value(s)(0, 0) == doctest::Approx(1.0 / 3.0));
    CHECK(t.value(s).row(1).sum() == doctest::Approx(1.0));
  }

  TEST_CASE("nll and gather") {
    Rng rng(7);
    const std::vector<int> ids{2, 0, 2, 1};
    const std::vector<int> targets{1, 0, 3, 3};
    const double e = check({random_mat(rng, 3, 5), random_mat(rng, 5, 4)}, [&](Tape& t, const std::vector<Var>& p) {
      Var emb = t.gather(p[0], ids);  // 4 x 5
      return t.nll(t.matmul(emb, p[1]), targets);
    });
    CHECK(e < 1e-6);
  }

  TEST_CASE("rows, cols, concat and mean_rows") {
    Rng rng(9);
    Rng wr(10);
    const double e = check({random_mat(rng, 4, 3), random_mat(rng, 2, 3), random_mat(rng, 4, 2)},
                           [&](Tape& t, const std::vector<Var>& p) {
                             Rng r = wr;
                             Var rs[] = {t.rows(p[0], 1, 2), p[1]};
                             Var stacked = t.concat_rows(rs);  // 4 x 3
                             Var cs[] = {stacked, t.cols(p[2], 1, 1)};
                             Var wide = t.concat_cols(cs);     // 4 x 4
                             Var parts[] = {weighted(t, wide, r), weighted(t, t.mean_rows(p[0]), r)};
                             return t.sum(parts);
                           });
    CHECK(e < 1e-6);
  }

  TEST_CASE("nll of a uniform row is ln(n)") {
    Tape t;
    const std::vector<int> target{2};
    Var l = t.nll(t.constant(Mat::Zero(1, 10)), target);
    CHECK(t.scalar(l) == doctest::Approx(std::log(10.0)));
  }

  TEST_CASE("nll rejects out-of-range targets") {
    Tape t;
    const std::vector<int> target{4};
    CHECK_THROWS_AS(t.nll(t.constant(Mat::Zero(1, 4)), target), Error);
  }

  TEST_CASE("a parameter used twice accumulates both paths") {
    Tape t(1);
    Mat x(1, 1);
    x(0, 0) = 3.0;
    Var p = t.parameter(0, x);
    Var again = t.parameter(0, x);
    CHECK(again.id == p.id);
    Var y = t.matmul(p, p);  // x^2
    t.backward(y);
    double g = 0;
    t.for_each_param_grad([&](std::size_t, const Mat& m) { g = m(0, 0); });
    CHECK(g == doctest::Approx(6.0));
  }

  TEST_CASE("constants receive no gradient") {
    Tape t(1);
    Var c = t.constant(Mat::Ones(2, 2));
    Var p = t.parameter(0, Mat::Ones(2, 2));
    Var y = t.matmul(t.matmul(c, p), t.constant(Mat::Ones(2, 1)));
    Var ones = t.constant(Mat::Ones(1, 2));
    t.backward(t.matmul(ones, y));
    CHECK(t.grad(c).size() == 0);
    CHECK(t.grad(p).size() == 4);
  }

  TEST_CASE("gelu derivative matches its value function") {
    for (double x : {-3.0, -0.5, 0.0, 0.3, 2.0}) {
      const double h = 1e-6;
      const double numeric = (Tape::gelu_value(x + h) - Tape::gelu_value(x - h)) / (2 * h);
      CHECK(Tape::gelu_derivative(x) == doctest::Approx(numeric).epsilon(1e-7));
    }
  }
}
