#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "emvqm/error.hpp"
#include "emvqm/evaluation.hpp"
#include "emvqm/svr.hpp"

using namespace emvqm;

namespace {

struct LinearData {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
};

LinearData linear_data(const std::vector<double>& w, double b, int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LinearData d;
  for (int i = 0; i < n; ++i) {
    std::vector<double> x(w.size());
    double y = b;
    for (std::size_t j = 0; j < w.size(); ++j) {
      x[j] = u(rng);
      y += w[j] * x[j];
    }
    d.x.push_back(std::move(x));
    d.y.push_back(y);
  }
  return d;
}

std::vector<double> random_weights(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<double> w(d);
  for (double& v : w) v = g(rng);
  return w;
}

double test_pcc(const SvrModel& m, const LinearData& test) {
  std::vector<double> pred;
  for (const auto& x : test.x) pred.push_back(svr_predict(m, x));
  return correlation_stats(pred, test.y).pcc;
}

}  // namespace

TEST(Svr, ConstantTargets) {
  std::mt19937_64 rng(3);
  const auto d = linear_data(std::vector<double>(7, 0.0), 4.25, 30, rng);
  const SvrModel m = svr_train(d.x, d.y);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> x(7);
    for (double& v : x) v = u(rng);
    EXPECT_NEAR(svr_predict(m, x), 4.25, m.epsilon + 1e-6);
  }
}

TEST(Svr, NoiselessLinear120D) {
  std::mt19937_64 rng(11);
  const auto w = random_weights(120, rng);
  const auto train = linear_data(w, 0.5, 200, rng);
  const auto test = linear_data(w, 0.5, 200, rng);
  const SvrModel def = svr_train(train.x, train.y);
  EXPECT_GE(test_pcc(def, test), 0.995);

  SvrParams tight;
  tight.epsilon = 0.01;
  const SvrModel m = svr_train(train.x, train.y, tight);
  EXPECT_GE(test_pcc(m, test), 0.999);
  // Training points sit inside the tube up to the regularisation slack.
  for (std::size_t i = 0; i < train.x.size(); ++i)
    EXPECT_NEAR(svr_predict(m, train.x[i]), train.y[i], tight.epsilon + 0.01) << i;
}

TEST(Svr, GridSearchPicksAWorkingSetting) {
  std::mt19937_64 rng(5);
  const auto w = random_weights(120, rng);
  const auto train = linear_data(w, -1.0, 200, rng);
  const auto test = linear_data(w, -1.0, 200, rng);
  const SvrParams p = select_svr_params(train.x, train.y);
  EXPECT_EQ(p.epsilon, 0.01);
  EXPECT_GE(test_pcc(svr_train(train.x, train.y, p), test), 0.999);
}

TEST(Svr, DuplicatedTrainingSetGivesSameModel) {
  std::mt19937_64 rng(8);
  const auto w = random_weights(10, rng);
  auto d = linear_data(w, 1.0, 40, rng);
  std::normal_distribution<double> noise(0.0, 0.3);
  for (double& y : d.y) y += noise(rng);
  const SvrModel a = svr_train(d.x, d.y);
  LinearData twice;
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    twice.x.push_back(d.x[i]);
    twice.y.push_back(d.y[i]);
    twice.x.push_back(d.x[i]);
    twice.y.push_back(d.y[i]);
  }
  const SvrModel b = svr_train(twice.x, twice.y);
  ASSERT_EQ(a.weights.size(), b.weights.size());
  for (std::size_t j = 0; j < a.weights.size(); ++j) EXPECT_NEAR(a.weights[j], b.weights[j], 1e-9);
  EXPECT_NEAR(a.bias, b.bias, 1e-9);
  // Same input, same bits.
  const SvrModel c = svr_train(d.x, d.y);
  EXPECT_EQ(a.weights, c.weights);
  EXPECT_EQ(a.bias, c.bias);
}

TEST(Svr, DualObjectiveNeverIncreases) {
  std::mt19937_64 rng(21);
  const auto w = random_weights(30, rng);
  auto d = linear_data(w, 0.0, 80, rng);
  std::normal_distribution<double> noise(0.0, 0.5);
  for (double& y : d.y) y += noise(rng);
  std::vector<double> trace;
  svr_train(d.x, d.y, {}, &trace);
  ASSERT_GT(trace.size(), 2u);
  for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] + 1e-12) << i;
}

TEST(Svr, OptimalityAgainstPerturbedParameters) {
  // Primal objective written out on scaled, centred features with a
  // regularised intercept: f(x) = mean(y) + b + w . (z(x) - mean z).
  std::mt19937_64 rng(4);
  const auto w = random_weights(3, rng);
  auto d = linear_data(w, 2.0, 25, rng);
  std::normal_distribution<double> noise(0.0, 0.4);
  for (double& y : d.y) y += noise(rng);
  SvrParams p;
  p.tolerance = 1e-10;
  const SvrModel m = svr_train(d.x, d.y, p);

  auto scaled = [&](const std::vector<double>& x, int j) {
    return (x[j] - m.scale_min[j]) / (m.scale_max[j] - m.scale_min[j]);
  };
  std::vector<double> center(3, 0.0);
  double y_mean = 0.0;
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    for (int j = 0; j < 3; ++j) center[j] += scaled(d.x[i], j) / 25.0;
    y_mean += d.y[i] / 25.0;
  }
  auto primal = [&](const std::vector<double>& wt, double b) {
    double obj = 0.5 * b * b;
    for (double v : wt) obj += 0.5 * v * v;
    for (std::size_t i = 0; i < d.x.size(); ++i) {
      double f = y_mean + b;
      for (int j = 0; j < 3; ++j) f += wt[j] * (scaled(d.x[i], j) - center[j]);
      obj += p.c * std::max(0.0, std::abs(d.y[i] - f) - p.epsilon);
    }
    return obj;
  };
  double b0 = m.bias - y_mean;
  for (int j = 0; j < 3; ++j) b0 += m.weights[j] * center[j];
  const double best = primal(m.weights, b0);
  std::normal_distribution<double> step(0.0, 0.05);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> wt = m.weights;
    for (double& v : wt) v += step(rng);
    EXPECT_GE(primal(wt, b0 + step(rng)), best - 1e-6);
  }
}

TEST(SvrPredict, ZeroWeightsAndClamping) {
  SvrModel m;
  m.weights = {0.0, 0.0};
  m.bias = 3.0;
  m.scale_min = {0.0, 0.0};
  m.scale_max = {1.0, 1.0};
  EXPECT_EQ(svr_predict(m, std::vector<double>{123.0, -5.0}), 3.0);

  m.weights = {2.0, -1.0};
  m.bias = 0.0;
  // 10x beyond the training max clamps to 1.5 after scaling.
  EXPECT_DOUBLE_EQ(svr_predict(m, std::vector<double>{10.0, 0.0}), 3.0);
  EXPECT_DOUBLE_EQ(svr_predict(m, std::vector<double>{-1e300, 1e300}), -1.0 - 1.5);
  EXPECT_TRUE(std::isfinite(svr_predict(m, std::vector<double>{1e308, 1e308})));
  EXPECT_THROW(svr_predict(m, std::vector<double>{1.0}), DataError);
}

TEST(SvrPredict, DegenerateDimensionScalesToZero) {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (int i = 0; i < 10; ++i) {
    x.push_back({static_cast<double>(i), 7.0});
    y.push_back(static_cast<double>(i));
  }
  const SvrModel m = svr_train(x, y);
  EXPECT_EQ(m.scale_min[1], m.scale_max[1]);
  EXPECT_EQ(svr_predict(m, std::vector<double>{4.0, 7.0}), svr_predict(m, std::vector<double>{4.0, -100.0}));
}

TEST(Svr, Errors) {
  std::vector<std::vector<double>> x(4, std::vector<double>{1.0});
  std::vector<double> y(4, 1.0);
  try {
    svr_train(x, y);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_STREQ(e.what(), "insufficient training data");
  }
  x.resize(6, {1.0});
  EXPECT_THROW(svr_train(x, y), DataError);
  y.resize(6, 1.0);
  x[3] = {1.0, 2.0};
  EXPECT_THROW(svr_train(x, y), DataError);
  SvrParams p;
  p.c = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
}
