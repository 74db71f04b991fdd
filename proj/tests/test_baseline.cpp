#include <gtest/gtest.h>

#include <cmath>

#include "clignet/baseline.hpp"
#include "clignet/checkpoint.hpp"
#include "clignet/rng.hpp"

using namespace clignet;

namespace {

using Docs = std::vector<std::vector<std::string>>;

SparseRows dense_rows(const Eigen::MatrixXd& m) { return m.sparseView().pruned(0.0); }

double sigmoid_naive(double s) { return 1.0 / (1.0 + std::exp(-s)); }

}  // namespace

TEST(Tfidf, IdfExamples) {
  const Docs train{{"fever", "cough"}, {"fever"}, {"fever", "rash"}};
  const auto m = fit_tfidf(train);
  EXPECT_DOUBLE_EQ(m.idf[static_cast<Eigen::Index>(m.index.at("fever"))], 1.0);
  EXPECT_NEAR(m.idf[static_cast<Eigen::Index>(m.index.at("cough"))], std::log(2.0) + 1.0, 1e-15);
  EXPECT_NEAR(std::log(2.0) + 1.0, 1.6931, 1e-4);
  EXPECT_TRUE(m.index.count("fever cough"));
}

TEST(Tfidf, RowsAreUnitOrZero) {
  const Docs train{{"a", "b", "a"}, {"b", "c"}};
  const auto m = fit_tfidf(train);
  const auto x = transform_tfidf(m, {{"a", "b", "a"}, {}, {"zzz", "yyy"}});
  EXPECT_NEAR(Eigen::VectorXd(x.row(0).transpose()).norm(), 1.0, 1e-15);
  EXPECT_EQ(x.row(1).nonZeros(), 0);
  EXPECT_EQ(x.row(2).nonZeros(), 0);
}

TEST(Tfidf, FeatureCapKeepsMostFrequentThenLexicographic) {
  const Docs train{{"b", "a", "c", "a", "c", "d"}};
  const auto m = fit_tfidf(train, 3);
  // "a", "c" and "a c" each occur twice.
  EXPECT_EQ(m.terms, (std::vector<std::string>{"a", "a c", "c"}));
}

TEST(LogReg, SeparableOneDimensional) {
  Eigen::MatrixXd x(8, 1);
  x << -2, -1.5, -1, -0.5, 0.5, 1, 1.5, 2;
  const std::vector<double> y{0, 0, 0, 0, 1, 1, 1, 1};
  const std::vector<double> w(8, 1.0);
  const auto fit = fit_binary_logreg(dense_rows(x), y, w, {});
  for (Eigen::Index i = 0; i < 8; ++i) {
    EXPECT_EQ(x(i, 0) * fit.w[0] + fit.b > 0.0, y[static_cast<std::size_t>(i)] > 0.5);
  }
  EXPECT_LE(fit.loss, logreg_objective(dense_rows(x), y, w, Eigen::VectorXd::Zero(1), 0.0, 1e-4));
}

TEST(LogReg, ZeroFeaturesFitThePrior) {
  const SparseRows x(10, 3);
  std::vector<double> y(10, 0.0);
  y[0] = y[1] = y[2] = 1.0;
  const auto fit = fit_binary_logreg(x, y, std::vector<double>(10, 1.0), {});
  EXPECT_TRUE(fit.converged);
  EXPECT_TRUE(fit.w.isZero(0.0));
  EXPECT_NEAR(sigmoid_naive(fit.b), 0.3, 1e-6);

  // Balanced weights put the weighted prior at one half.
  const TfidfModel empty;
  const std::vector<int> labels{0, 0, 0, 1, 1, 1, 1, 1, 1, 1};
  const auto ovr = fit_ovr_logreg(empty, SparseRows(10, 0), labels, 2, {});
  const auto p = predict_baseline(ovr, SparseRows(4, 0));
  EXPECT_LE((p.array() - 0.5).abs().maxCoeff(), 1e-6);
}

TEST(LogReg, DoubledWeightsKeepPredictions) {
  Rng rng(1);
  Eigen::MatrixXd x(60, 4);
  std::vector<double> y;
  for (Eigen::Index i = 0; i < 60; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) x(i, j) = rng.normal();
    y.push_back(rng.uniform() < sigmoid_naive(x(i, 0) - 0.5 * x(i, 2)) ? 1.0 : 0.0);
  }
  std::vector<double> w(60), w2(60);
  for (std::size_t i = 0; i < 60; ++i) {
    w[i] = y[i] > 0.5 ? 1.3 : 0.8;
    w2[i] = 2.0 * w[i];
  }
  const auto a = fit_binary_logreg(dense_rows(x), y, w, {});
  const auto b = fit_binary_logreg(dense_rows(x), y, w2, {});
  const Eigen::VectorXd pa = ((x * a.w).array() + a.b).unaryExpr([](double s) { return sigmoid_naive(s); });
  const Eigen::VectorXd pb = ((x * b.w).array() + b.b).unaryExpr([](double s) { return sigmoid_naive(s); });
  EXPECT_LE((pa - pb).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Ovr, NaiveDotProductOracleAndCheckpoint) {
  const Docs train{{"chest", "pain", "cardiac"}, {"knee", "joint"}, {"cardiac", "murmur"}, {"joint", "fracture"},
                   {"chest", "murmur", "cardiac"}};
  const std::vector<int> labels{0, 1, 0, 1, 0};
  const auto tfidf = fit_tfidf(train);
  const SparseRows x = transform_tfidf(tfidf, train);
  const auto ovr = fit_ovr_logreg(tfidf, x, labels, 2, {});
  const Eigen::MatrixXd p = predict_baseline(ovr, x);
  const Eigen::MatrixXd dense = Eigen::MatrixXd(x);
  for (Eigen::Index d = 0; d < 5; ++d) {
    for (Eigen::Index k = 0; k < 2; ++k) {
      double s = ovr.bias[k];
      for (Eigen::Index j = 0; j < dense.cols(); ++j) s += dense(d, j) * ovr.weights(j, k);
      EXPECT_NEAR(p(d, k), sigmoid_naive(s), 1e-12);
    }
    EXPECT_EQ(p(d, 1) > p(d, 0), labels[static_cast<std::size_t>(d)] == 1);
  }
  const auto again = fit_ovr_logreg(tfidf, x, labels, 2, {});
  EXPECT_EQ(again.weights, ovr.weights);
  EXPECT_EQ(again.bias, ovr.bias);

  const auto back = baseline_from_checkpoint(baseline_checkpoint(ovr, "cfg", {"Cardio", "Ortho"}));
  EXPECT_EQ(back.tfidf.terms, tfidf.terms);
  EXPECT_LE((back.weights - ovr.weights).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Ovr, OutOfVocabularyDocumentUsesBias) {
  const Docs train{{"a"}, {"b"}, {"a", "a"}};
  const auto tfidf = fit_tfidf(train);
  const auto ovr = fit_ovr_logreg(tfidf, transform_tfidf(tfidf, train), std::vector<int>{0, 1, 0}, 2, {});
  const Eigen::MatrixXd p = predict_baseline(ovr, transform_tfidf(tfidf, {{"unseen", "words"}}));
  for (Eigen::Index k = 0; k < 2; ++k) EXPECT_DOUBLE_EQ(p(0, k), sigmoid_naive(ovr.bias[k]));
}
