#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "clignet/config.hpp"
#include "clignet/corpus.hpp"
#include "clignet/errors.hpp"
#include "clignet/optim.hpp"
#include "clignet/pipeline.hpp"
#include "clignet/synth.hpp"
#include "clignet/trainer.hpp"
#include "test_util.hpp"

using namespace clignet;
using namespace clignet::testing;

namespace {

double max_abs_diff(const ModelParams& a, const ModelParams& b) {
  auto x = const_cast<ModelParams&>(a).blocks();
  auto y = const_cast<ModelParams&>(b).blocks();
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, (x[i].values - y[i].values).cwiseAbs().maxCoeff());
  return worst;
}

Network small_network(std::uint64_t seed, std::size_t k, std::size_t buckets) {
  Rng rng(seed);
  NetworkConfig cfg{6, 5, 4, k, 0.3, true};
  Network net(cfg, random_a_hat(rng, static_cast<Eigen::Index>(k)), random_matrix(rng, static_cast<Eigen::Index>(k), 6));
  net.initialize(rng, buckets);
  randomize(net.params(), rng);
  return net;
}

std::vector<DocInput> hashed_docs(Rng& rng, std::size_t n, std::size_t buckets) {
  std::vector<DocInput> docs(n);
  for (auto& d : docs) {
    for (std::uint32_t b = 0; b < buckets; ++b) {
      if (rng.bernoulli(0.3)) {
        d.features.index.push_back(b);
        d.features.value.push_back(rng.normal());
      }
    }
  }
  return docs;
}

// Planted-vocabulary corpus run through cleaning, splitting and the reference encoder.
struct SyntheticTask {
  Corpus corpus;
  SplitAssignment split;
  ModelInputs inputs;
  std::vector<int> labels;
  RunConfig config;
};

SyntheticTask synthetic_task(std::size_t classes, std::size_t docs) {
  SynthOptions o;
  o.classes = classes;
  o.documents = docs;
  o.min_words = 40;
  o.max_words = 200;
  SyntheticTask t;
  t.corpus = clean(parse_records(synth_csv(o)));
  t.split = stratified_split(t.corpus, {0.70, 0.15, 0.15}, 42);
  t.config.dim = 32;
  t.config.hash_buckets = 2048;
  t.config.d1 = 16;
  t.config.d2 = 8;
  t.inputs = build_inputs(t.config, t.corpus);
  for (const auto& r : t.corpus.records) t.labels.push_back(r.label);
  return t;
}

TrainConfig fast_config() {
  TrainConfig tc;
  tc.lr_encoder = 5e-3;
  tc.lr_head = 5e-3;
  tc.batch_size = 16;
  tc.accumulation_steps = 1;
  tc.focal = {2.0, ClassWeights::uniform(3)};
  return tc;
}

Network task_network(const SyntheticTask& t) {
  const auto k = static_cast<Eigen::Index>(t.corpus.num_labels());
  Network net(network_config(t.config, t.corpus.num_labels()), Eigen::MatrixXd::Identity(k, k),
              Eigen::MatrixXd::Identity(k, static_cast<Eigen::Index>(t.config.dim)));
  Rng rng(42);
  net.initialize(rng, t.config.hash_buckets);
  return net;
}

}  // namespace

TEST(Schedule, BoundaryValues) {
  const double peak = 1e-3;
  EXPECT_EQ(lr_schedule(0, 100, peak, 0.1), 0.0);
  EXPECT_DOUBLE_EQ(lr_schedule(5, 100, peak, 0.1), peak / 2);
  EXPECT_DOUBLE_EQ(lr_schedule(10, 100, peak, 0.1), peak);
  EXPECT_NEAR(lr_schedule(55, 100, peak, 0.1), peak / 2, 1e-18);
  EXPECT_EQ(lr_schedule(100, 100, peak, 0.1), 0.0);
  // floor(0.1 * 25) = 2 warmup steps
  EXPECT_DOUBLE_EQ(lr_schedule(2, 25, peak, 0.1), peak);
  EXPECT_DOUBLE_EQ(lr_schedule(1, 25, peak, 0.1), peak / 2);
}

TEST(AdamW, ZeroGradientNoDecayIsIdentity) {
  Eigen::VectorXd theta = Eigen::Vector3d(1, -2, 3), m = Eigen::VectorXd::Zero(3), v = Eigen::VectorXd::Zero(3);
  const Eigen::VectorXd before = theta;
  adamw_update(theta, Eigen::VectorXd::Zero(3), m, v, 1, 0.1, 0.0);
  EXPECT_EQ(theta, before);
}

TEST(AdamW, FirstStepHandEvaluation) {
  Eigen::VectorXd theta = Eigen::Vector3d(1, -2, 3), m = Eigen::VectorXd::Zero(3), v = Eigen::VectorXd::Zero(3);
  const Eigen::Vector3d g(0.5, -4.0, 1e-3);
  const double lr = 0.01, wd = 0.1;
  Eigen::VectorXd expect = Eigen::Vector3d(1, -2, 3) * (1 - lr * wd);
  for (int i = 0; i < 3; ++i) expect[i] -= lr * g[i] / (std::abs(g[i]) + 1e-8);
  adamw_update(theta, g, m, v, 1, lr, wd);
  EXPECT_LE((theta - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(AdamW, MinimizesSquare) {
  Eigen::VectorXd x = Eigen::VectorXd::Ones(1), m = Eigen::VectorXd::Zero(1), v = Eigen::VectorXd::Zero(1);
  for (std::uint64_t t = 1; t <= 100; ++t) adamw_update(x, 2.0 * x, m, v, t, 0.1, 0.0);
  EXPECT_LT(std::abs(x[0]), 0.05);
}

TEST(AdamW, HeadBiasIsNotDecayed) {
  Network net = small_network(1, 3, 0);
  ModelParams grads = net.params().zeros_like(false);
  AdamW opt(net.params());
  const Eigen::VectorXd bias = net.params().fusion.head_b;
  const Eigen::MatrixXd w = net.params().fusion.head_w;
  opt.step(net.params(), grads, 0.0, 0.5, 0.1);
  EXPECT_EQ(net.params().fusion.head_b, bias);
  EXPECT_LE((net.params().fusion.head_w - 0.95 * w).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Clip, Examples) {
  ModelParams g;
  g.fusion.head_b = Eigen::Vector2d(0.3, 0.4);
  EXPECT_DOUBLE_EQ(clip_gradients(g, 1.0), 0.5);
  EXPECT_EQ(g.fusion.head_b, Eigen::Vector2d(0.3, 0.4));
  g.fusion.head_b = Eigen::Vector2d(3, 4);
  EXPECT_DOUBLE_EQ(clip_gradients(g, 1.0), 5.0);
  EXPECT_LE((g.fusion.head_b - Eigen::Vector2d(0.6, 0.8)).norm(), 1e-15);
  g.fusion.head_b = Eigen::Vector2d::Zero();
  EXPECT_EQ(clip_gradients(g, 1.0), 0.0);
  EXPECT_TRUE(g.fusion.head_b.isZero(0.0));
}

TEST(Clip, GlobalNormAcrossBlocks) {
  ModelParams g;
  g.gcn.w0 = Eigen::MatrixXd::Constant(1, 1, 3.0);
  g.fusion.head_b = Eigen::VectorXd::Constant(1, 4.0);
  clip_gradients(g, 1.0);
  EXPECT_NEAR(g.gcn.w0(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(g.fusion.head_b[0], 0.8, 1e-15);
}

TEST(Accumulation, TwoMicroBatchesEqualOneBatch) {
  Network net = small_network(2, 5, 20);
  Rng rng(3);
  const auto docs = hashed_docs(rng, 32, 20);
  std::vector<int> labels;
  for (int i = 0; i < 32; ++i) labels.push_back(static_cast<int>(rng.below(5)));
  const FocalConfig focal{2.0, ClassWeights::uniform(5)};

  auto whole = batch_gradient(net, docs, labels, focal, Pass::differentiate, nullptr);
  const std::span<const DocInput> d(docs);
  const std::span<const int> l(labels);
  auto first = batch_gradient(net, d.subspan(0, 16), l.subspan(0, 16), focal, Pass::differentiate, nullptr);
  auto second = batch_gradient(net, d.subspan(16), l.subspan(16), focal, Pass::differentiate, nullptr);
  first.grads.add_scaled(second.grads, 1.0);
  EXPECT_NEAR(first.loss_sum + second.loss_sum, whole.loss_sum, 1e-12);
  EXPECT_LE(max_abs_diff(first.grads, whole.grads), 1e-12);

  ModelParams p1 = net.params(), p2 = net.params();
  for (auto* g : {&whole.grads, &first.grads}) {
    for (auto& b : g->blocks()) b.values /= 32.0;
  }
  AdamW o1(p1), o2(p2);
  clip_gradients(whole.grads, 1.0);
  clip_gradients(first.grads, 1.0);
  o1.step(p1, whole.grads, 1e-3, 1e-3, 0.01);
  o2.step(p2, first.grads, 1e-3, 1e-3, 0.01);
  EXPECT_LE(max_abs_diff(p1, p2), 1e-10);
}

TEST(Train, FrozenModelStopsAfterPatience) {
  SyntheticTask t = synthetic_task(3, 60);
  Network net = task_network(t);
  TrainConfig tc = fast_config();
  tc.lr_encoder = tc.lr_head = 0.0;
  const auto train_ids = t.split.ids(Split::train);
  const auto val_ids = t.split.ids(Split::val);
  const auto r = train(net, {t.inputs.docs, t.labels, train_ids, val_ids}, tc);
  EXPECT_EQ(r.log.size(), 6u);
  EXPECT_EQ(r.best_epoch, 1u);
  EXPECT_TRUE(net.trained());
}

TEST(Train, SeparableTaskDeterministicAndNeverWorseThanBest) {
  SyntheticTask t = synthetic_task(3, 200);
  const auto train_ids = t.split.ids(Split::train);
  const auto val_ids = t.split.ids(Split::val);
  const TrainingData data{t.inputs.docs, t.labels, train_ids, val_ids};

  Network a = task_network(t);
  const auto ra = train(a, data, fast_config());
  EXPECT_GE(ra.best_val_macro_f1, 0.95);
  EXPECT_LE(ra.best_epoch, 30u);
  for (const auto& e : ra.log) EXPECT_LE(e.val_macro_f1, ra.best_val_macro_f1);
  EXPECT_EQ(ra.steps, ra.log.size() * steps_per_epoch(train_ids.size(), 16, 1));

  // The returned parameters reproduce the best validation score.
  std::vector<int> val_labels;
  for (auto id : val_ids) val_labels.push_back(t.labels[id]);
  const Eigen::MatrixXd prob = predict_logits(a, t.inputs.docs, val_ids).unaryExpr([](double v) { return sigmoid(v); });
  EXPECT_EQ(macro_f1(binarize(prob, Eigen::VectorXd::Constant(3, 0.5)), val_labels), ra.best_val_macro_f1);

  Network b = task_network(t);
  const auto rb = train(b, data, fast_config());
  ASSERT_EQ(ra.log.size(), rb.log.size());
  const auto dir = std::filesystem::temp_directory_path();
  write_training_log(ra.log, dir / "clignet_log_a.csv");
  write_training_log(rb.log, dir / "clignet_log_b.csv");
  std::ifstream fa(dir / "clignet_log_a.csv"), fb(dir / "clignet_log_b.csv");
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(max_abs_diff(a.params(), b.params()), 0.0);
}

TEST(Train, NonFiniteLossAborts) {
  SyntheticTask t = synthetic_task(3, 60);
  Network net = task_network(t);
  net.params().fusion.head_b[0] = std::numeric_limits<double>::quiet_NaN();
  const auto train_ids = t.split.ids(Split::train);
  const auto val_ids = t.split.ids(Split::val);
  EXPECT_THROW(train(net, {t.inputs.docs, t.labels, train_ids, val_ids}, fast_config()), NumericError);
}

TEST(Train, StepsPerEpochCountsPartialAccumulation) {
  EXPECT_EQ(steps_per_epoch(32, 16, 2), 1u);
  EXPECT_EQ(steps_per_epoch(33, 16, 2), 2u);
  EXPECT_EQ(steps_per_epoch(3476, 16, 2), 109u);
}
