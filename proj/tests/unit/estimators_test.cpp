// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "test_support.hpp"
#include "vistory/errors.hpp"
#include "vistory/estimators.hpp"
#include "vistory/feature_io.hpp"

namespace vistory {
namespace {

struct Regression {
  Eigen::MatrixXd x;
  Eigen::MatrixXd y;
};

Regression linear_problem(std::uint64_t seed, Eigen::Index rows = 200, Eigen::Index cols = 5) {
  Rng rng(seed);
  Regression r;
  r.x.resize(rows, cols);
  for (Eigen::Index i = 0; i < r.x.size(); ++i) r.x.data()[i] = rng.normal();
  Eigen::MatrixXd w(cols, 2);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-1.0, 1.0);
  r.y = r.x * w;
  r.y.col(0).array() += 0.3;
  r.y.col(1).array() -= 0.7;
  for (Eigen::Index i = 0; i < r.y.size(); ++i) r.y.data()[i] += 0.05 * rng.normal();
  return r;
}

const nn::LayerSpec kLinear[] = {{2, nn::Activation::kIdentity}};

TEST(Regressor, LinearModelReachesLeastSquaresOptimum) {
  const auto p = linear_problem(1);
  TrainingConfig cfg;
  cfg.schedule = {{300, 1e-2}, {200, 1e-3}};
  cfg.batch_size = 20;
  const auto trained = train_mlp_regressor(p.x, p.y, kLinear, cfg);

  Eigen::MatrixXd design(p.x.rows(), p.x.cols() + 1);
  design << p.x, Eigen::VectorXd::Ones(p.x.rows());
  const Eigen::MatrixXd coef = design.colPivHouseholderQr().solve(p.y);
  const Eigen::MatrixXd oracle = design * coef;
  const Eigen::MatrixXd fitted = predict(trained.model, p.x);
  EXPECT_LT((fitted - oracle).squaredNorm() / static_cast<double>(fitted.size()), 1e-4);
}

TEST(Regressor, ConstantTargetsAreLearned) {
  auto p = linear_problem(2);
  p.y.col(0).setConstant(0.25);
  p.y.col(1).setConstant(-1.5);
  TrainingConfig cfg;
  cfg.schedule = {{200, 1e-2}, {100, 1e-3}};
  cfg.batch_size = 50;
  const auto trained = train_mlp_regressor(p.x, p.y, kLinear, cfg);
  const auto fitted = predict(trained.model, p.x);
  EXPECT_LT((fitted.col(0).array() - 0.25).abs().maxCoeff(), 1e-2);
  EXPECT_LT((fitted.col(1).array() + 1.5).abs().maxCoeff(), 1e-2);
}

TEST(Regressor, LossTraceCoversEveryEpochAndDecreases) {
  const auto p = linear_problem(3);
  TrainingConfig cfg;
  cfg.schedule = {{30, 1e-3}, {20, 1e-4}};
  const auto arch = default_audio_architecture();
  const auto trained = train_mlp_regressor(p.x, p.y, arch, cfg);
  ASSERT_EQ(trained.loss_trace.size(), 50u);
  EXPECT_LT(trained.loss_trace.back(), trained.loss_trace.front());
  EXPECT_EQ(trained.model.training_meta.at("epochs"), "50");
}

TEST(Regressor, BitIdenticalForSameSeed) {
  const auto p = linear_problem(4);
  TrainingConfig cfg;
  cfg.schedule = {{5, 1e-3}};
  cfg.seed = 9;
  const auto arch = default_audio_architecture();
  const auto a = train_mlp_regressor(p.x, p.y, arch, cfg);
  const auto b = train_mlp_regressor(p.x, p.y, arch, cfg);
  EXPECT_EQ(serialize_regressor(a.model), serialize_regressor(b.model));
  EXPECT_EQ(a.loss_trace, b.loss_trace);
  cfg.seed = 10;
  const auto c = train_mlp_regressor(p.x, p.y, arch, cfg);
  EXPECT_NE(a.loss_trace, c.loss_trace);
}

TEST(Regressor, BatchPredictionMatchesRowByRow) {
  const auto p = linear_problem(5);
  Rng rng(1);
  MlpRegressor model{nn::Mlp::random(5, default_audio_architecture(), rng), {}};
  const auto all = predict(model, p.x);
  for (Eigen::Index r = 0; r < 10; ++r) {
    const auto one = predict(model, p.x.row(r));
    EXPECT_LT((one - all.row(r)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Regressor, MseGradientCheck) {
  Rng rng(6);
  const nn::Mlp mlp = nn::Mlp::random(20, default_audio_architecture(), rng);
  Eigen::MatrixXd x(4, 20), y(4, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.normal();
  EXPECT_LT(gradient_check(mlp, x, [&](const Eigen::MatrixXd& out) { return nn::mse_loss(out, y); }), 1e-4);
}

TEST(Regressor, InputValidation) {
  const auto p = linear_problem(7, 10);
  TrainingConfig cfg;
  EXPECT_THROW(train_mlp_regressor(p.x, p.y, kLinear, cfg), InsufficientDataError);
  cfg.batch_size = 5;
  EXPECT_THROW(train_mlp_regressor(p.x, p.y.leftCols(1), kLinear, cfg), DimensionError);
  EXPECT_THROW(train_mlp_regressor(p.x, p.y.topRows(5), kLinear, cfg), DimensionError);
  cfg.schedule.clear();
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.schedule = {{1, -1.0}};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.schedule = {{1, 1e-3}};
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Regressor, DivergenceIsReported) {
  auto p = linear_problem(8);
  p.y(0, 0) = std::numeric_limits<double>::infinity();
  TrainingConfig cfg;
  cfg.schedule = {{2, 1e-3}};
  EXPECT_THROW(train_mlp_regressor(p.x, p.y, kLinear, cfg), TrainingDivergedError);
}

TEST(Regressor, PersistenceWithinFloatPrecision) {
  testing::TempDir dir;
  Rng rng(2);
  MlpRegressor model{nn::Mlp::random(12, default_audio_architecture(), rng), {{"note", "x"}}};
  save_regressor(dir / "m.json", model);
  const auto back = load_regressor(dir / "m.json");
  EXPECT_EQ(back.training_meta.at("note"), "x");
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 12);
  EXPECT_LT((predict(back, x) - predict(model, x)).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_THROW(load_regressor(dir / "none.json"), ArtifactError);
}

TEST(ZScore, KnownValuesAndInverse) {
  const std::vector<AttributeVector> v{{1.0, 5.0}, {2.0, 5.0}, {3.0, 5.0}};
  const auto stats = compute_zscore_stats(v, ZScoreScope::kDatasetLevel);
  EXPECT_DOUBLE_EQ(stats.mean[0], 2.0);
  EXPECT_DOUBLE_EQ(stats.stddev[0], std::sqrt(2.0 / 3.0));
  EXPECT_DOUBLE_EQ(stats.stddev[1], ZScoreStats::kStdFloor);
  const auto aligned = zscore_align(v, stats);
  EXPECT_NEAR(aligned[0][0], -std::sqrt(1.5), 1e-12);
  EXPECT_EQ(aligned[1][1], 0.0);
  const auto back = zscore_unalign(aligned, stats);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_LT(divergence(back[i], v[i]), 1e-12);
}

TEST(ZScore, AlignedSongHasZeroMeanUnitStd) {
  Rng rng(3);
  std::vector<AttributeVector> song;
  for (int i = 0; i < 60; ++i) song.push_back({rng.normal() * 3.0 + 1.0, rng.uniform(-2.0, 0.0)});
  const auto aligned = zscore_align(song, compute_zscore_stats(song, ZScoreScope::kSongLevel));
  const auto check = compute_zscore_stats(aligned, ZScoreScope::kSongLevel);
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_NEAR(check.mean[j], 0.0, 1e-12);
    EXPECT_NEAR(check.stddev[j], 1.0, 1e-12);
  }
}

TEST(ZScore, SongAndDatasetScopesDiffer) {
  const std::vector<AttributeVector> dataset{{0.0, 0.0}, {2.0, 2.0}, {4.0, 4.0}, {6.0, 6.0}};
  const std::vector<AttributeVector> song{{5.0, 5.0}, {6.0, 6.0}};
  const auto ds = compute_zscore_stats(dataset, ZScoreScope::kDatasetLevel);
  const auto ss = compute_zscore_stats(song, ZScoreScope::kSongLevel);
  EXPECT_NEAR(zscore_align(song, ds)[0][0], (5.0 - 3.0) / std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(zscore_align(song, ss)[0][0], -1.0, 1e-12);
  EXPECT_THROW(compute_zscore_stats(std::span(song.data(), 1), ZScoreScope::kSongLevel), InsufficientDataError);
  EXPECT_THROW(zscore_align(std::vector<AttributeVector>{{1.0}}, ds), DimensionError);
}

TEST(ZScore, StatsSerialization) {
  ZScoreStats s{{0.5, -1.0}, {2.0, 0.25}, ZScoreScope::kSongLevel};
  const auto back = parse_zscore_stats(serialize_zscore_stats(s));
  EXPECT_EQ(back.mean, s.mean);
  EXPECT_EQ(back.stddev, s.stddev);
  EXPECT_EQ(back.scope, ZScoreScope::kSongLevel);
  EXPECT_EQ(zscore_scope_from_string("dataset"), ZScoreScope::kDatasetLevel);
  EXPECT_THROW(zscore_scope_from_string("album"), ConfigError);
}

TEST(AnnotatedDataset, ExpandsSongLabelsToWindows) {
  testing::TempDir dir;
  audio::write_feature_matrix(dir / "a.dsft", Eigen::MatrixXd::Constant(3, 4, 1.0));
  audio::write_feature_matrix(dir / "b.dsft", Eigen::MatrixXd::Constant(2, 4, 2.0));
  testing::write_file(dir / "ann.csv", "id,valence,arousal\na,0.5,-0.5\n\nb, 1.0 , 2.0\n");
  const auto data = load_annotated_dataset(dir / "ann.csv", dir.path());
  ASSERT_EQ(data.features.rows(), 5);
  EXPECT_EQ(data.row_ids, (std::vector<std::string>{"a", "a", "a", "b", "b"}));
  EXPECT_DOUBLE_EQ(data.targets(2, 1), -0.5);
  EXPECT_DOUBLE_EQ(data.targets(4, 1), 2.0);
  EXPECT_DOUBLE_EQ(data.features(4, 0), 2.0);

  testing::write_file(dir / "bad.csv", "name,v,a\na,1,1\n");
  EXPECT_THROW(load_annotated_dataset(dir / "bad.csv", dir.path()), FormatError);
  testing::write_file(dir / "nan.csv", "id,valence,arousal\na,x,1\n");
  EXPECT_THROW(load_annotated_dataset(dir / "nan.csv", dir.path()), FormatError);
  testing::write_file(dir / "gone.csv", "id,valence,arousal\nzz,1,1\n");
  EXPECT_THROW(load_annotated_dataset(dir / "gone.csv", dir.path()), IoError);
}

}  // namespace
}  // namespace vistory
