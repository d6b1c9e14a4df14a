// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "vistory/errors.hpp"
#include "vistory/translator.hpp"

namespace vistory {
namespace {

AttributeView hand_view(const std::vector<SamplePair>& pairs) {
  AttributeView view;
  view.smoothed_pairs = pairs;
  for (const auto& p : pairs) view.retained_categories.push_back(p.generator.class_id());
  std::sort(view.retained_categories.begin(), view.retained_categories.end());
  view.retained_categories.erase(std::unique(view.retained_categories.begin(), view.retained_categories.end()),
                                 view.retained_categories.end());
  return view;
}

// Four classes at the corners of the attribute square, each with its own latent.
AttributeView corner_view() {
  return hand_view({{{1, {0.5, -0.5}}, {-1.5, -1.5}},
                    {{3, {-0.5, 0.5}}, {1.5, -1.5}},
                    {{4, {1.0, 1.0}}, {-1.5, 1.5}},
                    {{6, {0.0, -1.0}}, {1.5, 1.5}}});
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

TEST(Translator, ArchitectureAndSoftmax) {
  const auto model = make_translator(2, 10, 5, {7, 3, 3}, 1);
  EXPECT_EQ(model.trunk.layers().size(), 2u);
  EXPECT_EQ(model.trunk.layers()[0].outputs(), 64);
  EXPECT_EQ(model.trunk.layers()[1].outputs(), 256);
  EXPECT_EQ(model.num_classes(), 10u);
  EXPECT_EQ(model.latent_dim(), 5u);
  EXPECT_EQ(model.retained_classes, (std::vector<ClassId>{3, 7}));
  Rng rng(2);
  const auto out = forward(model, random_matrix(20, 2, rng));
  for (Eigen::Index r = 0; r < 20; ++r) EXPECT_NEAR(out.probabilities.row(r).sum(), 1.0, 1e-12);
  EXPECT_GT(out.hidden.minCoeff(), 0.0);
  EXPECT_LT(out.hidden.maxCoeff(), 1.0);
  EXPECT_THROW(make_translator(2, 10, 5, {10}, 1), DomainError);
  EXPECT_THROW(make_translator(2, 10, 5, {}, 1), ConfigError);
}

TEST(Translator, CompositeLossValue) {
  const auto model = make_translator(2, 4, 3, {0, 1, 2, 3}, 3);
  Rng rng(4);
  const Eigen::MatrixXd x = random_matrix(5, 2, rng);
  const Eigen::MatrixXd z = random_matrix(5, 3, rng);
  const std::vector<ClassId> y{0, 1, 2, 3, 1};
  const auto out = forward(model, x);
  const auto loss = composite_loss(out, y, z, 0.7);
  double ce = 0.0;
  for (std::size_t i = 0; i < 5; ++i) ce -= std::log(out.probabilities(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(y[i])));
  ce /= 5.0;
  const double l2 = (out.latents - z).rowwise().squaredNorm().mean();
  EXPECT_NEAR(loss.cross_entropy, ce, 1e-12);
  EXPECT_NEAR(loss.latent_error, l2, 1e-12);
  EXPECT_NEAR(loss.value, ce + 0.7 * l2, 1e-12);
}

TEST(Translator, GradientsMatchFiniteDifferences) {
  const auto model = make_translator(2, 5, 3, {0, 1, 2, 3, 4}, 5);
  Rng rng(6);
  const Eigen::MatrixXd x = random_matrix(6, 2, rng);
  const Eigen::MatrixXd z = random_matrix(6, 3, rng);
  const std::vector<ClassId> y{0, 4, 2, 2, 1, 3};
  EXPECT_LT(translator_gradient_check(model, x, y, z, 1.0), 1e-4);
  EXPECT_LT(translator_gradient_check(model, x, y, z, 0.0), 1e-4);
  EXPECT_LT(translator_gradient_check(model, x, y, z, 5.0), 1e-4);
}

TEST(Translator, MemorisesASinglePair) {
  const auto view = hand_view({{{2, {0.3, -0.7, 1.1}}, {0.4, -0.2}}});
  TranslatorConfig cfg;
  cfg.epochs = 400;
  cfg.learning_rate = 1e-2;
  const auto trained = train_translator(view, 4, cfg);
  const auto g = translate_all(trained.model, std::vector<AttributeVector>{{0.4, -0.2}}).front();
  EXPECT_EQ(g.class_id(), 2u);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(g.latent()[j], view.smoothed_pairs[0].generator.latent()[j], 1e-2);
  EXPECT_LT(trained.loss_trace.back(), 1e-3);
}

TEST(Translator, SeparatedTargetsAreClassifiedPerfectly) {
  const auto view = corner_view();
  TranslatorConfig cfg;
  cfg.epochs = 600;
  cfg.learning_rate = 1e-2;
  const auto trained = train_translator(view, 8, cfg);
  std::vector<AttributeVector> attrs;
  for (const auto& p : view.smoothed_pairs) attrs.push_back(p.attributes);
  const auto gens = translate_all(trained.model, attrs);
  for (std::size_t i = 0; i < gens.size(); ++i) {
    EXPECT_EQ(gens[i].class_id(), view.smoothed_pairs[i].generator.class_id());
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(gens[i].latent()[j], view.smoothed_pairs[i].generator.latent()[j], 0.05);
  }
}

TEST(Translator, TrainingLowersTheLoss) {
  const auto view = corner_view();
  TranslatorConfig cfg;
  cfg.epochs = 50;
  const auto trained = train_translator(view, 8, cfg);
  ASSERT_EQ(trained.loss_trace.size(), 50u);
  EXPECT_LT(trained.loss_trace.back(), trained.loss_trace.front());
  EXPECT_EQ(trained.model.training_meta.at("batch_size"), "4");
}

TEST(Translator, ZeroLatentWeightLeavesLatentHeadUntouched) {
  const auto view = corner_view();
  TranslatorConfig cfg;
  cfg.epochs = 20;
  cfg.latent_loss_weight = 0.0;
  const auto initial = make_translator(2, 8, 2, view.retained_categories, cfg.seed);
  const auto trained = train_translator(view, 8, cfg);
  EXPECT_TRUE(trained.model.latent_head.weights == initial.latent_head.weights);
  EXPECT_TRUE(trained.model.latent_head.bias == initial.latent_head.bias);
  EXPECT_FALSE(trained.model.class_head.weights == initial.class_head.weights);
}

TEST(Translator, TrainingIsDeterministic) {
  const auto view = corner_view();
  TranslatorConfig cfg;
  cfg.epochs = 10;
  cfg.batch_size = 3;
  cfg.seed = 4;
  const auto a = train_translator(view, 8, cfg);
  const auto b = train_translator(view, 8, cfg);
  EXPECT_EQ(serialize_translator(a.model), serialize_translator(b.model));
  cfg.batch_size = 0;
  const auto c = train_translator(view, 8, cfg);
  EXPECT_NE(a.loss_trace, c.loss_trace);
}

TEST(Translate, MaskRestrictsClasses) {
  const auto model = make_translator(2, 50, 3, {11, 29}, 7);
  Rng rng(1);
  for (int i = 0; i < 300; ++i) {
    const auto g = translate(model, {rng.uniform(-4, 4), rng.uniform(-4, 4)}, 0.0, rng);
    EXPECT_TRUE(g.class_id() == 11 || g.class_id() == 29);
  }
}

TEST(Translate, LogitShiftDoesNotChangeTheChoice) {
  auto model = make_translator(2, 6, 2, {0, 2, 4}, 8);
  auto shifted = model;
  shifted.class_head.bias.array() += 3.0;
  Rng rng(2), unused(0);
  for (int i = 0; i < 100; ++i) {
    const AttributeVector a{rng.normal(), rng.normal()};
    EXPECT_EQ(translate(model, a, 0.0, unused).class_id(), translate(shifted, a, 0.0, unused).class_id());
  }
}

TEST(Translate, ZeroSigmaDrawsNothing) {
  const auto model = make_translator(2, 6, 4, {1, 2}, 9);
  Rng rng(5), reference(5);
  const auto a = translate(model, {0.2, 0.1}, 0.0, rng);
  const auto b = translate(model, {0.2, 0.1}, 0.0, rng);
  EXPECT_EQ(a, b);
  EXPECT_EQ(rng.next_u64(), reference.next_u64());
  EXPECT_EQ(a, translate_all(model, std::vector<AttributeVector>{{0.2, 0.1}}).front());
}

TEST(Translate, NoiseHasTheRequestedSpread) {
  const auto model = make_translator(2, 6, 4, {1, 2}, 9);
  const auto mean_latent = translate_all(model, std::vector<AttributeVector>{{0.2, 0.1}}).front();
  Rng rng(10);
  const int n = 10000;
  std::vector<double> sum(4, 0.0), sq(4, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto g = translate(model, {0.2, 0.1}, 0.1, rng);
    EXPECT_EQ(g.class_id(), mean_latent.class_id());
    for (std::size_t j = 0; j < 4; ++j) {
      const double e = g.latent()[j] - mean_latent.latent()[j];
      sum[j] += e;
      sq[j] += e * e;
    }
  }
  for (std::size_t j = 0; j < 4; ++j) {
    const double m = sum[j] / n;
    EXPECT_NEAR(std::sqrt(sq[j] / n - m * m), 0.1, 0.01);
    EXPECT_NEAR(m, 0.0, 0.005);
  }
}

TEST(Translate, DimensionMismatch) {
  const auto model = make_translator(2, 6, 4, {1}, 9);
  Rng rng(0);
  EXPECT_THROW(translate(model, {1.0, 2.0, 3.0}, 0.0, rng), DimensionError);
}

TEST(RoundTrip, MatchesDirectComposition) {
  auto f = testing::make_fixture(10, 3, 600, 3);
  std::vector<AttributeVector> targets;
  for (const auto& p : f.bundle.view.smoothed_pairs) targets.push_back(p.attributes);
  const auto rt = roundtrip_divergence(f.bundle.translator, *f.backend, *f.estimator, targets);
  ASSERT_EQ(rt.divergences.size(), targets.size());
  double total = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto g = translate_all(f.bundle.translator, std::span(&targets[i], 1)).front();
    const double d = divergence(targets[i], f.spec->attributes_of(g));
    EXPECT_NEAR(rt.divergences[i], d, 1e-12);
    total += d;
    worst = std::max(worst, d);
  }
  EXPECT_NEAR(rt.mean, total / static_cast<double>(targets.size()), 1e-12);
  EXPECT_DOUBLE_EQ(rt.max, worst);
}

TEST(Translator, PersistenceRoundTrip) {
  testing::TempDir dir;
  auto model = make_translator(2, 12, 5, {0, 4, 9}, 11);
  model.training_meta["note"] = "kept";
  save_translator(dir / "t.json", model);
  const auto back = load_translator(dir / "t.json");
  EXPECT_EQ(back.retained_classes, model.retained_classes);
  EXPECT_EQ(back.training_meta.at("note"), "kept");
  Rng rng(3);
  const Eigen::MatrixXd x = random_matrix(10, 2, rng);
  const auto a = forward(model, x), b = forward(back, x);
  EXPECT_LT((a.latents - b.latents).cwiseAbs().maxCoeff(), 1e-5);
  EXPECT_LT((a.probabilities - b.probabilities).cwiseAbs().maxCoeff(), 1e-5);
  EXPECT_EQ(serialize_translator(back), serialize_translator(parse_translator(serialize_translator(back))));

  std::string text = testing::read_file(dir / "t.json");
  text.replace(text.find("\"kind\": \"translation_model\""), 27, "\"kind\": \"attribute_view\"   ");
  EXPECT_THROW(parse_translator(text), FormatError);
}

TEST(Translator, InputValidation) {
  TranslatorConfig cfg;
  EXPECT_THROW(train_translator(AttributeView{}, 4, cfg), InsufficientDataError);
  EXPECT_THROW(train_translator(corner_view(), 5, cfg), DomainError);
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.noise_sigma = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

}  // namespace
}  // namespace vistory
