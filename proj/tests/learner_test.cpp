#include <gtest/gtest.h>

#include <cmath>

#include "dtlog/error.hpp"
#include "dtlog/grid.hpp"
#include "dtlog/learner.hpp"
#include "fixtures.hpp"

namespace dtlog {
namespace {

TEST(Loss, SymmetricPair) {
  auto g = SparseVector::from_entries(3, {{0, 1.0}, {1, 1.0}});
  std::vector<ConstantId> pos{0};
  LossGrad lg = loss_and_grad(g, pos);
  EXPECT_TRUE(lg.supported);
  EXPECT_NEAR(lg.loss, std::log(2.0), 1e-15);
  EXPECT_NEAR(lg.grad[0], -0.5, 1e-15);
  EXPECT_NEAR(lg.grad[1], 0.5, 1e-15);
  EXPECT_EQ(lg.grad[2], 0.0);
}

TEST(Loss, Singleton) {
  auto g = SparseVector::from_entries(2, {{0, 5.0}});
  std::vector<ConstantId> pos{0};
  LossGrad lg = loss_and_grad(g, pos);
  EXPECT_EQ(lg.loss, 0.0);
  EXPECT_EQ(lg.grad[0], 0.0);
}

TEST(Loss, TwoPointValue) {
  auto g = SparseVector::from_entries(2, {{0, 1.0}, {1, 3.0}});
  std::vector<ConstantId> pos{1};
  // log(1 + exp(-2))
  EXPECT_NEAR(loss_and_grad(g, pos).loss, 0.12692801104297263, 1e-15);
}

TEST(Loss, LargeScoresStayFinite) {
  auto g = SparseVector::from_entries(3, {{0, 1e9}, {1, 1e9 + 1}, {2, 3e8}});
  std::vector<ConstantId> pos{0};
  LossGrad lg = loss_and_grad(g, pos);
  EXPECT_TRUE(std::isfinite(lg.loss));
  EXPECT_NEAR(lg.loss, std::log1p(std::exp(1.0)), 1e-9);
  EXPECT_NEAR(lg.grad[0] + lg.grad[1] + lg.grad[2], 0.0, 1e-12);
}

TEST(Loss, MultiplePositivesShareTheTarget) {
  auto g = SparseVector::from_entries(3, {{0, 1.0}, {1, 1.0}, {2, 1.0}});
  std::vector<ConstantId> pos{0, 2};
  LossGrad lg = loss_and_grad(g, pos);
  EXPECT_NEAR(lg.loss, std::log(3.0), 1e-15);
  EXPECT_NEAR(lg.grad[0], 1.0 / 3 - 0.5, 1e-15);
  EXPECT_NEAR(lg.grad[1], 1.0 / 3, 1e-15);
}

TEST(Loss, NoSupportedPositive) {
  auto g = SparseVector::from_entries(3, {{1, 2.0}});
  std::vector<ConstantId> pos{0};
  LossGrad lg = loss_and_grad(g, pos);
  EXPECT_FALSE(lg.supported);
  EXPECT_EQ(lg.loss, kNoSupportLoss);
  for (double v : lg.grad) EXPECT_EQ(v, 0.0);
  EXPECT_FALSE(loss_and_grad(SparseVector(3), pos).supported);
}

TEST(Examples, ParseAndRoundTrip) {
  auto ex = load_examples("# header\nuncle\tio\tjoe\tbob\nstatus\toi\ttired\teve,bob\n");
  ASSERT_EQ(ex.size(), 2u);
  EXPECT_EQ(ex[0].query, (Query{"uncle", Mode::io, "joe"}));
  EXPECT_EQ(ex[1].positives, (std::vector<std::string>{"eve", "bob"}));
  EXPECT_EQ(load_examples(serialize_examples(ex)), ex);
  EXPECT_THROW(load_examples("uncle\tio\tjoe\n"), ParseError);
  EXPECT_THROW(load_examples("uncle\tzz\tjoe\tbob\n"), ParseError);
  EXPECT_THROW(load_examples("uncle\tio\tjoe\tbob,bob\n"), ParseError);
  EXPECT_THROW(load_examples("uncle\tio\tjoe\t\n"), ParseError);
}

TEST(Accuracy, Cases) {
  auto c = fixtures::family();
  std::vector<Example> right{{{"uncle", Mode::io, "joe"}, {"bob"}}};
  EXPECT_EQ(evaluate_accuracy(c.registry, c.program.kb, right), 1.0);
  std::vector<Example> empty_answers{{{"uncle", Mode::io, "chip"}, {"bob"}}, {{"uncle", Mode::io, "eve"}, {"bob"}}};
  EXPECT_EQ(evaluate_accuracy(c.registry, c.program.kb, empty_answers), 0.0);
  std::vector<Example> mixed{{{"uncle", Mode::io, "joe"}, {"bob"}}, {{"status", Mode::oi, "tired"}, {"bob"}}};
  EXPECT_EQ(evaluate_accuracy(c.registry, c.program.kb, mixed), 0.5);
  EXPECT_THROW(evaluate_accuracy(c.registry, c.program.kb, std::vector<Example>{}), Error);
}

TEST(Accuracy, ArgmaxTiesGoToTheLowestId) {
  EXPECT_EQ(argmax(SparseVector::from_entries(4, {{3, 2.0}, {1, 2.0}, {0, 1.0}})), 1);
  EXPECT_EQ(argmax(SparseVector(4)), -1);
}

TEST(Train, ZeroLearningRateIsAFixedPoint) {
  auto c = fixtures::family();
  std::vector<Example> data{{{"status", Mode::oi, "tired"}, {"bob"}}};
  TrainResult r = train(c.registry, c.program.kb, data, {.learning_rate = 0.0, .epochs = 5, .train_all = true});
  for (FactId f = 0; f < static_cast<FactId>(c.program.kb.fact_count()); ++f) {
    EXPECT_EQ(r.kb.get_weight(f), c.program.kb.get_weight(f));
  }
  EXPECT_EQ(r.log.size(), 5u);
}

TEST(Train, PerfectExampleHasZeroLossAndNoUpdate) {
  auto c = fixtures::family();
  std::vector<Example> data{{{"uncle", Mode::io, "joe"}, {"bob"}}};
  TrainResult r = train(c.registry, c.program.kb, data, {.learning_rate = 0.1, .epochs = 1, .train_all = true});
  EXPECT_EQ(r.log[0].loss, 0.0);
  EXPECT_EQ(r.log[0].accuracy, 1.0);
  for (FactId f = 0; f < static_cast<FactId>(c.program.kb.fact_count()); ++f) {
    EXPECT_EQ(r.kb.get_weight(f), c.program.kb.get_weight(f));
  }
}

TEST(Train, SmallStepLowersTheLoss) {
  auto c = fixtures::family();
  std::vector<Example> data{{{"status", Mode::oi, "tired"}, {"bob"}}};
  TrainResult r = train(c.registry, c.program.kb, data, {.learning_rate = 1e-4, .epochs = 2, .train_all = true});
  EXPECT_LT(r.log[1].loss, r.log[0].loss);
}

TEST(Train, OnlyTrainablePredicatesMoveAndWeightsStayNonNegative) {
  GridData grid = generate_grid({.n = 6, .seed = 4});
  auto c = fixtures::compile(fixtures::grid_rules(), grid.facts, 4);
  KnowledgeBase kb = c.program.kb;
  kb.add_fact("noise", "c_1_1", "c_1_2", 0.3);
  TrainConfig config{.learning_rate = 5.0, .epochs = 3, .trainable = {"edge"}};
  std::vector<EpochLog> seen;
  TrainResult r = train(c.registry, kb, grid.train, config, [&](const EpochLog& e) { seen.push_back(e); });
  EXPECT_EQ(seen.size(), 3u);
  bool moved = false;
  for (FactId f = 0; f < static_cast<FactId>(kb.fact_count()); ++f) {
    EXPECT_GE(r.kb.get_weight(f), 0.0);
    if (kb.predicate_name(kb.fact(f)) == "noise") {
      EXPECT_EQ(r.kb.get_weight(f), kb.get_weight(f));
    } else if (r.kb.get_weight(f) != kb.get_weight(f)) {
      moved = true;
    }
  }
  EXPECT_TRUE(moved);
}

TEST(Train, RunsAreBitIdentical) {
  GridData grid = generate_grid({.n = 5, .seed = 9});
  auto c = fixtures::compile(fixtures::grid_rules(), grid.facts, 3);
  TrainConfig config{.learning_rate = 0.1, .epochs = 4, .trainable = {"edge"}};
  TrainResult a = train(c.registry, c.program.kb, grid.train, config);
  TrainResult b = train(c.registry, c.program.kb, grid.train, config);
  EXPECT_EQ(serialize_facts(a.kb), serialize_facts(b.kb));
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].loss, b.log[i].loss);
    EXPECT_EQ(a.log[i].accuracy, b.log[i].accuracy);
  }
}

TEST(Train, TaggedRuleWeightsAreAlwaysTrainable) {
  auto c = fixtures::compile("p(X,Y) :- r(X,Y) {w1}.\np(X,Y) :- s(X,Y) {w2}.\n",
                             "r\ta\tb\ns\ta\tc\n", 2);
  const auto& kb = c.program.kb;
  std::vector<Example> data{{{"p", Mode::io, "a"}, {"b"}}};
  TrainResult r = train(c.registry, kb, data, {.learning_rate = 0.5, .epochs = 3});
  auto w1 = kb.fact_id({"weighted", "w1", std::nullopt});
  auto w2 = kb.fact_id({"weighted", "w2", std::nullopt});
  EXPECT_GT(r.kb.get_weight(w1), 1.0);
  EXPECT_LT(r.kb.get_weight(w2), 1.0);
  EXPECT_EQ(r.kb.get_weight(kb.fact_id({"r", "a", "b"})), 1.0);
}

TEST(Train, RejectsBadConfig) {
  auto c = fixtures::family();
  std::vector<Example> data{{{"uncle", Mode::io, "joe"}, {"bob"}}};
  EXPECT_THROW(train(c.registry, c.program.kb, data, {.epochs = 0}), Error);
  EXPECT_THROW(train(c.registry, c.program.kb, data, {.learning_rate = -1}), Error);
  EXPECT_THROW(train(c.registry, c.program.kb, data, {.trainable = {"nosuch"}}), Error);
  std::vector<Example> unknown{{{"uncle", Mode::io, "nobody"}, {"bob"}}};
  EXPECT_THROW(train(c.registry, c.program.kb, unknown, {}), Error);
}

}  // namespace
}  // namespace dtlog
