#include <gtest/gtest.h>

#include "dtlog/autodiff.hpp"
#include "dtlog/error.hpp"
#include "dtlog/grid.hpp"
#include "dtlog/random.hpp"
#include "fixtures.hpp"

namespace dtlog {
namespace {

ParamGradients grads_at(const fixtures::Compiled& c, const char* pred, const char* input, const char* answer) {
  const auto& kb = c.program.kb;
  EvalResult r = eval_function(c.registry, kb, {pred, Mode::io, 0},
                               SparseVector::one_hot(kb.dim(), kb.constant_id(input)), {.retain_tape = true});
  return backprop(r.tape, SparseVector::one_hot(kb.dim(), kb.constant_id(answer)), kb);
}

TEST(Backprop, UncleJoeBob) {
  auto c = fixtures::family();
  const auto& kb = c.program.kb;
  ParamGradients g = grads_at(c, "uncle", "joe", "bob");
  EXPECT_NEAR(g[kb.fact_id({"aunt", "joe", "eve"})], 0.9, 1e-12);
  EXPECT_NEAR(g[kb.fact_id({"husband", "eve", "bob"})], 0.9, 1e-12);
  EXPECT_EQ(g.support().size(), 2u);
}

TEST(Backprop, StatusEveTired) {
  auto c = fixtures::family();
  const auto& kb = c.program.kb;
  ParamGradients g = grads_at(c, "status", "eve", "tired");
  EXPECT_NEAR(g[kb.fact_id({"infant", "liam", std::nullopt})], 0.99, 1e-12);
  EXPECT_NEAR(g[kb.fact_id({"infant", "dave", std::nullopt})], 0.99, 1e-12);
  EXPECT_NEAR(g[kb.fact_id({"child", "liam", "eve"})], 0.7, 1e-12);
  EXPECT_NEAR(g[kb.fact_id({"child", "dave", "eve"})], 0.1, 1e-12);
  // child(liam,bob) is on no proof of status(eve,tired).
  EXPECT_EQ(g[kb.fact_id({"child", "liam", "bob"})], 0.0);
}

TEST(Backprop, ZeroSeedGivesZeroGradient) {
  auto c = fixtures::family();
  const auto& kb = c.program.kb;
  EvalResult r = eval_function(c.registry, kb, {"uncle", Mode::io, 0}, SparseVector::one_hot(kb.dim(), 0),
                               {.retain_tape = true});
  EXPECT_TRUE(backprop(r.tape, SparseVector(kb.dim()), kb).support().empty());
}

TEST(Backprop, NeedsARetainedTape) {
  auto c = fixtures::family();
  const auto& kb = c.program.kb;
  EvalResult r = eval_function(c.registry, kb, {"uncle", Mode::io, 0}, SparseVector::one_hot(kb.dim(), 0));
  EXPECT_THROW(backprop(r.tape, SparseVector(kb.dim()), kb), EvalError);
}

TEST(Backprop, IsLinearInTheSeed) {
  auto c = fixtures::compile(fixtures::grid_rules(), generate_grid({.n = 4, .seed = 2}).facts, 3);
  const auto& kb = c.program.kb;
  EvalResult r = eval_function(c.registry, kb, {"path", Mode::io, 0}, SparseVector::one_hot(kb.dim(), 5),
                               {.retain_tape = true});
  Rng rng(5);
  std::vector<double> g1(kb.dim()), g2(kb.dim()), mix(kb.dim());
  const double alpha = -1.7;
  for (std::size_t i = 0; i < kb.dim(); ++i) {
    g1[i] = rng.uniform(-1, 1);
    g2[i] = rng.uniform(-1, 1);
    mix[i] = alpha * g1[i] + g2[i];
  }
  auto a = backprop(r.tape, g1, kb);
  auto b = backprop(r.tape, g2, kb);
  auto m = backprop(r.tape, mix, kb);
  for (std::size_t f = 0; f < kb.fact_count(); ++f) {
    EXPECT_NEAR(m.by_fact[f], alpha * a.by_fact[f] + b.by_fact[f], 1e-12);
  }
}

// Independent check: central differences on every parameter, computed here.
TEST(Backprop, MatchesFiniteDifferencesOnEveryFamilyParameter) {
  auto c = fixtures::family();
  const auto& kb = c.program.kb;
  for (const char* pred : {"uncle", "status"}) {
    for (Mode mode : {Mode::io, Mode::oi}) {
      for (std::size_t in = 0; in < kb.dim(); ++in) {
        auto u = SparseVector::one_hot(kb.dim(), static_cast<ConstantId>(in));
        FunctionKey key{pred, mode, 0};
        EvalResult r = eval_function(c.registry, kb, key, u, {.retain_tape = true});
        std::vector<double> w(kb.dim());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = 1.0 + 0.1 * static_cast<double>(i);
        ParamGradients g = backprop(r.tape, w, kb);
        KnowledgeBase probe = kb;
        for (FactId f = 0; f < static_cast<FactId>(kb.fact_count()); ++f) {
          const double h = 1e-6;
          auto value = [&] {
            double s = 0.0;
            SparseVector out = eval_function(c.registry, probe, key, u).output;
            for (const auto& e : out.entries()) s += w[e.id] * e.value;
            return s;
          };
          probe.set_weight(f, kb.get_weight(f) + h);
          double up = value();
          probe.set_weight(f, kb.get_weight(f) - h);
          double down = value();
          probe.set_weight(f, kb.get_weight(f));
          EXPECT_NEAR(g[f], (up - down) / (2 * h), 1e-6) << pred << " " << kb.fact_to_string(f);
        }
      }
    }
  }
}

TEST(GradCheck, FamilyProgram) {
  auto c = fixtures::family();
  const auto& kb = c.program.kb;
  for (std::size_t in = 0; in < kb.dim(); ++in) {
    EXPECT_LT(grad_check(c.registry, kb, {"uncle", Mode::io, 0},
                         SparseVector::one_hot(kb.dim(), static_cast<ConstantId>(in)), {.seed = in}),
              1e-4);
  }
}

TEST(GradCheck, GridPathAtDepthsTwoAndFour) {
  GridData grid = generate_grid({.n = 16, .seed = 0});
  for (int depth : {2, 4}) {
    auto c = fixtures::compile(fixtures::grid_rules(), grid.facts, depth);
    const auto& kb = c.program.kb;
    for (const char* cell : {"c_1_1", "c_8_9", "c_16_3"}) {
      double err = grad_check(c.registry, kb, {"path", Mode::io, 0},
                              SparseVector::one_hot(kb.dim(), kb.constant_id(cell)), {.directions = 25, .seed = 1});
      EXPECT_LT(err, 1e-4) << cell << " depth " << depth;
    }
  }
}

TEST(GradCheck, ZeroFunctionHasNoError) {
  auto c = fixtures::compile(fixtures::grid_rules(), "edge\ta\tb\n", 0);
  const auto& kb = c.program.kb;
  EXPECT_EQ(grad_check(c.registry, kb, {"path", Mode::io, 1}, SparseVector::one_hot(kb.dim(), 0)), 0.0);
}

TEST(GradCheck, ClampedParametersKeepTheirGradient) {
  auto c = fixtures::family();
  KnowledgeBase kb = c.program.kb;
  kb.set_weight(kb.fact_id({"aunt", "joe", "eve"}), 0.0);
  EvalResult r = eval_function(c.registry, kb, {"uncle", Mode::io, 0},
                               SparseVector::one_hot(kb.dim(), kb.constant_id("joe")), {.retain_tape = true});
  EXPECT_TRUE(r.output.empty());
  ParamGradients g = backprop(r.tape, SparseVector::one_hot(kb.dim(), kb.constant_id("bob")), kb);
  EXPECT_NEAR(g[kb.fact_id({"aunt", "joe", "eve"})], 0.9, 1e-12);
  EXPECT_EQ(g[kb.fact_id({"husband", "eve", "bob"})], 0.0);
}

}  // namespace
}  // namespace dtlog
