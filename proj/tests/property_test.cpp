#include <gtest/gtest.h>

#include "dtlog/error.hpp"
#include "dtlog/grid.hpp"
#include "dtlog/oracle.hpp"
#include "fixtures.hpp"
#include "random_programs.hpp"

namespace dtlog {
namespace {

// The compiled engine and explicit proof enumeration agree on random tree
// programs, for every constant in both modes.
TEST(Properties, EngineEqualsProofSum) {
  Rng rng(2024);
  fixtures::RandomProgramSpec spec;
  // Proof counts grow exponentially with the KB; keep enumeration tractable.
  spec.max_constants = 6;
  int compared = 0;
  int over_budget = 0;
  for (int i = 0; i < 30; ++i) {
    const int depth = 1 + static_cast<int>(rng.below(4));
    auto prog = fixtures::random_program(rng, spec, depth);
    const auto& kb = prog.program.kb;
    FunctionRegistry r = compile_program(prog.program.theory, kb, fixtures::all_targets(prog.program.theory), depth);
    for (const Query& q : prog.queries()) {
      std::vector<oracle::Proof> proofs;
      try {
        proofs = oracle::enumerate_proofs(prog.parsed, kb, q, depth);
      } catch (const Error&) {
        ++over_budget;
        continue;
      }
      SparseVector engine = respond(r, kb, q).unnormalized;
      SparseVector oracle = oracle::score_proof_sum(proofs, kb);
      for (std::size_t c = 0; c < kb.dim(); ++c) {
        ASSERT_NEAR(engine.at(static_cast<ConstantId>(c)), oracle.at(static_cast<ConstantId>(c)), 1e-9)
            << prog.rules << to_string(q) << " depth " << depth;
      }
      ++compared;
    }
  }
  EXPECT_GT(compared, 100);
  EXPECT_LE(over_budget, 3);
}

TEST(Properties, RegistersAreNonNegativeAndResponsesNormalized) {
  Rng rng(77);
  fixtures::RandomProgramSpec spec;
  for (int i = 0; i < 15; ++i) {
    auto prog = fixtures::random_program(rng, spec, 3);
    const auto& kb = prog.program.kb;
    FunctionRegistry r = compile_program(prog.program.theory, kb, fixtures::all_targets(prog.program.theory), 3);
    for (const Query& q : prog.queries()) {
      EvalResult e = eval_function(r, kb, {q.predicate, q.mode, 0},
                                   SparseVector::one_hot(kb.dim(), kb.constant_id(q.constant)), {.retain_tape = true});
      for (const auto& v : e.tape.values) {
        for (const auto& entry : v.entries()) ASSERT_GT(entry.value, 0.0);
      }
      QueryResponse resp = respond(r, kb, q);
      if (!resp.distribution.empty()) {
        EXPECT_NEAR(resp.distribution.l1_norm(), 1.0, 1e-9);
      } else {
        EXPECT_EQ(resp.norm, 0.0);
      }
    }
  }
}

TEST(Properties, GridScoresGrowWithDepth) {
  GridData grid = generate_grid({.n = 8, .seed = 5});
  KnowledgeBase kb = load_facts(grid.facts);
  SparseVector previous;
  for (int depth = 1; depth <= 10; ++depth) {
    auto c = fixtures::compile(fixtures::grid_rules(), kb, depth);
    SparseVector g = respond(c.registry, c.program.kb, "path(c_2_3,Y)").unnormalized;
    if (depth > 1) {
      for (const auto& e : previous.entries()) EXPECT_GE(g.at(e.id), e.value) << depth;
    }
    previous = g;
  }
}

}  // namespace
}  // namespace dtlog
