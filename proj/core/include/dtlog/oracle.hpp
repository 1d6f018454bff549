#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dtlog/kb.hpp"
#include "dtlog/parser.hpp"
#include "dtlog/runtime.hpp"

// Reference semantics by explicit top-down search. Exponential, for small
// instances only; the compiled engine is checked against it.
namespace dtlog::oracle {

struct ClauseStep {
  std::size_t clause = 0;
  // Variable bindings of this clause instance, in first-occurrence order.
  std::vector<std::pair<std::string, ConstantId>> sigma;
};

struct Proof {
  ConstantId answer = kNoArg;
  // One entry per body-literal occurrence resolved against the DB.
  std::vector<FactId> fact_uses;
  std::vector<std::size_t> clause_uses;
  std::vector<ClauseStep> steps;

  // Deduplicated, sorted fact set.
  std::vector<FactId> explanation() const;
};

inline constexpr std::size_t kNodeBudget = 1'000'000;

// Every proof tree of `query` whose theory-predicate nesting stays within
// max_depth, in a deterministic order. Accepts raw or desugared theories:
// constants in literals match directly, assign_c(X) binds X to c, and an
// unexpanded {tag} uses the weighted(tag) fact. Throws Error past the node budget.
std::vector<Proof> enumerate_proofs(const Theory& theory, const KnowledgeBase& kb,
                                    const Query& query, int max_depth,
                                    std::size_t node_budget = kNodeBudget);

// Per answer, the sum over proofs of the product of used fact weights.
SparseVector score_proof_sum(const std::vector<Proof>& proofs, const KnowledgeBase& kb);

// Probability that an interpretation drawn by independent coin flips (fact f
// kept with probability theta_f) supports query(answer).
double score_tuple_independence(const Theory& theory, const KnowledgeBase& kb, const Query& query,
                                ConstantId answer, int max_depth);
// The same for every answer with at least one proof.
SparseVector score_tuple_independence(const Theory& theory, const KnowledgeBase& kb,
                                      const Query& query, int max_depth);

inline constexpr std::size_t kMaxIndependentFacts = 25;

// Stochastic-logic-program distribution: proofs weighted by the product of the
// weights of the clauses they use (facts count as 1), normalized over answers.
// clause_weights is indexed like theory.clauses().
SparseVector score_slp(const Theory& theory, const KnowledgeBase& kb, const Query& query,
                       int max_depth, const std::vector<double>& clause_weights);

// Rewrites an SLP as a weighted program: clause i gets the tag slp_r<i>, every
// DB weight becomes 1 and weighted(slp_r<i>) gets clause_weights[i].
Program encode_slp(const Theory& parsed, const KnowledgeBase& kb,
                   const std::vector<double>& clause_weights);

std::string slp_tag(std::size_t clause);

}  // namespace dtlog::oracle
