#include "dtlog/oracle.hpp"

#include <algorithm>
#include <functional>
#include <map>

#include "dtlog/error.hpp"

namespace dtlog::oracle {

std::vector<FactId> Proof::explanation() const {
  std::vector<FactId> out = fact_uses;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

using Continuation = std::function<void(ConstantId, ConstantId)>;

class Prover {
 public:
  Prover(const Theory& theory, const KnowledgeBase& kb, int max_depth, std::size_t budget)
      : theory_(theory), kb_(kb), max_depth_(max_depth), budget_(budget) {}

  std::vector<Proof> run(const Query& q) {
    ConstantId c = kb_.constant_id(q.constant);
    ConstantId a = q.mode == Mode::io ? c : kNoArg;
    ConstantId b = q.mode == Mode::io ? kNoArg : c;
    std::vector<Proof> out;
    if (max_depth_ >= 0) {
      solve_goal(q.predicate, a, b, 0, [&](ConstantId x, ConstantId y) {
        Proof p = current_;
        p.answer = q.mode == Mode::io ? y : x;
        out.push_back(std::move(p));
      });
    }
    return out;
  }

 private:
  void tick() {
    if (++nodes_ > budget_) {
      throw Error("proof search exceeded the node budget of " + std::to_string(budget_));
    }
  }

  static bool matches(ConstantId bound, ConstantId value) { return bound == kNoArg || bound == value; }

  void use_facts(const std::string& pred, ConstantId a, ConstantId b, const Continuation& k) {
    for (FactId f : kb_.facts_of(pred)) {
      tick();
      const Fact& fact = kb_.fact(f);
      if (!matches(a, fact.arg0) || !matches(b, fact.arg1)) continue;
      current_.fact_uses.push_back(f);
      k(fact.arg0, fact.arg1);
      current_.fact_uses.pop_back();
    }
  }

  // Proves pred(a,b) at nesting depth `depth`; kNoArg marks a free argument.
  void solve_goal(const std::string& pred, ConstantId a, ConstantId b, int depth, const Continuation& k) {
    tick();
    if (kb_.is_stored(pred) && kb_.arity(pred) == 2) use_facts(pred, a, b, k);
    for (std::size_t idx : theory_.clauses_for(pred)) solve_clause(idx, a, b, depth, k);
  }

  struct Instance {
    std::vector<std::string> names;
    std::vector<ConstantId> values;

    int slot(const std::string& name) {
      auto it = std::find(names.begin(), names.end(), name);
      if (it != names.end()) return static_cast<int>(it - names.begin());
      names.push_back(name);
      values.push_back(kNoArg);
      return static_cast<int>(names.size()) - 1;
    }
  };

  // A term is either a variable slot (>= 0) or a constant encoded as -2 - id.
  int encode(Instance& inst, const Term& t) {
    if (t.is_variable()) return inst.slot(t.name);
    auto id = kb_.symbols().find(t.name);
    return id ? -2 - *id : kUnknownConstant;
  }
  static constexpr int kUnknownConstant = -1;

  static ConstantId value_of(const Instance& inst, int term) {
    return term >= 0 ? inst.values[term] : -2 - term;
  }

  void solve_clause(std::size_t idx, ConstantId a, ConstantId b, int depth, const Continuation& k) {
    const Clause& clause = theory_.clauses()[idx];
    Instance inst;
    std::vector<std::vector<int>> body_terms;
    std::vector<int> head_terms;
    for (const Term& t : clause.head.args) head_terms.push_back(encode(inst, t));
    for (const Literal& lit : clause.body) {
      std::vector<int> terms;
      for (const Term& t : lit.args) terms.push_back(encode(inst, t));
      body_terms.push_back(std::move(terms));
    }
    if (head_terms.size() != 2) return;
    if (std::count(head_terms.begin(), head_terms.end(), kUnknownConstant)) return;
    for (const auto& terms : body_terms) {
      if (std::count(terms.begin(), terms.end(), kUnknownConstant)) return;
    }

    // Unify the head with the goal.
    std::vector<int> bound_here;
    auto bind = [&](int term, ConstantId value) {
      if (value == kNoArg) return true;
      if (term < 0) return value_of(inst, term) == value;
      if (inst.values[term] == kNoArg) {
        inst.values[term] = value;
        bound_here.push_back(term);
        return true;
      }
      return inst.values[term] == value;
    };
    if (!bind(head_terms[0], a) || !bind(head_terms[1], b)) return;

    current_.clause_uses.push_back(idx);
    auto finish = [&] {
      ClauseStep step{idx, {}};
      for (std::size_t i = 0; i < inst.names.size(); ++i) step.sigma.emplace_back(inst.names[i], inst.values[i]);
      current_.steps.push_back(std::move(step));
      k(value_of(inst, head_terms[0]), value_of(inst, head_terms[1]));
      current_.steps.pop_back();
    };
    std::vector<char> done(clause.body.size(), 0);
    auto body = [&] { solve_body(clause, body_terms, done, clause.body.size(), inst, depth, finish); };
    if (clause.weight_tag && !clause.rule_id) {
      auto tag_fact = kb_.find_fact(kWeightedPredicate, *clause.weight_tag);
      if (tag_fact) {
        current_.fact_uses.push_back(*tag_fact);
        body();
        current_.fact_uses.pop_back();
      }
    } else {
      body();
    }
    current_.clause_uses.pop_back();
  }

  // Picks the pending literal with the most bound arguments (assign literals
  // first); the selection order changes enumeration order, not the proof set.
  std::size_t select(const Clause& clause, const std::vector<std::vector<int>>& terms,
                     const std::vector<char>& done, const Instance& inst) const {
    std::size_t best = clause.body.size();
    int best_score = -1;
    for (std::size_t i = 0; i < clause.body.size(); ++i) {
      if (done[i]) continue;
      int score = 0;
      if (is_assign_predicate(clause.body[i].predicate)) {
        score = 3;
      } else {
        for (int t : terms[i]) score += value_of(inst, t) != kNoArg ? 1 : 0;
      }
      if (score > best_score) {
        best = i;
        best_score = score;
      }
    }
    return best;
  }

  void solve_body(const Clause& clause, const std::vector<std::vector<int>>& terms,
                  std::vector<char>& done, std::size_t remaining, Instance& inst, int depth,
                  const std::function<void()>& finish) {
    if (remaining == 0) {
      finish();
      return;
    }
    tick();
    const std::size_t i = select(clause, terms, done, inst);
    done[i] = 1;
    const Literal& lit = clause.body[i];
    const std::vector<int>& t = terms[i];
    auto next = [&] { solve_body(clause, terms, done, remaining - 1, inst, depth, finish); };

    // Binds unbound variable slots to the given values, continues, then undoes.
    auto with_bindings = [&](std::initializer_list<std::pair<int, ConstantId>> pairs) {
      std::vector<int> fresh;
      bool ok = true;
      for (auto [term, value] : pairs) {
        if (term < 0) {
          ok = ok && value_of(inst, term) == value;
        } else if (inst.values[term] == kNoArg) {
          inst.values[term] = value;
          fresh.push_back(term);
        } else {
          ok = ok && inst.values[term] == value;
        }
      }
      if (ok) next();
      for (int s : fresh) inst.values[s] = kNoArg;
    };

    if (is_assign_predicate(lit.predicate) && t.size() == 1) {
      auto c = kb_.symbols().find(assign_constant(lit.predicate));
      if (c) with_bindings({{t[0], *c}});
    } else if (t.size() == 1) {
      ConstantId a = value_of(inst, t[0]);
      if (kb_.is_stored(lit.predicate) && kb_.arity(lit.predicate) == 1) {
        for (FactId f : kb_.facts_of(lit.predicate)) {
          tick();
          const Fact& fact = kb_.fact(f);
          if (!matches(a, fact.arg0)) continue;
          current_.fact_uses.push_back(f);
          with_bindings({{t[0], fact.arg0}});
          current_.fact_uses.pop_back();
        }
      }
    } else {
      ConstantId a = value_of(inst, t[0]);
      ConstantId b = value_of(inst, t[1]);
      auto k = [&](ConstantId x, ConstantId y) { with_bindings({{t[0], x}, {t[1], y}}); };
      if (theory_.defines(lit.predicate)) {
        if (depth + 1 <= max_depth_) solve_goal(lit.predicate, a, b, depth + 1, k);
      } else if (kb_.is_stored(lit.predicate) && kb_.arity(lit.predicate) == 2) {
        use_facts(lit.predicate, a, b, k);
      }
    }
    done[i] = 0;
  }

  const Theory& theory_;
  const KnowledgeBase& kb_;
  int max_depth_;
  std::size_t budget_;
  std::size_t nodes_ = 0;
  Proof current_;
};

}  // namespace

std::vector<Proof> enumerate_proofs(const Theory& theory, const KnowledgeBase& kb, const Query& query,
                                    int max_depth, std::size_t node_budget) {
  return Prover(theory, kb, max_depth, node_budget).run(query);
}

SparseVector score_proof_sum(const std::vector<Proof>& proofs, const KnowledgeBase& kb) {
  std::vector<SparseVector::Entry> entries;
  for (const Proof& p : proofs) {
    double w = 1.0;
    for (FactId f : p.fact_uses) w *= kb.get_weight(f);
    entries.push_back({p.answer, w});
  }
  return SparseVector::from_entries(kb.dim(), std::move(entries));
}

namespace {

double independent_probability(const KnowledgeBase& kb, const std::vector<Proof>& proofs) {
  for (FactId f = 0; f < static_cast<FactId>(kb.fact_count()); ++f) {
    double w = kb.get_weight(f);
    if (w < 0.0 || w > 1.0) {
      throw Error("tuple independence needs weights in [0,1]; " + kb.fact_to_string(f) + " has " +
                  format_weight(w));
    }
  }
  std::vector<FactId> universe;
  std::vector<std::vector<FactId>> explanations;
  for (const Proof& p : proofs) {
    explanations.push_back(p.explanation());
    universe.insert(universe.end(), explanations.back().begin(), explanations.back().end());
  }
  std::sort(universe.begin(), universe.end());
  universe.erase(std::unique(universe.begin(), universe.end()), universe.end());
  if (universe.size() > kMaxIndependentFacts) {
    throw Error("tuple independence limited to " + std::to_string(kMaxIndependentFacts) +
                " facts, explanations use " + std::to_string(universe.size()));
  }
  std::vector<std::uint32_t> masks;
  for (const auto& e : explanations) {
    std::uint32_t m = 0;
    for (FactId f : e) {
      m |= 1u << (std::lower_bound(universe.begin(), universe.end(), f) - universe.begin());
    }
    masks.push_back(m);
  }
  std::sort(masks.begin(), masks.end());
  masks.erase(std::unique(masks.begin(), masks.end()), masks.end());

  // Branch on each fact; facts not yet decided marginalize out once some
  // explanation is fully present or every explanation has lost a fact.
  double total = 0.0;
  std::function<void(std::size_t, std::uint32_t, std::uint32_t, double)> rec =
      [&](std::size_t i, std::uint32_t in, std::uint32_t out, double p) {
        bool alive = false;
        for (std::uint32_t m : masks) {
          if ((m & ~in) == 0) {
            total += p;
            return;
          }
          if ((m & out) == 0) alive = true;
        }
        if (!alive || i == universe.size() || p == 0.0) return;
        double w = kb.get_weight(universe[i]);
        rec(i + 1, in | (1u << i), out, p * w);
        rec(i + 1, in, out | (1u << i), p * (1.0 - w));
      };
  if (!masks.empty()) rec(0, 0, 0, 1.0);
  return total;
}

}  // namespace

double score_tuple_independence(const Theory& theory, const KnowledgeBase& kb, const Query& query,
                                ConstantId answer, int max_depth) {
  std::vector<Proof> proofs;
  for (Proof& p : enumerate_proofs(theory, kb, query, max_depth)) {
    if (p.answer == answer) proofs.push_back(std::move(p));
  }
  return independent_probability(kb, proofs);
}

SparseVector score_tuple_independence(const Theory& theory, const KnowledgeBase& kb,
                                      const Query& query, int max_depth) {
  std::map<ConstantId, std::vector<Proof>> by_answer;
  for (Proof& p : enumerate_proofs(theory, kb, query, max_depth)) by_answer[p.answer].push_back(std::move(p));
  std::vector<SparseVector::Entry> entries;
  for (const auto& [answer, proofs] : by_answer) entries.push_back({answer, independent_probability(kb, proofs)});
  return SparseVector::from_entries(kb.dim(), std::move(entries));
}

SparseVector score_slp(const Theory& theory, const KnowledgeBase& kb, const Query& query,
                       int max_depth, const std::vector<double>& clause_weights) {
  if (clause_weights.size() != theory.clauses().size()) {
    throw Error("need one weight per clause (" + std::to_string(theory.clauses().size()) + ")");
  }
  std::vector<SparseVector::Entry> entries;
  for (const Proof& p : enumerate_proofs(theory, kb, query, max_depth)) {
    double w = 1.0;
    for (std::size_t c : p.clause_uses) w *= clause_weights[c];
    entries.push_back({p.answer, w});
  }
  SparseVector unnormalized = SparseVector::from_entries(kb.dim(), std::move(entries));
  double z = unnormalized.l1_norm();
  return z > 0 ? scale(unnormalized, 1.0 / z) : SparseVector(kb.dim());
}

std::string slp_tag(std::size_t clause) { return "slp_r" + std::to_string(clause); }

Program encode_slp(const Theory& parsed, const KnowledgeBase& kb,
                   const std::vector<double>& clause_weights) {
  if (clause_weights.size() != parsed.clauses().size()) {
    throw Error("need one weight per clause (" + std::to_string(parsed.clauses().size()) + ")");
  }
  Theory tagged;
  for (std::size_t i = 0; i < parsed.clauses().size(); ++i) {
    Clause c = parsed.clauses()[i];
    c.weight_tag = slp_tag(i);
    c.rule_id.reset();
    tagged.add(std::move(c));
  }
  tagged.targets = parsed.targets;
  KnowledgeBase unit = kb;
  for (FactId f = 0; f < static_cast<FactId>(unit.fact_count()); ++f) unit.set_weight(f, 1.0);
  Program program = prepare_program(tagged, std::move(unit));
  for (std::size_t i = 0; i < clause_weights.size(); ++i) {
    program.kb.set_weight(GroundFact{std::string(kWeightedPredicate), slp_tag(i), std::nullopt},
                          clause_weights[i]);
  }
  return program;
}

}  // namespace dtlog::oracle
