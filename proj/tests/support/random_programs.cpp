#include "random_programs.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace dtlog::fixtures {

std::vector<Query> RandomProgram::queries() const {
  std::vector<Query> out;
  for (const auto& p : theory_predicates) {
    for (std::size_t c = 0; c < program.kb.dim(); ++c) {
      const std::string& name = program.kb.symbols().name(static_cast<ConstantId>(c));
      out.push_back({p, Mode::io, name});
      out.push_back({p, Mode::oi, name});
    }
  }
  return out;
}

namespace {

class Builder {
 public:
  Builder(Rng& rng, const RandomProgramSpec& spec) : rng_(rng), spec_(spec) {}

  RandomProgram build(int max_depth) {
    const int constants = spec_.min_constants +
                          static_cast<int>(rng_.below(static_cast<std::size_t>(spec_.max_constants - spec_.min_constants + 1)));
    for (int i = 0; i < constants; ++i) constants_.push_back("c" + std::to_string(i));

    // Predicate budget: one or two theory predicates, the rest stored.
    const int theory_count = spec_.max_predicates >= 4 && rng_.uniform() < 0.5 ? 2 : 1;
    for (int i = 0; i < theory_count; ++i) theory_.push_back(i == 0 ? "p" : "q");
    const int stored = std::max(1, spec_.max_predicates - theory_count);
    const int unary = stored >= 2 && rng_.uniform() < 0.6 ? 1 : 0;
    for (int i = 0; i < stored - unary; ++i) binary_.push_back("e" + std::to_string(i + 1));
    for (int i = 0; i < unary; ++i) unary_.push_back("u" + std::to_string(i + 1));

    std::ostringstream rules;
    const int clauses = theory_count +
                        static_cast<int>(rng_.below(static_cast<std::size_t>(spec_.max_clauses - theory_count + 1)));
    for (int i = 0; i < clauses; ++i) {
      const std::string& head = theory_[i < theory_count ? i : rng_.below(theory_.size())];
      rules << clause(head) << "\n";
    }

    RandomProgram out;
    out.rules = rules.str();
    out.facts = facts();
    out.parsed = parse_theory(out.rules);
    out.program = prepare_program(out.rules, load_facts(out.facts));
    out.theory_predicates = theory_;
    out.max_depth = max_depth;
    return out;
  }

 private:
  std::string fresh() { return "V" + std::to_string(++vars_); }
  const std::string& pick(const std::vector<std::string>& v) { return v[rng_.below(v.size())]; }

  // Picks a predicate from `pool`, avoiding ones already in this body when the
  // settings ask for distinct predicates. Empty when none is left.
  std::string take(const std::vector<std::string>& pool) {
    std::vector<std::string> open;
    for (const auto& p : pool) {
      if (!spec_.distinct_predicates || !used_.contains(p)) open.push_back(p);
    }
    if (open.empty()) return {};
    std::string p = pick(open);
    used_.insert(p);
    return p;
  }

  std::string binary(const std::string& pred, const std::string& a, const std::string& b) {
    return rng_.uniform() < 0.5 ? pred + "(" + a + "," + b + ")" : pred + "(" + b + "," + a + ")";
  }

  std::string clause(const std::string& head) {
    vars_ = 0;
    used_.clear();
    std::vector<std::string> body;
    std::vector<std::string> chain_vars{"X"};
    const bool head_constant = rng_.uniform() < 0.1;
    const std::string out_var = head_constant ? fresh() : "Y";
    const int length = 1 + static_cast<int>(rng_.below(static_cast<std::size_t>(spec_.max_chain)));
    bool called = false;
    std::string cur = "X";
    for (int i = 0; i < length; ++i) {
      std::string next = i == length - 1 ? out_var : fresh();
      std::string lit;
      if (spec_.recursion && !called && rng_.uniform() < 0.35) {
        called = true;
        lit = binary(pick(theory_), cur, next);
      } else {
        std::string pred = take(binary_);
        if (pred.empty()) {
          next = cur;
          continue;
        }
        lit = binary(pred, cur, next);
      }
      body.push_back(lit);
      chain_vars.push_back(next);
      cur = next;
    }
    if (cur != out_var) {
      // Ran out of distinct predicates before reaching the output variable.
      std::string pred = take(unary_);
      if (pred.empty()) {
        return head + "(X,Y) :- " + pick(binary_) + "(X,Y).";
      }
      body.push_back(pred + "(" + out_var + ")");
      chain_vars.push_back(out_var);
    }
    if (!unary_.empty() && rng_.uniform() < 0.4) {
      std::string pred = take(unary_);
      if (!pred.empty()) body.push_back(pred + "(" + pick(chain_vars) + ")");
    }
    if (rng_.uniform() < 0.25) {
      std::string pred = take(binary_);
      if (!pred.empty()) body.push_back(binary(pred, pick(chain_vars), fresh()));
    }
    if (rng_.uniform() < 0.2) {
      std::string pred = take(binary_);
      if (!pred.empty()) body.push_back(binary(pred, fresh(), fresh()));
    }
    if (rng_.uniform() < 0.2) {
      std::string pred = take(binary_);
      if (!pred.empty()) body.push_back(binary(pred, pick(chain_vars), pick(constants_)));
    }
    if (rng_.uniform() < 0.5) rng_.shuffle(body.begin(), body.end());

    std::string text = head + "(X," + (head_constant ? pick(constants_) : "Y") + ") :- ";
    for (std::size_t i = 0; i < body.size(); ++i) text += (i ? ", " : "") + body[i];
    return text + ".";
  }

  std::string facts() {
    std::ostringstream out;
    out.precision(17);
    auto weight = [&] { return 1.0 - rng_.uniform(); };  // (0, 1]
    auto binary_facts = [&](const std::string& pred) {
      const double density = rng_.uniform(spec_.min_density, spec_.max_density);
      bool any = false;
      for (const auto& a : constants_) {
        for (const auto& b : constants_) {
          if (rng_.uniform() < density) {
            out << pred << '\t' << a << '\t' << b << '\t' << weight() << '\n';
            any = true;
          }
        }
      }
      if (!any) out << pred << '\t' << pick(constants_) << '\t' << pick(constants_) << '\t' << weight() << '\n';
    };
    for (const auto& pred : binary_) binary_facts(pred);
    for (const auto& pred : unary_) {
      bool any = false;
      for (const auto& a : constants_) {
        if (rng_.uniform() < 0.5) {
          out << pred << '\t' << a << '\t' << weight() << '\n';
          any = true;
        }
      }
      if (!any) out << pred << '\t' << constants_[0] << '\t' << weight() << '\n';
    }
    // Occasionally a theory predicate also has stored facts.
    if (rng_.uniform() < 0.2) {
      out << theory_[0] << '\t' << pick(constants_) << '\t' << pick(constants_) << '\t' << weight() << '\n';
    }
    return out.str();
  }

  Rng& rng_;
  const RandomProgramSpec& spec_;
  std::vector<std::string> constants_;
  std::vector<std::string> theory_;
  std::vector<std::string> binary_;
  std::vector<std::string> unary_;
  std::set<std::string> used_;
  int vars_ = 0;
};

}  // namespace

RandomProgram random_program(Rng& rng, const RandomProgramSpec& spec, int max_depth) {
  return Builder(rng, spec).build(max_depth);
}

}  // namespace dtlog::fixtures
