#include "fixtures.hpp"

namespace dtlog::fixtures {

std::vector<Target> all_targets(const Theory& theory) {
  std::vector<Target> out;
  for (const auto& p : theory.predicates()) {
    out.push_back({p, Mode::io});
    out.push_back({p, Mode::oi});
  }
  return out;
}

Compiled compile(std::string_view rules, KnowledgeBase kb, int max_depth) {
  Program p = prepare_program(rules, std::move(kb));
  FunctionRegistry r = compile_program(p.theory, p.kb, all_targets(p.theory), max_depth);
  return Compiled{std::move(p), std::move(r)};
}

Compiled compile(std::string_view rules, std::string_view facts, int max_depth) {
  return compile(rules, load_facts(facts), max_depth);
}

Compiled family(int max_depth) { return compile(kFamilyRules, kFamilyFacts, max_depth); }

SparseVector unnormalized(const Compiled& c, std::string_view query) {
  return respond(c.registry, c.program.kb, query).unnormalized;
}

double score(const Compiled& c, std::string_view query, std::string_view answer) {
  return unnormalized(c, query).at(c.program.kb.constant_id(answer));
}

std::string grid_rules() {
  return "path(X,Y) :- edge(X,Y).\n"
         "path(X,Y) :- edge(X,Z), path(Z,Y).\n";
}

}  // namespace dtlog::fixtures
