#include <gtest/gtest.h>

#include "dtlog/error.hpp"
#include "dtlog/parser.hpp"
#include "fixtures.hpp"

namespace dtlog {
namespace {

TEST(Parser, ParsesFamilyTheory) {
  Theory t = parse_theory(fixtures::kFamilyRules);
  ASSERT_EQ(t.clauses().size(), 3u);
  EXPECT_EQ(t.predicates(), (std::vector<std::string>{"uncle", "status"}));
  EXPECT_EQ(t.clauses_for("uncle").size(), 2u);
  const Clause& c = t.clauses()[2];
  EXPECT_EQ(c.head.predicate, "status");
  ASSERT_EQ(c.head.args.size(), 2u);
  EXPECT_TRUE(c.head.args[0].is_variable());
  EXPECT_EQ(c.head.args[1], Term::constant("tired"));
  EXPECT_EQ(to_string(c), "status(X,tired):-child(W,X),infant(W).");
  EXPECT_EQ(c.pos.line, 3);
}

TEST(Parser, TargetsTagsAndComments) {
  Theory t = parse_theory(
      "% comment\n"
      ":- target uncle/oi.\n"
      "# another\n"
      "p(X,Y) :- r(X,Y) {w1}.   % trailing\n");
  ASSERT_EQ(t.targets.size(), 1u);
  EXPECT_EQ(t.targets[0], (Target{"uncle", Mode::oi}));
  ASSERT_EQ(t.clauses().size(), 1u);
  EXPECT_EQ(t.clauses()[0].weight_tag, "w1");
  EXPECT_EQ(to_string(t), ":- target uncle/oi.\np(X,Y):-r(X,Y) {w1}.\n");
}

TEST(Parser, PrintedTheoryParsesBackToItself) {
  Theory t = parse_theory(fixtures::kFamilyRules);
  EXPECT_EQ(parse_theory(to_string(t)), t);
  Theory d = desugar(t);
  EXPECT_EQ(parse_theory(to_string(d)), d);
}

struct BadInput {
  const char* name;
  const char* text;
  int line;
  int column;
};

class ParserErrors : public ::testing::TestWithParam<BadInput> {};

TEST_P(ParserErrors, ReportPositions) {
  try {
    parse_theory(GetParam().text);
    FAIL() << "accepted " << GetParam().text;
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), GetParam().line) << e.what();
    EXPECT_EQ(e.column(), GetParam().column) << e.what();
  }
}

INSTANTIATE_TEST_SUITE_P(Cases, ParserErrors,
                         ::testing::Values(BadInput{"EmptyBody", "p(X,Y) :- .", 1, 11},
                                           BadInput{"UppercasePredicate", "P(X,Y) :- r(X,Y).", 1, 1},
                                           BadInput{"TernaryHead", "p(X,Y,Z) :- r(X,Y).", 1, 1},
                                           BadInput{"BareFact", "r(a,b).", 1, 7},
                                           BadInput{"MissingPeriod", "p(X,Y) :- r(X,Y)", 1, 17},
                                           BadInput{"EmptyArgument", "\n\np(X,Y) :- r(X,,Y).", 3, 15}),
                         [](const auto& info) { return std::string(info.param.name); });

TEST(Desugar, MovesHeadConstantIntoAssign) {
  Clause c = desugar(parse_clause("status(X,tired) :- child(W,X), infant(W)."));
  EXPECT_EQ(to_string(c), "status(X,_A1):-assign_tired(_A1),child(W,X),infant(W).");
}

TEST(Desugar, BodyConstantsAndTags) {
  Clause c = desugar(parse_clause("p(X,Y) :- r(X,c), s(c,Y) {t1}."));
  EXPECT_EQ(to_string(c),
            "p(X,Y):-assign_t1(_A3),weighted(_A3),assign_c(_A1),r(X,_A1),assign_c(_A2),s(_A2,Y).");
  EXPECT_FALSE(c.weight_tag);
  EXPECT_EQ(c.rule_id, "t1");
}

TEST(Desugar, FreshNamesSkipUsedOnesAndAssignIsNormalized) {
  Clause c = desugar(parse_clause("p(a,Y) :- assign(Y,b), r(_A1,Y)."));
  EXPECT_EQ(to_string(c), "p(_A2,Y):-assign_a(_A2),assign_b(Y),r(_A1,Y).");
}

TEST(Desugar, IsIdempotentAndLeavesPlainClausesAlone) {
  for (const char* text : {"status(X,tired) :- child(W,X), infant(W).", "p(X,Y) :- r(X,c), s(c,Y) {t1}.",
                           "p(X,Y) :- r(X,Y)."}) {
    Clause once = desugar(parse_clause(text));
    EXPECT_EQ(desugar(once), once) << text;
  }
  Clause plain = parse_clause("p(X,Y) :- r(X,Z), s(Z,Y).");
  EXPECT_EQ(desugar(plain), plain);
}

TEST(Desugar, RegistersConstantsAndRuleWeights) {
  KnowledgeBase kb = load_facts("r\ta\tb\n");
  Theory t = desugar(parse_theory("p(X,Y) :- r(X,Y) {c3}.\np(X,zed) :- r(X,W)."));
  register_theory_symbols(t, kb);
  EXPECT_TRUE(kb.symbols().contains("zed"));
  auto id = kb.find_fact("weighted", "c3");
  ASSERT_TRUE(id);
  EXPECT_TRUE(kb.fact(*id).tagged);
  EXPECT_EQ(kb.get_weight(*id), 1.0);
}

std::vector<std::string> messages(const char* rules, const char* facts = "r\ta\tb\nu\ta\n") {
  KnowledgeBase kb = load_facts(facts);
  Theory t = desugar(parse_theory(rules));
  register_theory_symbols(t, kb);
  std::vector<std::string> out;
  for (const auto& d : validate(t, kb)) out.push_back(d.format("f.rules"));
  return out;
}

TEST(Validate, AcceptsTheFamilyProgram) {
  EXPECT_TRUE(messages(fixtures::kFamilyRules.data(), fixtures::kFamilyFacts.data()).empty());
}

TEST(Validate, ReportsEachViolation) {
  EXPECT_EQ(messages("p(X,X) :- r(X,Y)."),
            (std::vector<std::string>{"f.rules:1:1: error: repeated head variable X; head variables must be distinct",
                                      "f.rules:1:1: warning: variable Y occurs only once in 'p(X,X):-r(X,Y).'"}));
  EXPECT_EQ(messages("p(X,Y) :- q(X,Y)."),
            std::vector<std::string>{"f.rules:1:11: error: undefined predicate 'q'"});
  EXPECT_EQ(messages("p(X,Y) :- u(X,Y)."),
            std::vector<std::string>{"f.rules:1:11: error: predicate 'u' used with arity 2, expected 1"});
  EXPECT_EQ(messages("p(X) :- u(X)."),
            std::vector<std::string>{
                "f.rules:1:1: error: head 'p(X)' must be binary; only p(c,Y) and p(Y,c) queries can be compiled"});
  EXPECT_EQ(messages("p(X,Y) :- r(X,Y), r(Y,X)."),
            std::vector<std::string>{
                "f.rules:1:1: error: clause graph of 'p(X,Y):-r(X,Y),r(Y,X).' is not a tree (cycle through X, Y)"});
  auto missing = messages("p(X,Y) :- r(X,Z).");
  ASSERT_EQ(missing.size(), 2u);
  EXPECT_EQ(missing[0], "f.rules:1:1: error: head variable Y does not appear in the body");
  EXPECT_EQ(missing[1], "f.rules:1:1: warning: variable Z occurs only once in 'p(X,Y):-r(X,Z).'");
}

TEST(Validate, PrepareProgramThrowsWithFormattedDiagnostics) {
  try {
    prepare_program("p(X,Y) :- q(X,Y).\n", load_facts("r\ta\tb\n"), "bad.rules");
    FAIL();
  } catch (const CompileError& e) {
    EXPECT_EQ(std::string(e.what()), "bad.rules:1:11: error: undefined predicate 'q'");
  }
  Program ok = prepare_program("p(X,Y) :- r(X,Y), r(Z,W).\n", load_facts("r\ta\tb\n"));
  EXPECT_EQ(ok.warnings.size(), 2u);
}

}  // namespace
}  // namespace dtlog
