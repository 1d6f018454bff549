#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dtlog/kb.hpp"

namespace dtlog {

// Which head argument carries the query input: io answers p(c,Y), oi answers p(Y,c).
enum class Mode { io, oi };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

struct SourcePos {
  int line = 0;
  int column = 0;
};

struct Term {
  enum class Kind { variable, constant };
  Kind kind = Kind::variable;
  std::string name;

  static Term variable(std::string name) { return {Kind::variable, std::move(name)}; }
  static Term constant(std::string name) { return {Kind::constant, std::move(name)}; }
  bool is_variable() const { return kind == Kind::variable; }
  bool operator==(const Term&) const = default;
};

// Variables start with an uppercase letter or '_'.
bool is_variable_name(std::string_view name);

struct Literal {
  std::string predicate;
  std::vector<Term> args;
  SourcePos pos;

  std::size_t arity() const { return args.size(); }
  // Source positions do not take part in equality.
  bool operator==(const Literal& o) const { return predicate == o.predicate && args == o.args; }
};

struct Clause {
  Literal head;
  std::vector<Literal> body;
  // `{tag}` annotation as written; cleared by desugar.
  std::optional<std::string> weight_tag;
  // Tag that desugar already expanded into assign_tag(R), weighted(R).
  std::optional<std::string> rule_id;
  SourcePos pos;

  bool operator==(const Clause& o) const {
    return head == o.head && body == o.body && weight_tag == o.weight_tag && rule_id == o.rule_id;
  }
};

struct Target {
  std::string predicate;
  Mode mode = Mode::io;
  bool operator==(const Target&) const = default;
};

// Horn clauses grouped by head predicate, source order preserved in each group.
class Theory {
 public:
  void add(Clause clause);

  std::span<const Clause> clauses() const { return clauses_; }
  std::span<const std::size_t> clauses_for(std::string_view predicate) const;
  bool defines(std::string_view predicate) const { return groups_.contains(predicate); }
  // Head predicates in order of first appearance.
  const std::vector<std::string>& predicates() const { return order_; }

  std::vector<Target> targets;

  bool operator==(const Theory& o) const { return clauses_ == o.clauses_ && targets == o.targets; }

 private:
  std::vector<Clause> clauses_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> groups_;
  std::vector<std::string> order_;
};

struct Diagnostic {
  enum class Severity { error, warning };
  Severity severity = Severity::error;
  SourcePos pos;
  std::string message;

  std::string format(std::string_view file) const;
};

bool has_errors(std::span<const Diagnostic> diagnostics);

// One rule per line: `head :- lit, ..., lit [{tag}].` plus optional
// `:- target pred/mode.` directives. '#' and '%' start comments.
Theory parse_theory(std::string_view text);
Clause parse_clause(std::string_view text);

std::string to_string(const Literal& literal);
std::string to_string(const Clause& clause);
std::string to_string(const Theory& theory);

// Rewrites constants into assign_c literals over fresh variables (_A1, _A2, ...)
// and expands a {tag} into assign_tag(R), weighted(R) at the front of the body.
Clause desugar(const Clause& clause);
Theory desugar(const Theory& theory);

// Interns constants named by assign_c literals and registers weighted(tag) facts
// (weight 1.0, trainable) for every expanded rule tag.
void register_theory_symbols(const Theory& desugared, KnowledgeBase& kb);

// Checks a desugared theory against the syntactic restrictions and the KB.
std::vector<Diagnostic> validate(const Theory& theory, const KnowledgeBase& kb);

// A desugared, validated theory together with the KB it was registered into.
struct Program {
  Theory theory;
  KnowledgeBase kb;
  std::vector<Diagnostic> warnings;
};

// Parses, desugars, registers and validates. Throws CompileError listing the
// diagnostics when validation reports errors.
Program prepare_program(std::string_view rules_text, KnowledgeBase kb,
                        std::string_view rules_file = "rules");
Program prepare_program(const Theory& parsed, KnowledgeBase kb, std::string_view rules_file = "rules");

}  // namespace dtlog
