#include "dtlog/parser.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "dtlog/error.hpp"
#include "dtlog/factor_graph.hpp"

namespace dtlog {

std::string_view to_string(Mode mode) { return mode == Mode::io ? "io" : "oi"; }

Mode parse_mode(std::string_view text) {
  if (text == "io") return Mode::io;
  if (text == "oi") return Mode::oi;
  throw Error("unknown mode '" + std::string(text) + "' (expected io or oi)");
}

bool is_variable_name(std::string_view name) {
  return !name.empty() && (std::isupper(static_cast<unsigned char>(name[0])) || name[0] == '_');
}

void Theory::add(Clause clause) {
  const std::string& pred = clause.head.predicate;
  auto it = groups_.find(pred);
  if (it == groups_.end()) {
    it = groups_.emplace(pred, std::vector<std::size_t>{}).first;
    order_.push_back(pred);
  }
  it->second.push_back(clauses_.size());
  clauses_.push_back(std::move(clause));
}

std::span<const std::size_t> Theory::clauses_for(std::string_view predicate) const {
  auto it = groups_.find(predicate);
  if (it == groups_.end()) return {};
  return it->second;
}

std::string Diagnostic::format(std::string_view file) const {
  std::ostringstream out;
  out << file << ':' << pos.line << ':' << pos.column << ": "
      << (severity == Severity::error ? "error: " : "warning: ") << message;
  return out.str();
}

bool has_errors(std::span<const Diagnostic> diagnostics) {
  return std::any_of(diagnostics.begin(), diagnostics.end(), [](const Diagnostic& d) {
    return d.severity == Diagnostic::Severity::error;
  });
}

namespace {

struct Token {
  enum class Kind { ident, lparen, rparen, comma, neck, dot, lbrace, rbrace, slash, end };
  Kind kind;
  std::string text;
  int column;
};

class LineLexer {
 public:
  LineLexer(std::string_view line, int line_no) : line_(line), line_no_(line_no) {}

  std::vector<Token> tokenize() {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line_.size()) {
      char c = line_[i];
      int col = static_cast<int>(i) + 1;
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
      } else if (c == '#' || c == '%') {
        break;
      } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t j = i;
        while (j < line_.size() &&
               (std::isalnum(static_cast<unsigned char>(line_[j])) || line_[j] == '_')) {
          ++j;
        }
        out.push_back({Token::Kind::ident, std::string(line_.substr(i, j - i)), col});
        i = j;
      } else if (c == ':' && i + 1 < line_.size() && line_[i + 1] == '-') {
        out.push_back({Token::Kind::neck, ":-", col});
        i += 2;
      } else {
        Token::Kind kind;
        switch (c) {
          case '(': kind = Token::Kind::lparen; break;
          case ')': kind = Token::Kind::rparen; break;
          case ',': kind = Token::Kind::comma; break;
          case '.': kind = Token::Kind::dot; break;
          case '{': kind = Token::Kind::lbrace; break;
          case '}': kind = Token::Kind::rbrace; break;
          case '/': kind = Token::Kind::slash; break;
          default:
            throw ParseError(std::to_string(line_no_) + ":" + std::to_string(col) +
                                 ": unexpected character '" + std::string(1, c) + "'",
                             line_no_, col);
        }
        out.push_back({kind, std::string(1, c), col});
        ++i;
      }
    }
    out.push_back({Token::Kind::end, "", static_cast<int>(line_.size()) + 1});
    return out;
  }

 private:
  std::string_view line_;
  int line_no_;
};

class LineParser {
 public:
  LineParser(std::vector<Token> tokens, int line_no) : tokens_(std::move(tokens)), line_no_(line_no) {}

  bool at_end() const { return peek().kind == Token::Kind::end; }
  bool directive() const { return peek().kind == Token::Kind::neck; }

  Target parse_directive() {
    expect(Token::Kind::neck, "':-'");
    const Token& kw = expect(Token::Kind::ident, "directive name");
    if (kw.text != "target") fail(kw, "unknown directive '" + kw.text + "'");
    const Token& pred = expect(Token::Kind::ident, "predicate name");
    expect(Token::Kind::slash, "'/'");
    const Token& mode = expect(Token::Kind::ident, "mode");
    expect(Token::Kind::dot, "'.'");
    expect(Token::Kind::end, "end of line");
    try {
      return {pred.text, parse_mode(mode.text)};
    } catch (const Error& e) {
      fail(mode, e.what());
    }
  }

  Clause parse_clause() {
    Clause clause;
    clause.pos = {line_no_, peek().column};
    clause.head = parse_literal();
    if (peek().kind == Token::Kind::dot) {
      fail(peek(), "head-only clause '" + to_string(clause.head) +
                       "'; facts belong in the facts file");
    }
    expect(Token::Kind::neck, "':-'");
    clause.body.push_back(parse_literal());
    while (peek().kind == Token::Kind::comma) {
      advance();
      clause.body.push_back(parse_literal());
    }
    if (peek().kind == Token::Kind::lbrace) {
      advance();
      const Token& tag = expect(Token::Kind::ident, "rule tag");
      if (is_variable_name(tag.text)) fail(tag, "rule tag must be a constant");
      clause.weight_tag = tag.text;
      expect(Token::Kind::rbrace, "'}'");
    }
    expect(Token::Kind::dot, "'.'");
    expect(Token::Kind::end, "end of line");
    return clause;
  }

 private:
  Literal parse_literal() {
    Literal lit;
    const Token& name = expect(Token::Kind::ident, "predicate name");
    if (is_variable_name(name.text)) fail(name, "predicate name must start with a lowercase letter");
    lit.predicate = name.text;
    lit.pos = {line_no_, name.column};
    expect(Token::Kind::lparen, "'('");
    while (true) {
      const Token& arg = expect(Token::Kind::ident, "argument");
      lit.args.push_back(is_variable_name(arg.text) ? Term::variable(arg.text)
                                                    : Term::constant(arg.text));
      if (peek().kind == Token::Kind::comma) {
        advance();
        continue;
      }
      expect(Token::Kind::rparen, "')'");
      break;
    }
    if (lit.args.size() > 2) {
      fail_at(lit.pos.column, "predicate '" + lit.predicate + "' has arity " +
                                  std::to_string(lit.args.size()) + "; only arity 1 or 2 is supported");
    }
    return lit;
  }

  const Token& peek() const { return tokens_[pos_]; }
  const Token& advance() { return tokens_[pos_++]; }

  const Token& expect(Token::Kind kind, const std::string& what) {
    if (peek().kind != kind) {
      fail(peek(), "expected " + what + (peek().kind == Token::Kind::end
                                             ? std::string(" at end of line")
                                             : ", found '" + peek().text + "'"));
    }
    return advance();
  }

  [[noreturn]] void fail(const Token& at, const std::string& message) { fail_at(at.column, message); }
  [[noreturn]] void fail_at(int column, const std::string& message) {
    throw ParseError(std::to_string(line_no_) + ":" + std::to_string(column) + ": " + message,
                     line_no_, column);
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  int line_no_;
};

}  // namespace

Theory parse_theory(std::string_view text) {
  Theory theory;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    LineParser parser(LineLexer(line, line_no).tokenize(), line_no);
    if (parser.at_end()) continue;
    if (parser.directive()) {
      theory.targets.push_back(parser.parse_directive());
    } else {
      theory.add(parser.parse_clause());
    }
  }
  return theory;
}

Clause parse_clause(std::string_view text) {
  Theory t = parse_theory(text);
  if (t.clauses().size() != 1) throw Error("expected exactly one clause");
  return t.clauses()[0];
}

std::string to_string(const Literal& literal) {
  std::string out = literal.predicate + "(";
  for (std::size_t i = 0; i < literal.args.size(); ++i) {
    if (i) out += ",";
    out += literal.args[i].name;
  }
  return out + ")";
}

std::string to_string(const Clause& clause) {
  std::string out = to_string(clause.head) + ":-";
  for (std::size_t i = 0; i < clause.body.size(); ++i) {
    if (i) out += ",";
    out += to_string(clause.body[i]);
  }
  if (clause.weight_tag) out += " {" + *clause.weight_tag + "}";
  return out + ".";
}

std::string to_string(const Theory& theory) {
  std::string out;
  for (const Target& t : theory.targets) {
    out += ":- target " + t.predicate + "/" + std::string(to_string(t.mode)) + ".\n";
  }
  for (const Clause& c : theory.clauses()) out += to_string(c) + "\n";
  return out;
}

namespace {

Literal assign_literal(const std::string& constant, const std::string& var, SourcePos pos) {
  return Literal{std::string(kAssignPrefix) + constant, {Term::variable(var)}, pos};
}

}  // namespace

Clause desugar(const Clause& clause) {
  std::set<std::string> used;
  auto collect = [&](const Literal& l) {
    for (const Term& t : l.args) {
      if (t.is_variable()) used.insert(t.name);
    }
  };
  collect(clause.head);
  for (const Literal& l : clause.body) collect(l);

  int counter = 0;
  auto fresh = [&] {
    std::string name;
    do {
      name = "_A" + std::to_string(++counter);
    } while (used.contains(name));
    used.insert(name);
    return name;
  };

  Clause out;
  out.pos = clause.pos;
  out.rule_id = clause.rule_id;
  out.head = clause.head;

  std::vector<Literal> head_assigns;
  for (Term& t : out.head.args) {
    if (!t.is_variable()) {
      std::string v = fresh();
      head_assigns.push_back(assign_literal(t.name, v, out.head.pos));
      t = Term::variable(v);
    }
  }

  std::vector<Literal> body;
  for (const Literal& lit : clause.body) {
    if (lit.predicate == "assign") {
      if (lit.args.size() != 2 || !lit.args[0].is_variable() || lit.args[1].is_variable()) {
        throw ParseError(std::to_string(lit.pos.line) + ":" + std::to_string(lit.pos.column) +
                             ": assign expects (Variable, constant)",
                         lit.pos.line, lit.pos.column);
      }
      body.push_back(assign_literal(lit.args[1].name, lit.args[0].name, lit.pos));
      continue;
    }
    Literal rewritten = lit;
    if (!is_assign_predicate(lit.predicate)) {
      for (Term& t : rewritten.args) {
        if (!t.is_variable()) {
          std::string v = fresh();
          body.push_back(assign_literal(t.name, v, lit.pos));
          t = Term::variable(v);
        }
      }
    }
    body.push_back(std::move(rewritten));
  }

  if (clause.weight_tag) {
    std::string r = fresh();
    out.body.push_back(assign_literal(*clause.weight_tag, r, clause.pos));
    out.body.push_back(Literal{std::string(kWeightedPredicate), {Term::variable(r)}, clause.pos});
    out.rule_id = clause.weight_tag;
  }
  for (auto& l : head_assigns) out.body.push_back(std::move(l));
  for (auto& l : body) out.body.push_back(std::move(l));
  return out;
}

Theory desugar(const Theory& theory) {
  Theory out;
  out.targets = theory.targets;
  for (const Clause& c : theory.clauses()) out.add(desugar(c));
  return out;
}

void register_theory_symbols(const Theory& desugared, KnowledgeBase& kb) {
  for (const Clause& c : desugared.clauses()) {
    for (const Literal& l : c.body) {
      if (is_assign_predicate(l.predicate)) kb.intern(assign_constant(l.predicate));
    }
  }
  for (const Clause& c : desugared.clauses()) {
    if (!c.rule_id) continue;
    if (auto id = kb.find_fact(kWeightedPredicate, *c.rule_id)) {
      kb.mark_tagged(*id);
    } else {
      kb.add_fact(kWeightedPredicate, *c.rule_id, std::nullopt, 1.0, /*tagged=*/true);
    }
  }
}

std::vector<Diagnostic> validate(const Theory& theory, const KnowledgeBase& kb) {
  std::vector<Diagnostic> out;
  auto error = [&](SourcePos pos, std::string msg) {
    out.push_back({Diagnostic::Severity::error, pos, std::move(msg)});
  };
  auto warning = [&](SourcePos pos, std::string msg) {
    out.push_back({Diagnostic::Severity::warning, pos, std::move(msg)});
  };

  for (const Clause& c : theory.clauses()) {
    const std::size_t before = out.size();
    const Literal& head = c.head;
    if (head.arity() != 2) {
      error(head.pos, "head '" + to_string(head) +
                          "' must be binary; only p(c,Y) and p(Y,c) queries can be compiled");
    }
    if (c.weight_tag) error(c.pos, "clause has an unexpanded rule tag; desugar it first");

    std::map<std::string, int> body_count;
    for (const Literal& l : c.body) {
      for (const Term& t : l.args) {
        if (t.is_variable()) ++body_count[t.name];
      }
    }

    std::set<std::string> seen;
    for (const Term& t : head.args) {
      if (!t.is_variable()) {
        error(head.pos, "constant '" + t.name + "' in head; desugar the clause first");
        continue;
      }
      if (!seen.insert(t.name).second) {
        error(head.pos, "repeated head variable " + t.name + "; head variables must be distinct");
      } else if (!body_count.contains(t.name)) {
        error(head.pos, "head variable " + t.name + " does not appear in the body");
      }
    }

    for (const Literal& l : c.body) {
      if (l.predicate == "assign") {
        error(l.pos, "assign literal not desugared");
        continue;
      }
      if (is_assign_predicate(l.predicate)) {
        if (l.arity() != 1) error(l.pos, "'" + l.predicate + "' is unary");
        if (!kb.symbols().contains(assign_constant(l.predicate))) {
          error(l.pos, "constant '" + std::string(assign_constant(l.predicate)) + "' is not interned");
        }
        continue;
      }
      for (const Term& t : l.args) {
        if (!t.is_variable()) {
          error(l.pos, "constant '" + t.name + "' outside an assign literal; desugar the clause first");
        }
      }
      int expected = 0;
      if (l.predicate == kAnyPredicate) {
        expected = 2;
      } else if (theory.defines(l.predicate)) {
        expected = static_cast<int>(theory.clauses()[theory.clauses_for(l.predicate)[0]].head.arity());
      } else if (kb.is_stored(l.predicate)) {
        expected = kb.arity(l.predicate);
      } else {
        error(l.pos, "undefined predicate '" + l.predicate + "'");
        continue;
      }
      if (kb.is_stored(l.predicate) && theory.defines(l.predicate) &&
          kb.arity(l.predicate) != expected) {
        error(l.pos, "predicate '" + l.predicate + "' has different arities in facts and rules");
      }
      if (static_cast<int>(l.arity()) != expected) {
        error(l.pos, "predicate '" + l.predicate + "' used with arity " + std::to_string(l.arity()) +
                         ", expected " + std::to_string(expected));
      }
    }

    std::set<std::string> head_vars;
    for (const Term& t : head.args) head_vars.insert(t.name);
    for (const auto& [name, count] : body_count) {
      if (count == 1 && !head_vars.contains(name)) {
        warning(c.pos, "variable " + name + " occurs only once in '" + to_string(c) + "'");
      }
    }

    if (out.size() == before || !has_errors(std::span(out).subspan(before))) {
      FactorGraph g = connect_components(build_factor_graph(c, Mode::io));
      if (auto cycle = find_cycle(g)) {
        std::string vars;
        for (const auto& v : *cycle) vars += (vars.empty() ? "" : ", ") + v;
        error(c.pos, "clause graph of '" + to_string(c) + "' is not a tree (cycle through " + vars + ")");
      }
    }
  }

  for (const Target& t : theory.targets) {
    if (!theory.defines(t.predicate) && kb.arity(t.predicate) != 2) {
      error({}, "target '" + t.predicate + "' is not a binary predicate of the theory or KB");
    }
  }
  return out;
}

Program prepare_program(std::string_view rules_text, KnowledgeBase kb, std::string_view rules_file) {
  return prepare_program(parse_theory(rules_text), std::move(kb), rules_file);
}

Program prepare_program(const Theory& parsed, KnowledgeBase kb, std::string_view rules_file) {
  Program program;
  program.theory = desugar(parsed);
  register_theory_symbols(program.theory, kb);
  auto diagnostics = validate(program.theory, kb);
  if (has_errors(diagnostics)) {
    std::string msg;
    for (const auto& d : diagnostics) {
      if (d.severity == Diagnostic::Severity::error) msg += (msg.empty() ? "" : "\n") + d.format(rules_file);
    }
    throw CompileError(msg);
  }
  for (auto& d : diagnostics) program.warnings.push_back(std::move(d));
  program.kb = std::move(kb);
  return program;
}

}  // namespace dtlog
