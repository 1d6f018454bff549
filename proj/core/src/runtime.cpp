#include "dtlog/runtime.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "dtlog/error.hpp"

namespace dtlog {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

}  // namespace

Query parse_query(std::string_view text) {
  std::string_view s = trim(text);
  if (!s.empty() && s.back() == '.') s = trim(s.substr(0, s.size() - 1));
  auto fail = [&](const std::string& msg) -> Query {
    throw ParseError("query '" + std::string(text) + "': " + msg, 1, 1);
  };
  auto open = s.find('(');
  if (open == std::string_view::npos || s.back() != ')') return fail("expected pred(arg,arg)");
  std::string_view pred = trim(s.substr(0, open));
  std::string_view args = s.substr(open + 1, s.size() - open - 2);
  auto comma = args.find(',');
  if (comma == std::string_view::npos) return fail("expected two arguments");
  std::string_view a = trim(args.substr(0, comma));
  std::string_view b = trim(args.substr(comma + 1));
  if (!is_identifier(pred) || is_variable_name(pred)) return fail("bad predicate name");
  if (!is_identifier(a) || !is_identifier(b)) return fail("bad argument");
  const bool va = is_variable_name(a);
  const bool vb = is_variable_name(b);
  if (va == vb) return fail("exactly one argument must be a variable");
  return va ? Query{std::string(pred), Mode::oi, std::string(b)}
            : Query{std::string(pred), Mode::io, std::string(a)};
}

std::string to_string(const Query& q) {
  return q.mode == Mode::io ? q.predicate + "(" + q.constant + ",Y)"
                            : q.predicate + "(Y," + q.constant + ")";
}

void preflight(const FunctionRegistry& registry, const KnowledgeBase& kb, const FunctionKey& key) {
  std::set<FunctionKey> seen;
  std::vector<const CompiledFunction*> stack;
  if (const auto* fn = registry.find(key)) {
    seen.insert(key);
    stack.push_back(fn);
  }
  while (!stack.empty()) {
    const CompiledFunction* fn = stack.back();
    stack.pop_back();
    for (const Op& o : fn->ops) {
      if (const auto* u = std::get_if<op::LoadUnary>(&o)) {
        if (kb.arity(u->predicate) != 1) {
          throw EvalError("no unary facts for '" + u->predicate + "' (needed by " +
                          to_string(fn->key) + ")");
        }
      } else if (const auto* m = std::get_if<op::VecMatMul>(&o)) {
        if (m->predicate != kAnyPredicate &&
            (!kb.is_stored(m->predicate) || kb.arity(m->predicate) != 2)) {
          throw EvalError("no binary facts for '" + m->predicate + "' (needed by " +
                          to_string(fn->key) + ")");
        }
      } else if (const auto* c = std::get_if<op::Call>(&o)) {
        if (c->callee.depth > registry.max_depth()) continue;
        const auto* callee = registry.find(c->callee);
        if (!callee) throw EvalError("function " + to_string(c->callee) + " is not compiled");
        if (seen.insert(c->callee).second) stack.push_back(callee);
      }
    }
  }
}

namespace {

class Evaluator {
 public:
  Evaluator(const FunctionRegistry& registry, const KnowledgeBase& kb, Tape* tape)
      : registry_(registry), kb_(kb), tape_(tape), dim_(kb.dim()) {}

  SparseVector call(const CompiledFunction& fn, const SparseVector& input, int src_slot,
                    int& out_slot) {
    int base = 0;
    int frame = 0;
    if (tape_) {
      base = static_cast<int>(tape_->values.size());
      tape_->values.resize(tape_->values.size() + static_cast<std::size_t>(fn.register_count));
      frame = static_cast<int>(tape_->frames.size());
      tape_->frames.push_back(fn.key);
    }
    auto slot = [base](Reg r) { return base + r; };
    auto record = [&](Op o) {
      if (!tape_) return;
      tape_->ops.push_back(std::move(o));
      tape_->op_frame.push_back(frame);
    };
    auto record_remapped = [&](const Op& o) {
      if (!tape_) return;
      record(std::visit(
          [&](auto x) -> Op {
            using T = std::decay_t<decltype(x)>;
            x.dst = slot(x.dst);
            if constexpr (std::is_same_v<T, op::VecMatMul> || std::is_same_v<T, op::Call>) {
              x.src = slot(x.src);
            } else if constexpr (std::is_same_v<T, op::Hadamard>) {
              for (Reg& r : x.srcs) r = slot(r);
            } else if constexpr (std::is_same_v<T, op::Add>) {
              x.lhs = slot(x.lhs);
              x.rhs = slot(x.rhs);
            } else if constexpr (std::is_same_v<T, op::ScaleByNorm>) {
              x.src = slot(x.src);
              x.norm_of = slot(x.norm_of);
            }
            return x;
          },
          o));
    };

    std::vector<SparseVector> regs(static_cast<std::size_t>(fn.register_count));
    for (const Op& o : fn.ops) {
      std::visit(
          [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, op::LoadInput>) {
              regs[x.dst] = input;
              if (tape_) {
                if (src_slot >= 0) {
                  record(op::Hadamard{slot(x.dst), {src_slot}});
                } else {
                  tape_->input_slot = slot(x.dst);
                }
              }
            } else if constexpr (std::is_same_v<T, op::LoadUnary>) {
              regs[x.dst] = kb_.unary(x.predicate);
              record_remapped(o);
            } else if constexpr (std::is_same_v<T, op::LoadOnes>) {
              regs[x.dst] = SparseVector::ones(dim_);
              record_remapped(o);
            } else if constexpr (std::is_same_v<T, op::VecMatMul>) {
              regs[x.dst] = x.predicate == kAnyPredicate
                                ? vec_ones_matrix(regs[x.src])
                                : vec_mat(regs[x.src], kb_.matrix(x.predicate, x.transposed));
              record_remapped(o);
            } else if constexpr (std::is_same_v<T, op::Hadamard>) {
              std::vector<const SparseVector*> operands;
              operands.reserve(x.srcs.size());
              for (Reg r : x.srcs) operands.push_back(&regs[r]);
              regs[x.dst] = hadamard(operands);
              record_remapped(o);
            } else if constexpr (std::is_same_v<T, op::Add>) {
              regs[x.dst] = add(regs[x.lhs], regs[x.rhs]);
              record_remapped(o);
            } else if constexpr (std::is_same_v<T, op::ScaleByNorm>) {
              regs[x.dst] = scale(regs[x.src], regs[x.norm_of].l1_norm());
              record_remapped(o);
            } else {
              const CompiledFunction* callee =
                  x.callee.depth > registry_.max_depth() ? nullptr : registry_.find(x.callee);
              if (!callee) {
                regs[x.dst] = SparseVector(dim_);
                record_remapped(o);
              } else {
                int callee_out = -1;
                regs[x.dst] = call(*callee, regs[x.src], slot(x.src), callee_out);
                record(op::Hadamard{slot(x.dst), {callee_out}});
              }
            }
          },
          o);
    }
    out_slot = slot(fn.output_reg);
    SparseVector result = regs[fn.output_reg];
    if (tape_) {
      for (std::size_t r = 0; r < regs.size(); ++r) {
        tape_->values[static_cast<std::size_t>(base) + r] = std::move(regs[r]);
      }
    }
    return result;
  }

 private:
  const FunctionRegistry& registry_;
  const KnowledgeBase& kb_;
  Tape* tape_;
  std::size_t dim_;
};

}  // namespace

EvalResult eval_function(const FunctionRegistry& registry, const KnowledgeBase& kb,
                         const FunctionKey& key, const SparseVector& input,
                         const EvalOptions& options) {
  if (input.dim() != kb.dim()) {
    throw EvalError("input dimension " + std::to_string(input.dim()) + " does not match " +
                    std::to_string(kb.dim()) + " constants");
  }
  EvalResult result;
  result.tape.retained = options.retain_tape;
  const CompiledFunction* fn = registry.find(key);
  if (!fn) {
    if (key.depth <= registry.max_depth()) {
      throw EvalError("function " + to_string(key) + " is not compiled");
    }
    result.output = SparseVector(kb.dim());
    return result;
  }
  preflight(registry, kb, key);
  Evaluator ev(registry, kb, options.retain_tape ? &result.tape : nullptr);
  int out_slot = -1;
  result.output = ev.call(*fn, input, -1, out_slot);
  if (options.retain_tape) result.tape.output_slot = out_slot;
  return result;
}

QueryResponse respond(const FunctionRegistry& registry, const KnowledgeBase& kb, const Query& query) {
  FunctionKey key{query.predicate, query.mode, 0};
  if (!registry.find(key)) {
    throw EvalError("no compiled function for " + query.predicate + "/" +
                    std::string(to_string(query.mode)));
  }
  ConstantId c = kb.constant_id(query.constant);
  QueryResponse r;
  r.query = query;
  r.unnormalized = eval_function(registry, kb, key, SparseVector::one_hot(kb.dim(), c)).output;
  r.norm = r.unnormalized.l1_norm();
  r.distribution = r.norm > 0 ? scale(r.unnormalized, 1.0 / r.norm) : SparseVector(kb.dim());
  return r;
}

QueryResponse respond(const FunctionRegistry& registry, const KnowledgeBase& kb,
                      std::string_view query) {
  return respond(registry, kb, parse_query(query));
}

std::vector<SparseVector::Entry> ranked(const SparseVector& v) {
  std::vector<SparseVector::Entry> out(v.entries().begin(), v.entries().end());
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.value > b.value;
  });
  return out;
}

}  // namespace dtlog
