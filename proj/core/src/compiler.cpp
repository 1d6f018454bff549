#include "dtlog/compiler.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>

#include "dtlog/error.hpp"

namespace dtlog {

std::string to_string(const FunctionKey& key) {
  return key.predicate + "/" + std::string(to_string(key.mode)) + "/" + std::to_string(key.depth);
}

Reg destination(const Op& o) {
  return std::visit([](const auto& x) { return x.dst; }, o);
}

std::vector<Reg> sources(const Op& o) {
  return std::visit(
      [](const auto& x) -> std::vector<Reg> {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, op::VecMatMul> || std::is_same_v<T, op::Call>) {
          return {x.src};
        } else if constexpr (std::is_same_v<T, op::Hadamard>) {
          return x.srcs;
        } else if constexpr (std::is_same_v<T, op::Add>) {
          return {x.lhs, x.rhs};
        } else if constexpr (std::is_same_v<T, op::ScaleByNorm>) {
          return {x.src, x.norm_of};
        } else {
          return {};
        }
      },
      o);
}

namespace {

std::string reg(Reg r) { return "v" + std::to_string(r); }

template <class F>
Op remap(const Op& o, F&& map) {
  return std::visit(
      [&](auto x) -> Op {
        using T = std::decay_t<decltype(x)>;
        x.dst = map(x.dst);
        if constexpr (std::is_same_v<T, op::VecMatMul> || std::is_same_v<T, op::Call>) {
          x.src = map(x.src);
        } else if constexpr (std::is_same_v<T, op::Hadamard>) {
          for (Reg& r : x.srcs) r = map(r);
        } else if constexpr (std::is_same_v<T, op::Add>) {
          x.lhs = map(x.lhs);
          x.rhs = map(x.rhs);
        } else if constexpr (std::is_same_v<T, op::ScaleByNorm>) {
          x.src = map(x.src);
          x.norm_of = map(x.norm_of);
        }
        return x;
      },
      o);
}

}  // namespace

std::string to_string(const Op& o) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        std::string lhs = reg(x.dst) + " = ";
        if constexpr (std::is_same_v<T, op::LoadInput>) {
          return lhs + "input";
        } else if constexpr (std::is_same_v<T, op::LoadUnary>) {
          return lhs + "V[" + x.predicate + "]";
        } else if constexpr (std::is_same_v<T, op::LoadOnes>) {
          return lhs + "ones";
        } else if constexpr (std::is_same_v<T, op::VecMatMul>) {
          return lhs + reg(x.src) + " @ M[" + x.predicate + "]" + (x.transposed ? "^T" : "");
        } else if constexpr (std::is_same_v<T, op::Hadamard>) {
          std::string rhs;
          for (Reg r : x.srcs) rhs += (rhs.empty() ? "" : " * ") + reg(r);
          return lhs + rhs;
        } else if constexpr (std::is_same_v<T, op::Add>) {
          return lhs + reg(x.lhs) + " + " + reg(x.rhs);
        } else if constexpr (std::is_same_v<T, op::ScaleByNorm>) {
          return lhs + reg(x.src) + " * ||" + reg(x.norm_of) + "||";
        } else {
          return lhs + "call " + to_string(x.callee) + " (" + reg(x.src) + ")";
        }
      },
      o);
}

void verify_single_assignment(const CompiledFunction& fn) {
  std::vector<char> written(static_cast<std::size_t>(fn.register_count), 0);
  auto where = [&] { return " in " + to_string(fn.key); };
  for (const Op& o : fn.ops) {
    for (Reg s : sources(o)) {
      if (s < 0 || s >= fn.register_count || !written[s]) {
        throw CompileError("register " + reg(s) + " read before it is written" + where());
      }
    }
    Reg d = destination(o);
    if (d < 0 || d >= fn.register_count) throw CompileError("register out of range" + where());
    if (written[d]) throw CompileError("register " + reg(d) + " written twice" + where());
    written[d] = 1;
  }
  if (fn.output_reg < 0 || fn.output_reg >= fn.register_count || !written[fn.output_reg]) {
    throw CompileError("output register is never written" + where());
  }
}

std::string format_function(const CompiledFunction& fn) {
  std::ostringstream out;
  out << "function " << to_string(fn.key) << " (" << reg(fn.input_reg) << ") -> "
      << reg(fn.output_reg) << "\n";
  for (const Op& o : fn.ops) out << "  " << to_string(o) << "\n";
  out << "  return " << reg(fn.output_reg) << "\n";
  return out.str();
}

const CompiledFunction* FunctionRegistry::find(const FunctionKey& key) const {
  auto it = functions_.find(key);
  return it == functions_.end() ? nullptr : &it->second;
}

void FunctionRegistry::insert(CompiledFunction fn) {
  FunctionKey key = fn.key;
  functions_.insert_or_assign(std::move(key), std::move(fn));
}

namespace {

// Message scheduling follows the recursive variable/literal message pair:
// a variable's outgoing message multiplies the messages of its other factors;
// a factor's message to X multiplies the message from its other variable by
// M_p (X in output slot) or M_p^T (X in input slot). For each variable, the
// upstream subtrees are compiled first and the factor messages are then
// emitted in body-literal order.
class ClauseCompiler {
 public:
  ClauseCompiler(const FactorGraph& g, const Theory& theory, int depth)
      : g_(g), theory_(theory), depth_(depth) {}

  CompiledFunction run(const FunctionKey& key) {
    fn_.key = key;
    fn_.input_reg = fresh();
    emit(op::LoadInput{fn_.input_reg});
    fn_.output_reg = var_to_factor(g_.output_var, -1);
    return std::move(fn_);
  }

 private:
  Reg fresh() { return fn_.register_count++; }
  void emit(Op o) { fn_.ops.push_back(std::move(o)); }

  Reg var_to_factor(int var, int exclude) {
    std::vector<int> others;
    for (int f : g_.neighbors(var)) {
      if (f != exclude) others.push_back(f);
    }
    if (var == g_.input_var) {
      // Evidence: u_c combined with whatever else constrains the input variable.
      if (others.empty()) return fn_.input_reg;
      std::vector<Reg> srcs{fn_.input_reg};
      for (Reg r : factor_messages(var, others)) srcs.push_back(r);
      Reg dst = fresh();
      emit(op::Hadamard{dst, std::move(srcs)});
      return dst;
    }
    if (others.empty()) {
      Reg dst = fresh();
      emit(op::LoadOnes{dst});
      return dst;
    }
    std::vector<Reg> srcs = factor_messages(var, others);
    Reg dst = fresh();
    emit(op::Hadamard{dst, std::move(srcs)});
    return dst;
  }

  std::vector<Reg> factor_messages(int var, const std::vector<int>& factors) {
    std::vector<Reg> upstream(factors.size(), -1);
    for (std::size_t i = 0; i < factors.size(); ++i) {
      const FactorNode& node = g_.factors[factors[i]];
      if (node.unary()) continue;
      int other = node.vars[0] == var ? node.vars[1] : node.vars[0];
      upstream[i] = var_to_factor(other, factors[i]);
    }
    std::vector<Reg> out;
    for (std::size_t i = 0; i < factors.size(); ++i) {
      out.push_back(factor_to_var(factors[i], var, upstream[i]));
    }
    return out;
  }

  Reg factor_to_var(int f, int var, Reg upstream) {
    const FactorNode& node = g_.factors[f];
    Reg dst = fresh();
    if (node.unary()) {
      emit(op::LoadUnary{dst, node.predicate});
      return dst;
    }
    const bool forward = node.vars[1] == var;
    if (node.predicate != kAnyPredicate && theory_.defines(node.predicate)) {
      emit(op::Call{dst, upstream,
                    FunctionKey{node.predicate, forward ? Mode::io : Mode::oi, depth_ + 1}});
    } else {
      emit(op::VecMatMul{dst, upstream, node.predicate, !forward});
    }
    return dst;
  }

  const FactorGraph& g_;
  const Theory& theory_;
  int depth_;
  CompiledFunction fn_;
};

}  // namespace

CompiledFunction compile_clause(const FactorGraph& graph, const Theory& theory, int depth) {
  if (graph.input_var < 0 || graph.output_var < 0) {
    throw CompileError("evidence variable missing from graph of '" + graph.clause_text + "'");
  }
  std::string head = graph.clause_text.substr(0, graph.clause_text.find('('));
  CompiledFunction fn = ClauseCompiler(graph, theory, depth).run(FunctionKey{head, graph.mode, depth});
  verify_single_assignment(fn);
  return fn;
}

CompiledFunction eliminate_any(const CompiledFunction& fn) {
  std::map<Reg, std::vector<std::size_t>> consumers;
  for (std::size_t i = 0; i < fn.ops.size(); ++i) {
    for (Reg s : sources(fn.ops[i])) consumers[s].push_back(i);
  }
  // any-products consumed only by Hadamards fold into ScaleByNorm.
  std::map<Reg, Reg> folded;  // any result -> the vector whose norm it carries
  for (const Op& o : fn.ops) {
    const auto* mm = std::get_if<op::VecMatMul>(&o);
    if (!mm || mm->predicate != kAnyPredicate) continue;
    const auto& users = consumers[mm->dst];
    bool all_hadamard = !users.empty() && std::all_of(users.begin(), users.end(), [&](std::size_t i) {
      return std::holds_alternative<op::Hadamard>(fn.ops[i]);
    });
    if (all_hadamard) folded.emplace(mm->dst, mm->src);
  }

  CompiledFunction out;
  out.key = fn.key;
  out.input_reg = fn.input_reg;
  out.output_reg = fn.output_reg;
  out.register_count = fn.register_count;
  auto fresh = [&] { return out.register_count++; };

  for (const Op& o : fn.ops) {
    if (const auto* mm = std::get_if<op::VecMatMul>(&o); mm && mm->predicate == kAnyPredicate) {
      if (folded.contains(mm->dst)) continue;
      Reg ones = fresh();
      out.ops.push_back(op::LoadOnes{ones});
      out.ops.push_back(op::ScaleByNorm{mm->dst, ones, mm->src});
      continue;
    }
    const auto* h = std::get_if<op::Hadamard>(&o);
    if (!h || std::none_of(h->srcs.begin(), h->srcs.end(), [&](Reg r) { return folded.contains(r); })) {
      out.ops.push_back(o);
      continue;
    }
    std::vector<Reg> rest;
    std::vector<Reg> norms;
    for (Reg r : h->srcs) {
      if (auto it = folded.find(r); it != folded.end()) {
        norms.push_back(it->second);
      } else {
        rest.push_back(r);
      }
    }
    Reg x;
    if (rest.empty()) {
      x = fresh();
      out.ops.push_back(op::LoadOnes{x});
    } else if (rest.size() == 1) {
      x = rest[0];
    } else {
      x = fresh();
      out.ops.push_back(op::Hadamard{x, rest});
    }
    for (std::size_t i = 0; i + 1 < norms.size(); ++i) {
      Reg t = fresh();
      out.ops.push_back(op::ScaleByNorm{t, x, norms[i]});
      x = t;
    }
    out.ops.push_back(op::ScaleByNorm{h->dst, x, norms.back()});
  }
  verify_single_assignment(out);
  return out;
}

CompiledFunction compile_predicate(const Theory& theory, const KnowledgeBase& kb,
                                   const std::string& predicate, Mode mode, int depth,
                                   const CompileOptions& options) {
  CompiledFunction out;
  out.key = FunctionKey{predicate, mode, depth};
  out.input_reg = out.register_count++;
  out.ops.push_back(op::LoadInput{out.input_reg});

  std::vector<Reg> partials;
  if (kb.is_stored(predicate)) {
    if (kb.arity(predicate) != 2) {
      throw CompileError("predicate '" + predicate + "' is unary and cannot be queried");
    }
    Reg r = out.register_count++;
    out.ops.push_back(op::VecMatMul{r, out.input_reg, predicate, mode == Mode::oi});
    partials.push_back(r);
  }
  for (std::size_t idx : theory.clauses_for(predicate)) {
    FactorGraph g = clause_graph(theory.clauses()[idx], mode);
    CompiledFunction cf = compile_clause(g, theory, depth);
    if (options.eliminate_any) cf = eliminate_any(cf);

    std::vector<Reg> mapping(static_cast<std::size_t>(cf.register_count), -1);
    mapping[cf.input_reg] = out.input_reg;
    for (const Op& o : cf.ops) {
      if (std::holds_alternative<op::LoadInput>(o)) continue;
      mapping[destination(o)] = out.register_count++;
    }
    for (const Op& o : cf.ops) {
      if (std::holds_alternative<op::LoadInput>(o)) continue;
      out.ops.push_back(remap(o, [&](Reg r) { return mapping[r]; }));
    }
    partials.push_back(mapping[cf.output_reg]);
  }
  if (partials.empty()) {
    throw UnknownPredicate("undefined predicate '" + predicate +
                           "': no clauses and no stored facts");
  }
  Reg acc = partials[0];
  for (std::size_t i = 1; i < partials.size(); ++i) {
    Reg r = out.register_count++;
    out.ops.push_back(op::Add{r, acc, partials[i]});
    acc = r;
  }
  out.output_reg = acc;
  verify_single_assignment(out);
  return out;
}

FunctionRegistry compile_program(const Theory& theory, const KnowledgeBase& kb,
                                 const std::vector<Target>& targets, int max_depth,
                                 const CompileOptions& options) {
  if (max_depth < 0) throw CompileError("max depth must be non-negative");
  FunctionRegistry registry(max_depth);
  std::deque<FunctionKey> pending;
  std::set<FunctionKey> queued;
  for (const Target& t : targets) {
    FunctionKey key{t.predicate, t.mode, 0};
    if (queued.insert(key).second) pending.push_back(key);
  }
  while (!pending.empty()) {
    FunctionKey key = pending.front();
    pending.pop_front();
    CompiledFunction fn = compile_predicate(theory, kb, key.predicate, key.mode, key.depth, options);
    for (const Op& o : fn.ops) {
      if (const auto* call = std::get_if<op::Call>(&o)) {
        if (call->callee.depth <= max_depth && queued.insert(call->callee).second) {
          pending.push_back(call->callee);
        }
      }
    }
    registry.insert(std::move(fn));
  }
  return registry;
}

}  // namespace dtlog
