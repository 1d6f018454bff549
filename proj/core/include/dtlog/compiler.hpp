#pragma once

#include <compare>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "dtlog/factor_graph.hpp"
#include "dtlog/kb.hpp"
#include "dtlog/parser.hpp"

namespace dtlog {

using Reg = int;

struct FunctionKey {
  std::string predicate;
  Mode mode = Mode::io;
  int depth = 0;

  auto operator<=>(const FunctionKey&) const = default;
  bool operator==(const FunctionKey&) const = default;
};

std::string to_string(const FunctionKey& key);

namespace op {

struct LoadInput {
  Reg dst;
};
// v_q for a stored unary predicate or assign_c.
struct LoadUnary {
  Reg dst;
  std::string predicate;
};
struct LoadOnes {
  Reg dst;
};
// dst = src · M_pred (or M_pred^T).
struct VecMatMul {
  Reg dst;
  Reg src;
  std::string predicate;
  bool transposed = false;
};
// Component-wise product; a single source is a copy.
struct Hadamard {
  Reg dst;
  std::vector<Reg> srcs;
};
struct Add {
  Reg dst;
  Reg lhs;
  Reg rhs;
};
// dst = src · ||norm_of||_1, the closed form of src ∘ (norm_of · M_any).
struct ScaleByNorm {
  Reg dst;
  Reg src;
  Reg norm_of;
};
struct Call {
  Reg dst;
  Reg src;
  FunctionKey callee;
};

}  // namespace op

using Op = std::variant<op::LoadInput, op::LoadUnary, op::LoadOnes, op::VecMatMul, op::Hadamard,
                        op::Add, op::ScaleByNorm, op::Call>;

Reg destination(const Op& o);
std::vector<Reg> sources(const Op& o);
std::string to_string(const Op& o);

// A straight-line single-assignment register program computing the
// unnormalized response g for one (predicate, mode, depth).
struct CompiledFunction {
  FunctionKey key;
  Reg input_reg = 0;
  Reg output_reg = 0;
  int register_count = 0;
  std::vector<Op> ops;
};

// Throws CompileError unless every register is written once, before use, and
// the output register is written.
void verify_single_assignment(const CompiledFunction& fn);

std::string format_function(const CompiledFunction& fn);

class FunctionRegistry {
 public:
  explicit FunctionRegistry(int max_depth = 0) : max_depth_(max_depth) {}

  int max_depth() const { return max_depth_; }
  // nullptr when the key is not compiled (depth beyond max_depth means zero function).
  const CompiledFunction* find(const FunctionKey& key) const;
  bool contains(const FunctionKey& key) const { return functions_.contains(key); }
  void insert(CompiledFunction fn);
  const std::map<FunctionKey, CompiledFunction>& functions() const { return functions_; }
  std::size_t size() const { return functions_.size(); }

 private:
  int max_depth_;
  std::map<FunctionKey, CompiledFunction> functions_;
};

struct CompileOptions {
  bool eliminate_any = true;
};

// Unrolls BP on a tree-shaped clause graph into an op sequence. Body literals
// whose predicate the theory defines become calls at depth + 1.
CompiledFunction compile_clause(const FactorGraph& graph, const Theory& theory, int depth);

// Sums the clause functions of `predicate` (and its stored matrix, when facts
// for it exist too) with left-associated Adds.
CompiledFunction compile_predicate(const Theory& theory, const KnowledgeBase& kb,
                                   const std::string& predicate, Mode mode, int depth,
                                   const CompileOptions& options = {});

// Compiles every (predicate, mode, depth <= max_depth) reachable from the
// targets. Calls deeper than max_depth resolve to the zero function.
FunctionRegistry compile_program(const Theory& theory, const KnowledgeBase& kb,
                                 const std::vector<Target>& targets, int max_depth,
                                 const CompileOptions& options = {});

// Rewrites x ∘ (y · M_any) into ScaleByNorm(x, y); leftover any-products become
// ScaleByNorm(ones, y). No op referencing `any` remains.
CompiledFunction eliminate_any(const CompiledFunction& fn);

}  // namespace dtlog
