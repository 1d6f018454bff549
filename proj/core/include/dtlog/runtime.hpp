#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dtlog/compiler.hpp"
#include "dtlog/kb.hpp"
#include "dtlog/sparse.hpp"

namespace dtlog {

// An argument-retrieval query p(c,Y) (io) or p(Y,c) (oi).
struct Query {
  std::string predicate;
  Mode mode = Mode::io;
  std::string constant;

  bool operator==(const Query&) const = default;
};

Query parse_query(std::string_view text);
std::string to_string(const Query& q);

// Forward trace of one evaluation with calls inlined. Every executed register
// owns a slot; ops are stored with their registers rewritten to slots, in
// execution order. A call into a compiled function shows up as two copies
// (argument into the callee input, callee output into the caller); a call past
// the depth bound stays a Call op whose slot holds the zero vector.
struct Tape {
  bool retained = false;
  std::vector<SparseVector> values;
  std::vector<Op> ops;
  // The frame (index into frames) that executed each op.
  std::vector<int> op_frame;
  std::vector<FunctionKey> frames;
  int input_slot = -1;
  int output_slot = -1;
};

struct EvalOptions {
  bool retain_tape = false;
};

struct EvalResult {
  SparseVector output;
  Tape tape;
};

// Throws EvalError when any function reachable from `key` references a
// predicate the KB cannot supply with the required arity.
void preflight(const FunctionRegistry& registry, const KnowledgeBase& kb, const FunctionKey& key);

EvalResult eval_function(const FunctionRegistry& registry, const KnowledgeBase& kb,
                         const FunctionKey& key, const SparseVector& input,
                         const EvalOptions& options = {});

struct QueryResponse {
  Query query;
  SparseVector distribution;
  SparseVector unnormalized;
  double norm = 0.0;
};

QueryResponse respond(const FunctionRegistry& registry, const KnowledgeBase& kb, const Query& query);
QueryResponse respond(const FunctionRegistry& registry, const KnowledgeBase& kb,
                      std::string_view query);

// Answers sorted by descending score, ties by constant id.
std::vector<SparseVector::Entry> ranked(const SparseVector& v);

}  // namespace dtlog
