#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dtlog/compiler.hpp"
#include "dtlog/kb.hpp"
#include "dtlog/runtime.hpp"

namespace dtlog {

// d(output functional)/d(theta), one entry per fact of the KB.
struct ParamGradients {
  std::vector<double> by_fact;

  double operator[](FactId id) const { return by_fact.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return by_fact.size(); }
  // Facts with a nonzero gradient, in id order.
  std::vector<FactId> support() const;
  ParamGradients& operator+=(const ParamGradients& other);
};

// Reverse pass over a retained tape. out_grad is the adjoint of the output
// register (dense, |C| entries, any sign).
ParamGradients backprop(const Tape& tape, std::span<const double> out_grad, const KnowledgeBase& kb);
ParamGradients backprop(const Tape& tape, const SparseVector& out_grad, const KnowledgeBase& kb);

// Facts whose weight the tape actually read: stored unary loads, and matrix
// entries whose row met a nonzero input.
std::vector<FactId> touched_facts(const Tape& tape, const KnowledgeBase& kb);

struct GradCheckOptions {
  int directions = 20;
  double step = 1e-6;
  std::uint64_t seed = 0;
};

// Compares backprop against central differences for a random positive linear
// functional of the output, on up to `directions` touched parameters. Returns
// the max of |analytic - numeric| / max(|numeric|, 1e-8). Parameters closer
// to zero than two steps are skipped since theta cannot go negative.
double grad_check(const FunctionRegistry& registry, const KnowledgeBase& kb, const FunctionKey& key,
                  const SparseVector& input, const GradCheckOptions& options = {});

}  // namespace dtlog
