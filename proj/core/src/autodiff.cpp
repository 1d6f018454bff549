#include "dtlog/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dtlog/error.hpp"
#include "dtlog/random.hpp"

namespace dtlog {

std::vector<FactId> ParamGradients::support() const {
  std::vector<FactId> out;
  for (std::size_t i = 0; i < by_fact.size(); ++i) {
    if (by_fact[i] != 0.0) out.push_back(static_cast<FactId>(i));
  }
  return out;
}

ParamGradients& ParamGradients::operator+=(const ParamGradients& other) {
  if (by_fact.size() < other.by_fact.size()) by_fact.resize(other.by_fact.size(), 0.0);
  for (std::size_t i = 0; i < other.by_fact.size(); ++i) by_fact[i] += other.by_fact[i];
  return *this;
}

namespace {

class Adjoints {
 public:
  Adjoints(std::size_t slots, std::size_t dim) : dim_(dim), adj_(slots) {}

  std::vector<double>& at(int slot) {
    auto& a = adj_[static_cast<std::size_t>(slot)];
    if (a.empty()) a.assign(dim_, 0.0);
    return a;
  }
  // Null when nothing has flowed into the slot yet.
  const std::vector<double>* find(int slot) const {
    const auto& a = adj_[static_cast<std::size_t>(slot)];
    return a.empty() ? nullptr : &a;
  }

 private:
  std::size_t dim_;
  std::vector<std::vector<double>> adj_;
};

}  // namespace

ParamGradients backprop(const Tape& tape, std::span<const double> out_grad, const KnowledgeBase& kb) {
  if (!tape.retained) throw EvalError("backprop needs a tape evaluated with retention on");
  const std::size_t dim = kb.dim();
  if (out_grad.size() != dim) throw EvalError("output gradient has the wrong dimension");

  ParamGradients grads;
  grads.by_fact.assign(kb.fact_count(), 0.0);
  if (tape.output_slot < 0) return grads;

  std::span<const double> theta = kb.weights();
  Adjoints adj(tape.values.size(), dim);
  {
    auto& g = adj.at(tape.output_slot);
    std::copy(out_grad.begin(), out_grad.end(), g.begin());
  }

  for (std::size_t i = tape.ops.size(); i-- > 0;) {
    const Op& o = tape.ops[i];
    const std::vector<double>* gy_ptr = adj.find(destination(o));
    if (!gy_ptr) continue;
    // Copy: the destination slot is never the source slot, but at() may reallocate.
    const std::vector<double> gy = *gy_ptr;
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, op::LoadUnary>) {
            if (is_assign_predicate(x.predicate)) return;
            for (FactId f : kb.facts_of(x.predicate)) {
              grads.by_fact[f] += gy[kb.fact(f).arg0];
            }
          } else if constexpr (std::is_same_v<T, op::VecMatMul>) {
            auto& gx = adj.at(x.src);
            const SparseVector& xv = tape.values[x.src];
            if (x.predicate == kAnyPredicate) {
              double s = std::accumulate(gy.begin(), gy.end(), 0.0);
              for (double& v : gx) v += s;
              return;
            }
            const SparsePattern& p = kb.pattern(x.predicate, x.transposed);
            for (std::size_t a = 0; a < p.rows; ++a) {
              double ga = 0.0;
              for (std::size_t k = p.row_ptr[a]; k < p.row_ptr[a + 1]; ++k) {
                ga += theta[p.fact[k]] * gy[p.col[k]];
              }
              gx[a] += ga;
            }
            for (const auto& e : xv.entries()) {
              for (std::size_t k = p.row_ptr[e.id]; k < p.row_ptr[e.id + 1]; ++k) {
                grads.by_fact[p.fact[k]] += e.value * gy[p.col[k]];
              }
            }
          } else if constexpr (std::is_same_v<T, op::Hadamard>) {
            if (x.srcs.size() == 1) {
              auto& gx = adj.at(x.srcs[0]);
              for (std::size_t k = 0; k < dim; ++k) gx[k] += gy[k];
              return;
            }
            std::vector<std::vector<double>> dense;
            dense.reserve(x.srcs.size());
            for (Reg r : x.srcs) dense.push_back(tape.values[r].to_dense());
            for (std::size_t j = 0; j < x.srcs.size(); ++j) {
              auto& gx = adj.at(x.srcs[j]);
              for (std::size_t k = 0; k < dim; ++k) {
                if (gy[k] == 0.0) continue;
                double prod = gy[k];
                for (std::size_t m = 0; m < dense.size() && prod != 0.0; ++m) {
                  if (m != j) prod *= dense[m][k];
                }
                gx[k] += prod;
              }
            }
          } else if constexpr (std::is_same_v<T, op::Add>) {
            for (Reg r : {x.lhs, x.rhs}) {
              auto& g = adj.at(r);
              for (std::size_t k = 0; k < dim; ++k) g[k] += gy[k];
            }
          } else if constexpr (std::is_same_v<T, op::ScaleByNorm>) {
            const SparseVector& xv = tape.values[x.src];
            const double norm = tape.values[x.norm_of].l1_norm();
            {
              auto& gx = adj.at(x.src);
              for (std::size_t k = 0; k < dim; ++k) gx[k] += gy[k] * norm;
            }
            double s = 0.0;
            for (const auto& e : xv.entries()) s += gy[e.id] * e.value;
            if (s != 0.0) {
              auto& gz = adj.at(x.norm_of);
              for (double& v : gz) v += s;
            }
          }
          // LoadInput, LoadOnes and zero-function calls carry no parameters.
        },
        o);
  }
  return grads;
}

ParamGradients backprop(const Tape& tape, const SparseVector& out_grad, const KnowledgeBase& kb) {
  std::vector<double> dense = out_grad.to_dense();
  return backprop(tape, dense, kb);
}

std::vector<FactId> touched_facts(const Tape& tape, const KnowledgeBase& kb) {
  std::set<FactId> out;
  for (const Op& o : tape.ops) {
    if (const auto* u = std::get_if<op::LoadUnary>(&o)) {
      if (is_assign_predicate(u->predicate)) continue;
      for (FactId f : kb.facts_of(u->predicate)) out.insert(f);
    } else if (const auto* m = std::get_if<op::VecMatMul>(&o)) {
      if (m->predicate == kAnyPredicate) continue;
      const SparsePattern& p = kb.pattern(m->predicate, m->transposed);
      for (const auto& e : tape.values[m->src].entries()) {
        for (std::size_t k = p.row_ptr[e.id]; k < p.row_ptr[e.id + 1]; ++k) out.insert(p.fact[k]);
      }
    }
  }
  return {out.begin(), out.end()};
}

double grad_check(const FunctionRegistry& registry, const KnowledgeBase& kb, const FunctionKey& key,
                  const SparseVector& input, const GradCheckOptions& options) {
  Rng rng(options.seed);
  std::vector<double> w(kb.dim());
  for (double& v : w) v = rng.uniform(0.5, 1.5);

  EvalResult fwd = eval_function(registry, kb, key, input, {.retain_tape = true});
  ParamGradients analytic = backprop(fwd.tape, w, kb);

  std::vector<FactId> candidates;
  for (FactId f : touched_facts(fwd.tape, kb)) {
    if (kb.get_weight(f) >= 2 * options.step) candidates.push_back(f);
  }
  rng.shuffle(candidates.begin(), candidates.end());
  if (candidates.size() > static_cast<std::size_t>(std::max(options.directions, 0))) {
    candidates.resize(static_cast<std::size_t>(std::max(options.directions, 0)));
  }

  KnowledgeBase probe = kb;
  auto functional = [&] {
    SparseVector g = eval_function(registry, probe, key, input).output;
    double s = 0.0;
    for (const auto& e : g.entries()) s += w[e.id] * e.value;
    return s;
  };
  double worst = 0.0;
  for (FactId f : candidates) {
    const double theta = kb.get_weight(f);
    probe.set_weight(f, theta + options.step);
    const double up = functional();
    probe.set_weight(f, theta - options.step);
    const double down = functional();
    probe.set_weight(f, theta);
    const double numeric = (up - down) / (2 * options.step);
    const double err = std::abs(analytic[f] - numeric) / std::max(std::abs(numeric), 1e-8);
    worst = std::max(worst, err);
  }
  // Every untouched parameter must have an exactly zero gradient.
  std::vector<FactId> touched = touched_facts(fwd.tape, kb);
  for (FactId f : analytic.support()) {
    if (!std::binary_search(touched.begin(), touched.end(), f)) {
      worst = std::max(worst, std::abs(analytic[f]) / 1e-8);
    }
  }
  return worst;
}

}  // namespace dtlog
