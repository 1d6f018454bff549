#include "dtlog/learner.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "dtlog/autodiff.hpp"
#include "dtlog/error.hpp"

namespace dtlog {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

std::vector<ConstantId> resolve(const KnowledgeBase& kb, const Example& ex) {
  std::vector<ConstantId> ids;
  for (const auto& p : ex.positives) ids.push_back(kb.constant_id(p));
  return ids;
}

}  // namespace

std::vector<Example> load_examples(std::string_view text) {
  std::vector<Example> out;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    std::string_view line = strip_cr(text.substr(start, end == std::string_view::npos ? end : end - start));
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    auto fail = [&](const std::string& msg) {
      return ParseError("examples:" + std::to_string(line_no) + ": " + msg, line_no, 1);
    };
    auto cols = split(line, '\t');
    if (cols.size() != 4) throw fail("expected 4 tab-separated columns");
    Example ex;
    ex.query.predicate = std::string(cols[0]);
    try {
      ex.query.mode = parse_mode(cols[1]);
    } catch (const Error& e) {
      throw fail(e.what());
    }
    ex.query.constant = std::string(cols[2]);
    if (ex.query.predicate.empty() || ex.query.constant.empty()) throw fail("empty field");
    std::set<std::string_view> seen;
    for (std::string_view p : split(cols[3], ',')) {
      if (p.empty()) throw fail("empty positive");
      if (!seen.insert(p).second) throw fail("duplicate positive '" + std::string(p) + "'");
      ex.positives.emplace_back(p);
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::string serialize_examples(std::span<const Example> examples) {
  std::ostringstream out;
  for (const auto& ex : examples) {
    out << ex.query.predicate << '\t' << to_string(ex.query.mode) << '\t' << ex.query.constant << '\t';
    for (std::size_t i = 0; i < ex.positives.size(); ++i) out << (i ? "," : "") << ex.positives[i];
    out << '\n';
  }
  return out.str();
}

LossGrad loss_and_grad(const SparseVector& g, std::span<const ConstantId> positives) {
  LossGrad r;
  r.grad.assign(g.dim(), 0.0);
  std::vector<ConstantId> hit;
  for (ConstantId p : positives) {
    if (g.at(p) > 0.0) hit.push_back(p);
  }
  if (hit.empty()) {
    r.loss = kNoSupportLoss;
    return r;
  }
  r.supported = true;
  double mx = 0.0;
  for (const auto& e : g.entries()) mx = std::max(mx, e.value);
  double z = 0.0;
  for (const auto& e : g.entries()) z += std::exp(e.value - mx);
  // Shift before taking logs so huge scores do not cancel.
  const double log_z = std::log(z);
  const double t = 1.0 / static_cast<double>(hit.size());
  for (const auto& e : g.entries()) r.grad[e.id] = std::exp(e.value - mx) / z;
  for (ConstantId p : hit) {
    r.loss -= t * ((g.at(p) - mx) - log_z);
    r.grad[p] -= t;
  }
  return r;
}

std::vector<char> trainable_mask(const KnowledgeBase& kb, const TrainConfig& config) {
  std::vector<char> mask(kb.fact_count(), config.train_all ? 1 : 0);
  for (FactId f = 0; f < static_cast<FactId>(kb.fact_count()); ++f) {
    if (kb.fact(f).tagged) mask[f] = 1;
  }
  for (const auto& pred : config.trainable) {
    if (!kb.is_stored(pred)) throw UnknownPredicate("no facts for trainable predicate '" + pred + "'");
    for (FactId f : kb.facts_of(pred)) mask[f] = 1;
  }
  return mask;
}

ConstantId argmax(const SparseVector& g) {
  ConstantId best = -1;
  double best_value = 0.0;
  for (const auto& e : g.entries()) {
    if (e.value > best_value) {
      best = e.id;
      best_value = e.value;
    }
  }
  return best;
}

TrainResult train(const FunctionRegistry& registry, const KnowledgeBase& kb,
                  std::span<const Example> dataset, const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  if (!(config.learning_rate >= 0.0)) throw Error("learning rate must be non-negative");
  if (config.epochs < 1) throw Error("epochs must be at least 1");
  if (dataset.empty()) throw Error("empty training set");

  TrainResult result{kb, {}};
  KnowledgeBase& model = result.kb;
  const std::vector<char> mask = trainable_mask(model, config);

  std::vector<std::vector<ConstantId>> positives;
  std::vector<SparseVector> inputs;
  for (const auto& ex : dataset) {
    positives.push_back(resolve(model, ex));
    inputs.push_back(SparseVector::one_hot(model.dim(), model.constant_id(ex.query.constant)));
  }

  const double n = static_cast<double>(dataset.size());
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    ParamGradients total;
    total.by_fact.assign(model.fact_count(), 0.0);
    double loss = 0.0;
    int correct = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      const Example& ex = dataset[i];
      EvalResult fwd;
      try {
        fwd = eval_function(registry, model, FunctionKey{ex.query.predicate, ex.query.mode, 0},
                            inputs[i], {.retain_tape = true});
      } catch (const Error& e) {
        throw EvalError("example " + std::to_string(i + 1) + " (" + to_string(ex.query) +
                        "): " + e.what());
      }
      ConstantId best = argmax(fwd.output);
      if (best >= 0 && std::find(positives[i].begin(), positives[i].end(), best) != positives[i].end()) {
        ++correct;
      }
      LossGrad lg = loss_and_grad(fwd.output, positives[i]);
      loss += lg.loss;
      if (!lg.supported) continue;
      total += backprop(fwd.tape, lg.grad, model);
    }
    EpochLog entry{epoch, loss / n, correct / n};
    for (FactId f = 0; f < static_cast<FactId>(model.fact_count()); ++f) {
      if (!mask[f] || total[f] == 0.0) continue;
      model.set_weight(f, model.get_weight(f) - config.learning_rate * total[f] / n);
    }
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  return result;
}

double evaluate_accuracy(const FunctionRegistry& registry, const KnowledgeBase& kb,
                         std::span<const Example> dataset) {
  if (dataset.empty()) throw Error("empty evaluation set");
  int correct = 0;
  for (const auto& ex : dataset) {
    std::vector<ConstantId> pos = resolve(kb, ex);
    SparseVector input = SparseVector::one_hot(kb.dim(), kb.constant_id(ex.query.constant));
    SparseVector g = eval_function(registry, kb, FunctionKey{ex.query.predicate, ex.query.mode, 0}, input).output;
    ConstantId best = argmax(g);
    if (best >= 0 && std::find(pos.begin(), pos.end(), best) != pos.end()) ++correct;
  }
  return correct / static_cast<double>(dataset.size());
}

}  // namespace dtlog
