#include "dtlog/kb.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "dtlog/error.hpp"

namespace dtlog {

ConstantId SymbolTable::intern(std::string_view name) {
  if (auto found = find(name)) return *found;
  auto id = static_cast<ConstantId>(names_.size());
  names_.emplace_back(name);
  ids_.emplace(names_.back(), id);
  return id;
}

std::optional<ConstantId> SymbolTable::find(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

bool is_assign_predicate(std::string_view predicate) {
  return predicate.size() > kAssignPrefix.size() && predicate.starts_with(kAssignPrefix);
}

std::string_view assign_constant(std::string_view predicate) {
  return predicate.substr(kAssignPrefix.size());
}

KnowledgeBase::KnowledgeBase(const KnowledgeBase& other)
    : symbols_(other.symbols_),
      predicates_(other.predicates_),
      predicate_ids_(other.predicate_ids_),
      facts_(other.facts_),
      theta_(other.theta_),
      fact_index_(other.fact_index_) {}

KnowledgeBase& KnowledgeBase::operator=(const KnowledgeBase& other) {
  if (this != &other) {
    KnowledgeBase copy(other);
    *this = std::move(copy);
  }
  return *this;
}

ConstantId KnowledgeBase::intern(std::string_view name) {
  std::size_t before = symbols_.size();
  ConstantId id = symbols_.intern(name);
  if (symbols_.size() != before) invalidate_caches();
  return id;
}

ConstantId KnowledgeBase::constant_id(std::string_view name) const {
  auto id = symbols_.find(name);
  if (!id) throw UnknownConstant(std::string(name));
  return *id;
}

std::int32_t KnowledgeBase::predicate_index(std::string_view name) const {
  auto it = predicate_ids_.find(name);
  return it == predicate_ids_.end() ? -1 : it->second;
}

void KnowledgeBase::invalidate_caches() {
  std::lock_guard lock(*cache_mutex_);
  caches_.clear();
}

FactId KnowledgeBase::add_fact(std::string_view predicate, std::string_view arg0,
                               std::optional<std::string_view> arg1, double weight,
                               bool tagged) {
  if (predicate.empty()) throw Error("empty predicate name");
  if (is_assign_predicate(predicate) || predicate == kAnyPredicate) {
    throw Error("'" + std::string(predicate) + "' is a reserved predicate name");
  }
  if (!std::isfinite(weight) || weight <= 0.0) {
    throw Error("fact weight must be positive, got " + format_weight(weight));
  }
  const int arity = arg1 ? 2 : 1;
  std::int32_t pred = predicate_index(predicate);
  if (pred >= 0 && predicates_[pred].arity != arity) {
    throw Error("arity conflict for predicate '" + std::string(predicate) + "': declared " +
                std::to_string(predicates_[pred].arity) + ", got " + std::to_string(arity));
  }
  ConstantId a = intern(arg0);
  ConstantId b = arg1 ? intern(*arg1) : kNoArg;
  if (pred >= 0 && fact_index_.contains({pred, a, b})) {
    throw Error("duplicate fact " + std::string(predicate) + "(" + std::string(arg0) +
                (arg1 ? "," + std::string(*arg1) : std::string()) + ")");
  }
  if (pred < 0) {
    pred = static_cast<std::int32_t>(predicates_.size());
    predicates_.push_back({std::string(predicate), arity, {}});
    predicate_ids_.emplace(std::string(predicate), pred);
  }
  auto id = static_cast<FactId>(facts_.size());
  facts_.push_back({pred, a, b, tagged});
  theta_.push_back(weight);
  predicates_[pred].facts.push_back(id);
  fact_index_.emplace(std::make_tuple(pred, a, b), id);
  invalidate_caches();
  return id;
}

std::optional<FactId> KnowledgeBase::find_fact(std::string_view predicate, std::string_view arg0,
                                                std::optional<std::string_view> arg1) const {
  std::int32_t pred = predicate_index(predicate);
  if (pred < 0) return std::nullopt;
  auto a = symbols_.find(arg0);
  if (!a) return std::nullopt;
  ConstantId b = kNoArg;
  if (arg1) {
    auto found = symbols_.find(*arg1);
    if (!found) return std::nullopt;
    b = *found;
  }
  auto it = fact_index_.find({pred, *a, b});
  if (it == fact_index_.end()) return std::nullopt;
  return it->second;
}

FactId KnowledgeBase::fact_id(const GroundFact& fact) const {
  std::optional<std::string_view> arg1;
  if (fact.arg1) arg1 = *fact.arg1;
  auto id = find_fact(fact.predicate, fact.arg0, arg1);
  if (!id) {
    throw Error("unknown fact " + fact.predicate + "(" + fact.arg0 +
                (fact.arg1 ? "," + *fact.arg1 : std::string()) + ")");
  }
  return *id;
}

std::string KnowledgeBase::fact_to_string(FactId id) const {
  const Fact& f = fact(id);
  std::string out = predicate_name(f) + "(" + symbols_.name(f.arg0);
  if (f.arg1 != kNoArg) out += "," + symbols_.name(f.arg1);
  return out + ")";
}

void KnowledgeBase::set_weight(FactId id, double weight) {
  if (std::isnan(weight)) throw Error("fact weight is NaN");
  theta_.at(static_cast<std::size_t>(id)) = weight < 0.0 ? 0.0 : weight;
}

int KnowledgeBase::arity(std::string_view predicate) const {
  if (predicate == kAnyPredicate) return 2;
  if (is_assign_predicate(predicate)) {
    return symbols_.contains(assign_constant(predicate)) ? 1 : 0;
  }
  std::int32_t pred = predicate_index(predicate);
  return pred < 0 ? 0 : predicates_[pred].arity;
}

bool KnowledgeBase::is_stored(std::string_view predicate) const {
  return predicate_index(predicate) >= 0;
}

std::vector<std::string> KnowledgeBase::predicate_names() const {
  std::vector<std::string> names;
  names.reserve(predicates_.size());
  for (const auto& p : predicates_) names.push_back(p.name);
  return names;
}

std::span<const FactId> KnowledgeBase::facts_of(std::string_view predicate) const {
  std::int32_t pred = predicate_index(predicate);
  if (pred < 0) return {};
  return predicates_[pred].facts;
}

SparseVector KnowledgeBase::one_hot(std::string_view constant) const {
  return SparseVector::one_hot(dim(), constant_id(constant));
}

const SparsePattern& KnowledgeBase::pattern(std::string_view predicate, bool transposed) const {
  std::int32_t pred = predicate_index(predicate);
  if (pred < 0) {
    throw UnknownPredicate("unknown predicate '" + std::string(predicate) + "'");
  }
  if (predicates_[pred].arity != 2) {
    throw UnknownPredicate("predicate '" + std::string(predicate) +
                           "' is unary; a matrix needs a binary predicate");
  }
  std::lock_guard lock(*cache_mutex_);
  if (caches_.size() < predicates_.size()) caches_.resize(predicates_.size());
  Cache& cache = caches_[pred];
  if (!cache.forward) {
    auto p = std::make_shared<SparsePattern>();
    p->rows = p->cols = dim();
    p->row_ptr.assign(dim() + 1, 0);
    const auto& ids = predicates_[pred].facts;
    for (FactId f : ids) ++p->row_ptr[facts_[f].arg0 + 1];
    std::partial_sum(p->row_ptr.begin(), p->row_ptr.end(), p->row_ptr.begin());
    std::vector<std::size_t> next(p->row_ptr.begin(), p->row_ptr.end() - 1);
    p->col.resize(ids.size());
    p->fact.resize(ids.size());
    for (FactId f : ids) {
      std::size_t slot = next[facts_[f].arg0]++;
      p->col[slot] = facts_[f].arg1;
      p->fact[slot] = f;
    }
    for (std::size_t r = 0; r < p->rows; ++r) {
      std::vector<std::pair<ConstantId, FactId>> row;
      for (std::size_t k = p->row_ptr[r]; k < p->row_ptr[r + 1]; ++k) row.emplace_back(p->col[k], p->fact[k]);
      std::sort(row.begin(), row.end());
      for (std::size_t k = 0; k < row.size(); ++k) {
        p->col[p->row_ptr[r] + k] = row[k].first;
        p->fact[p->row_ptr[r] + k] = row[k].second;
      }
    }
    cache.forward = std::move(p);
  }
  if (!transposed) return *cache.forward;
  if (!cache.backward) cache.backward = std::make_shared<SparsePattern>(cache.forward->transposed());
  return *cache.backward;
}

SparseMatrix KnowledgeBase::matrix(std::string_view predicate, bool transposed) const {
  return SparseMatrix(pattern(predicate, transposed), theta_);
}

SparseVector KnowledgeBase::unary(std::string_view predicate) const {
  if (is_assign_predicate(predicate)) return one_hot(assign_constant(predicate));
  std::int32_t pred = predicate_index(predicate);
  if (pred < 0) throw UnknownPredicate("unknown predicate '" + std::string(predicate) + "'");
  if (predicates_[pred].arity != 1) {
    throw UnknownPredicate("predicate '" + std::string(predicate) + "' is not unary");
  }
  std::vector<SparseVector::Entry> entries;
  for (FactId f : predicates_[pred].facts) {
    double w = theta_[f];
    if (w != 0.0) entries.push_back({facts_[f].arg0, w});
  }
  return SparseVector::from_entries(dim(), std::move(entries));
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    cols.push_back(line.substr(start, tab == std::string_view::npos ? tab : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return cols;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

}  // namespace

KnowledgeBase load_facts(std::string_view text) {
  KnowledgeBase kb;
  bool allow_zero = false;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    std::string_view line = trim(raw);
    if (line == kAllowZeroPragma) {
      allow_zero = true;
      continue;
    }
    if (line.empty() || line.front() == '#') continue;

    auto cols = split_tabs(line);
    for (auto& c : cols) c = trim(c);
    auto fail = [&](const std::string& msg) -> ParseError {
      return ParseError("facts:" + std::to_string(line_no) + ": " + msg, line_no, 1);
    };
    if (cols.size() < 2 || cols.size() > 4) {
      throw fail("expected 2 to 4 TAB-separated columns, got " + std::to_string(cols.size()));
    }
    for (auto c : cols) {
      if (c.empty()) throw fail("empty column");
    }
    double weight = 1.0;
    std::optional<std::string_view> arg1;
    if (cols.size() == 4) {
      auto w = parse_number(cols[3]);
      if (!w) throw fail("weight '" + std::string(cols[3]) + "' is not a number");
      weight = *w;
      arg1 = cols[2];
    } else if (cols.size() == 3) {
      if (auto w = parse_number(cols[2])) {
        weight = *w;
      } else {
        arg1 = cols[2];
      }
    }
    try {
      if (allow_zero && weight == 0.0) {
        // Clamped parameter from a trained file: keep it in the support.
        FactId id = kb.add_fact(cols[0], cols[1], arg1, 1.0);
        kb.set_weight(id, 0.0);
        continue;
      }
      kb.add_fact(cols[0], cols[1], arg1, weight);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw fail(e.what());
    }
  }
  return kb;
}

std::string format_weight(double weight) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", weight);
  return buf;
}

std::string serialize_facts(const KnowledgeBase& kb) {
  std::string out;
  for (double w : kb.weights()) {
    if (w == 0.0) {
      out += kAllowZeroPragma;
      out += '\n';
      break;
    }
  }
  for (std::size_t i = 0; i < kb.fact_count(); ++i) {
    const Fact& f = kb.fact(static_cast<FactId>(i));
    out += kb.predicate_name(f);
    out += '\t';
    out += kb.symbols().name(f.arg0);
    if (f.arg1 != kNoArg) {
      out += '\t';
      out += kb.symbols().name(f.arg1);
    }
    out += '\t';
    out += format_weight(kb.weights()[i]);
    out += '\n';
  }
  return out;
}

}  // namespace dtlog
