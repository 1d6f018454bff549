#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "dtlog/sparse.hpp"

namespace dtlog {

// Bijection between constant names and contiguous ids 0..size()-1.
class SymbolTable {
 public:
  ConstantId intern(std::string_view name);
  std::optional<ConstantId> find(std::string_view name) const;
  const std::string& name(ConstantId id) const { return names_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return names_.size(); }
  bool contains(std::string_view name) const { return find(name).has_value(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, ConstantId> ids_;
};

inline constexpr ConstantId kNoArg = -1;
inline constexpr std::string_view kAssignPrefix = "assign_";
inline constexpr std::string_view kAnyPredicate = "any";
inline constexpr std::string_view kWeightedPredicate = "weighted";

// assign_c is a virtual unary predicate whose vector is one_hot(c).
bool is_assign_predicate(std::string_view predicate);
std::string_view assign_constant(std::string_view predicate);

struct Fact {
  std::int32_t predicate = 0;
  ConstantId arg0 = kNoArg;
  ConstantId arg1 = kNoArg;
  // Rule-weight facts created from {tag} annotations are always trainable.
  bool tagged = false;

  int arity() const { return arg1 == kNoArg ? 1 : 2; }
};

// Textual reference to a ground fact, e.g. child(liam,eve).
struct GroundFact {
  std::string predicate;
  std::string arg0;
  std::optional<std::string> arg1;
};

// Weighted fact store. Binary predicates are exposed as sparse matrices and
// unary predicates as sparse vectors; their nonzeros are exactly the facts, and
// the fact weights form the parameter vector. The set of facts is frozen once
// loaded: training changes weights, never structure.
class KnowledgeBase {
 public:
  KnowledgeBase() = default;
  KnowledgeBase(const KnowledgeBase& other);
  KnowledgeBase& operator=(const KnowledgeBase& other);
  KnowledgeBase(KnowledgeBase&&) noexcept = default;
  KnowledgeBase& operator=(KnowledgeBase&&) noexcept = default;

  const SymbolTable& symbols() const { return symbols_; }
  std::size_t dim() const { return symbols_.size(); }
  ConstantId intern(std::string_view name);
  ConstantId constant_id(std::string_view name) const;

  FactId add_fact(std::string_view predicate, std::string_view arg0,
                  std::optional<std::string_view> arg1, double weight, bool tagged = false);
  std::optional<FactId> find_fact(std::string_view predicate, std::string_view arg0,
                                  std::optional<std::string_view> arg1 = std::nullopt) const;
  FactId fact_id(const GroundFact& fact) const;

  std::size_t fact_count() const { return facts_.size(); }
  const Fact& fact(FactId id) const { return facts_.at(static_cast<std::size_t>(id)); }
  const std::string& predicate_name(const Fact& f) const { return predicates_[f.predicate].name; }
  std::string fact_to_string(FactId id) const;
  void mark_tagged(FactId id) { facts_.at(static_cast<std::size_t>(id)).tagged = true; }

  double get_weight(FactId id) const { return theta_.at(static_cast<std::size_t>(id)); }
  double get_weight(const GroundFact& fact) const { return get_weight(fact_id(fact)); }
  // Negative weights are clamped to zero.
  void set_weight(FactId id, double weight);
  void set_weight(const GroundFact& fact, double weight) { set_weight(fact_id(fact), weight); }
  std::span<const double> weights() const { return theta_; }

  // Arity of a stored or virtual predicate; 0 when unknown.
  int arity(std::string_view predicate) const;
  bool has_predicate(std::string_view predicate) const { return arity(predicate) != 0; }
  // True for predicates backed by stored facts (not assign_c / any).
  bool is_stored(std::string_view predicate) const;
  std::vector<std::string> predicate_names() const;
  std::span<const FactId> facts_of(std::string_view predicate) const;

  SparseVector one_hot(std::string_view constant) const;
  SparseMatrix matrix(std::string_view predicate, bool transposed) const;
  const SparsePattern& pattern(std::string_view predicate, bool transposed) const;
  SparseVector unary(std::string_view predicate) const;

 private:
  struct Predicate {
    std::string name;
    int arity = 0;
    std::vector<FactId> facts;
  };
  struct Cache {
    std::shared_ptr<const SparsePattern> forward;
    std::shared_ptr<const SparsePattern> backward;
  };

  std::int32_t predicate_index(std::string_view name) const;
  void invalidate_caches();

  SymbolTable symbols_;
  std::vector<Predicate> predicates_;
  std::map<std::string, std::int32_t, std::less<>> predicate_ids_;
  std::vector<Fact> facts_;
  std::vector<double> theta_;
  std::map<std::tuple<std::int32_t, ConstantId, ConstantId>, FactId> fact_index_;

  mutable std::unique_ptr<std::mutex> cache_mutex_ = std::make_unique<std::mutex>();
  mutable std::vector<Cache> caches_;
};

// Header emitted by serialize_facts when training clamped some weight to zero.
// Without it, zero weights are rejected on load.
inline constexpr std::string_view kAllowZeroPragma = "#@ allow-zero-weights";

// Parses the TAB-separated facts format:
//   pred <TAB> arg1 [<TAB> arg2] [<TAB> weight]
// Blank lines and lines starting with '#' are ignored. A three-column line whose
// last column parses as a number is a weighted unary fact.
KnowledgeBase load_facts(std::string_view text);

// Writes every fact with its weight at 17 significant digits.
std::string serialize_facts(const KnowledgeBase& kb);

std::string format_weight(double weight);

}  // namespace dtlog
