#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dtlog {

using ConstantId = std::int32_t;
using FactId = std::int32_t;

// Sparse row vector over the constant domain. Entries are kept sorted by id,
// carry strictly positive values, and never store an explicit zero.
class SparseVector {
 public:
  struct Entry {
    ConstantId id;
    double value;
    bool operator==(const Entry&) const = default;
  };

  SparseVector() = default;
  explicit SparseVector(std::size_t dim) : dim_(dim) {}

  static SparseVector one_hot(std::size_t dim, ConstantId id, double weight = 1.0);
  static SparseVector ones(std::size_t dim);
  // Sorts, sums duplicate ids and drops zeros. Throws on negative or
  // out-of-range entries.
  static SparseVector from_entries(std::size_t dim, std::vector<Entry> entries);
  static SparseVector from_dense(std::span<const double> dense);
  // Entries must already be sorted by id, unique and positive.
  static SparseVector from_sorted(std::size_t dim, std::vector<Entry> entries);

  std::size_t dim() const { return dim_; }
  std::size_t nnz() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::span<const Entry> entries() const { return entries_; }

  double at(ConstantId id) const;
  double l1_norm() const;
  std::vector<double> to_dense() const;

  bool operator==(const SparseVector&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<Entry> entries_;
};

// Compressed-row sparsity pattern of a binary predicate. Each nonzero remembers
// the fact that owns it, so values are read from the parameter vector and
// gradients can be scattered back onto facts.
struct SparsePattern {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr;  // rows + 1
  std::vector<ConstantId> col;
  std::vector<FactId> fact;

  std::size_t nnz() const { return col.size(); }
  SparsePattern transposed() const;
};

// A pattern paired with the current parameter values.
class SparseMatrix {
 public:
  SparseMatrix(const SparsePattern& pattern, std::span<const double> theta)
      : pattern_(&pattern), theta_(theta) {}

  std::size_t rows() const { return pattern_->rows; }
  std::size_t cols() const { return pattern_->cols; }
  std::size_t nnz() const { return pattern_->nnz(); }
  const SparsePattern& pattern() const { return *pattern_; }
  std::span<const double> theta() const { return theta_; }

  double at(ConstantId row, ConstantId col) const;
  double value(std::size_t k) const { return theta_[pattern_->fact[k]]; }

 private:
  const SparsePattern* pattern_;
  std::span<const double> theta_;
};

// x · M
SparseVector vec_mat(const SparseVector& x, const SparseMatrix& m);
// x · 1  where 1 is the all-ones |C|x|C| matrix, evaluated explicitly.
SparseVector vec_ones_matrix(const SparseVector& x);
// Component-wise product of one or more vectors.
SparseVector hadamard(std::span<const SparseVector* const> operands);
SparseVector add(const SparseVector& a, const SparseVector& b);
SparseVector scale(const SparseVector& x, double factor);

}  // namespace dtlog
