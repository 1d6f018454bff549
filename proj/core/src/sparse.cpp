#include "dtlog/sparse.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

#include "dtlog/error.hpp"

namespace dtlog {

namespace {

// Scratch accumulator reused across kernel calls on the same thread.
struct Accumulator {
  std::vector<double> values;
  std::vector<char> touched;
  std::vector<ConstantId> ids;

  void reset(std::size_t dim) {
    if (values.size() < dim) {
      values.assign(dim, 0.0);
      touched.assign(dim, 0);
    }
    ids.clear();
  }

  void add(ConstantId id, double v) {
    if (!touched[id]) {
      touched[id] = 1;
      ids.push_back(id);
    }
    values[id] += v;
  }

  // Drains into a sorted sparse vector and clears the scratch state. Uses a
  // dense sweep instead of sorting once more than half the domain is touched.
  SparseVector drain(std::size_t dim) {
    std::vector<SparseVector::Entry> out;
    out.reserve(ids.size());
    if (ids.size() * 2 > dim) {
      for (std::size_t i = 0; i < dim; ++i) {
        if (touched[i]) {
          if (values[i] != 0.0) out.push_back({static_cast<ConstantId>(i), values[i]});
          values[i] = 0.0;
          touched[i] = 0;
        }
      }
    } else {
      std::sort(ids.begin(), ids.end());
      for (ConstantId id : ids) {
        if (values[id] != 0.0) out.push_back({id, values[id]});
        values[id] = 0.0;
        touched[id] = 0;
      }
    }
    ids.clear();
    return SparseVector::from_sorted(dim, std::move(out));
  }
};

Accumulator& scratch() {
  thread_local Accumulator acc;
  return acc;
}

}  // namespace

SparseVector SparseVector::one_hot(std::size_t dim, ConstantId id, double weight) {
  return from_entries(dim, {{id, weight}});
}

SparseVector SparseVector::ones(std::size_t dim) {
  std::vector<Entry> entries(dim);
  for (std::size_t i = 0; i < dim; ++i) entries[i] = {static_cast<ConstantId>(i), 1.0};
  return from_sorted(dim, std::move(entries));
}

SparseVector SparseVector::from_entries(std::size_t dim, std::vector<Entry> entries) {
  for (const Entry& e : entries) {
    if (e.id < 0 || static_cast<std::size_t>(e.id) >= dim) {
      throw Error("sparse vector entry out of range");
    }
    if (!(e.value >= 0.0)) throw Error("sparse vector entries must be non-negative");
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.id < b.id; });
  std::vector<Entry> merged;
  merged.reserve(entries.size());
  for (const Entry& e : entries) {
    if (!merged.empty() && merged.back().id == e.id) {
      merged.back().value += e.value;
    } else {
      merged.push_back(e);
    }
  }
  std::erase_if(merged, [](const Entry& e) { return e.value == 0.0; });
  return from_sorted(dim, std::move(merged));
}

SparseVector SparseVector::from_dense(std::span<const double> dense) {
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] < 0.0) throw Error("sparse vector entries must be non-negative");
    if (dense[i] != 0.0) entries.push_back({static_cast<ConstantId>(i), dense[i]});
  }
  return from_sorted(dense.size(), std::move(entries));
}

SparseVector SparseVector::from_sorted(std::size_t dim, std::vector<Entry> entries) {
  SparseVector v(dim);
  v.entries_ = std::move(entries);
  return v;
}

double SparseVector::at(ConstantId id) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                             [](const Entry& e, ConstantId i) { return e.id < i; });
  return (it != entries_.end() && it->id == id) ? it->value : 0.0;
}

double SparseVector::l1_norm() const {
  double sum = 0.0;
  for (const Entry& e : entries_) sum += e.value;
  return sum;
}

std::vector<double> SparseVector::to_dense() const {
  std::vector<double> out(dim_, 0.0);
  for (const Entry& e : entries_) out[e.id] = e.value;
  return out;
}

SparsePattern SparsePattern::transposed() const {
  SparsePattern t;
  t.rows = cols;
  t.cols = rows;
  t.row_ptr.assign(cols + 1, 0);
  for (ConstantId c : col) ++t.row_ptr[c + 1];
  std::partial_sum(t.row_ptr.begin(), t.row_ptr.end(), t.row_ptr.begin());
  t.col.resize(nnz());
  t.fact.resize(nnz());
  std::vector<std::size_t> next(t.row_ptr.begin(), t.row_ptr.end() - 1);
  // Rows are visited in order, so each transposed row comes out sorted.
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      std::size_t slot = next[col[k]]++;
      t.col[slot] = static_cast<ConstantId>(r);
      t.fact[slot] = fact[k];
    }
  }
  return t;
}

double SparseMatrix::at(ConstantId row, ConstantId col) const {
  const SparsePattern& p = *pattern_;
  if (row < 0 || static_cast<std::size_t>(row) >= p.rows) return 0.0;
  auto first = p.col.begin() + static_cast<std::ptrdiff_t>(p.row_ptr[row]);
  auto last = p.col.begin() + static_cast<std::ptrdiff_t>(p.row_ptr[row + 1]);
  auto it = std::lower_bound(first, last, col);
  if (it == last || *it != col) return 0.0;
  return theta_[p.fact[static_cast<std::size_t>(it - p.col.begin())]];
}

SparseVector vec_mat(const SparseVector& x, const SparseMatrix& m) {
  const SparsePattern& p = m.pattern();
  if (x.dim() != p.rows) throw EvalError("vector/matrix dimension mismatch");
  Accumulator& acc = scratch();
  acc.reset(p.cols);
  for (const auto& e : x.entries()) {
    for (std::size_t k = p.row_ptr[e.id]; k < p.row_ptr[e.id + 1]; ++k) {
      acc.add(p.col[k], e.value * m.value(k));
    }
  }
  return acc.drain(p.cols);
}

SparseVector vec_ones_matrix(const SparseVector& x) {
  std::vector<double> dense(x.dim(), 0.0);
  for (std::size_t j = 0; j < x.dim(); ++j) {
    for (const auto& e : x.entries()) dense[j] += e.value * 1.0;
  }
  return SparseVector::from_dense(dense);
}

SparseVector hadamard(std::span<const SparseVector* const> operands) {
  assert(!operands.empty());
  SparseVector result = *operands[0];
  for (std::size_t i = 1; i < operands.size(); ++i) {
    const SparseVector& rhs = *operands[i];
    if (rhs.dim() != result.dim()) throw EvalError("hadamard dimension mismatch");
    std::vector<SparseVector::Entry> out;
    auto a = result.entries();
    auto b = rhs.entries();
    std::size_t ia = 0, ib = 0;
    while (ia < a.size() && ib < b.size()) {
      if (a[ia].id < b[ib].id) {
        ++ia;
      } else if (b[ib].id < a[ia].id) {
        ++ib;
      } else {
        double v = a[ia].value * b[ib].value;
        if (v != 0.0) out.push_back({a[ia].id, v});
        ++ia;
        ++ib;
      }
    }
    result = SparseVector::from_sorted(result.dim(), std::move(out));
  }
  return result;
}

SparseVector add(const SparseVector& a, const SparseVector& b) {
  if (a.dim() != b.dim()) throw EvalError("add dimension mismatch");
  std::vector<SparseVector::Entry> out;
  out.reserve(a.nnz() + b.nnz());
  auto ea = a.entries();
  auto eb = b.entries();
  std::size_t ia = 0, ib = 0;
  while (ia < ea.size() || ib < eb.size()) {
    if (ib == eb.size() || (ia < ea.size() && ea[ia].id < eb[ib].id)) {
      out.push_back(ea[ia++]);
    } else if (ia == ea.size() || eb[ib].id < ea[ia].id) {
      out.push_back(eb[ib++]);
    } else {
      out.push_back({ea[ia].id, ea[ia].value + eb[ib].value});
      ++ia;
      ++ib;
    }
  }
  return SparseVector::from_sorted(a.dim(), std::move(out));
}

SparseVector scale(const SparseVector& x, double factor) {
  if (factor == 0.0) return SparseVector(x.dim());
  std::vector<SparseVector::Entry> out(x.entries().begin(), x.entries().end());
  for (auto& e : out) e.value *= factor;
  std::erase_if(out, [](const SparseVector::Entry& e) { return e.value == 0.0; });
  return SparseVector::from_sorted(x.dim(), std::move(out));
}

}  // namespace dtlog
