#include "geig/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "geig/errors.hpp"
#include "geig/parallel.hpp"

namespace geig {

namespace {

std::string dims(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

// Assembles CSR from independently computed rows.
SparseOperator from_rows(std::size_t nrows, std::size_t ncols,
                         std::vector<std::vector<std::size_t>>& cols,
                         std::vector<std::vector<double>>& vals, bool symmetric) {
  std::vector<std::size_t> offsets(nrows + 1, 0);
  for (std::size_t i = 0; i < nrows; ++i) offsets[i + 1] = offsets[i] + cols[i].size();
  std::vector<std::size_t> ci(offsets.back());
  std::vector<double> v(offsets.back());
  for (std::size_t i = 0; i < nrows; ++i) {
    std::copy(cols[i].begin(), cols[i].end(), ci.begin() + offsets[i]);
    std::copy(vals[i].begin(), vals[i].end(), v.begin() + offsets[i]);
    std::vector<std::size_t>().swap(cols[i]);
    std::vector<double>().swap(vals[i]);
  }
  return SparseOperator(nrows, ncols, std::move(offsets), std::move(ci), std::move(v), symmetric);
}

}  // namespace

SparseOperator::SparseOperator(std::size_t nrows, std::size_t ncols,
                               std::vector<std::size_t> row_offsets,
                               std::vector<std::size_t> col_indices, std::vector<double> values,
                               bool symmetric)
    : nrows_(nrows),
      ncols_(ncols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)),
      symmetric_(symmetric) {
  if (row_offsets_.size() != nrows_ + 1 || row_offsets_.front() != 0)
    throw InvalidArgument("row_offsets must have nrows+1 entries starting at 0");
  if (row_offsets_.back() != col_indices_.size() || col_indices_.size() != values_.size())
    throw InvalidArgument("row_offsets.back() must equal nnz");
  if (symmetric_ && nrows_ != ncols_) throw InvalidArgument("symmetric operator must be square");
  for (std::size_t i = 0; i < nrows_; ++i) {
    if (row_offsets_[i + 1] < row_offsets_[i])
      throw InvalidArgument("row_offsets must be nondecreasing");
    for (std::size_t p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
      if (col_indices_[p] >= ncols_) throw InvalidArgument("column index out of range");
      if (p > row_offsets_[i] && col_indices_[p] <= col_indices_[p - 1])
        throw InvalidArgument("column indices must be strictly increasing within a row");
    }
  }
}

SparseOperator SparseOperator::from_triplets(std::size_t nrows, std::size_t ncols,
                                             std::vector<Triplet> entries, bool symmetric) {
  for (const auto& t : entries)
    if (t.row >= nrows || t.col >= ncols)
      throw InvalidArgument("triplet (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                            ") outside " + dims(nrows, ncols));
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::size_t> offsets(nrows + 1, 0);
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  cols.reserve(entries.size());
  vals.reserve(entries.size());
  std::size_t last_row = std::numeric_limits<std::size_t>::max();
  for (const auto& t : entries) {
    if (!cols.empty() && t.row == last_row && t.col == cols.back()) {
      vals.back() += t.value;
      continue;
    }
    cols.push_back(t.col);
    vals.push_back(t.value);
    offsets[t.row + 1]++;
    last_row = t.row;
  }
  for (std::size_t i = 0; i < nrows; ++i) offsets[i + 1] += offsets[i];
  return SparseOperator(nrows, ncols, std::move(offsets), std::move(cols), std::move(vals),
                        symmetric);
}

SparseOperator SparseOperator::identity(std::size_t n) {
  Vector ones(n, 1.0);
  return diagonal(ones);
}

SparseOperator SparseOperator::diagonal(std::span<const double> d) {
  const std::size_t n = d.size();
  std::vector<std::size_t> offsets(n + 1), cols(n);
  for (std::size_t i = 0; i < n; ++i) {
    offsets[i + 1] = i + 1;
    cols[i] = i;
  }
  return SparseOperator(n, n, std::move(offsets), std::move(cols), Vector(d.begin(), d.end()),
                        true);
}

SparseOperator SparseOperator::from_dense(std::size_t nrows, std::size_t ncols,
                                          std::span<const double> entries, bool symmetric) {
  if (entries.size() != nrows * ncols) throw InvalidArgument("dense size mismatch");
  std::vector<std::size_t> offsets(nrows + 1, 0), cols;
  Vector vals;
  for (std::size_t i = 0; i < nrows; ++i) {
    for (std::size_t j = 0; j < ncols; ++j) {
      const double v = entries[i * ncols + j];
      if (v != 0.0) {
        cols.push_back(j);
        vals.push_back(v);
      }
    }
    offsets[i + 1] = cols.size();
  }
  return SparseOperator(nrows, ncols, std::move(offsets), std::move(cols), std::move(vals),
                        symmetric);
}

double SparseOperator::at(std::size_t i, std::size_t j) const {
  auto c = row_cols(i);
  auto it = std::lower_bound(c.begin(), c.end(), j);
  if (it == c.end() || *it != j) return 0.0;
  return values_[row_offsets_[i] + static_cast<std::size_t>(it - c.begin())];
}

Vector SparseOperator::diagonal_entries() const {
  Vector d(std::min(nrows_, ncols_), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
  return d;
}

bool SparseOperator::is_symmetric(double rel_tol) const {
  if (nrows_ != ncols_) return false;
  const double tol = rel_tol * max_abs();
  for (std::size_t i = 0; i < nrows_; ++i) {
    auto c = row_cols(i);
    auto v = row_values(i);
    for (std::size_t p = 0; p < c.size(); ++p) {
      const std::size_t j = c[p];
      auto cj = row_cols(j);
      if (!std::binary_search(cj.begin(), cj.end(), i)) return false;
      if (std::abs(v[p] - at(j, i)) > tol) return false;
    }
  }
  return true;
}

void SparseOperator::multiply(std::span<const double> x, std::span<double> y) const {
  for (std::size_t i = 0; i < nrows_; ++i) {
    double s = 0.0;
    for (std::size_t p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p)
      s += values_[p] * x[col_indices_[p]];
    y[i] = s;
  }
}

Vector SparseOperator::apply(std::span<const double> x) const { return spmv(*this, x); }

SparseOperator SparseOperator::transpose() const {
  std::vector<std::size_t> offsets(ncols_ + 1, 0);
  for (auto c : col_indices_) offsets[c + 1]++;
  for (std::size_t j = 0; j < ncols_; ++j) offsets[j + 1] += offsets[j];
  std::vector<std::size_t> cols(nnz());
  Vector vals(nnz());
  std::vector<std::size_t> next(offsets.begin(), offsets.end() - 1);
  for (std::size_t i = 0; i < nrows_; ++i) {
    for (std::size_t p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
      const std::size_t dst = next[col_indices_[p]]++;
      cols[dst] = i;
      vals[dst] = values_[p];
    }
  }
  return SparseOperator(ncols_, nrows_, std::move(offsets), std::move(cols), std::move(vals),
                        symmetric_);
}

SparseOperator SparseOperator::scaled(double alpha) const {
  Vector v = values_;
  for (auto& x : v) x *= alpha;
  return SparseOperator(nrows_, ncols_, row_offsets_, col_indices_, std::move(v), symmetric_);
}

SparseOperator SparseOperator::principal_submatrix(std::span<const std::size_t> keep) const {
  std::vector<std::size_t> local(ncols_, std::numeric_limits<std::size_t>::max());
  for (std::size_t a = 0; a < keep.size(); ++a) local[keep[a]] = a;
  std::vector<std::size_t> offsets(keep.size() + 1, 0), cols;
  Vector vals;
  for (std::size_t a = 0; a < keep.size(); ++a) {
    const std::size_t i = keep[a];
    for (std::size_t p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
      const std::size_t l = local[col_indices_[p]];
      if (l == std::numeric_limits<std::size_t>::max()) continue;
      cols.push_back(l);
      vals.push_back(values_[p]);
    }
    offsets[a + 1] = cols.size();
  }
  return SparseOperator(keep.size(), keep.size(), std::move(offsets), std::move(cols),
                        std::move(vals), symmetric_);
}

std::vector<double> SparseOperator::to_dense() const {
  std::vector<double> d(nrows_ * ncols_, 0.0);
  for (std::size_t i = 0; i < nrows_; ++i)
    for (std::size_t p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p)
      d[i * ncols_ + col_indices_[p]] = values_[p];
  return d;
}

double SparseOperator::max_abs() const {
  double m = 0.0;
  for (auto v : values_) m = std::max(m, std::abs(v));
  return m;
}

double SparseOperator::frobenius_norm() const { return norm2(values_); }

Vector spmv(const SparseOperator& a, std::span<const double> x) {
  if (x.size() != a.cols())
    throw InvalidArgument("spmv: vector of length " + std::to_string(x.size()) +
                          " does not match " + dims(a.rows(), a.cols()));
  Vector y(a.rows());
  a.multiply(x, y);
  return y;
}

SparseOperator multiply(const SparseOperator& a, const SparseOperator& b) {
  if (a.cols() != b.rows())
    throw InvalidArgument("multiply: " + dims(a.rows(), a.cols()) + " times " +
                          dims(b.rows(), b.cols()));
  const std::size_t m = a.rows();
  std::vector<std::vector<std::size_t>> cols(m);
  std::vector<std::vector<double>> vals(m);
  parallel_for(m, [&](std::size_t begin, std::size_t end) {
    Vector acc(b.cols(), 0.0);
    std::vector<char> used(b.cols(), 0);
    std::vector<std::size_t> pattern;
    for (std::size_t i = begin; i < end; ++i) {
      pattern.clear();
      auto ac = a.row_cols(i);
      auto av = a.row_values(i);
      for (std::size_t p = 0; p < ac.size(); ++p) {
        const double s = av[p];
        auto bc = b.row_cols(ac[p]);
        auto bv = b.row_values(ac[p]);
        for (std::size_t r = 0; r < bc.size(); ++r) {
          const std::size_t j = bc[r];
          if (!used[j]) {
            used[j] = 1;
            pattern.push_back(j);
          }
          acc[j] += s * bv[r];
        }
      }
      std::sort(pattern.begin(), pattern.end());
      cols[i] = pattern;
      vals[i].resize(pattern.size());
      for (std::size_t r = 0; r < pattern.size(); ++r) {
        vals[i][r] = acc[pattern[r]];
        acc[pattern[r]] = 0.0;
        used[pattern[r]] = 0;
      }
    }
  });
  return from_rows(m, b.cols(), cols, vals, false);
}

SparseOperator add(const SparseOperator& a, const SparseOperator& b, double alpha, double beta) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidArgument("add: " + dims(a.rows(), a.cols()) + " vs " + dims(b.rows(), b.cols()));
  std::vector<std::size_t> offsets(a.rows() + 1, 0), cols;
  Vector vals;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ac = a.row_cols(i);
    auto av = a.row_values(i);
    auto bc = b.row_cols(i);
    auto bv = b.row_values(i);
    std::size_t p = 0, r = 0;
    while (p < ac.size() || r < bc.size()) {
      if (r == bc.size() || (p < ac.size() && ac[p] < bc[r])) {
        cols.push_back(ac[p]);
        vals.push_back(alpha * av[p++]);
      } else if (p == ac.size() || bc[r] < ac[p]) {
        cols.push_back(bc[r]);
        vals.push_back(beta * bv[r++]);
      } else {
        cols.push_back(ac[p]);
        vals.push_back(alpha * av[p++] + beta * bv[r++]);
      }
    }
    offsets[i + 1] = cols.size();
  }
  return SparseOperator(a.rows(), a.cols(), std::move(offsets), std::move(cols), std::move(vals),
                        a.flagged_symmetric() && b.flagged_symmetric());
}

SparseOperator galerkin_triple(const SparseOperator& r, const SparseOperator& a) {
  if (a.rows() != a.cols() || r.cols() != a.rows())
    throw InvalidArgument("galerkin_triple: R is " + dims(r.rows(), r.cols()) + ", A is " +
                          dims(a.rows(), a.cols()));
  SparseOperator c = multiply(r, multiply(a, r.transpose()));
  // Round-off makes c_ij and c_ji differ in the last bits; average them.
  std::vector<double> vals(c.values().begin(), c.values().end());
  const auto off = c.row_offsets();
  const auto ci = c.col_indices();
  for (std::size_t i = 0; i < c.rows(); ++i) {
    for (std::size_t p = off[i]; p < off[i + 1]; ++p) {
      const std::size_t j = ci[p];
      if (j <= i) continue;
      auto cj = c.row_cols(j);
      auto it = std::lower_bound(cj.begin(), cj.end(), i);
      if (it == cj.end() || *it != i) continue;
      const std::size_t q = off[j] + static_cast<std::size_t>(it - cj.begin());
      const double avg = 0.5 * (vals[p] + vals[q]);
      vals[p] = avg;
      vals[q] = avg;
    }
  }
  return SparseOperator(c.rows(), c.cols(), {off.begin(), off.end()}, {ci.begin(), ci.end()},
                        std::move(vals), true);
}

double relative_difference(const SparseOperator& a, const SparseOperator& b) {
  const double nb = b.frobenius_norm();
  const double diff = add(a, b, 1.0, -1.0).frobenius_norm();
  return nb > 0.0 ? diff / nb : diff;
}

void write_coordinate(std::ostream& out, const SparseOperator& a) {
  std::ostringstream buf;
  buf << std::setprecision(17);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto c = a.row_cols(i);
    auto v = a.row_values(i);
    for (std::size_t p = 0; p < c.size(); ++p) buf << i << ' ' << c[p] << ' ' << v[p] << '\n';
  }
  out << buf.str();
}

SparseOperator read_coordinate(std::istream& in, std::size_t nrows, std::size_t ncols,
                               bool symmetric) {
  std::vector<Triplet> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    Triplet t{};
    if (!(ls >> t.row >> t.col >> t.value))
      throw LoadError("<coordinate>", lineno, "expected 'i j value'");
    entries.push_back(t);
  }
  return SparseOperator::from_triplets(nrows, ncols, std::move(entries), symmetric);
}

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double inner(const SparseOperator& a, std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double r = 0.0;
    auto c = a.row_cols(i);
    auto v = a.row_values(i);
    for (std::size_t p = 0; p < c.size(); ++p) r += v[p] * y[c[p]];
    s += x[i] * r;
  }
  return s;
}

}  // namespace geig
