#include "geig/gamblet.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "geig/direct.hpp"
#include "geig/errors.hpp"
#include "geig/parallel.hpp"
#include "geig/rng.hpp"

namespace geig {

namespace {

SparseOperator assemble_rows(std::size_t ncols, std::vector<std::vector<std::size_t>>& cols,
                             std::vector<Vector>& vals) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < cols.size(); ++i)
    for (std::size_t p = 0; p < cols[i].size(); ++p) t.push_back({i, cols[i][p], vals[i][p]});
  return SparseOperator::from_triplets(cols.size(), ncols, std::move(t));
}

// base - C Dᵀ with D stored densely by rows, symmetrized.
SparseOperator schur_coarse(const SparseOperator& base, const SparseOperator& c, const Vector& dmat) {
  const std::size_t nc = c.rows(), nb = c.cols();
  Vector dt(nb * nc);
  for (std::size_t l = 0; l < nc; ++l)
    for (std::size_t j = 0; j < nb; ++j) dt[j * nc + l] = dmat[l * nb + j];
  Vector full(nc * nc, 0.0);
  parallel_for(nc, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double* out = full.data() + i * nc;
      auto bc = base.row_cols(i);
      auto bv = base.row_values(i);
      for (std::size_t p = 0; p < bc.size(); ++p) out[bc[p]] = bv[p];
      auto cc = c.row_cols(i);
      auto cv = c.row_values(i);
      for (std::size_t p = 0; p < cc.size(); ++p) {
        const double* src = dt.data() + cc[p] * nc;
        for (std::size_t l = 0; l < nc; ++l) out[l] -= cv[p] * src[l];
      }
    }
  });
  std::vector<std::size_t> offsets{0}, cols;
  Vector vals;
  for (std::size_t i = 0; i < nc; ++i) {
    for (std::size_t l = 0; l < nc; ++l) {
      const double v = 0.5 * (full[i * nc + l] + full[l * nc + i]);
      if (v != 0.0) {
        cols.push_back(l);
        vals.push_back(v);
      }
    }
    offsets.push_back(cols.size());
  }
  return SparseOperator(nc, nc, std::move(offsets), std::move(cols), std::move(vals), true);
}

// Jacobi-preconditioned CG from a zero initial guess.
Vector local_cg(const SparseOperator& a, std::span<const double> b, double tol) {
  const std::size_t n = b.size();
  Vector x(n, 0.0), r(b.begin(), b.end()), z(n), p(n), ap(n);
  const Vector d = a.diagonal_entries();
  for (double di : d)
    if (!(di > 0.0)) throw NotPositiveDefinite("local solve: nonpositive diagonal");
  const double bnorm = norm2(b);
  if (bnorm == 0.0) return x;
  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / d[i];
  p = z;
  double rz = dot(r, z);
  std::vector<double> history;
  const std::size_t maxit = 10 * n + 100;
  for (std::size_t it = 0; it < maxit; ++it) {
    a.multiply(p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) throw NotPositiveDefinite("local solve: CG breakdown (pᵀAp <= 0)");
    const double alpha = rz / pap;
    axpy(alpha, p, x);
    axpy(-alpha, ap, r);
    const double rn = norm2(r);
    history.push_back(rn / bnorm);
    if (rn <= tol * bnorm) return x;
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / d[i];
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw NonConvergence("local solve: CG did not reach tolerance", history);
}

}  // namespace

Vector GambletDecomposition::prolong(std::size_t k, std::span<const double> coarse) const {
  const SparseOperator& r = R(k);
  if (coarse.size() != r.rows()) throw InvalidArgument("prolong: dimension mismatch");
  Vector out(r.cols(), 0.0);
  for (std::size_t i = 0; i < r.rows(); ++i) {
    const double ci = coarse[i];
    if (ci == 0.0) continue;
    auto c = r.row_cols(i);
    auto v = r.row_values(i);
    for (std::size_t p = 0; p < c.size(); ++p) out[c[p]] += v[p] * ci;
  }
  return out;
}

Vector GambletDecomposition::restrict_to_coarse(std::size_t k, std::span<const double> fine) const {
  return spmv(R(k), fine);
}

Vector GambletDecomposition::prolong_to(std::size_t from, std::size_t to,
                                        std::span<const double> v) const {
  if (from < 1 || to > levels() || from > to) throw InvalidArgument("prolong_to: bad levels");
  Vector x(v.begin(), v.end());
  for (std::size_t k = from + 1; k <= to; ++k) x = prolong(k, x);
  return x;
}

GambletDecomposition transform(const SparseOperator& a_fine, const MeasurementChain& chain,
                               const TransformOptions& options) {
  const std::size_t q = chain.levels();
  if (q < 1) throw InvalidArgument("transform: empty hierarchy");
  if (a_fine.rows() != a_fine.cols() || a_fine.rows() != chain.dim(q))
    throw InvalidArgument("transform: fine operator has " + std::to_string(a_fine.rows()) +
                          " rows but the hierarchy expects " + std::to_string(chain.dim(q)));
  if (options.mode == TransformMode::localized && options.radius < 1)
    throw InvalidArgument("transform: localization radius must be at least 1");

  GambletDecomposition dec;
  dec.options_ = options;
  dec.a_.resize(q);
  dec.b_.resize(q >= 2 ? q - 1 : 0);
  dec.w_.resize(dec.b_.size());
  dec.r_.resize(dec.b_.size());
  dec.a_[q - 1] = SparseOperator(a_fine.rows(), a_fine.cols(),
                                 {a_fine.row_offsets().begin(), a_fine.row_offsets().end()},
                                 {a_fine.col_indices().begin(), a_fine.col_indices().end()},
                                 {a_fine.values().begin(), a_fine.values().end()}, true);

  Vector dmat;  // exact mode: rows of D = C B⁻¹, dense
  for (std::size_t k = q; k >= 2; --k) {
    const SparseOperator& ak = dec.A(k);
    const SparseOperator& pi = chain.nesting(k - 1);
    const SparseOperator& w = chain.complement(k);
    dec.w_[k - 2] = w;
    const SparseOperator wt = w.transpose();
    dec.b_[k - 2] = galerkin_triple(w, ak);
    const SparseOperator& b = dec.B(k);

    if (options.interpolation == Interpolation::geometric) {
      dec.r_[k - 2] = pi;
    } else {
      const SparseOperator c = multiply(pi, multiply(ak, wt));  // π A Wᵀ
      const std::size_t nc = pi.rows();
      std::vector<std::vector<std::size_t>> rcols(nc);
      std::vector<Vector> rvals(nc);

      if (options.mode == TransformMode::exact) {
        const ProfileCholesky chol(b);
        dmat.assign(nc * b.rows(), 0.0);
        parallel_for(nc, [&](std::size_t begin, std::size_t end) {
          Vector acc(ak.cols(), 0.0);
          for (std::size_t i = begin; i < end; ++i) {
            std::span<double> d(dmat.data() + i * b.rows(), b.rows());
            auto cc = c.row_cols(i);
            auto cv = c.row_values(i);
            for (std::size_t p = 0; p < cc.size(); ++p) d[cc[p]] = cv[p];
            chol.solve_in_place(d);
            std::fill(acc.begin(), acc.end(), 0.0);
            auto pc = pi.row_cols(i);
            auto pv = pi.row_values(i);
            for (std::size_t p = 0; p < pc.size(); ++p) acc[pc[p]] += pv[p];
            for (std::size_t j = 0; j < d.size(); ++j) {
              if (d[j] == 0.0) continue;
              auto wc = w.row_cols(j);
              auto wv = w.row_values(j);
              for (std::size_t p = 0; p < wc.size(); ++p) acc[wc[p]] -= d[j] * wv[p];
            }
            for (std::size_t col = 0; col < acc.size(); ++col)
              if (acc[col] != 0.0) {
                rcols[i].push_back(col);
                rvals[i].push_back(acc[col]);
              }
          }
        });
      } else {
        // Wavelet rows grouped by the level-(k-1) cell that owns them.
        std::vector<std::vector<std::size_t>> owned(nc);
        for (std::size_t j = 0; j < w.rows(); ++j) owned[chain.complement_parent(k, j)].push_back(j);
        const long side = static_cast<long>(std::llround(std::sqrt(static_cast<double>(nc))));
        const long r = static_cast<long>(options.radius);
        parallel_for(nc, [&](std::size_t begin, std::size_t end) {
          Vector acc(ak.cols(), 0.0);
          std::vector<char> mark(ak.cols(), 0);
          std::vector<std::size_t> touched;
          std::vector<std::size_t> patch;
          for (std::size_t i = begin; i < end; ++i) {
            const auto ci = chain.cell(k - 1, i);
            patch.clear();
            for (long y = std::max(0L, ci[1] - r); y <= std::min(side - 1, ci[1] + r); ++y)
              for (long x = std::max(0L, ci[0] - r); x <= std::min(side - 1, ci[0] + r); ++x) {
                const auto& o = owned[static_cast<std::size_t>(x + y * side)];
                patch.insert(patch.end(), o.begin(), o.end());
              }
            std::sort(patch.begin(), patch.end());
            const SparseOperator bp = b.principal_submatrix(patch);
            Vector rhs(patch.size(), 0.0);
            auto cc = c.row_cols(i);
            auto cv = c.row_values(i);
            for (std::size_t p = 0; p < cc.size(); ++p) {
              auto it = std::lower_bound(patch.begin(), patch.end(), cc[p]);
              if (it != patch.end() && *it == cc[p])
                rhs[static_cast<std::size_t>(it - patch.begin())] = cv[p];
            }
            const Vector d = local_cg(bp, rhs, options.local_tol);
            touched.clear();
            auto add_to = [&](std::size_t col, double v) {
              if (!mark[col]) {
                mark[col] = 1;
                touched.push_back(col);
              }
              acc[col] += v;
            };
            auto pc = pi.row_cols(i);
            auto pv = pi.row_values(i);
            for (std::size_t p = 0; p < pc.size(); ++p) add_to(pc[p], pv[p]);
            for (std::size_t l = 0; l < patch.size(); ++l) {
              if (d[l] == 0.0) continue;
              auto wc = w.row_cols(patch[l]);
              auto wv = w.row_values(patch[l]);
              for (std::size_t p = 0; p < wc.size(); ++p) add_to(wc[p], -d[l] * wv[p]);
            }
            std::sort(touched.begin(), touched.end());
            double rowmax = 0.0;
            for (auto col : touched) rowmax = std::max(rowmax, std::abs(acc[col]));
            for (auto col : touched) {
              if (std::abs(acc[col]) >= options.droptol * rowmax) {
                rcols[i].push_back(col);
                rvals[i].push_back(acc[col]);
              }
              acc[col] = 0.0;
              mark[col] = 0;
            }
          }
        });
      }
      dec.r_[k - 2] = assemble_rows(ak.cols(), rcols, rvals);
      if (options.mode == TransformMode::exact) {
        // Schur complement π A πᵀ - C Dᵀ; equal to R A Rᵀ when D solves exactly.
        dec.a_[k - 2] = schur_coarse(galerkin_triple(pi, ak), c, dmat);
        continue;
      }
    }
    dec.a_[k - 2] = galerkin_triple(dec.R(k), ak);
  }

  if (options.track_vectors) {
    dec.psi_.resize(q);
    dec.chi_.resize(dec.b_.size());
    dec.psi_[q - 1] = SparseOperator::identity(chain.dim(q));
    for (std::size_t k = q; k >= 2; --k) {
      dec.chi_[k - 2] = multiply(dec.W(k), dec.psi_[k - 1]);
      dec.psi_[k - 2] = multiply(dec.R(k), dec.psi_[k - 1]);
    }
  }
  return dec;
}

std::pair<DenseSymMatrix, DenseSymMatrix> oracle_level_matrices(const SparseOperator& a_fine,
                                                                const SparseOperator& pi_k) {
  if (pi_k.cols() != a_fine.rows())
    throw InvalidArgument("oracle: measurement matrix does not match the fine operator");
  const ProfileCholesky chol(a_fine);
  const std::size_t m = pi_k.rows(), n = a_fine.rows();
  // X = A⁻¹ Πᵀ column by column, then Θ = Π X.
  DenseMatrix x(n, m);
  Vector col(n);
  for (std::size_t j = 0; j < m; ++j) {
    std::fill(col.begin(), col.end(), 0.0);
    auto c = pi_k.row_cols(j);
    auto v = pi_k.row_values(j);
    for (std::size_t p = 0; p < c.size(); ++p) col[c[p]] = v[p];
    chol.solve_in_place(col);
    x.set_column(j, col);
  }
  std::vector<double> theta(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    auto c = pi_k.row_cols(i);
    auto v = pi_k.row_values(i);
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < c.size(); ++p) s += v[p] * x(c[p], j);
      theta[i * m + j] = s;
    }
  }
  DenseSymMatrix t = DenseSymMatrix::from_full(m, theta);
  DenseSymMatrix a = spd_inverse(t);
  return {std::move(t), std::move(a)};
}

std::pair<SparseOperator, SparseOperator> wavelet_vectors(const GambletDecomposition& dec,
                                                          std::size_t k) {
  if (!dec.tracks_vectors())
    throw UnsupportedOperation("wavelet_vectors: decomposition was built without vector tracking");
  if (k < 1 || k > dec.levels()) throw InvalidArgument("wavelet_vectors: level out of range");
  const SparseOperator& psi = dec.psi_[k - 1];
  return {psi, k == 1 ? psi : dec.chi_[k - 2]};
}

std::vector<std::pair<std::size_t, double>> decay_profile(const GambletDecomposition& dec,
                                                          const MeasurementChain& chain,
                                                          std::size_t k, std::size_t i,
                                                          std::size_t n_max) {
  const std::size_t q = dec.levels();
  if (k < 1 || k > q) throw InvalidArgument("decay_profile: level out of range");
  if (i >= dec.A(k).rows()) throw InvalidArgument("decay_profile: index out of range");
  const SparseOperator& a = dec.A(q);
  const auto ctr = chain.center(k, i);
  const double width = chain.width(k);
  Vector full(a.rows(), 0.0);
  if (dec.tracks_vectors()) {
    const auto [psi, chi] = wavelet_vectors(dec, k);
    auto c = psi.row_cols(i);
    auto v = psi.row_values(i);
    for (std::size_t p = 0; p < c.size(); ++p) full[c[p]] = v[p];
  } else {
    Vector unit(dec.A(k).rows(), 0.0);
    unit[i] = 1.0;
    full = dec.prolong_to(k, q, unit);
  }
  std::vector<double> dist(full.size());
  for (std::size_t node = 0; node < full.size(); ++node) {
    const auto x = chain.center(q, node);
    dist[node] = std::hypot(x[0] - ctr[0], x[1] - ctr[1]);
  }
  // ψᵀAψ split into pair terms -a_ij (ψ_i - ψ_j)² placed at the pair midpoint and
  // row-sum terms (Σ_j a_ij) ψ_i² placed at node i; the tail keeps those outside the ball.
  struct Term {
    double dist, energy;
  };
  std::vector<Term> terms;
  for (std::size_t node = 0; node < full.size(); ++node) {
    auto c = a.row_cols(node);
    auto v = a.row_values(node);
    double rowsum = 0.0;
    for (std::size_t p = 0; p < c.size(); ++p) {
      rowsum += v[p];
      if (c[p] <= node) continue;
      const double e = -v[p] * (full[node] - full[c[p]]) * (full[node] - full[c[p]]);
      if (e == 0.0) continue;
      const auto x = chain.center(q, node);
      const auto y = chain.center(q, c[p]);
      terms.push_back({std::hypot(0.5 * (x[0] + y[0]) - ctr[0], 0.5 * (x[1] + y[1]) - ctr[1]), e});
    }
    if (rowsum * full[node] * full[node] != 0.0)
      terms.push_back({dist[node], rowsum * full[node] * full[node]});
  }
  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t n = 0; n <= n_max; ++n) {
    const double radius = static_cast<double>(n) * width;
    double tail = 0.0;
    for (const auto& t : terms)
      if (t.dist >= radius) tail += t.energy;
    out.emplace_back(n, tail);
  }
  return out;
}

std::vector<Vector> gamblet_components(const GambletDecomposition& dec, std::span<const double> g) {
  const std::size_t q = dec.levels();
  if (g.size() != dec.A(q).rows()) throw InvalidArgument("gamblet_components: dimension mismatch");
  std::vector<Vector> rhs(q);
  rhs[q - 1].assign(g.begin(), g.end());
  for (std::size_t k = q; k >= 2; --k) rhs[k - 2] = dec.restrict_to_coarse(k, rhs[k - 1]);
  std::vector<Vector> parts(q);
  parts[0] = dec.prolong_to(1, q, direct_solve(dec.A(1), rhs[0]));
  for (std::size_t k = 2; k <= q; ++k) {
    const Vector wg = spmv(dec.W(k), rhs[k - 1]);
    const Vector y = direct_solve(dec.B(k), wg);
    const Vector level_k = spmv(dec.W(k).transpose(), y);
    parts[k - 1] = dec.prolong_to(k, q, level_k);
  }
  return parts;
}

namespace {

double lanczos_condition(const SparseOperator& a) {
  const std::size_t n = a.rows();
  const std::size_t steps = std::min<std::size_t>(n, 200);
  Rng rng(20240601);
  Vector v(n);
  for (auto& x : v) x = 1.0 + 0.1 * rng.symmetric();
  const double v0 = norm2(v);
  for (auto& x : v) x /= v0;
  std::vector<Vector> basis;
  Vector alpha, beta;
  Vector w(n);
  for (std::size_t j = 0; j < steps; ++j) {
    basis.push_back(v);
    a.multiply(v, w);
    alpha.push_back(dot(w, v));
    // Full reorthogonalization, twice.
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) axpy(-dot(w, b), b, w);
    const double bnorm = norm2(w);
    if (j + 1 == steps || bnorm <= 1e-12 * std::abs(alpha.back())) break;
    beta.push_back(bnorm);
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / bnorm;
  }
  const std::size_t m = alpha.size();
  DenseSymMatrix t(m);
  for (std::size_t i = 0; i < m; ++i) {
    t.set(i, i, alpha[i]);
    if (i + 1 < m) t.set(i, i + 1, beta[i]);
  }
  const SymEigen e = jacobi_eigen(t);
  if (!(e.values.front() > 0.0))
    throw NotPositiveDefinite("condition_number: nonpositive Ritz value");
  return e.values.back() / e.values.front();
}

}  // namespace

double condition_number(const SparseOperator& a) {
  if (a.rows() != a.cols() || a.rows() == 0)
    throw InvalidArgument("condition_number: matrix must be square and nonempty");
  if (a.rows() > 400) return lanczos_condition(a);
  const SymEigen e = jacobi_eigen(DenseSymMatrix::from_sparse(a));
  if (!(e.values.front() > 0.0)) throw NotPositiveDefinite("condition_number: matrix is not SPD");
  return e.values.back() / e.values.front();
}

namespace {

void write_matrix(const std::filesystem::path& path, const SparseOperator& m) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  write_coordinate(out, m);
}

SparseOperator read_matrix(const std::filesystem::path& path, const nlohmann::json& shape,
                           bool symmetric) {
  std::ifstream in(path);
  if (!in) throw LoadError(path.string(), 0, "cannot open file");
  return read_coordinate(in, shape.at(0).get<std::size_t>(), shape.at(1).get<std::size_t>(),
                         symmetric);
}

nlohmann::json shape_of(const SparseOperator& m) { return {m.rows(), m.cols()}; }

}  // namespace

void save_decomposition(const std::string& dir, const GambletDecomposition& dec) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json manifest;
  const auto& o = dec.options();
  manifest["levels"] = dec.levels();
  manifest["mode"] = o.mode == TransformMode::exact ? "exact" : "localized";
  manifest["radius"] = o.radius;
  manifest["droptol"] = o.droptol;
  manifest["local_tol"] = o.local_tol;
  manifest["interpolation"] = o.interpolation == Interpolation::gamblet ? "gamblet" : "geometric";
  nlohmann::json sizes = nlohmann::json::object();
  for (std::size_t k = 1; k <= dec.levels(); ++k) {
    const std::string s = std::to_string(k);
    write_matrix(fs::path(dir) / ("A_" + s + ".coo"), dec.A(k));
    sizes["A_" + s] = shape_of(dec.A(k));
    if (k >= 2) {
      write_matrix(fs::path(dir) / ("B_" + s + ".coo"), dec.B(k));
      write_matrix(fs::path(dir) / ("W_" + s + ".coo"), dec.W(k));
      write_matrix(fs::path(dir) / ("R_" + s + ".coo"), dec.R(k));
      sizes["B_" + s] = shape_of(dec.B(k));
      sizes["W_" + s] = shape_of(dec.W(k));
      sizes["R_" + s] = shape_of(dec.R(k));
    }
  }
  manifest["sizes"] = sizes;
  std::ofstream out(fs::path(dir) / "manifest.json");
  out << manifest.dump(2) << '\n';
}

GambletDecomposition load_decomposition(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path mpath = fs::path(dir) / "manifest.json";
  std::ifstream in(mpath);
  if (!in) throw LoadError(mpath.string(), 0, "cannot open decomposition manifest");
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(mpath.string(), 0, e.what());
  }
  GambletDecomposition dec;
  try {
    const std::size_t q = manifest.at("levels").get<std::size_t>();
    dec.options_.mode =
        manifest.at("mode").get<std::string>() == "exact" ? TransformMode::exact
                                                           : TransformMode::localized;
    dec.options_.radius = manifest.at("radius").get<std::size_t>();
    dec.options_.droptol = manifest.at("droptol").get<double>();
    dec.options_.local_tol = manifest.at("local_tol").get<double>();
    dec.options_.interpolation = manifest.at("interpolation").get<std::string>() == "gamblet"
                                     ? Interpolation::gamblet
                                     : Interpolation::geometric;
    const auto& sizes = manifest.at("sizes");
    for (std::size_t k = 1; k <= q; ++k) {
      const std::string s = std::to_string(k);
      dec.a_.push_back(read_matrix(fs::path(dir) / ("A_" + s + ".coo"), sizes.at("A_" + s), true));
      if (k >= 2) {
        dec.b_.push_back(read_matrix(fs::path(dir) / ("B_" + s + ".coo"), sizes.at("B_" + s), true));
        dec.w_.push_back(read_matrix(fs::path(dir) / ("W_" + s + ".coo"), sizes.at("W_" + s), false));
        dec.r_.push_back(read_matrix(fs::path(dir) / ("R_" + s + ".coo"), sizes.at("R_" + s), false));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(mpath.string(), 0, e.what());
  }
  return dec;
}

}  // namespace geig
