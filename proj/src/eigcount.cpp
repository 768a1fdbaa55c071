#include "robinweyl/eigcount.hpp"

#include "robinweyl/errors.hpp"
#include "robinweyl/sparse_ldlt.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace robinweyl::eigcount {

namespace {

Eigen::SparseMatrix<double> lower_matrix(const modelop::DiscretizedOperator& op) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(op.entries.size());
  for (const auto& e : op.entries) {
    if (e.row < 0 || e.col < 0 || e.row >= op.dim || e.col >= op.dim) {
      throw DomainError("operator entry index out of range");
    }
    if (e.row >= e.col) trip.emplace_back(e.row, e.col, e.value);
    else trip.emplace_back(e.col, e.row, e.value);
  }
  Eigen::SparseMatrix<double> m(op.dim, op.dim);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

GridSummary summary(const modelop::DiscretizedOperator& op) {
  return {op.grid.n_r, op.grid.n_s, op.grid.R_max};
}

// max absolute row sum, an upper bound for the spectral norm
double inf_norm(const Eigen::SparseMatrix<double>& full) {
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(full.rows());
  for (int k = 0; k < full.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(full, k); it; ++it) sums[it.row()] += std::abs(it.value());
  }
  return sums.size() ? sums.maxCoeff() : 0.0;
}

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::Inertia: return "Inertia";
    case Method::Lanczos: return "Lanczos";
    case Method::Dense: return "Dense";
  }
  return "?";
}

CountResult count_below(const modelop::DiscretizedOperator& op, double threshold) {
  const auto t0 = std::chrono::steady_clock::now();
  const SparseLDLT ldlt(lower_matrix(op), threshold);
  CountResult res;
  res.lambda = -threshold;
  res.count = ldlt.inertia().negative;
  res.method = Method::Inertia;
  res.grid = summary(op);
  res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

std::vector<Eigenpair> lowest_eigenpairs(const modelop::DiscretizedOperator& op, int k, double shift,
                                         const LanczosOptions& options) {
  const int n = op.dim;
  if (k <= 0) throw DomainError("lowest_eigenpairs: k must be positive");
  if (4 * k > n) throw DomainError("lowest_eigenpairs: k must not exceed dim/4");
  const int bs = std::max(1, options.block_size);

  const Eigen::SparseMatrix<double> full = op.full_matrix();
  const double a_norm = inf_norm(full);
  const double tol = 1e-8 * std::max(a_norm, std::numeric_limits<double>::min());
  const SparseLDLT ldlt(lower_matrix(op), shift);

  std::mt19937 rng(options.seed);
  std::normal_distribution<double> normal;
  std::vector<Eigen::VectorXd> basis;

  // Orthonormalize w against the basis (twice) and return its remaining norm.
  auto orthogonalize = [&](Eigen::VectorXd& w) {
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : basis) w -= q.dot(w) * q;
    }
    return w.norm();
  };
  auto random_vector = [&] {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = normal(rng);
    return v;
  };

  // T is the projection of (A − σI)⁻¹ onto the basis.
  const int max_dim = std::min(n, options.max_iterations * bs);
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(max_dim, max_dim);

  // first block
  for (int c = 0; c < bs && static_cast<int>(basis.size()) < max_dim; ++c) {
    Eigen::VectorXd v = random_vector();
    const double nv = orthogonalize(v);
    basis.push_back(v / nv);
  }

  std::vector<Eigenpair> converged;
  int block_start = 0;
  while (true) {
    const int m_old = static_cast<int>(basis.size());
    // apply the inverse to the newest block, project and extend
    std::vector<Eigen::VectorXd> new_block;
    for (int j = block_start; j < m_old; ++j) {
      Eigen::VectorXd w = ldlt.solve(basis[static_cast<std::size_t>(j)]);
      for (int i = 0; i < m_old; ++i) {
        const double h = basis[static_cast<std::size_t>(i)].dot(w);
        T(i, j) = h;
        T(j, i) = h;
      }
      new_block.push_back(std::move(w));
    }
    const int m = m_old;
    for (const auto& w_orig : new_block) {
      if (static_cast<int>(basis.size()) >= max_dim) break;
      Eigen::VectorXd w = w_orig;
      const double before = w.norm();
      double nw = orthogonalize(w);
      if (!(nw > 1e-10 * before)) {
        // invariant subspace found; continue with a fresh direction
        w = random_vector();
        nw = orthogonalize(w);
      }
      basis.push_back(w / nw);
    }
    // coupling between the new vectors and the block just applied
    for (int i = m; i < static_cast<int>(basis.size()); ++i) {
      for (int j = block_start; j < m; ++j) {
        const double h = basis[static_cast<std::size_t>(i)].dot(new_block[static_cast<std::size_t>(j - block_start)]);
        T(i, j) = h;
        T(j, i) = h;
      }
    }
    block_start = m;

    if (m >= 2 * k || m == max_dim) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T.topLeftCorner(m, m));
      const Eigen::VectorXd& theta = es.eigenvalues();
      std::vector<int> idx(static_cast<std::size_t>(m));
      std::iota(idx.begin(), idx.end(), 0);
      std::sort(idx.begin(), idx.end(), [&](int a, int b) { return std::abs(theta[a]) > std::abs(theta[b]); });
      converged.clear();
      for (int t = 0; t < k; ++t) {
        const int c = idx[static_cast<std::size_t>(t)];
        if (theta[c] == 0.0) break;
        Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < m; ++i) v += es.eigenvectors()(i, c) * basis[static_cast<std::size_t>(i)];
        v.normalize();
        const double value = shift + 1.0 / theta[c];
        const double resid = (full * v - value * v).norm();
        if (resid > tol) break;
        converged.push_back({value, std::move(v)});
      }
      if (static_cast<int>(converged.size()) == k) break;
      if (m == max_dim) break;
    }
  }
  std::sort(converged.begin(), converged.end(), [](const Eigenpair& a, const Eigenpair& b) { return a.value < b.value; });
  if (static_cast<int>(converged.size()) < k) {
    throw LanczosConvergenceError("lowest_eigenpairs: " + std::to_string(converged.size()) + " of " +
                                      std::to_string(k) + " pairs converged after " +
                                      std::to_string(options.max_iterations) + " block steps",
                                  std::move(converged));
  }
  return converged;
}

std::vector<double> dense_oracle(const modelop::DiscretizedOperator& op) {
  if (op.dim > 4000) throw ResourceError("dense_oracle: dim " + std::to_string(op.dim) + " exceeds 4000");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(op.dim, op.dim);
  for (const auto& e : op.entries) {
    a(e.row, e.col) = e.value;
    a(e.col, e.row) = e.value;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw ConvergenceError("dense_oracle: eigensolver failed");
  const Eigen::VectorXd& ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

long tridiagonal_count_below(const std::vector<double>& diag, const std::vector<double>& offdiag, double threshold) {
  if (!diag.empty() && offdiag.size() + 1 != diag.size()) throw DomainError("tridiagonal_count_below: size mismatch");
  long count = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < diag.size(); ++i) {
    q = diag[i] - threshold - (i == 0 ? 0.0 : offdiag[i - 1] * offdiag[i - 1] / q);
    if (q == 0.0) q = -std::numeric_limits<double>::epsilon() * (std::abs(diag[i]) + std::abs(threshold) + 1.0);
    if (q < 0.0) ++count;
  }
  return count;
}

nlohmann::json to_json(const CountResult& r) {
  return {{"lambda", r.lambda},
          {"count", r.count},
          {"method", to_string(r.method)},
          {"grid", {{"n_r", r.grid.n_r}, {"n_s", r.grid.n_s}, {"R_max", r.grid.R_max}}},
          {"wall_time", r.wall_time}};
}

}  // namespace robinweyl::eigcount
