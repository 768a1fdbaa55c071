#include "robinweyl/sparse_ldlt.hpp"

#include "robinweyl/errors.hpp"

#include <Eigen/OrderingMethods>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace robinweyl {

namespace {

struct Cell {
  int col;
  double val;
};

using Row = std::vector<Cell>;

double find_value(const Row& row, int col) {
  for (const Cell& c : row) {
    if (c.col == col) return c.val;
  }
  return 0.0;
}

void erase_col(Row& row, int col) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (row[i].col == col) {
      row[i] = row.back();
      row.pop_back();
      return;
    }
  }
}

// Largest off-diagonal magnitude in a row and where it sits.
std::pair<double, int> row_max(const Row& row) {
  double best = 0.0;
  int at = -1;
  for (const Cell& c : row) {
    const double a = std::abs(c.val);
    if (a > best || (a == best && at >= 0 && c.col < at)) {
      best = a;
      at = c.col;
    }
  }
  return {best, at};
}

[[noreturn]] void collision(double shift, double pivot, double scale) {
  std::ostringstream msg;
  msg << "threshold " << shift << " collides with an eigenvalue (pivot " << pivot << ", scale " << scale
      << "); perturb the threshold by +-1e-9 and retry";
  throw ThresholdCollisionError(msg.str());
}

}  // namespace

SparseLDLT::SparseLDLT(const Eigen::SparseMatrix<double>& lower, double shift) {
  if (lower.rows() != lower.cols()) throw DomainError("SparseLDLT: matrix must be square");
  n_ = static_cast<int>(lower.rows());
  if (n_ == 0) return;

  std::vector<double> diag(static_cast<std::size_t>(n_), 0.0);
  std::vector<Row> rows(static_cast<std::size_t>(n_));
  for (int k = 0; k < lower.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(lower, k); it; ++it) {
      const int i = static_cast<int>(it.row());
      const int j = static_cast<int>(it.col());
      if (i == j) {
        diag[static_cast<std::size_t>(i)] += it.value();
      } else if (i > j && it.value() != 0.0) {
        rows[static_cast<std::size_t>(i)].push_back({j, it.value()});
        rows[static_cast<std::size_t>(j)].push_back({i, it.value()});
      }
    }
  }
  double scale = 0.0;
  for (int i = 0; i < n_; ++i) {
    auto& d = diag[static_cast<std::size_t>(i)];
    d -= shift;
    scale = std::max(scale, std::abs(d));
    for (const Cell& c : rows[static_cast<std::size_t>(i)]) scale = std::max(scale, std::abs(c.val));
  }
  if (scale == 0.0) collision(shift, 0.0, 0.0);
  const double tiny = 1e-13 * scale;

  // Fill-reducing candidate order from the symmetric pattern.
  Eigen::SparseMatrix<double> pattern(n_, n_);
  {
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i < n_; ++i) {
      trip.emplace_back(i, i, 1.0);
      for (const Cell& c : rows[static_cast<std::size_t>(i)]) trip.emplace_back(i, c.col, 1.0);
    }
    pattern.setFromTriplets(trip.begin(), trip.end());
  }
  Eigen::AMDOrdering<int> amd;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm;
  amd(pattern, perm);
  // indices()[k] is the node eliminated k-th
  std::vector<int> order(perm.indices().data(), perm.indices().data() + n_);

  const double alpha = (1.0 + std::sqrt(17.0)) / 8.0;
  std::vector<char> done(static_cast<std::size_t>(n_), 0);
  std::vector<int> where(static_cast<std::size_t>(n_), -1);  // scatter map into the row being updated

  // Subtract c·(l-vector outer product) from every row adjacent to the pivot set.
  auto update_rows = [&](const std::vector<int>& nbr, const std::vector<double>& w0, const std::vector<double>& v0,
                         const std::vector<double>* w1, const std::vector<double>* v1) {
    // row i gets a_ij -= w0_i·v0_j (+ w1_i·v1_j)
    for (std::size_t a = 0; a < nbr.size(); ++a) {
      const int i = nbr[a];
      Row& row = rows[static_cast<std::size_t>(i)];
      for (std::size_t t = 0; t < row.size(); ++t) where[static_cast<std::size_t>(row[t].col)] = static_cast<int>(t);
      for (std::size_t b = 0; b < nbr.size(); ++b) {
        double delta = w0[a] * v0[b];
        if (w1) delta += (*w1)[a] * (*v1)[b];
        if (a == b) {
          diag[static_cast<std::size_t>(i)] -= delta;
          continue;
        }
        const int j = nbr[b];
        const int pos = where[static_cast<std::size_t>(j)];
        if (pos >= 0) {
          row[static_cast<std::size_t>(pos)].val -= delta;
        } else {
          where[static_cast<std::size_t>(j)] = static_cast<int>(row.size());
          row.push_back({j, -delta});
        }
      }
      for (const Cell& c : row) where[static_cast<std::size_t>(c.col)] = -1;
    }
  };

  steps_.reserve(static_cast<std::size_t>(n_));
  for (int idx = 0; idx < n_; ++idx) {
    const int k = order[static_cast<std::size_t>(idx)];
    if (done[static_cast<std::size_t>(k)]) continue;
    // a 1×1 pivot may land on the partner r; k then stays for the next pass
    --idx;
    const Row& rk = rows[static_cast<std::size_t>(k)];
    const double akk = diag[static_cast<std::size_t>(k)];
    const auto [omega1, r] = row_max(rk);

    int p = k;
    int q = -1;
    if (std::abs(akk) < alpha * omega1) {
      const double omega_r = row_max(rows[static_cast<std::size_t>(r)]).first;
      const double arr = diag[static_cast<std::size_t>(r)];
      if (std::abs(akk) * omega_r >= alpha * omega1 * omega1) {
        p = k;
      } else if (std::abs(arr) >= alpha * omega_r) {
        p = r;
      } else {
        p = k;
        q = r;
      }
    }

    Step step;
    step.p = p;
    step.q = q;
    if (q < 0) {
      const double d = diag[static_cast<std::size_t>(p)];
      if (std::abs(d) < tiny) collision(shift, d, scale);
      step.d00 = d;
      (d < 0.0 ? inertia_.negative : inertia_.positive)++;
      const Row& rp = rows[static_cast<std::size_t>(p)];
      step.rows.reserve(rp.size());
      std::vector<double> a_col;
      for (const Cell& c : rp) {
        step.rows.push_back(c.col);
        a_col.push_back(c.val);
        step.l0.push_back(c.val / d);
      }
      done[static_cast<std::size_t>(p)] = 1;
      for (int i : step.rows) erase_col(rows[static_cast<std::size_t>(i)], p);
      update_rows(step.rows, step.l0, a_col, nullptr, nullptr);
      rows[static_cast<std::size_t>(p)].clear();
      rows[static_cast<std::size_t>(p)].shrink_to_fit();
    } else {
      const double a00 = diag[static_cast<std::size_t>(p)];
      const double a11 = diag[static_cast<std::size_t>(q)];
      const double a01 = find_value(rows[static_cast<std::size_t>(p)], q);
      const double det = a00 * a11 - a01 * a01;
      // eigenvalues of the 2×2 block
      const double mean = 0.5 * (a00 + a11);
      const double rad = std::hypot(0.5 * (a00 - a11), a01);
      const double e_lo = mean - rad;
      const double e_hi = mean + rad;
      if (std::min(std::abs(e_lo), std::abs(e_hi)) < tiny) collision(shift, std::min(std::abs(e_lo), std::abs(e_hi)), scale);
      for (double e : {e_lo, e_hi}) (e < 0.0 ? inertia_.negative : inertia_.positive)++;
      step.d00 = a00;
      step.d01 = a01;
      step.d11 = a11;

      // union of the neighbours of p and q, excluding the pair itself
      std::vector<double> bp, bq;
      for (const Cell& c : rows[static_cast<std::size_t>(p)]) {
        if (c.col == q) continue;
        where[static_cast<std::size_t>(c.col)] = static_cast<int>(step.rows.size());
        step.rows.push_back(c.col);
        bp.push_back(c.val);
        bq.push_back(0.0);
      }
      for (const Cell& c : rows[static_cast<std::size_t>(q)]) {
        if (c.col == p) continue;
        const int pos = where[static_cast<std::size_t>(c.col)];
        if (pos >= 0) {
          bq[static_cast<std::size_t>(pos)] = c.val;
        } else {
          where[static_cast<std::size_t>(c.col)] = static_cast<int>(step.rows.size());
          step.rows.push_back(c.col);
          bp.push_back(0.0);
          bq.push_back(c.val);
        }
      }
      for (int i : step.rows) where[static_cast<std::size_t>(i)] = -1;
      // L_i = b_iᵀ D⁻¹
      const std::size_t m = step.rows.size();
      step.l0.resize(m);
      step.l1.resize(m);
      for (std::size_t t = 0; t < m; ++t) {
        step.l0[t] = (a11 * bp[t] - a01 * bq[t]) / det;
        step.l1[t] = (a00 * bq[t] - a01 * bp[t]) / det;
      }
      done[static_cast<std::size_t>(p)] = 1;
      done[static_cast<std::size_t>(q)] = 1;
      for (int i : step.rows) {
        erase_col(rows[static_cast<std::size_t>(i)], p);
        erase_col(rows[static_cast<std::size_t>(i)], q);
      }
      update_rows(step.rows, step.l0, bp, &step.l1, &bq);
      for (int x : {p, q}) {
        rows[static_cast<std::size_t>(x)].clear();
        rows[static_cast<std::size_t>(x)].shrink_to_fit();
      }
    }
    factor_nnz_ += step.rows.size() * (q < 0 ? 1 : 2);
    steps_.push_back(std::move(step));
  }
}

Eigen::VectorXd SparseLDLT::solve(const Eigen::VectorXd& b) const {
  if (b.size() != n_) throw DomainError("SparseLDLT::solve: size mismatch");
  Eigen::VectorXd x = b;
  // forward: L y = b
  for (const Step& s : steps_) {
    const double yp = x[s.p];
    const double yq = s.q >= 0 ? x[s.q] : 0.0;
    for (std::size_t t = 0; t < s.rows.size(); ++t) {
      double v = s.l0[t] * yp;
      if (s.q >= 0) v += s.l1[t] * yq;
      x[s.rows[t]] -= v;
    }
  }
  // D z = y
  for (const Step& s : steps_) {
    if (s.q < 0) {
      x[s.p] /= s.d00;
    } else {
      const double det = s.d00 * s.d11 - s.d01 * s.d01;
      const double yp = x[s.p];
      const double yq = x[s.q];
      x[s.p] = (s.d11 * yp - s.d01 * yq) / det;
      x[s.q] = (s.d00 * yq - s.d01 * yp) / det;
    }
  }
  // backward: Lᵀ x = z
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) {
    const Step& s = *it;
    double acc0 = 0.0;
    double acc1 = 0.0;
    for (std::size_t t = 0; t < s.rows.size(); ++t) {
      acc0 += s.l0[t] * x[s.rows[t]];
      if (s.q >= 0) acc1 += s.l1[t] * x[s.rows[t]];
    }
    x[s.p] -= acc0;
    if (s.q >= 0) x[s.q] -= acc1;
  }
  return x;
}

}  // namespace robinweyl
