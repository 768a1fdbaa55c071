#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <vector>

namespace robinweyl {

struct Inertia {
  int negative = 0;
  int zero = 0;
  int positive = 0;
};

/// Sparse symmetric-indefinite factorization P(A − σI)Pᵀ = L D Lᵀ with
/// Bunch–Kaufman 1×1/2×2 pivots. The candidate order comes from an
/// approximate-minimum-degree permutation; a Bunch–Kaufman swap may pull a
/// later row forward.
class SparseLDLT {
 public:
  /// `lower` holds the lower triangle (or the full matrix, the upper part is ignored).
  /// Throws ThresholdCollisionError if a pivot falls below 1e-13·max|A − σI|.
  SparseLDLT(const Eigen::SparseMatrix<double>& lower, double shift);

  const Inertia& inertia() const { return inertia_; }
  int dim() const { return n_; }
  std::size_t factor_nnz() const { return factor_nnz_; }

  /// Solves (A − σI) x = b.
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

 private:
  struct Step {
    int p = -1;
    int q = -1;  // second index of a 2×2 pivot, else -1
    double d00 = 0.0, d01 = 0.0, d11 = 0.0;
    std::vector<int> rows;
    std::vector<double> l0;  // multipliers for p
    std::vector<double> l1;  // multipliers for q (2×2 only)
  };

  int n_ = 0;
  std::size_t factor_nnz_ = 0;
  Inertia inertia_;
  std::vector<Step> steps_;
};

}  // namespace robinweyl
