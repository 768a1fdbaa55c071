#pragma once

#include "robinweyl/errors.hpp"
#include "robinweyl/modelop.hpp"

#include <Eigen/Dense>

#include <json.hpp>

#include <string>
#include <utility>
#include <vector>

namespace robinweyl::eigcount {

enum class Method { Inertia, Lanczos, Dense };

const char* to_string(Method m);

struct GridSummary {
  int n_r = 0;
  int n_s = 0;
  double R_max = 0.0;
};

struct CountResult {
  double lambda = 0.0;  // the threshold was −lambda
  long count = 0;
  Method method = Method::Inertia;
  GridSummary grid;
  double wall_time = 0.0;  // seconds
};

/// Number of matrix eigenvalues ≤ threshold, from the inertia of A − threshold·I.
/// Throws ThresholdCollisionError if the threshold sits on an eigenvalue.
CountResult count_below(const modelop::DiscretizedOperator& op, double threshold);

struct Eigenpair {
  double value = 0.0;
  Eigen::VectorXd vector;
};

struct LanczosOptions {
  int max_iterations = 200;  // block steps
  int block_size = 2;
  unsigned seed = 12345;
};

/// The k eigenpairs closest to `shift`, by shift-invert block Lanczos with full
/// reorthogonalization; sorted ascending. Each returned pair satisfies
/// ‖Av − θv‖ ≤ 1e-8·‖A‖. Throws ConvergenceError (with the converged pairs in
/// the message count) when max_iterations is exhausted.
std::vector<Eigenpair> lowest_eigenpairs(const modelop::DiscretizedOperator& op, int k, double shift,
                                         const LanczosOptions& options = {});

/// Partial results travel with the error.
class LanczosConvergenceError : public ConvergenceError {
 public:
  LanczosConvergenceError(const std::string& what, std::vector<Eigenpair> partial)
      : ConvergenceError(what), partial_(std::move(partial)) {}
  const std::vector<Eigenpair>& partial() const { return partial_; }

 private:
  std::vector<Eigenpair> partial_;
};

/// All eigenvalues, ascending, by a dense symmetric eigensolver. dim ≤ 4000.
std::vector<double> dense_oracle(const modelop::DiscretizedOperator& op);

/// Eigenvalues ≤ threshold of a symmetric tridiagonal matrix (Sturm sequence).
long tridiagonal_count_below(const std::vector<double>& diag, const std::vector<double>& offdiag, double threshold);

nlohmann::json to_json(const CountResult& r);

}  // namespace robinweyl::eigcount
