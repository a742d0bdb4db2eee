#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace gridse {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Complex = std::complex<double>;
using CVec = Eigen::VectorXcd;
using SpCMat = Eigen::SparseMatrix<Complex>;
using Triplet = Eigen::Triplet<double>;
using CTriplet = Eigen::Triplet<Complex>;

/// Malformed input file (JSON case schema, CDF records, CSV).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Structurally invalid model (duplicate ids, no slack, zero impedance, ...).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Rank-deficient system where a unique solution was required.
class SingularMatrixError : public std::runtime_error {
 public:
  explicit SingularMatrixError(const std::string& what) : std::runtime_error(what) {}
};

/// Iterative solve hit its iteration cap before meeting tolerance.
/// Carries the best iterate found so the caller can inspect or reuse it.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, Vec best_x, Vec best_e, double kkt_residual)
      : std::runtime_error(what),
        best_x(std::move(best_x)),
        best_e(std::move(best_e)),
        kkt_residual(kkt_residual) {}

  Vec best_x;
  Vec best_e;
  double kkt_residual = 0.0;
};

/// Gauss-Newton iteration left the feasible region or blew up.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::vector<double> step_norms)
      : std::runtime_error(what), step_norms(std::move(step_norms)) {}

  /// |dx|_inf per iteration up to and including the diverging step.
  std::vector<double> step_norms;
};

}  // namespace gridse
