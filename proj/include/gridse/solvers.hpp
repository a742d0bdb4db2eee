#pragma once

#include <vector>

#include "gridse/types.hpp"

namespace gridse {

enum class ResidualForm { L2Squared, L2 };

struct SolverOptions {
  ResidualForm residual_form = ResidualForm::L2Squared;
  double tol = 1e-8;              // optimality (KKT) tolerance, scale-relative
  int max_inner_iterations = 300;
};

/// Least absolute deviations fit min |b - Ax|_1 with its dual certificate:
/// A^T s = 0, |s_i| <= 1, s_i = sign(r_i) wherever r_i != 0.
struct LadSolution {
  Vec x;
  Vec dual;          // s
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
};

LadSolution solve_lad(const SpMat& A, const Vec& b, const SolverOptions& opt = {});

/// Solution of min rho(b - Ax - e) + lambda sum_i c_i |e_i| with rho the
/// configured residual form.
struct SparseSolution {
  Vec x_hat;
  Vec e_hat;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int inner_iterations = 0;
};

SparseSolution solve_weighted_l1ls(const SpMat& A, const Vec& b, double lambda,
                                   const Vec& c, const SolverOptions& opt = {});

/// Exact minimizer of min |b - Ax - e|_2 over supports |e|_0 <= k by support
/// enumeration. Guarded to rows(A) <= 20 and k <= 3; ties break toward the
/// smaller, lexicographically first support.
struct L0Solution {
  Vec x;
  Vec e;
  std::vector<int> support;
  double objective = 0.0;  // residual 2-norm off the support
};

L0Solution solve_l0_oracle(const Mat& A, const Vec& b, int k);

// Direct optimality-condition checks, evaluated from returned iterates rather
// than solver internals.
double lad_kkt_violation(const SpMat& A, const Vec& b, const Vec& x, const Vec& dual);
double l1ls_kkt_violation(const SpMat& A, const Vec& b, double lambda, const Vec& c,
                          ResidualForm form, const Vec& x, const Vec& e,
                          double zero_tol = 1e-9);

double l1ls_objective(const SpMat& A, const Vec& b, double lambda, const Vec& c,
                      ResidualForm form, const Vec& x, const Vec& e);

}  // namespace gridse
