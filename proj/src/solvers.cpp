#include "gridse/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/QR>
#include <Eigen/SparseCholesky>

namespace gridse {
namespace {

constexpr double kRankPivotRatio = 1e-20;  // pivots of A^T D A ~ singular values squared

/// Factors A^T diag(w) A for a fixed sparsity pattern and changing positive w.
class WeightedNormalSolver {
 public:
  explicit WeightedNormalSolver(const SpMat& a) : a_(a), at_(a.transpose()) {}

  void factorize(const Vec& w) {
    SpMat m = at_ * (w.asDiagonal() * a_);
    if (!analyzed_) {
      ldlt_.analyzePattern(m);
      analyzed_ = true;
    }
    ldlt_.factorize(m);
    if (ldlt_.info() != Eigen::Success) {
      throw SingularMatrixError("normal equations factorization failed (rank-deficient system)");
    }
    const Vec d = ldlt_.vectorD().cwiseAbs();
    const double dmax = d.maxCoeff();
    if (!std::isfinite(dmax) || d.minCoeff() < kRankPivotRatio * dmax) {
      throw SingularMatrixError("system matrix is numerically rank deficient");
    }
  }

  Vec solve(const Vec& rhs) const { return ldlt_.solve(rhs); }

  const SpMat& at() const { return at_; }

 private:
  const SpMat& a_;
  SpMat at_;
  Eigen::SimplicialLDLT<SpMat> ldlt_;
  bool analyzed_ = false;
};

double max_step(const Vec& value, const Vec& direction, double fraction) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < value.size(); ++i) {
    if (direction[i] < 0.0) alpha = std::min(alpha, -fraction * value[i] / direction[i]);
  }
  return alpha;
}

double sign_of(double v) { return v >= 0.0 ? 1.0 : -1.0; }

// -----------------------------------------------------------------------
// L1-regularized least squares, squared residual form:
//   min |b - Ax - e|_2^2 + lambda sum c_i |e_i|,  all c_i > 0.
//
// Split e = p - q with p, q >= 0 and solve the resulting bound-constrained
// QP by a Mehrotra predictor-corrector interior point method. Stationarity
// gives the bound multipliers z_p = lambda c - 2r and z_q = lambda c + 2r
// with r = b - Ax - p + q; each Newton step reduces to normal equations
// A^T diag(1/g) A dx = rhs with g = 1 + 2p/z_p + 2q/z_q.
struct QpResult {
  Vec x, e, r;
  double mu = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Interior point iterates carry e ~ mu-sized dust on inactive components; snap
// anything below the work tolerance to an exact zero so downstream indicator
// logic and certificates see a crisp support.
Vec truncated_errors(const Vec& e, double threshold) {
  Vec out = e;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (std::abs(out[i]) <= threshold) out[i] = 0.0;
  }
  return out;
}

QpResult l1ls_qp_interior_point(const SpMat& a, const Vec& b, double lambda, const Vec& c,
                                const SolverOptions& opt) {
  const Eigen::Index m = a.rows();
  const double scale = 1.0 + b.lpNorm<Eigen::Infinity>() +
                       lambda * c.lpNorm<Eigen::Infinity>();
  const double trunc = opt.tol * (1.0 + b.lpNorm<Eigen::Infinity>());

  WeightedNormalSolver normal(a);
  normal.factorize(Vec::Ones(m));
  Vec x = normal.solve(normal.at() * b);
  Vec r = b - a * x;

  const double p0 = 1.0 + 0.5 * r.lpNorm<Eigen::Infinity>();
  Vec p = Vec::Constant(m, p0);
  Vec q = Vec::Constant(m, p0);
  Vec zp = (lambda * c - 2.0 * r).cwiseMax(1.0);
  Vec zq = (lambda * c + 2.0 * r).cwiseMax(1.0);
  r = b - a * x - p + q;

  QpResult out;
  for (int iter = 1; iter <= opt.max_inner_iterations; ++iter) {
    const Vec rp = lambda * c - 2.0 * r - zp;
    const Vec rq = lambda * c + 2.0 * r - zq;
    const double mu = (p.dot(zp) + q.dot(zq)) / (2.0 * m);

    // exit on the externally checkable optimality conditions
    const Vec e_now = truncated_errors(p - q, trunc);
    const double certificate =
        l1ls_kkt_violation(a, b, lambda, c, ResidualForm::L2Squared, x, e_now);
    out.iterations = iter - 1;
    out.mu = mu;
    if (certificate <= 0.5 * opt.tol * scale) {
      out.converged = true;
      break;
    }

    const Vec rx = normal.at() * r;
    const Vec g = (Vec::Ones(m) + 2.0 * p.cwiseQuotient(zp) + 2.0 * q.cwiseQuotient(zq));
    const Vec ginv = g.cwiseInverse();
    normal.factorize(ginv);

    const auto newton = [&](const Vec& rcp, const Vec& rcq, Vec& dx, Vec& dr, Vec& dp,
                            Vec& dq, Vec& dzp, Vec& dzq) {
      const Vec w = -(rcp - p.cwiseProduct(rp)).cwiseQuotient(zp) +
                    (rcq - q.cwiseProduct(rq)).cwiseQuotient(zq);
      const Vec rhs = normal.at() * w.cwiseProduct(ginv) - rx;
      dx = normal.solve(rhs);
      dr = (w - a * dx).cwiseProduct(ginv);
      dzp = rp - 2.0 * dr;
      dzq = rq + 2.0 * dr;
      dp = (rcp - p.cwiseProduct(dzp)).cwiseQuotient(zp);
      dq = (rcq - q.cwiseProduct(dzq)).cwiseQuotient(zq);
    };

    // predictor
    Vec dx, dr, dp, dq, dzp, dzq;
    newton(-p.cwiseProduct(zp), -q.cwiseProduct(zq), dx, dr, dp, dq, dzp, dzq);
    const double ap_aff = std::min(max_step(p, dp, 1.0), max_step(q, dq, 1.0));
    const double ad_aff = std::min(max_step(zp, dzp, 1.0), max_step(zq, dzq, 1.0));
    const double mu_aff = ((p + ap_aff * dp).dot(zp + ad_aff * dzp) +
                           (q + ap_aff * dq).dot(zq + ad_aff * dzq)) /
                          (2.0 * m);
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    // corrector
    const Vec rcp = Vec::Constant(m, sigma * mu) - p.cwiseProduct(zp) -
                    dp.cwiseProduct(dzp);
    const Vec rcq = Vec::Constant(m, sigma * mu) - q.cwiseProduct(zq) -
                    dq.cwiseProduct(dzq);
    newton(rcp, rcq, dx, dr, dp, dq, dzp, dzq);

    const double ap = std::min(max_step(p, dp, 0.995), max_step(q, dq, 0.995));
    const double ad = std::min(max_step(zp, dzp, 0.995), max_step(zq, dzq, 0.995));
    x += ap * dx;
    p += ap * dp;
    q += ap * dq;
    zp += ad * dzp;
    zq += ad * dzq;
    r = b - a * x - p + q;
  }

  out.x = std::move(x);
  out.e = truncated_errors(p - q, trunc);
  out.r = b - a * out.x - out.e;
  return out;
}

// Rows whose penalty weight is exactly zero impose no cost: at the optimum
// they are fitted exactly (e_i equals the raw residual, r_i = 0). Solving
// them explicitly would make the QP dual degenerate, so they are removed
// before the interior point solve and reassembled afterwards.
struct ZeroWeightSplit {
  std::vector<Eigen::Index> kept;
  std::vector<Eigen::Index> freed;
  SpMat a;
  Vec b;
  Vec c;
};

ZeroWeightSplit split_zero_weights(const SpMat& a, const Vec& b, const Vec& c) {
  ZeroWeightSplit s;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    (c[i] > 0.0 ? s.kept : s.freed).push_back(i);
  }
  if (s.freed.empty()) {
    s.a = a;
    s.b = b;
    s.c = c;
    return s;
  }
  const Eigen::Index mk = static_cast<Eigen::Index>(s.kept.size());
  Mat dense = Mat::Zero(mk, a.cols());
  s.b.resize(mk);
  s.c.resize(mk);
  for (Eigen::Index row = 0; row < mk; ++row) {
    const Eigen::Index src = s.kept[row];
    s.b[row] = b[src];
    s.c[row] = c[src];
  }
  // rebuild the kept rows of the sparse matrix
  std::vector<Eigen::Index> row_map(c.size(), -1);
  for (Eigen::Index row = 0; row < mk; ++row) row_map[s.kept[row]] = row;
  std::vector<Triplet> trips;
  trips.reserve(a.nonZeros());
  for (int col = 0; col < a.outerSize(); ++col) {
    for (SpMat::InnerIterator it(a, col); it; ++it) {
      const Eigen::Index row = row_map[it.row()];
      if (row >= 0) trips.emplace_back(static_cast<int>(row), col, it.value());
    }
  }
  s.a = SpMat(mk, a.cols());
  s.a.setFromTriplets(trips.begin(), trips.end());
  s.a.makeCompressed();
  return s;
}

SparseSolution solve_l1ls_squared(const SpMat& a, const Vec& b, double lambda, const Vec& c,
                                  const SolverOptions& opt) {
  const ZeroWeightSplit s = split_zero_weights(a, b, c);
  const QpResult qp = l1ls_qp_interior_point(s.a, s.b, lambda, s.c, opt);

  SparseSolution sol;
  sol.x_hat = qp.x;
  sol.inner_iterations = qp.iterations;
  sol.e_hat.resize(b.size());
  const Vec raw = b - a * qp.x;
  for (std::size_t i = 0; i < s.kept.size(); ++i) {
    sol.e_hat[s.kept[i]] = qp.e[static_cast<Eigen::Index>(i)];
  }
  for (const Eigen::Index i : s.freed) sol.e_hat[i] = raw[i];

  sol.objective = l1ls_objective(a, b, lambda, c, ResidualForm::L2Squared, sol.x_hat,
                                 sol.e_hat);
  sol.kkt_residual =
      l1ls_kkt_violation(a, b, lambda, c, ResidualForm::L2Squared, sol.x_hat, sol.e_hat);

  const double scale = 1.0 + b.lpNorm<Eigen::Infinity>() +
                       lambda * c.lpNorm<Eigen::Infinity>();
  if (!qp.converged && sol.kkt_residual > opt.tol * scale) {
    throw NonConvergenceError("l1-regularized least squares did not converge in " +
                                  std::to_string(opt.max_inner_iterations) + " iterations",
                              sol.x_hat, sol.e_hat, sol.kkt_residual);
  }
  return sol;
}

// Unsquared residual form: min |b - Ax - e|_2 + lambda sum c_i |e_i|.
//
// A point solves this program iff it solves the squared form with penalty
// lt = 2 lambda |r|_2, so the scalar root of phi(lt) = 2 lambda |r(lt)|_2 - lt
// is found by damped fixed-point/secant iteration over squared solves. A root
// collapsing to zero means the residual can be driven to zero, in which case
// the program degenerates to a weighted least absolute deviations fit.
// Given the active set S and signs sigma of an unsquared-form candidate, the
// exact optimum is recoverable in closed form: stationarity pins r_S to
// t lambda c_S sigma_S with t = |r|_2, x depends affinely on t through the
// off-support normal equations, and |r(t)| = t becomes a scalar quadratic.
bool polish_unsquared(const SpMat& a, const Vec& b, double lambda, const Vec& c,
                      SparseSolution& sol) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  std::vector<Eigen::Index> on, off;
  for (Eigen::Index i = 0; i < m; ++i) {
    (sol.e_hat[i] != 0.0 || c[i] == 0.0 ? on : off).push_back(i);
  }
  if (static_cast<Eigen::Index>(off.size()) < n) return false;

  Vec v = Vec::Zero(m);  // r_S target direction: r_S = t * v_S
  for (const Eigen::Index i : on) {
    v[i] = lambda * c[i] * (sol.e_hat[i] >= 0.0 ? 1.0 : -1.0);
  }

  // off-support rows of A, dense is fine at the support sizes seen here
  Mat a_off(off.size(), n);
  Vec b_off(off.size());
  for (std::size_t row = 0; row < off.size(); ++row) {
    a_off.row(static_cast<Eigen::Index>(row)) = Mat(a).row(off[row]);
    b_off[static_cast<Eigen::Index>(row)] = b[off[row]];
  }
  const Mat gram = a_off.transpose() * a_off;
  const Eigen::LDLT<Mat> ldlt(gram);
  if (ldlt.info() != Eigen::Success) return false;
  const Vec x0 = ldlt.solve(a_off.transpose() * b_off);
  const Vec x1 = ldlt.solve(Vec(a.transpose() * v));

  const Vec p = b_off - a_off * x0;
  const Vec q = a_off * x1;
  const double vnorm2 = v.squaredNorm();
  const double alpha = 1.0 - vnorm2 - q.squaredNorm();
  const double beta = 2.0 * p.dot(q);
  const double gamma = -p.squaredNorm();
  // alpha t^2 + beta t + gamma = 0, smallest positive root
  const double disc = beta * beta - 4.0 * alpha * gamma;
  if (disc < 0.0) return false;
  double t = -1.0;
  if (std::abs(alpha) < 1e-14) {
    if (std::abs(beta) > 1e-14) t = -gamma / beta;
  } else {
    const double r1 = (-beta + std::sqrt(disc)) / (2.0 * alpha);
    const double r2 = (-beta - std::sqrt(disc)) / (2.0 * alpha);
    t = std::numeric_limits<double>::infinity();
    if (r1 > 0.0) t = std::min(t, r1);
    if (r2 > 0.0) t = std::min(t, r2);
    if (!std::isfinite(t)) t = -1.0;
  }
  if (!(t > 0.0)) return false;

  const Vec x = x0 + t * x1;
  Vec e = Vec::Zero(m);
  const Vec raw = b - a * x;
  for (const Eigen::Index i : on) e[i] = raw[i] - t * v[i];
  sol.x_hat = x;
  sol.e_hat = e;
  return true;
}

SparseSolution solve_l1ls_unsquared(const SpMat& a, const Vec& b, double lambda,
                                    const Vec& c, const SolverOptions& opt) {
  const double binf = b.lpNorm<Eigen::Infinity>();
  const double scale = 1.0 + binf + lambda * c.lpNorm<Eigen::Infinity>();

  WeightedNormalSolver normal(a);
  normal.factorize(Vec::Ones(a.rows()));
  const Vec x_ls = normal.solve(normal.at() * b);
  const Vec r_ls = b - a * x_ls;

  SparseSolution sol;
  if (r_ls.lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + binf)) {
    // consistent data: exact fit with no error estimate is optimal
    sol.x_hat = x_ls;
    sol.e_hat = Vec::Zero(b.size());
    sol.objective = l1ls_objective(a, b, lambda, c, ResidualForm::L2, x_ls, sol.e_hat);
    sol.kkt_residual = 0.0;
    return sol;
  }

  SolverOptions inner = opt;
  inner.residual_form = ResidualForm::L2Squared;

  int total_inner = 0;
  double lt = 2.0 * lambda * r_ls.norm();
  double prev_lt = -1.0, prev_phi = 0.0;
  double best_cert = std::numeric_limits<double>::infinity();
  for (int outer = 0; outer < 60; ++outer) {
    if (lt <= 1e-12 * lambda * (1.0 + binf)) break;  // residual collapsing to zero

    sol = solve_l1ls_squared(a, b, lt, c, inner);
    total_inner += sol.inner_iterations;

    // The squared solve identifies the support; the polish step then solves
    // the unsquared optimality system on that support exactly.
    SparseSolution candidate = sol;
    if (polish_unsquared(a, b, lambda, c, candidate)) {
      const double cert = l1ls_kkt_violation(a, b, lambda, c, ResidualForm::L2,
                                             candidate.x_hat, candidate.e_hat);
      best_cert = std::min(best_cert, cert);
      if (cert <= 0.5 * opt.tol * scale) {
        candidate.inner_iterations = total_inner;
        candidate.objective = l1ls_objective(a, b, lambda, c, ResidualForm::L2,
                                             candidate.x_hat, candidate.e_hat);
        candidate.kkt_residual = cert;
        return candidate;
      }
    }
    const double cert =
        l1ls_kkt_violation(a, b, lambda, c, ResidualForm::L2, sol.x_hat, sol.e_hat);
    best_cert = std::min(best_cert, cert);
    if (cert <= 0.5 * opt.tol * scale) {
      sol.inner_iterations = total_inner;
      sol.objective = l1ls_objective(a, b, lambda, c, ResidualForm::L2, sol.x_hat,
                                     sol.e_hat);
      sol.kkt_residual = cert;
      return sol;
    }

    const double rnorm = (b - a * sol.x_hat - sol.e_hat).norm();
    const double target = 2.0 * lambda * rnorm;
    const double phi = target - lt;
    double next = target;  // plain fixed point
    if (prev_lt > 0.0 && std::abs(phi - prev_phi) > 1e-14 * std::max(1.0, lt)) {
      const double secant = lt - phi * (lt - prev_lt) / (phi - prev_phi);
      if (secant > 0.0 && std::isfinite(secant)) next = secant;
    }
    prev_lt = lt;
    prev_phi = phi;
    lt = next;
  }

  if (lt <= 1e-12 * lambda * (1.0 + binf)) {
    // Degenerate branch: the residual norm can be driven to zero, so the
    // program reduces to minimizing lambda sum c_i |b_i - (Ax)_i| directly.
    const ZeroWeightSplit s = split_zero_weights(a, b, c);
    const SpMat aw = s.c.asDiagonal() * s.a;
    const Vec bw = s.c.asDiagonal() * s.b;
    const LadSolution lad = solve_lad(aw, bw, opt);
    sol.x_hat = lad.x;
    sol.e_hat = b - a * lad.x;
    sol.inner_iterations = total_inner + lad.iterations;
    sol.objective = l1ls_objective(a, b, lambda, c, ResidualForm::L2, sol.x_hat, sol.e_hat);
    sol.kkt_residual = lad.kkt_residual;
    return sol;
  }
  throw NonConvergenceError("unsquared-residual penalty fixed point did not converge "
                            "(best certificate " + std::to_string(best_cert) + ")",
                            sol.x_hat, sol.e_hat, best_cert);
}

}  // namespace

LadSolution solve_lad(const SpMat& a, const Vec& b, const SolverOptions& opt) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  if (m < n) throw SingularMatrixError("fewer rows than columns in l1 fit");
  const double scale = 1.0 + b.lpNorm<Eigen::Infinity>();

  WeightedNormalSolver normal(a);
  normal.factorize(Vec::Ones(m));
  Vec x = normal.solve(normal.at() * b);
  Vec r = b - a * x;

  LadSolution sol;
  if (r.lpNorm<Eigen::Infinity>() <= 1e-12 * scale) {
    // interpolation: the l1 objective is already zero
    sol.x = std::move(x);
    sol.dual = Vec::Zero(m);
    sol.objective = (b - a * sol.x).lpNorm<1>();
    sol.kkt_residual = 0.0;
    return sol;
  }

  // Interior point on the LP split r = u - v, u, v >= 0, minimizing 1'(u+v).
  // Bound multipliers are 1 -+ s with s the dual vector certifying optimality.
  const double u0 = 1.0 + 0.1 * r.lpNorm<Eigen::Infinity>();
  Vec u = r.cwiseMax(0.0).array() + u0;
  Vec v = (-r).cwiseMax(0.0).array() + u0;
  Vec s = Vec::Zero(m);

  int iterations = 0;
  for (int iter = 1; iter <= opt.max_inner_iterations; ++iter) {
    r = b - a * x;
    const Vec rp = r - u + v;
    const Vec rd = -(normal.at() * s);
    const Vec one_minus = Vec::Ones(m) - s;
    const Vec one_plus = Vec::Ones(m) + s;
    const double mu = (u.dot(one_minus) + v.dot(one_plus)) / (2.0 * m);

    iterations = iter - 1;
    // exit on the externally checkable certificate, not on interior residuals
    if (lad_kkt_violation(a, b, x, s) <= 0.5 * opt.tol * scale) break;

    const Vec d = u.cwiseQuotient(one_minus) + v.cwiseQuotient(one_plus);
    const Vec dinv = d.cwiseInverse();
    normal.factorize(dinv);

    const auto newton = [&](const Vec& rc1, const Vec& rc2, Vec& dx, Vec& ds, Vec& du,
                            Vec& dv) {
      const Vec h = rp - rc1.cwiseQuotient(one_minus) + rc2.cwiseQuotient(one_plus);
      const Vec rhs = normal.at() * h.cwiseProduct(dinv) - rd;
      dx = normal.solve(rhs);
      ds = (h - a * dx).cwiseProduct(dinv);
      du = (rc1 + u.cwiseProduct(ds)).cwiseQuotient(one_minus);
      dv = (rc2 - v.cwiseProduct(ds)).cwiseQuotient(one_plus);
    };

    Vec dx, ds, du, dv;
    newton(-u.cwiseProduct(one_minus), -v.cwiseProduct(one_plus), dx, ds, du, dv);
    const double ap_aff = std::min(max_step(u, du, 1.0), max_step(v, dv, 1.0));
    const double ad_aff = std::min(max_step(one_minus, -ds, 1.0), max_step(one_plus, ds, 1.0));
    const double mu_aff = ((u + ap_aff * du).dot(one_minus - ad_aff * ds) +
                           (v + ap_aff * dv).dot(one_plus + ad_aff * ds)) /
                          (2.0 * m);
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    const Vec rc1 = Vec::Constant(m, sigma * mu) - u.cwiseProduct(one_minus) +
                    du.cwiseProduct(ds);
    const Vec rc2 = Vec::Constant(m, sigma * mu) - v.cwiseProduct(one_plus) -
                    dv.cwiseProduct(ds);
    newton(rc1, rc2, dx, ds, du, dv);

    const double ap = std::min(max_step(u, du, 0.995), max_step(v, dv, 0.995));
    const double ad =
        std::min(max_step(one_minus, -ds, 0.995), max_step(one_plus, ds, 0.995));
    x += ap * dx;
    u += ap * du;
    v += ap * dv;
    s += ad * ds;
  }

  sol.x = std::move(x);
  sol.dual = std::move(s);
  sol.objective = (b - a * sol.x).lpNorm<1>();
  sol.kkt_residual = lad_kkt_violation(a, b, sol.x, sol.dual);
  sol.iterations = iterations;
  if (sol.kkt_residual > opt.tol * scale) {
    throw NonConvergenceError("least absolute deviations solve did not converge in " +
                                  std::to_string(opt.max_inner_iterations) + " iterations",
                              sol.x, Vec{}, sol.kkt_residual);
  }
  return sol;
}

SparseSolution solve_weighted_l1ls(const SpMat& a, const Vec& b, double lambda,
                                   const Vec& c, const SolverOptions& opt) {
  if (!(lambda > 0.0)) {
    throw std::invalid_argument(
        "lambda must be positive: a vanishing penalty lets e absorb every residual");
  }
  if (c.size() != b.size() || a.rows() != b.size()) {
    throw std::invalid_argument("solve_weighted_l1ls: inconsistent dimensions");
  }
  if ((c.array() < 0.0).any() || (c.array() > 1.0).any()) {
    throw std::invalid_argument("component weights must lie in [0, 1]");
  }
  return opt.residual_form == ResidualForm::L2Squared
             ? solve_l1ls_squared(a, b, lambda, c, opt)
             : solve_l1ls_unsquared(a, b, lambda, c, opt);
}

L0Solution solve_l0_oracle(const Mat& a, const Vec& b, int k) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  if (m > 20 || k > 3) {
    throw std::invalid_argument("l0 oracle limited to rows <= 20 and support size <= 3");
  }
  if (k < 0) throw std::invalid_argument("support size must be nonnegative");
  if (m - k < n) throw std::invalid_argument("support too large for unique fit");

  L0Solution best;
  bool have_best = false;

  std::vector<int> support;
  const auto try_support = [&]() {
    const int kept = m - static_cast<int>(support.size());
    Mat ak(kept, n);
    Vec bk(kept);
    int row = 0;
    std::size_t si = 0;
    for (int i = 0; i < m; ++i) {
      if (si < support.size() && support[si] == i) {
        ++si;
        continue;
      }
      ak.row(row) = a.row(i);
      bk[row] = b[i];
      ++row;
    }
    Eigen::ColPivHouseholderQR<Mat> qr(ak);
    qr.setThreshold(1e-10);
    const Vec x = qr.solve(bk);
    const double objective = (bk - ak * x).norm();
    // strict improvement only: enumeration order already prefers small,
    // lexicographically first supports
    if (!have_best || objective < best.objective - 1e-12 * (1.0 + best.objective)) {
      have_best = true;
      best.x = x;
      best.support = support;
      best.objective = objective;
      best.e = Vec::Zero(m);
      const Vec raw = b - a * x;
      for (int i : support) best.e[i] = raw[i];
    }
  };

  // supports in order of increasing size, lexicographic within a size
  const std::function<void(int, int)> enumerate = [&](int start, int remaining) {
    if (remaining == 0) {
      try_support();
      return;
    }
    for (int i = start; i < m; ++i) {
      support.push_back(i);
      enumerate(i + 1, remaining - 1);
      support.pop_back();
    }
  };
  for (int size = 0; size <= k; ++size) enumerate(0, size);
  return best;
}

double lad_kkt_violation(const SpMat& a, const Vec& b, const Vec& x, const Vec& dual) {
  const Vec r = b - a * x;
  double worst = (a.transpose() * dual).lpNorm<Eigen::Infinity>();
  worst = std::max(worst, dual.lpNorm<Eigen::Infinity>() - 1.0);
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    // either the residual vanishes or the dual sits at sign(r_i)
    worst = std::max(worst, std::min(std::abs(r[i]), std::abs(dual[i] - sign_of(r[i]))));
  }
  return worst;
}

double l1ls_kkt_violation(const SpMat& a, const Vec& b, double lambda, const Vec& c,
                          ResidualForm form, const Vec& x, const Vec& e, double zero_tol) {
  Vec r = b - a * x - e;
  double grad_scale = 2.0;  // d/dr of |r|^2 is 2r
  if (form == ResidualForm::L2) {
    const double rnorm = r.norm();
    if (rnorm <= zero_tol) return 0.0;  // exact-fit face; subdifferential is a ball
    r /= rnorm;
    grad_scale = 1.0;
  }
  double worst = (a.transpose() * r).lpNorm<Eigen::Infinity>();
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    const double g = grad_scale * r[i];
    if (std::abs(e[i]) <= zero_tol) {
      worst = std::max(worst, std::abs(g) - lambda * c[i]);
    } else {
      worst = std::max(worst, std::abs(g - lambda * c[i] * sign_of(e[i])));
    }
  }
  return worst;
}

double l1ls_objective(const SpMat& a, const Vec& b, double lambda, const Vec& c,
                      ResidualForm form, const Vec& x, const Vec& e) {
  const Vec r = b - a * x - e;
  const double penalty = lambda * c.cwiseProduct(e.cwiseAbs()).sum();
  return (form == ResidualForm::L2Squared) ? r.squaredNorm() + penalty : r.norm() + penalty;
}

}  // namespace gridse
