#include "cogmask/linear_program.hpp"

#include "cogmask/errors.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace cogmask::lp {

const char* to_string(Status status) noexcept {
  switch (status) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

namespace {

// Tableau layout: rows 0..m-1 are constraints, row m is the reduced-cost row.
// Columns 0..n-1 are structural, n..n+m-1 artificial, the last column is the rhs.
class Tableau {
 public:
  Tableau(const StandardFormLp& p, const SimplexOptions& options)
      : m_(p.A.rows()), n_(p.A.cols()), opt_(options), t_(m_ + 1, n_ + m_ + 1), sign_(m_),
        basis_(static_cast<std::size_t>(m_)) {
    t_.setZero();
    for (Eigen::Index i = 0; i < m_; ++i) {
      sign_(i) = p.b(i) < 0.0 ? -1.0 : 1.0;
      t_.row(i).head(n_) = sign_(i) * p.A.row(i);
      t_(i, n_ + i) = 1.0;
      t_(i, rhs()) = sign_(i) * p.b(i);
      basis_[static_cast<std::size_t>(i)] = n_ + i;
    }
  }

  Eigen::Index rhs() const { return n_ + m_; }

  // Phase 1: minimize the sum of artificials.
  Status phase_one(int& iterations) {
    t_.row(m_).setZero();
    for (Eigen::Index i = 0; i < m_; ++i) {
      t_.row(m_).head(n_) -= t_.row(i).head(n_);
      t_(m_, rhs()) -= t_(i, rhs());
    }
    const Status s = iterate(n_ + m_, iterations);
    if (s != Status::Optimal) return s;
    if (-t_(m_, rhs()) > opt_.feasibility_tolerance) return Status::Infeasible;
    drive_out_artificials();
    return Status::Optimal;
  }

  Status phase_two(const Vector& c, int& iterations) {
    t_.row(m_).setZero();
    t_.row(m_).head(n_) = c.transpose();
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Eigen::Index j = basis_[static_cast<std::size_t>(i)];
      const double cb = j < n_ ? c(j) : 0.0;
      if (cb != 0.0) t_.row(m_) -= cb * t_.row(i);
    }
    return iterate(n_, iterations);
  }

  Vector primal() const {
    Vector x = Vector::Zero(n_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Eigen::Index j = basis_[static_cast<std::size_t>(i)];
      if (j < n_) x(j) = t_(i, rhs());
    }
    return x;
  }

  // y' = c_B' B^{-1}; the artificial block of the tableau holds B^{-1} of the sign-flipped system.
  Vector duals(const Vector& c) const {
    Vector cb(m_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Eigen::Index j = basis_[static_cast<std::size_t>(i)];
      cb(i) = j < n_ ? c(j) : 0.0;
    }
    Vector y = t_.block(0, n_, m_, m_).transpose() * cb;
    return y.cwiseProduct(sign_);
  }

 private:
  Status iterate(Eigen::Index entering_limit, int& iterations) {
    bool bland = false;
    int degenerate_run = 0;
    while (true) {
      if (iterations >= opt_.max_iterations) return Status::IterationLimit;
      Eigen::Index enter = -1;
      double best = -opt_.cost_tolerance;
      for (Eigen::Index j = 0; j < entering_limit; ++j) {
        const double r = t_(m_, j);
        if (r < best) {
          enter = j;
          if (bland) break;
          best = r;
        }
      }
      if (enter < 0) return Status::Optimal;

      Eigen::Index leave = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m_; ++i) {
        const double a = t_(i, enter);
        if (a <= opt_.pivot_tolerance) continue;
        const double q = t_(i, rhs()) / a;
        if (q < ratio - 1e-14 ||
            (q <= ratio + 1e-14 && leave >= 0 &&
             basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
          ratio = q;
          leave = i;
        }
      }
      if (leave < 0) return Status::Unbounded;

      if (ratio <= 1e-14) {
        if (++degenerate_run > opt_.degenerate_switch) bland = true;
      } else {
        degenerate_run = 0;
      }
      pivot(leave, enter);
      ++iterations;
    }
  }

  void pivot(Eigen::Index row, Eigen::Index col) {
    t_.row(row) /= t_(row, col);
    for (Eigen::Index i = 0; i <= m_; ++i) {
      if (i == row) continue;
      const double f = t_(i, col);
      if (f != 0.0) t_.row(i) -= f * t_.row(row);
    }
    basis_[static_cast<std::size_t>(row)] = col;
  }

  void drive_out_artificials() {
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (basis_[static_cast<std::size_t>(i)] < n_) continue;
      Eigen::Index col = -1;
      double best = opt_.pivot_tolerance;
      for (Eigen::Index j = 0; j < n_; ++j) {
        if (std::abs(t_(i, j)) > best) {
          best = std::abs(t_(i, j));
          col = j;
        }
      }
      // A row with no structural entry is redundant; its artificial stays basic at zero.
      if (col >= 0) pivot(i, col);
    }
  }

  Eigen::Index m_;
  Eigen::Index n_;
  SimplexOptions opt_;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> t_;
  Vector sign_;
  std::vector<Eigen::Index> basis_;
};

}  // namespace

LpSolution solve(const StandardFormLp& problem, const SimplexOptions& options) {
  if (problem.A.rows() != problem.b.size() || problem.A.cols() != problem.c.size()) {
    throw InputError("linear program dimensions are inconsistent");
  }
  LpSolution out;
  Tableau tableau(problem, options);
  out.status = tableau.phase_one(out.iterations);
  if (out.status != Status::Optimal) return out;
  out.status = tableau.phase_two(problem.c, out.iterations);
  out.x = tableau.primal();
  out.duals = tableau.duals(problem.c);
  out.objective = problem.c.dot(out.x);
  return out;
}

namespace {

// Largest a in (0, 1] with v + a dv >= 0.
double step_to_boundary(const Vector& v, const Vector& dv) {
  double a = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
  return a;
}

}  // namespace

InequalitySolution solve_interior_point(const InequalityLp& problem, const InteriorPointOptions& options) {
  const Matrix& G = problem.G;
  const Vector& c = problem.c;
  const Vector& h = problem.h;
  const Eigen::Index m = G.rows();
  const Eigen::Index n = G.cols();
  if (c.size() != n || h.size() != m) throw InputError("inequality LP dimensions are inconsistent");

  InequalitySolution out;
  out.x = Vector::Zero(n);
  out.multipliers = Vector::Zero(m);
  if (m == 0) {
    out.status = c.isZero() ? Status::Optimal : Status::Unbounded;
    return out;
  }

  std::vector<std::vector<std::pair<Eigen::Index, double>>> nz(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (G(i, j) != 0.0) nz[static_cast<std::size_t>(i)].emplace_back(j, G(i, j));
  auto times = [&](const Vector& v) {
    Vector r = Vector::Zero(m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (const auto& [j, g] : nz[static_cast<std::size_t>(i)]) r(i) += g * v(j);
    return r;
  };
  auto times_transposed = [&](const Vector& v) {
    Vector r = Vector::Zero(n);
    for (Eigen::Index i = 0; i < m; ++i)
      for (const auto& [j, g] : nz[static_cast<std::size_t>(i)]) r(j) += g * v(i);
    return r;
  };

  Vector& x = out.x;
  Vector s = (h - times(x)).cwiseMax(1.0);
  Vector y = Vector::Ones(m);
  const double scale_p = 1.0 + h.lpNorm<Eigen::Infinity>();

  for (; out.iterations < options.max_iterations; ++out.iterations) {
    const Vector rd = c + times_transposed(y);
    const Vector rp = times(x) + s - h;
    const double gap = s.dot(y);
    // the dual residual is measured against the size of the terms it cancels
    Vector magnitude = Vector::Zero(n);
    for (Eigen::Index i = 0; i < m; ++i)
      for (const auto& [j, g] : nz[static_cast<std::size_t>(i)]) magnitude(j) += std::abs(g) * y(i);
    const double scale_d = 1.0 + c.lpNorm<Eigen::Infinity>() + magnitude.maxCoeff();
    if (rp.lpNorm<Eigen::Infinity>() <= options.tolerance * scale_p &&
        rd.lpNorm<Eigen::Infinity>() <= options.tolerance * scale_d &&
        gap <= options.gap_tolerance * (1.0 + std::abs(c.dot(x)))) {
      out.status = Status::Optimal;
      break;
    }
    // Complementarity exhausted while a residual is stuck at round-off: no further
    // progress is possible, so settle for the looser stall tolerance.
    if (gap <= 1e-6 * options.gap_tolerance * (1.0 + std::abs(c.dot(x)))) {
      if (rp.lpNorm<Eigen::Infinity>() <= options.stall_tolerance * scale_p &&
          rd.lpNorm<Eigen::Infinity>() <= options.stall_tolerance * scale_d)
        out.status = Status::Optimal;
      break;
    }
    const double mu = gap / static_cast<double>(m);

    Matrix normal = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double d = y(i) / s(i);
      for (const auto& [j, gj] : nz[static_cast<std::size_t>(i)])
        for (const auto& [k, gk] : nz[static_cast<std::size_t>(i)]) normal(j, k) += d * gj * gk;
    }
    normal.diagonal().array() += 1e-14 * std::max(1.0, normal.diagonal().maxCoeff());
    const Eigen::LDLT<Matrix> ldlt(normal);
    if (ldlt.info() != Eigen::Success) break;

    // Newton step for  G'dy = -r_d,  G dx + ds = -r_p,  S dy + Y ds = -r_c,  with two
    // rounds of iterative refinement (the normal matrix gets badly conditioned near the end).
    auto solve_once = [&](const Vector& r_d, const Vector& r_p, const Vector& r_c, Vector& dx, Vector& ds, Vector& dy) {
      const Vector w = (y.cwiseProduct(r_p) - r_c).cwiseQuotient(s);
      dx = ldlt.solve(-r_d - times_transposed(w));
      ds = -r_p - times(dx);
      dy = (-r_c - y.cwiseProduct(ds)).cwiseQuotient(s);
    };
    auto direction = [&](const Vector& r_c, Vector& dx, Vector& ds, Vector& dy) {
      solve_once(rd, rp, r_c, dx, ds, dy);
      for (int refine = 0; refine < 2; ++refine) {
        const Vector e_d = rd + times_transposed(dy);
        const Vector e_p = rp + times(dx) + ds;
        const Vector e_c = r_c + s.cwiseProduct(dy) + y.cwiseProduct(ds);
        Vector cx, cs, cy;
        solve_once(e_d, e_p, e_c, cx, cs, cy);
        dx += cx;
        ds += cs;
        dy += cy;
      }
    };

    Vector dx, ds, dy;
    direction(s.cwiseProduct(y), dx, ds, dy);
    const double ap = step_to_boundary(s, ds);
    const double ad = step_to_boundary(y, dy);
    const double mu_aff = (s + ap * ds).dot(y + ad * dy) / static_cast<double>(m);
    const double sigma = std::pow(mu_aff / mu, 3);

    const Vector rc = s.cwiseProduct(y) + ds.cwiseProduct(dy) - Vector::Constant(m, sigma * mu);
    direction(rc, dx, ds, dy);
    const double step_p = std::min(1.0, 0.99 * step_to_boundary(s, ds) / 1.0);
    const double step_d = std::min(1.0, 0.99 * step_to_boundary(y, dy) / 1.0);
    x += step_p * dx;
    s += step_p * ds;
    y += step_d * dy;
    s = s.cwiseMax(1e-300);
    y = y.cwiseMax(1e-300);
  }
  out.multipliers = y;
  out.objective = c.dot(x);
  return out;
}

}  // namespace cogmask::lp
