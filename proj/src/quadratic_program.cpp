#include "cogmask/quadratic_program.hpp"

#include "cogmask/errors.hpp"

#include <cmath>
#include <limits>

namespace cogmask::qp {

const char* to_string(Status status) noexcept {
  switch (status) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDependence = 1e-9;

double max_violation(const Matrix& G, const Vector& h, const Vector& x) {
  if (G.rows() == 0) return 0.0;
  return std::max(0.0, (G * x - h).maxCoeff());
}

}  // namespace

Solution solve_min_norm(const Matrix& G, const Vector& h, const Options& options) {
  if (G.rows() != h.size()) throw InputError("QP: G and h have inconsistent sizes");
  const Eigen::Index n = G.cols();
  const Eigen::Index rows = G.rows();

  Solution sol;
  sol.x = Vector::Zero(n);
  sol.multipliers = Vector::Zero(rows);

  Vector row_norm(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    row_norm(i) = G.row(i).norm();
    if (row_norm(i) == 0.0 && h(i) < -options.feasibility_tolerance) {
      sol.status = Status::Infeasible;
      sol.max_violation = -h(i);
      return sol;
    }
  }

  // Active constraints in ">=" form: n_j'x >= b_j with n_j = -G_j', b_j = -h_j.
  std::vector<Eigen::Index> active;
  std::vector<bool> skipped(static_cast<std::size_t>(rows), false);
  Vector u(0);
  Vector& x = sol.x;

  auto normals = [&]() {
    Matrix N(n, static_cast<Eigen::Index>(active.size()));
    for (std::size_t j = 0; j < active.size(); ++j) N.col(static_cast<Eigen::Index>(j)) = -G.row(active[j]).transpose();
    return N;
  };
  auto drop = [&](Vector& uplus, Eigen::Index l) {
    active.erase(active.begin() + l);
    Vector shrunk(uplus.size() - 1);
    shrunk << uplus.head(l), uplus.tail(uplus.size() - l - 1);
    uplus = std::move(shrunk);
  };

  while (true) {
    if (sol.iterations >= options.max_iterations) {
      sol.status = Status::IterationLimit;
      break;
    }
    // most violated row, measured by normalised slack
    const Vector slack = h - G * x;
    Eigen::Index p = -1;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (row_norm(i) == 0.0 || skipped[static_cast<std::size_t>(i)]) continue;
      if (slack(i) >= -options.feasibility_tolerance * std::max(1.0, row_norm(i))) continue;
      const double s = slack(i) / row_norm(i);
      if (s < worst) {
        worst = s;
        p = i;
      }
    }
    if (p < 0) {
      sol.status = Status::Optimal;
      break;
    }

    const Vector np = -G.row(p).transpose();
    Vector uplus(u.size() + 1);
    uplus << u, 0.0;
    bool added = false;
    bool infeasible = false;

    while (!added && sol.iterations < options.max_iterations) {
      ++sol.iterations;
      const auto q = static_cast<Eigen::Index>(active.size());
      Vector z = np;
      Vector r(q);
      if (q > 0) {
        const Matrix N = normals();
        r = N.householderQr().solve(np);
        z = np - N * r;
      }
      double t1 = kInf;
      Eigen::Index l = -1;
      for (Eigen::Index j = 0; j < q; ++j) {
        if (r(j) > 1e-12) {
          const double ratio = uplus(j) / r(j);
          if (ratio < t1) {
            t1 = ratio;
            l = j;
          }
        }
      }
      const double zz = z.squaredNorm();
      const double sp = h(p) - G.row(p).dot(x);  // = n_p'x - b_p
      // z is the component of n_p orthogonal to the active normals; a tiny z means
      // n_p is (numerically) dependent on them and no primal step is possible.
      const double t2 = (std::sqrt(zz) > kDependence * np.norm()) ? -sp / zz : kInf;

      if (!std::isfinite(t1) && !std::isfinite(t2)) {
        infeasible = true;
        break;
      }
      if (!std::isfinite(t2)) {
        uplus.head(q) -= t1 * r;
        uplus(q) += t1;
        drop(uplus, l);
        continue;
      }
      const double t = std::min(t1, t2);
      x += t * z;
      uplus.head(q) -= t * r;
      uplus(q) += t;
      if (t2 <= t1) {
        active.push_back(p);
        u = uplus;
        added = true;
      } else {
        drop(uplus, l);
      }
    }
    if (infeasible) {
      // A row dependent on the active set and violated only at round-off level is
      // consistent in exact arithmetic; set it aside instead of giving up.
      if (-(h(p) - G.row(p).dot(x)) <= options.dependent_tolerance * row_norm(p)) {
        skipped[static_cast<std::size_t>(p)] = true;
        u = uplus.head(static_cast<Eigen::Index>(active.size()));
        continue;
      }
      sol.status = Status::Infeasible;
      break;
    }
    if (!added) {
      sol.status = Status::IterationLimit;
      break;
    }
  }

  for (std::size_t j = 0; j < active.size() && static_cast<Eigen::Index>(j) < u.size(); ++j)
    sol.multipliers(active[j]) = u(static_cast<Eigen::Index>(j));
  sol.active_set = active;
  sol.max_violation = max_violation(G, h, x);
  return sol;
}

}  // namespace cogmask::qp
