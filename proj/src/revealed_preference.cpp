#include "cogmask/revealed_preference.hpp"

#include "cogmask/errors.hpp"
#include "cogmask/linear_program.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <string>

namespace cogmask {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Cross-cost a(t, s) = alpha_t'(beta_s - beta_t) with ties snapped to exactly zero.
Matrix snapped_cross_cost(const ProbeResponseDataset& dataset, double tie_tol) {
  Matrix a = dataset.cross_cost();
  for (Eigen::Index t = 0; t < a.rows(); ++t)
    for (Eigen::Index s = 0; s < a.cols(); ++s)
      if (std::abs(a(t, s)) <= tie_tol) a(t, s) = 0.0;
  return a;
}

void check_certificate_shape(const AfriatCertificate& c, const ProbeResponseDataset& d) {
  if (c.levels.size() != d.size() || c.multipliers.size() != d.size()) {
    throw InputError("certificate has " + std::to_string(c.levels.size()) + " levels and " +
                     std::to_string(c.multipliers.size()) + " multipliers for a dataset of size " +
                     std::to_string(d.size()));
  }
}

void normalize(AfriatCertificate& c) {
  const double top = *std::max_element(c.multipliers.begin(), c.multipliers.end());
  if (!(top > 0.0) || !std::isfinite(top)) return;
  for (double& u : c.levels) u /= top;
  for (double& l : c.multipliers) l /= top;
}

// Combinatorial Afriat construction. Requires GARP (no strict weak-edge inside an SCC).
//
// Components of the weak relation are processed so that no weak edge points from a
// new component to an already processed one. Edges leaving a new component are then
// nonnegative, so any cycle through it decomposes into excursions
//   t -> s (old) ~> s' (old) -> t' (new)
// and choosing lambda_t >= -D(s, t') / a(t, s) makes every excursion nonnegative.
// Levels are shortest-path potentials of the graph with weights lambda_t * a(t, s).
AfriatCertificate combinatorial_certificate(const Matrix& a, const RevealedPreferenceRelation& rel) {
  const std::size_t k = static_cast<std::size_t>(a.rows());

  std::vector<std::size_t> reach(k, 0);
  for (std::size_t t = 0; t < k; ++t)
    reach[t] = static_cast<std::size_t>(std::count(rel.closure[t].begin(), rel.closure[t].end(), true));

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return reach[x] > reach[y]; });

  // Group consecutive members of the same component.
  std::vector<std::vector<std::size_t>> components;
  std::vector<bool> placed(k, false);
  for (std::size_t x : order) {
    if (placed[x]) continue;
    std::vector<std::size_t> comp;
    for (std::size_t y : order)
      if (!placed[y] && rel.closure[x][y] && rel.closure[y][x]) {
        comp.push_back(y);
        placed[y] = true;
      }
    components.push_back(std::move(comp));
  }

  std::vector<double> lambda(k, 1.0);
  Matrix dist = Matrix::Constant(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k), kInf);
  std::vector<std::size_t> processed;
  auto w = [&](std::size_t t, std::size_t s) { return lambda[t] * a(t, s); };

  for (const auto& comp : components) {
    // D(s, t') = min_{s'} dist(s, s') + w(s', t') over processed s, s'.
    for (std::size_t t : comp) {
      double bound = 1.0;
      for (std::size_t s : processed) {
        const double cost = a(t, s);
        if (!(cost > 0.0)) throw NumericalError("internal: weak edge into a processed component");
        for (std::size_t tp : comp) {
          double d = kInf;
          for (std::size_t sp : processed) d = std::min(d, dist(s, sp) + w(sp, tp));
          if (d < 0.0) bound = std::max(bound, -d / cost);
        }
      }
      lambda[t] = bound;
    }

    // Vertex insertion into the all-pairs shortest-path matrix.
    for (std::size_t v : comp) {
      dist(v, v) = 0.0;
      for (std::size_t x : processed) {
        double out = w(v, x);
        double in = w(x, v);
        for (std::size_t y : processed) {
          out = std::min(out, w(v, y) + dist(y, x));
          in = std::min(in, dist(x, y) + w(y, v));
        }
        dist(v, x) = out;
        dist(x, v) = in;
      }
      for (std::size_t x : processed)
        for (std::size_t z : processed) dist(x, z) = std::min(dist(x, z), dist(x, v) + dist(v, z));
      processed.push_back(v);
    }
  }

  AfriatCertificate cert;
  cert.multipliers = lambda;
  cert.levels.assign(k, 0.0);
  for (std::size_t s = 0; s < k; ++s) {
    double u = 0.0;
    for (std::size_t t = 0; t < k; ++t) u = std::min(u, dist(t, s));
    cert.levels[s] = u;
  }
  normalize(cert);
  return cert;
}

// Dual (circulation) form of the Afriat feasibility LP with lambda_t >= 1.
// Columns: y_ts (t != s), then w_t (lambda_t >= 1). Rows: flow conservation for
// nodes 1..K-1, then one row per lambda_t. The simplex multipliers of those rows
// are (u_1..u_{K-1}, lambda) with u_0 = 0.
struct AfriatDual {
  lp::StandardFormLp problem;
  Eigen::Index lambda_row0 = 0;
};

AfriatDual build_afriat_dual(const Matrix& a) {
  const Eigen::Index k = a.rows();
  const Eigen::Index rows = (k - 1) + k;
  const Eigen::Index cols = k * (k - 1) + k;

  AfriatDual out;
  out.lambda_row0 = k - 1;
  auto& p = out.problem;
  p.A = Matrix::Zero(rows, cols);
  p.b = Vector::Zero(rows);
  p.c = Vector::Zero(cols);

  Eigen::Index col = 0;
  for (Eigen::Index t = 0; t < k; ++t) {
    for (Eigen::Index s = 0; s < k; ++s) {
      if (s == t) continue;
      if (s > 0) p.A(s - 1, col) += 1.0;
      if (t > 0) p.A(t - 1, col) -= 1.0;
      p.A(out.lambda_row0 + t, col) = -a(t, s);
      ++col;
    }
  }
  for (Eigen::Index t = 0; t < k; ++t, ++col) {
    p.A(out.lambda_row0 + t, col) = -1.0;
    p.c(col) = -1.0;
  }
  return out;
}

AfriatCertificate certificate_from_duals(const Vector& duals, Eigen::Index k, Eigen::Index lambda_row0) {
  AfriatCertificate c;
  c.levels.assign(static_cast<std::size_t>(k), 0.0);
  c.multipliers.assign(static_cast<std::size_t>(k), 0.0);
  for (Eigen::Index j = 1; j < k; ++j) c.levels[static_cast<std::size_t>(j)] = duals(j - 1);
  for (Eigen::Index t = 0; t < k; ++t) c.multipliers[static_cast<std::size_t>(t)] = duals(lambda_row0 + t);
  return c;
}

}  // namespace

double afriat_violation(const AfriatCertificate& certificate, const ProbeResponseDataset& dataset) {
  check_certificate_shape(certificate, dataset);
  const Matrix a = dataset.cross_cost();
  double worst = -kInf;
  for (std::size_t t = 0; t < dataset.size(); ++t)
    for (std::size_t s = 0; s < dataset.size(); ++s) {
      const double lhs = certificate.levels[s] - certificate.levels[t] -
                         certificate.multipliers[t] * a(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s));
      worst = std::max(worst, lhs);
    }
  return worst;
}

bool certifies(const AfriatCertificate& certificate, const ProbeResponseDataset& dataset, double tol) {
  check_certificate_shape(certificate, dataset);
  for (double l : certificate.multipliers)
    if (!(l > 0.0) || !std::isfinite(l)) return false;
  for (double u : certificate.levels)
    if (!std::isfinite(u)) return false;
  return afriat_violation(certificate, dataset) <= tol;
}

ReconstructedUtility::ReconstructedUtility(std::vector<Piece> pieces) : pieces_(std::move(pieces)) {
  if (pieces_.empty()) throw InputError("reconstructed utility needs at least one piece");
  const Eigen::Index m = pieces_.front().probe.size();
  for (const auto& p : pieces_) {
    if (p.probe.size() != m || p.response.size() != m) throw InputError("piece dimension mismatch");
    if (!(p.multiplier > 0.0)) throw InputError("piece multiplier must be positive");
  }
}

std::size_t ReconstructedUtility::active_piece(const Vector& beta) const {
  if (beta.size() != dimension()) {
    throw InputError("evaluation point has dimension " + std::to_string(beta.size()) + ", expected " +
                     std::to_string(dimension()));
  }
  std::size_t best = 0;
  double value = kInf;
  for (std::size_t t = 0; t < pieces_.size(); ++t) {
    const auto& p = pieces_[t];
    const double v = p.level + p.multiplier * p.probe.dot(beta - p.response);
    if (v < value) {
      value = v;
      best = t;
    }
  }
  return best;
}

double ReconstructedUtility::operator()(const Vector& beta) const {
  const auto& p = pieces_[active_piece(beta)];
  return p.level + p.multiplier * p.probe.dot(beta - p.response);
}

RevealedPreferenceRelation revealed_preference_relation(const ProbeResponseDataset& dataset, double tie_tol) {
  const std::size_t k = dataset.size();
  RevealedPreferenceRelation rel;
  rel.weak.assign(k, std::vector<bool>(k, false));
  rel.strict.assign(k, std::vector<bool>(k, false));
  rel.closure.assign(k, std::vector<bool>(k, false));
  const Matrix a = dataset.cross_cost();
  for (std::size_t t = 0; t < k; ++t) {
    rel.closure[t][t] = true;
    for (std::size_t s = 0; s < k; ++s) {
      if (s == t) continue;
      const double cost = a(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s));
      rel.weak[t][s] = cost <= tie_tol;
      rel.strict[t][s] = cost < -tie_tol;
      rel.closure[t][s] = rel.weak[t][s];
    }
  }
  for (std::size_t via = 0; via < k; ++via)
    for (std::size_t t = 0; t < k; ++t)
      if (rel.closure[t][via])
        for (std::size_t s = 0; s < k; ++s)
          if (rel.closure[via][s]) rel.closure[t][s] = true;
  return rel;
}

namespace {

// Shortest weak path from `from` to `to` (inclusive), empty if unreachable.
std::vector<std::size_t> shortest_weak_path(const RevealedPreferenceRelation& rel, std::size_t from,
                                            std::size_t to) {
  const std::size_t k = rel.weak.size();
  std::vector<std::size_t> parent(k, k);
  std::vector<bool> seen(k, false);
  std::deque<std::size_t> queue{from};
  seen[from] = true;
  while (!queue.empty()) {
    const std::size_t x = queue.front();
    queue.pop_front();
    if (x == to) break;
    for (std::size_t y = 0; y < k; ++y) {
      if (!rel.weak[x][y] || seen[y]) continue;
      seen[y] = true;
      parent[y] = x;
      queue.push_back(y);
    }
  }
  if (!seen[to]) return {};
  std::vector<std::size_t> path{to};
  while (path.back() != from) path.push_back(parent[path.back()]);
  std::reverse(path.begin(), path.end());
  return path;
}

std::optional<std::vector<std::size_t>> find_violation_cycle(const RevealedPreferenceRelation& rel) {
  const std::size_t k = rel.weak.size();
  std::optional<std::vector<std::size_t>> best;
  for (std::size_t s = 0; s < k; ++s) {
    for (std::size_t t = 0; t < k; ++t) {
      // strict edge s -> t closed by a weak path t ~> s
      if (!rel.strict[s][t] || !rel.closure[t][s]) continue;
      auto path = shortest_weak_path(rel, t, s);
      if (path.empty()) continue;
      if (!best || path.size() < best->size()) best = std::move(path);
    }
  }
  if (best) {
    auto smallest = std::min_element(best->begin(), best->end());
    std::rotate(best->begin(), smallest, best->end());
  }
  return best;
}

bool garp_holds(const RevealedPreferenceRelation& rel) {
  const std::size_t k = rel.weak.size();
  for (std::size_t s = 0; s < k; ++s)
    for (std::size_t t = 0; t < k; ++t)
      if (rel.strict[s][t] && rel.closure[t][s]) return false;
  return true;
}

}  // namespace

RationalityVerdict check_garp(const ProbeResponseDataset& dataset, double lambda_cap) {
  const auto rel = revealed_preference_relation(dataset);
  RationalityVerdict verdict;
  if (auto cycle = find_violation_cycle(rel)) {
    verdict.passes = false;
    verdict.violation_cycle = std::move(cycle);
    verdict.max_margin = std::numeric_limits<double>::quiet_NaN();
    return verdict;
  }
  verdict.certificate = afriat_feasibility(dataset);
  if (!verdict.certificate) throw NumericalError("GARP holds but no Afriat certificate could be verified");
  verdict.passes = true;
  verdict.max_margin = max_margin(dataset, lambda_cap);
  return verdict;
}

namespace {

// Margin program in primal inequality form over (u_1..u_{K-1}, lambda, phi), u_0 = 0:
//   minimize -phi  s.t.  u_s - u_t - lambda_t a_ts + phi <= 0,  1 <= lambda_t <= cap,  phi <= margin_cap.
std::optional<MarginSolution> solve_margin_program(const Matrix& a, double lambda_cap, double margin_cap) {
  const Eigen::Index k = a.rows();
  const Eigen::Index n = 2 * k;
  const Eigen::Index phi = n - 1;
  lp::InequalityLp p;
  p.c = Vector::Zero(n);
  p.c(phi) = -1.0;
  p.G = Matrix::Zero(k * (k - 1) + 2 * k + 1, n);
  p.h = Vector::Zero(p.G.rows());
  Eigen::Index row = 0;
  for (Eigen::Index t = 0; t < k; ++t)
    for (Eigen::Index s = 0; s < k; ++s, ++row) {
      if (s == t) {
        --row;
        continue;
      }
      if (s > 0) p.G(row, s - 1) += 1.0;
      if (t > 0) p.G(row, t - 1) -= 1.0;
      p.G(row, k - 1 + t) = -a(t, s);
      p.G(row, phi) = 1.0;
    }
  for (Eigen::Index t = 0; t < k; ++t) {
    p.G(row, k - 1 + t) = -1.0;
    p.h(row++) = -1.0;
    p.G(row, k - 1 + t) = 1.0;
    p.h(row++) = lambda_cap;
  }
  p.G(row, phi) = 1.0;
  p.h(row) = margin_cap;

  const lp::InequalitySolution sol = lp::solve_interior_point(p);
  if (sol.status != lp::Status::Optimal) return std::nullopt;
  MarginSolution out;
  out.margin = sol.x(phi);
  out.certificate.levels.assign(static_cast<std::size_t>(k), 0.0);
  out.certificate.multipliers.assign(static_cast<std::size_t>(k), 0.0);
  for (Eigen::Index j = 1; j < k; ++j) out.certificate.levels[static_cast<std::size_t>(j)] = sol.x(j - 1);
  for (Eigen::Index t = 0; t < k; ++t) out.certificate.multipliers[static_cast<std::size_t>(t)] = sol.x(k - 1 + t);
  return out;
}

// Least-violating certificate with 1 <= lambda_t <= kDefaultLambdaCap, accepted when its
// worst inequality is within tol after scaling the largest multiplier to 1. Catches datasets
// that sit on the boundary of rationalizability and fail GARP only through rounding.
std::optional<AfriatCertificate> near_certificate(const ProbeResponseDataset& dataset, double tol) {
  const Matrix a = snapped_cross_cost(dataset, kTieTolerance);
  const auto sol = solve_margin_program(a, kDefaultLambdaCap, 1.0);
  if (!sol) return std::nullopt;
  AfriatCertificate cert = sol->certificate;
  normalize(cert);
  if (!certifies(cert, dataset, tol)) return std::nullopt;
  return cert;
}

}  // namespace

std::optional<AfriatCertificate> afriat_feasibility(const ProbeResponseDataset& dataset, double tol) {
  if (tol < 0.0) throw InputError("tolerance must be nonnegative");
  const auto rel = revealed_preference_relation(dataset);
  if (!garp_holds(rel)) return tol > 0.0 ? near_certificate(dataset, tol) : std::nullopt;
  const Matrix a = snapped_cross_cost(dataset, kTieTolerance);
  AfriatCertificate cert = combinatorial_certificate(a, rel);
  if (certifies(cert, dataset, tol)) return cert;
  return afriat_feasibility_lp(dataset, tol);
}

std::optional<AfriatCertificate> afriat_feasibility_lp(const ProbeResponseDataset& dataset, double tol) {
  if (tol < 0.0) throw InputError("tolerance must be nonnegative");
  const auto k = static_cast<Eigen::Index>(dataset.size());
  if (k == 1) return AfriatCertificate{{0.0}, {1.0}};
  const Matrix a = snapped_cross_cost(dataset, kTieTolerance);
  const AfriatDual dual = build_afriat_dual(a);
  const lp::LpSolution sol = lp::solve(dual.problem);
  if (sol.status == lp::Status::Unbounded) return std::nullopt;
  if (sol.status != lp::Status::Optimal) {
    throw NumericalError(std::string("Afriat LP did not finish: ") + lp::to_string(sol.status));
  }
  AfriatCertificate cert = certificate_from_duals(sol.duals, k, dual.lambda_row0);
  normalize(cert);
  if (!certifies(cert, dataset, tol)) {
    throw NumericalError("Afriat LP multipliers fail substitution check (violation " +
                         std::to_string(afriat_violation(cert, dataset)) + ")");
  }
  return cert;
}

ReconstructedUtility construct_utility(const AfriatCertificate& certificate, const ProbeResponseDataset& dataset,
                                       double tol) {
  if (!certifies(certificate, dataset, tol)) {
    throw ContractError("certificate does not satisfy the Afriat inequalities for this dataset");
  }
  std::vector<ReconstructedUtility::Piece> pieces;
  pieces.reserve(dataset.size());
  for (std::size_t t = 0; t < dataset.size(); ++t) {
    pieces.push_back({certificate.levels[t], certificate.multipliers[t], dataset.probe(t), dataset.response(t)});
  }
  return ReconstructedUtility(std::move(pieces));
}

MarginSolution max_margin_solution(const ProbeResponseDataset& dataset, double lambda_cap, double margin_cap) {
  if (!(lambda_cap > 1.0)) throw InputError("lambda_cap must exceed 1");
  if (!(margin_cap > 0.0)) throw InputError("margin cap must be positive");
  const auto k = static_cast<Eigen::Index>(dataset.size());
  if (k == 1) return {margin_cap, {{0.0}, {1.0}}};
  if (!afriat_feasibility(dataset)) {
    throw ContractError("max_margin requires a dataset that passes the rationality test");
  }
  const Matrix a = snapped_cross_cost(dataset, kTieTolerance);
  auto sol = solve_margin_program(a, lambda_cap, margin_cap);
  if (!sol) throw NumericalError("margin LP did not converge");
  return std::move(*sol);
}

double max_margin(const ProbeResponseDataset& dataset, double lambda_cap, double margin_cap) {
  return max_margin_solution(dataset, lambda_cap, margin_cap).margin;
}

}  // namespace cogmask
