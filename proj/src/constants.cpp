#include "sepde/constants.hpp"
#include "sepde/random.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

namespace sepde {

namespace {

// Objective |K u|_q / |u|_2 and the pieces needed for its gradient.
struct Evaluation {
  Vector u;  // unit L^2
  Vector v;  // K u
  double ratio = 0.0;
};

class EmbeddingAscent {
public:
  EmbeddingAscent(const LaplacianOperator& op, double p, const AscentBudget& budget)
      : op_(op), q_(2.0 * p), w_(op.grid().cell_volume()), budget_(budget) {}

  Evaluation evaluate(Vector u) const {
    u /= lq_norm(u, 2.0, w_);
    Vector v = solve_phi_inverse(op_, u, budget_.inner_tol);
    const double ratio = lq_norm(v, q_, w_);
    return {std::move(u), std::move(v), ratio};
  }

  // Riesz gradient of log|Ku|_q - log|u|_2 at a unit u; tangent to the sphere.
  Vector gradient(const Evaluation& e) const {
    const double m = e.v.cwiseAbs().maxCoeff();
    if (m == 0.0) return Vector::Zero(e.u.size());
    Vector z(e.v.size());
    double s = 0.0;
    for (Eigen::Index k = 0; k < z.size(); ++k) {
      const double a = std::abs(e.v[k]) / m;
      const double t = std::pow(a, q_ - 1.0);
      z[k] = e.v[k] < 0.0 ? -t : t;
      s += t * a;
    }
    s *= w_;
    return solve_phi_inverse(op_, z, budget_.inner_tol) / (s * m) - e.u;
  }

  NormEstimate run(Vector start) const {
    NormEstimate out;
    Evaluation cur = evaluate(std::move(start));
    out.evaluations = 1;
    out.value = cur.ratio;
    out.maximizer = cur.u;
    out.converged = false;

    double step = 0.0;
    Vector g = gradient(cur);
    double gnorm = lq_norm(g, 2.0, w_);
    for (int it = 0; it < budget_.max_steps; ++it) {
      if (gnorm <= 1e-14) {
        out.converged = true;
        break;
      }
      if (step == 0.0) step = 1.0 / gnorm;
      const double log_ratio = std::log(cur.ratio);
      bool accepted = false;
      Evaluation trial;
      for (int halving = 0; halving < 60; ++halving) {
        trial = evaluate(cur.u + step * g);
        ++out.evaluations;
        if (trial.ratio > out.value) {
          out.value = trial.ratio;
          out.maximizer = trial.u;
        }
        if (std::log(trial.ratio) >= log_ratio + 1e-4 * step * gnorm * gnorm) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        out.converged = true;
        break;
      }
      const double gain = (trial.ratio - cur.ratio) / cur.ratio;
      cur = std::move(trial);
      g = gradient(cur);
      gnorm = lq_norm(g, 2.0, w_);
      step *= 2.0;
      if (gain < budget_.gain_tol) {
        out.converged = true;
        break;
      }
    }
    out.stationarity = gnorm;
    return out;
  }

private:
  const LaplacianOperator& op_;
  double q_;
  double w_;
  AscentBudget budget_;
};

void validate_budget(const AscentBudget& b) {
  if (b.starts < 1) throw InvalidArgument("budget: starts must be >= 1");
  if (b.max_steps < 1) throw InvalidArgument("budget: max_steps must be >= 1");
  if (!(b.inner_tol > 0.0)) throw InvalidArgument("budget: inner_tol must be positive");
  if (!(b.gain_tol >= 0.0)) throw InvalidArgument("budget: gain_tol must be nonnegative");
}

// Row-major index helpers over an arbitrary box shape.
using Shape = std::array<int, Grid::max_dims>;

Eigen::Index shape_size(const Shape& s, int dims) {
  Eigen::Index n = 1;
  for (int i = 0; i < dims; ++i) n *= s[i];
  return n;
}

// Forward difference along `axis` from a zero-extended field of shape `in`
// to the staggered field of shape `in` with in[axis] + 1 points.
SparseMatrix forward_difference(const Shape& in, int dims, int axis, double h, Shape& out) {
  out = in;
  out[axis] = in[axis] + 1;
  const Eigen::Index n_in = shape_size(in, dims);
  const Eigen::Index n_out = shape_size(out, dims);
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(2 * n_out);
  std::array<int, Grid::max_dims> idx{};
  for (Eigen::Index r = 0; r < n_out; ++r) {
    Eigen::Index rem = r;
    for (int i = dims - 1; i >= 0; --i) {
      idx[i] = static_cast<int>(rem % out[i]);
      rem /= out[i];
    }
    auto flat_in = [&](int along) {
      Eigen::Index k = 0;
      for (int i = 0; i < dims; ++i) k = k * in[i] + (i == axis ? along : idx[i]);
      return k;
    };
    const int e = idx[axis];  // edge between input nodes e-1 and e
    if (e < in[axis]) entries.emplace_back(r, flat_in(e), 1.0 / h);
    if (e > 0) entries.emplace_back(r, flat_in(e - 1), -1.0 / h);
  }
  SparseMatrix d(n_out, n_in);
  d.setFromTriplets(entries.begin(), entries.end());
  return d;
}

// Gram matrix of the discrete H^2 norm (without the quadrature weight).
SparseMatrix h2_gram(const Grid& grid) {
  const int dims = grid.dims();
  Shape base{};
  for (int i = 0; i < dims; ++i) base[i] = grid.count(i);
  const Eigen::Index n = grid.size();

  SparseMatrix gram(n, n);
  gram.setIdentity();
  std::vector<SparseMatrix> first(dims);
  std::vector<Shape> first_shape(dims);
  for (int i = 0; i < dims; ++i) {
    first[i] = forward_difference(base, dims, i, grid.spacing(i), first_shape[i]);
    gram += SparseMatrix(first[i].transpose() * first[i]);
  }
  for (int i = 0; i < dims; ++i) {
    for (int j = 0; j < dims; ++j) {
      SparseMatrix second;
      if (i == j) {
        // Standard second difference with the implicit zero boundary.
        second = first[i].transpose() * first[i];
      } else {
        Shape unused;
        second = forward_difference(first_shape[j], dims, i, grid.spacing(i), unused) * first[j];
      }
      gram += SparseMatrix(second.transpose() * second);
    }
  }
  gram.makeCompressed();
  return gram;
}

}  // namespace

double embedding_ratio(const LaplacianOperator& op, double p, const Vector& u, double tol) {
  const double w = op.grid().cell_volume();
  const double denom = lq_norm(u, 2.0, w);
  if (denom == 0.0) throw InvalidArgument("embedding_ratio: zero field");
  return lq_norm(solve_phi_inverse(op, u, tol), 2.0 * p, w) / denom;
}

NormEstimate estimate_gamma_detailed(const LaplacianOperator& op, double p,
                                     const AscentBudget& budget) {
  if (!(p >= 1.0)) throw InvalidArgument("estimate_gamma: p must be >= 1");
  validate_budget(budget);
  const Grid& grid = op.grid();
  const EmbeddingAscent ascent(op, p, budget);
  const Vector eigenfunction = smallest_eigenvalue(op, 1e-10).eigenvector;

  std::vector<NormEstimate> results(budget.starts);
  auto run_start = [&](int index) {
    Vector start;
    if (index == 0) {
      start = eigenfunction;
    } else {
      start = random_normal(grid.size(), budget.seed, static_cast<std::uint64_t>(index));
    }
    results[index] = ascent.run(std::move(start));
  };

  const int threads = std::clamp(budget.threads, 1, budget.starts);
  if (threads == 1) {
    for (int i = 0; i < budget.starts; ++i) run_start(i);
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (int i = t; i < budget.starts; i += threads) run_start(i);
      });
    }
  }

  // Deterministic reduction: maximum, ties to the lower start index.
  NormEstimate best = results.front();
  int evaluations = 0;
  bool converged = true;
  for (const auto& r : results) {
    evaluations += r.evaluations;
    converged = converged && r.converged;
    if (r.value > best.value) best = r;
  }
  best.evaluations = evaluations;
  best.converged = converged;
  return best;
}

double estimate_gamma(const LaplacianOperator& op, double p, const AscentBudget& budget) {
  return estimate_gamma_detailed(op, p, budget).value;
}

double h2_norm(const Grid& grid, const Vector& u) {
  if (u.size() != grid.size()) throw InvalidArgument("h2_norm: size mismatch");
  const SparseMatrix gram = h2_gram(grid);
  return std::sqrt(grid.cell_volume() * u.dot(gram * u));
}

NormEstimate estimate_regularity_C(const LaplacianOperator& op, const AscentBudget& budget) {
  validate_budget(budget);
  const Grid& grid = op.grid();
  const double w = grid.cell_volume();
  const SparseMatrix gram = h2_gram(grid);

  // C_h^2 is the top eigenvalue of S = A^{-1} G A^{-1}. The H^2 Gram matrix
  // contains the second-difference block A^2, so S >= I and the power
  // iteration runs on S - I = A^{-1} (G - A^2) A^{-1}.
  auto shifted = [&](const Vector& y) {
    const Vector x = solve_phi_inverse(op, y, budget.inner_tol);
    const Vector gx = gram * x - op.apply(op.apply(x));
    return solve_phi_inverse(op, gx, budget.inner_tol);
  };

  Vector y = Vector::Ones(grid.size());
  y /= lq_norm(y, 2.0, w);
  NormEstimate out;
  out.converged = false;
  double rq = 0.0;
  Vector sy;
  for (int it = 0; it < budget.max_steps; ++it) {
    sy = shifted(y);
    ++out.evaluations;
    const double next = weighted_dot(y, sy, w);
    const bool done = it > 0 && std::abs(next - rq) <= budget.gain_tol * std::abs(next);
    rq = next;
    out.stationarity = lq_norm(sy - rq * y, 2.0, w);
    if (done) {
      out.converged = true;
      break;
    }
    y = sy / lq_norm(sy, 2.0, w);
  }
  out.value = std::sqrt(1.0 + rq);
  Vector u = solve_phi_inverse(op, y, budget.inner_tol);
  out.maximizer = u / lq_norm(u, 2.0, w);
  return out;
}

double mu_threshold(double p, double Gamma, double h_norm) {
  if (!(p > 1.0)) throw InvalidArgument("mu_threshold: p must exceed 1");
  if (!(Gamma > 0.0)) throw InvalidArgument("mu_threshold: Gamma must be positive");
  if (!(h_norm > 0.0)) {
    throw InvalidArgument("mu_threshold: |h|_2 must be positive (h must not vanish identically)");
  }
  return 1.0 / (std::pow(2.0, p) * Gamma * std::pow(h_norm, p - 1.0));
}

double beta_coefficient(double mu, double Gamma, double p) {
  if (!(mu > 0.0)) throw InvalidArgument("beta_coefficient: mu must be positive");
  if (!(Gamma > 0.0)) throw InvalidArgument("beta_coefficient: Gamma must be positive");
  if (!(p > 1.0)) throw InvalidArgument("beta_coefficient: p must exceed 1");
  return std::pow(2.0 * mu * Gamma, 1.0 / (p - 1.0));
}

double mu_star(double a, double Gamma, double b_norm) {
  if (!(a > 0.0)) throw InvalidArgument("mu_star: a must be positive");
  if (!(Gamma > 0.0)) throw InvalidArgument("mu_star: Gamma must be positive");
  if (!(b_norm >= 0.0)) throw InvalidArgument("mu_star: |b|_2 must be nonnegative");
  return 1.0 / (a * Gamma + b_norm);
}

ExponentVerdict admissible_exponent(double p, int dims) {
  if (!(p > 1.0)) return ExponentVerdict::inadmissible;
  if (dims == 3) return ExponentVerdict::admissible;
  if (dims > 4) {
    const double upper = static_cast<double>(dims) / (dims - 4);
    return p < upper ? ExponentVerdict::admissible : ExponentVerdict::inadmissible;
  }
  return ExponentVerdict::extension;
}

std::string to_string(ExponentVerdict v) {
  switch (v) {
    case ExponentVerdict::admissible: return "admissible";
    case ExponentVerdict::inadmissible: return "inadmissible";
    case ExponentVerdict::extension: return "extension";
  }
  return "unknown";
}

double ConstantsReport::threshold_constant() const {
  const double g = gamma_inflated();
  return strict_paper_constants ? g : std::pow(g, p);
}

namespace {

ConstantsReport base_report(const LaplacianOperator& op, double p, const ConstantsOptions& options) {
  if (!(p >= 1.0)) throw InvalidArgument("constants: p must be >= 1");
  if (!(options.safety_factor >= 1.0)) {
    throw InvalidArgument("constants: safety_factor must be >= 1");
  }
  ConstantsReport r;
  r.p = p;
  r.safety_factor = options.safety_factor;
  r.strict_paper_constants = options.strict_paper_constants;
  r.exponent = admissible_exponent(p, op.grid().dims());
  r.lambda_star = lambda_star(op, options.eigen_tol);
  r.grid = op.grid();
  r.seed = options.budget.seed;
  if (options.estimate_C) {
    r.regularity_C = estimate_regularity_C(op, options.budget).value;
  }
  return r;
}

}  // namespace

ConstantsReport compute_constants(const LaplacianOperator& op, double p,
                                  const ConstantsOptions& options) {
  ConstantsReport r = base_report(op, p, options);
  NormEstimate est = estimate_gamma_detailed(op, p, options.budget);
  r.gamma = est.value;
  r.Gamma = std::pow(est.value, p);
  r.method = "multistart projected gradient ascent";
  r.starts = options.budget.starts;
  r.evaluations = est.evaluations;
  r.stationarity = est.stationarity;
  r.ascent_converged = est.converged;
  r.maximizer = std::move(est.maximizer);
  return r;
}

ConstantsReport constants_from_gamma(const LaplacianOperator& op, double p, double gamma,
                                     const ConstantsOptions& options) {
  if (!(gamma > 0.0)) throw InvalidArgument("constants: given gamma must be positive");
  ConstantsReport r = base_report(op, p, options);
  r.gamma = gamma;
  r.Gamma = std::pow(gamma, p);
  r.method = "given";
  r.lower_bound = false;
  return r;
}

}  // namespace sepde
