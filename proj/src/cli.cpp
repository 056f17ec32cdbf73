#include "sepde/cli/cli.hpp"

#include "sepde/cli/field_io.hpp"
#include "sepde/hypotheses.hpp"

#include "CLI11.hpp"

#include <atomic>
#include <cmath>
#include <iostream>
#include <numbers>
#include <thread>

namespace sepde::cli {

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

class Csv {
public:
  explicit Csv(std::vector<std::string> header) : width_(header.size()) { add_line(header); }

  class Row {
  public:
    Row& operator<<(double x) { return put(fixed17(x)); }
    Row& operator<<(bool x) { return put(x ? "true" : "false"); }
    template <std::integral I>
    Row& operator<<(I x) { return put(std::to_string(x)); }
    Row& operator<<(const char* s) { return put(quote(s)); }
    Row& operator<<(const std::string& s) { return put(quote(s)); }
    Row& operator<<(const std::optional<double>& x) { return x ? *this << *x : put(""); }
    Row& put(std::string cell) {
      cells_.push_back(std::move(cell));
      return *this;
    }
    std::vector<std::string> cells_;
  };

  Row& row() { return rows_.emplace_back(); }

  std::string str() {
    for (const auto& r : rows_) {
      if (r.cells_.size() != width_) throw std::logic_error("csv row width mismatch");
      add_line(r.cells_);
    }
    rows_.clear();
    return text_;
  }

private:
  void add_line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) text_ += (i ? "," : "") + cells[i];
    text_ += '\n';
  }
  std::size_t width_;
  std::string text_;
  std::vector<Row> rows_;
};

std::string order_cell(double order, bool floor) {
  if (floor) return "floor";
  return std::isnan(order) ? "" : fixed17(order);
}

std::string resolution_label(const Grid& g) {
  std::string s;
  for (int i = 0; i < g.dims(); ++i) s += (i ? "x" : "") + std::to_string(g.count(i));
  return s;
}

// g(u) = a u^p + b, using |u|^p for non-integer p.
PointwiseRule growth_rule(double a, double b, double p) {
  if (is_integral(p)) return [=](auto, double u) { return a * signed_power(u, p) + b; };
  return [=](auto, double u) { return a * std::pow(std::abs(u), p) + b; };
}

PointwiseRule growth_slope(double a, double p) {
  if (is_integral(p)) return [=](auto, double u) { return a * p * signed_power(u, p - 1.0); };
  return [=](auto, double u) {
    return a * p * std::pow(std::abs(u), p - 1.0) * (u < 0.0 ? -1.0 : 1.0);
  };
}

class Session {
public:
  Session(RunConfig cfg, const Overrides& ov, std::ostream& out)
      : cfg_(std::move(cfg)), ov_(ov), out_(out), grid_(cfg_.grid()), op_(grid_) {
    if (ov.out) cfg_.directory = *ov.out;
  }

  int dispatch(const std::string& command) {
    if (command == "mms") return mms();
    constants_stage();
    if (command == "constants") return constants();
    if (command == "check") return check();
    if (command == "solve-p") return solve_p();
    if (command == "solve-q") return solve_q();
    if (command == "solve-eigen") return solve_eigen();
    if (command == "sweep") return sweep();
    throw InvalidArgument("unknown command '" + command + "'");
  }

private:
  void constants_stage() {
    ConstantsOptions opts;
    opts.budget.starts = cfg_.starts;
    opts.budget.max_steps = cfg_.max_steps;
    opts.budget.inner_tol = cfg_.inner_tol;
    opts.budget.seed = cfg_.seed;
    opts.budget.threads = ov_.threads;
    opts.safety_factor = cfg_.safety_factor;
    opts.strict_paper_constants = cfg_.strict_paper_constants;
    opts.estimate_C = cfg_.estimate_C;
    consts_ = cfg_.gamma_mode == GammaMode::estimate
                  ? compute_constants(op_, cfg_.p, opts)
                  : constants_from_gamma(op_, cfg_.p, cfg_.gamma, opts);
    lambda_ = cfg_.lambda.relative ? cfg_.lambda.value * consts_.lambda_star : cfg_.lambda.value;

    if (cfg_.nonlinearity == NonlinearityKind::power_source) {
      h_ = source_field();
      const double hn = l2_norm(*h_);
      if (hn > 0.0) reference_mu_ = mu_threshold(cfg_.p, consts_.threshold_constant(), hn);
    } else {
      b_ = Field(grid_, Vector::Constant(grid_.size(), std::abs(cfg_.growth_b)));
      reference_mu_ = mu_star(cfg_.growth_a, consts_.threshold_constant(), l2_norm(*b_));
    }
    if (cfg_.mu.relative) {
      if (!reference_mu_) throw InvalidArgument("mu = auto-threshold needs a nonzero source h");
      mu_ = cfg_.mu.value * *reference_mu_;
    } else {
      mu_ = cfg_.mu.value;
    }
  }

  Field source_field() const {
    switch (cfg_.source_kind) {
      case SourceKind::constant:
        return Field(grid_, Vector::Constant(grid_.size(), cfg_.source_value));
      case SourceKind::sine: {
        const double c = cfg_.source_value;
        const auto L = cfg_.lengths;
        return eval_on_grid(grid_, [c, L](std::span<const double> x) {
          double s = c;
          for (std::size_t i = 0; i < x.size(); ++i) s *= std::sin(std::numbers::pi * x[i] / L[i]);
          return s;
        });
      }
      case SourceKind::file: {
        Field f = read_field(cfg_.source_file);
        if (!(f.grid() == grid_)) {
          throw InvalidArgument("source field grid does not match the configured domain");
        }
        return f;
      }
    }
    throw InvalidArgument("unknown source kind");
  }

  Variant variant() const {
    if (cfg_.variant) return *cfg_.variant;
    if (h_ && h_->values().minCoeff() >= 0.0) return Variant::b;
    return Variant::a;
  }

  Nonlinearity nonlinearity(double mu) const {
    if (cfg_.nonlinearity == NonlinearityKind::power_source) {
      const double Gamma = consts_.threshold_constant();
      return Nonlinearity::power_source(cfg_.p, Gamma, beta_coefficient(mu, Gamma, cfg_.p), *h_, mu);
    }
    return Nonlinearity::growth_bounded(growth_rule(cfg_.growth_a, cfg_.growth_b, cfg_.p),
                                        GrowthBound{cfg_.growth_a, *b_, cfg_.p}, mu,
                                        growth_slope(cfg_.growth_a, cfg_.p));
  }

  SolveOptions solve_options() const {
    SolveOptions s;
    s.method = cfg_.method;
    s.omega = cfg_.omega;
    s.tol = cfg_.tol;
    s.max_iter = cfg_.max_iter;
    s.inner_tol = cfg_.inner_tol;
    return s;
  }

  std::optional<double> mu_fraction(double mu) const {
    if (!reference_mu_) return std::nullopt;
    return mu / *reference_mu_;
  }

  void emit(const std::string& name, const std::string& text) {
    const auto dir = cfg_.directory;
    std::filesystem::create_directories(dir);
    write_atomic(dir / name, text);
    out_ << "wrote " << (dir / name).string() << '\n';
  }

  void emit_csv(const std::string& name, Csv& csv) {
    if (cfg_.write_csv) emit(name, csv.str());
  }

  void emit_field(const std::string& name, const Field& f) {
    if (cfg_.write_fields) emit(name, format_field(f));
  }

  int constants() {
    Csv csv({"dims", "resolution", "p", "lambda_star", "gamma", "gamma_inflated", "Gamma",
             "threshold_constant", "safety_factor", "strict_paper_constants", "lower_bound",
             "method", "seed", "starts", "evaluations", "stationarity", "ascent_converged",
             "regularity_C", "mu_threshold", "mu_star", "exponent"});
    const bool power = cfg_.nonlinearity == NonlinearityKind::power_source;
    csv.row() << grid_.dims() << resolution_label(grid_) << consts_.p << consts_.lambda_star
              << consts_.gamma << consts_.gamma_inflated() << consts_.Gamma
              << consts_.threshold_constant() << consts_.safety_factor
              << consts_.strict_paper_constants << consts_.lower_bound << consts_.method
              << consts_.seed << consts_.starts << consts_.evaluations << consts_.stationarity
              << consts_.ascent_converged << consts_.regularity_C
              << (power ? reference_mu_ : std::nullopt) << (power ? std::nullopt : reference_mu_)
              << to_string(consts_.exponent);
    emit_csv("constants.csv", csv);
    if (consts_.maximizer.size() == grid_.size()) {
      emit_field("gamma_maximizer.field", Field(grid_, consts_.maximizer));
    }
    out_ << "lambda_star " << fixed17(consts_.lambda_star) << " gamma " << fixed17(consts_.gamma)
         << '\n';
    return exit_ok;
  }

  int check() {
    const Nonlinearity nl = nonlinearity(mu_);
    SamplingOptions so;
    so.samples = cfg_.samples;
    so.seed = cfg_.seed;
    so.inner_tol = cfg_.inner_tol;

    std::vector<HypothesisReport> reports;
    reports.push_back(check_invariance_analytic(nl, cfg_.R, consts_, false));
    reports.push_back(check_invariance_analytic(nl, cfg_.R, consts_, true));
    if (!nl.requires_nonnegative()) {
      reports.push_back(check_invariance_sampled(nl, op_, cfg_.R, false, so));
    }
    reports.push_back(check_invariance_sampled(nl, op_, cfg_.R, true, so));
    reports.push_back(check_sign_condition(nl, grid_, so));
    reports.push_back(check_dissipativity(op_, lambda_, so));

    Csv csv({"hypothesis", "mode", "R", "verdict", "margin", "norm_slack", "samples", "seed",
             "lambda", "mu", "mu_fraction", "worst_case", "note"});
    bool ok = true;
    for (const auto& r : reports) {
      ok = ok && r.passed();
      csv.row() << to_string(r.hypothesis) << to_string(r.mode) << r.R << to_string(r.verdict)
                << r.margin << r.norm_slack << r.samples << r.seed << lambda_ << mu_
                << mu_fraction(mu_) << r.worst_case << r.note;
      out_ << to_string(r.hypothesis) << ' ' << to_string(r.mode) << ' ' << to_string(r.verdict)
           << '\n';
    }
    const ExponentVerdict ev = admissible_exponent(cfg_.p, grid_.dims());
    ok = ok && ev != ExponentVerdict::inadmissible;
    csv.row() << "H4" << "analytic" << cfg_.R << to_string(ev) << 0.0 << 0.0 << 0 << cfg_.seed
              << lambda_ << mu_ << mu_fraction(mu_) << ""
              << "p = " + shortest(cfg_.p) + ", N = " + std::to_string(grid_.dims());
    emit_csv("check.csv", csv);
    return ok ? exit_ok : exit_failed;
  }

  int solve_p() {
    const Variant var = variant();
    const Problem prob{grid_, lambda_, nonlinearity(mu_), var, cfg_.R, consts_.lambda_star};
    const SolveResult res = solve_P(prob, solve_options());
    const ResidualNorms check = strong_residual(res.v, prob);
    const PositivityResult pos = positivity_check(res.v, 0.0);
    const SolveReport& r = res.report;
    Csv csv({"lambda", "mu", "mu_fraction", "p", "variant", "method", "converged", "iterations",
             "picard_steps", "newton_steps", "fixed_point_residual", "strong_residual_l2",
             "strong_residual_max", "u_norm", "v_min", "v_max", "omega", "positivity",
             "message"});
    csv.row() << lambda_ << mu_ << mu_fraction(mu_) << cfg_.p << to_string(var)
              << to_string(cfg_.method) << r.converged << r.iterations << r.picard_steps
              << r.newton_steps << r.fixed_point_residual << check.l2 << check.max_node
              << r.u_norm << r.v_min << r.v_max << r.omega << to_string(pos.verdict) << r.message;
    emit_csv("solve_p.csv", csv);
    emit_field("u.field", res.u);
    emit_field("v.field", res.v);
    out_ << "converged " << (r.converged ? "true" : "false") << '\n';
    return r.converged ? exit_ok : exit_failed;
  }

  QResult q_solve(double mu) const {
    QOptions q;
    q.solve = solve_options();
    q.variant = cfg_.variant;
    q.R = cfg_.R;
    return solve_Q(grid_, lambda_, mu, cfg_.p, *h_, q, consts_);
  }

  static bool q_ok(const QResult& q) {
    return q.p_solution.report.converged && q.strictly_positive.value_or(true);
  }

  int solve_q() {
    const QResult q = q_solve(mu_);
    const SolveReport& r = q.p_solution.report;
    const PositivityResult pos = positivity_check(q.w, 0.0);
    std::string notes;
    for (const auto& n : q.notes) notes += (notes.empty() ? "" : "; ") + n;
    Csv csv({"lambda", "mu", "mu_threshold", "mu_fraction", "p", "beta", "Gamma", "variant",
             "within_regime", "exponent", "converged", "iterations", "fixed_point_residual",
             "strong_residual_l2", "q_residual_l2", "q_residual_max", "u_norm", "min_w", "max_w",
             "positivity", "notes"});
    csv.row() << lambda_ << mu_ << q.mu_threshold << mu_ / q.mu_threshold << cfg_.p << q.beta
              << q.Gamma << to_string(q.variant) << q.within_regime << to_string(q.exponent)
              << r.converged << r.iterations << r.fixed_point_residual << r.strong_residual_l2
              << q.q_residual_l2 << q.q_residual_max << r.u_norm << pos.min
              << q.w.values().maxCoeff() << to_string(pos.verdict) << notes;
    emit_csv("solve_q.csv", csv);
    emit_field("w.field", q.w);
    out_ << "converged " << (r.converged ? "true" : "false") << " min_w " << fixed17(pos.min)
         << '\n';
    return q_ok(q) ? exit_ok : exit_failed;
  }

  int solve_eigen() {
    const GrowthSpec spec{growth_rule(cfg_.growth_a, cfg_.growth_b, cfg_.p),
                          growth_slope(cfg_.growth_a, cfg_.p), cfg_.growth_a, *b_, cfg_.p};
    const EigenResult e =
        solve_eigenproblem(grid_, lambda_, mu_, spec, solve_options(), consts_, cfg_.R);
    const SolveReport& r = e.p_solution.report;
    std::string notes;
    for (const auto& n : e.notes) notes += (notes.empty() ? "" : "; ") + n;
    Csv csv({"lambda", "mu", "mu_star", "mu_fraction", "p", "a", "b", "within_regime",
             "exponent", "converged", "iterations", "fixed_point_residual", "strong_residual_l2",
             "strong_residual_max", "u_norm", "v_min", "v_max", "notes"});
    csv.row() << lambda_ << mu_ << e.mu_star << mu_ / e.mu_star << cfg_.p << cfg_.growth_a
              << cfg_.growth_b << e.within_regime << to_string(e.exponent) << r.converged
              << r.iterations << r.fixed_point_residual << r.strong_residual_l2
              << r.strong_residual_max << r.u_norm << r.v_min << r.v_max << notes;
    emit_csv("eigen.csv", csv);
    emit_field("v.field", e.p_solution.v);
    out_ << "converged " << (r.converged ? "true" : "false") << '\n';
    return r.converged ? exit_ok : exit_failed;
  }

  int sweep() {
    if (cfg_.kind != ProblemKind::q) throw InvalidArgument("sweep requires problem.kind = q");
    if (!reference_mu_) throw InvalidArgument("sweep needs a nonzero source h");
    const auto& fr = cfg_.mu_fractions;
    std::vector<std::optional<QResult>> legs(fr.size());
    std::vector<std::string> failures(fr.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < fr.size(); i = next++) {
        try {
          legs[i] = q_solve(fr[i] * *reference_mu_);
        } catch (const std::exception& e) {
          failures[i] = e.what();
        }
      }
    };
    const int k = std::max(1, std::min<int>(ov_.threads, static_cast<int>(fr.size())));
    if (k == 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (int t = 0; t < k; ++t) pool.emplace_back(worker);
    }
    for (const auto& f : failures) {
      if (!f.empty()) throw std::runtime_error("sweep leg failed: " + f);
    }

    Csv csv({"index", "mu_fraction", "mu", "within_regime", "converged", "iterations", "u_norm",
             "fixed_point_residual", "strong_residual_l2", "q_residual_l2", "min_w", "max_w",
             "positivity"});
    bool ok = true;
    for (std::size_t i = 0; i < fr.size(); ++i) {
      const QResult& q = *legs[i];
      const SolveReport& r = q.p_solution.report;
      const PositivityResult pos = positivity_check(q.w, 0.0);
      ok = ok && q_ok(q);
      csv.row() << i << fr[i] << fr[i] * *reference_mu_ << q.within_regime << r.converged
                << r.iterations << r.u_norm << r.fixed_point_residual << r.strong_residual_l2
                << q.q_residual_l2 << pos.min << q.w.values().maxCoeff() << to_string(pos.verdict);
    }
    emit_csv("sweep.csv", csv);
    out_ << fr.size() << " legs, " << (ok ? "all converged" : "some failed") << '\n';
    return ok ? exit_ok : exit_failed;
  }

  int mms() {
    if (cfg_.mu.relative) throw InvalidArgument("mms needs an absolute mu");
    MmsCase m;
    m.dims = cfg_.dims;
    m.lengths = cfg_.lengths;
    m.lambda = cfg_.lambda.relative ? cfg_.lambda.value * lambda_star(op_, 1e-10) : cfg_.lambda.value;
    m.mu = cfg_.mu.value;
    m.p = cfg_.p;
    m.exact = sine_product(cfg_.lengths, cfg_.mms_wavenumber);
    m.mode = cfg_.mms_mode;
    const RefinementTable t = refinement_study(m, cfg_.mms_resolutions, solve_options());

    Csv csv({"mode", "resolution", "h", "error_l2", "error_max", "order_l2", "order_max",
             "converged", "floor"});
    bool ok = true;
    for (const auto& row : t.rows) {
      ok = ok && row.converged;
      if (t.mode == MmsMode::stencil) ok = ok && row.floor;
      csv.row() << to_string(t.mode) << row.resolution << row.h << row.error_l2 << row.error_max
                << order_cell(row.order_l2, row.floor) << order_cell(row.order_max, row.floor)
                << row.converged << row.floor;
    }
    if (t.mode == MmsMode::analytic) {
      const double order = t.rows.back().order_l2;
      ok = ok && order >= 1.8 && order <= 2.2;
      out_ << "observed order " << fixed17(order) << '\n';
    }
    emit_csv("mms.csv", csv);
    return ok ? exit_ok : exit_failed;
  }

  RunConfig cfg_;
  Overrides ov_;
  std::ostream& out_;
  Grid grid_;
  LaplacianOperator op_;
  ConstantsReport consts_;
  double lambda_ = 0.0;
  double mu_ = 0.0;
  std::optional<double> reference_mu_;
  std::optional<Field> h_;
  std::optional<Field> b_;
};

void apply_overrides(RunConfig& cfg, const Overrides& ov) {
  std::vector<ConfigIssue> issues;
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.strict_paper_constants) cfg.strict_paper_constants = true;
  if (ov.resolution) cfg.resolution.assign(static_cast<std::size_t>(std::max(cfg.dims, 1)), *ov.resolution);
  if (ov.lambda) {
    try {
      cfg.lambda = parse_scaled(*ov.lambda, "lambda_star");
      if (cfg.lambda.value < 0.0) {
        issues.push_back({0, "--lambda: lambda must be ≥ 0 (the theory covers 0 ≤ λ ≤ λ*)"});
      }
    } catch (const std::exception& e) {
      issues.push_back({0, std::string("--lambda: ") + e.what()});
    }
  }
  if (ov.mu) {
    try {
      cfg.mu = parse_scaled(*ov.mu, "auto-threshold");
      if (!(cfg.mu.value > 0.0)) issues.push_back({0, "--mu: mu must be > 0"});
    } catch (const std::exception& e) {
      issues.push_back({0, std::string("--mu: ") + e.what()});
    }
  }
  if (ov.threads < 1) issues.push_back({0, "--threads must be >= 1"});
  for (auto& i : validate(cfg)) issues.push_back(std::move(i));
  if (!issues.empty()) throw ConfigError(std::move(issues));
}

}  // namespace

int run_command(const std::string& command, RunConfig cfg, const Overrides& overrides,
                std::ostream& out, std::ostream& err) {
  try {
    apply_overrides(cfg, overrides);
    Session session(std::move(cfg), overrides, out);
    return session.dispatch(command);
  } catch (const ConfigError& e) {
    err << "config error:\n" << e.what() << '\n';
  } catch (const NonConvergence& e) {
    err << "non-convergence: " << e.what() << '\n';
    return exit_failed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return exit_operational;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fixed-point solver for semilinear elliptic Dirichlet problems", "sepde"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::string> config_path;
  std::optional<std::string> out_dir;
  Overrides ov;
  app.add_option("--config", config_path, "config file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", ov.seed, "random seed");
  app.add_option("--threads", ov.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--strict-paper-constants", ov.strict_paper_constants,
               "use gamma instead of gamma^p in the thresholds");
  app.add_option("--mu", ov.mu, "mu, or auto-threshold, or <f>*auto-threshold");
  app.add_option("--lambda", ov.lambda, "lambda, or lambda_star, or <f>*lambda_star");
  app.add_option("--resolution", ov.resolution, "interior nodes per axis")
      ->check(CLI::PositiveNumber);

  std::string command;
  for (const char* name :
       {"constants", "check", "solve-p", "solve-q", "solve-eigen", "mms", "sweep"}) {
    app.add_subcommand(name)->callback([&command, name] { command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n' << app.help();
    return exit_operational;
  }
  if (out_dir) ov.out = *out_dir;

  RunConfig cfg;
  try {
    if (config_path) cfg = load_config(*config_path);
  } catch (const ConfigError& e) {
    err << "config error:\n" << e.what() << '\n';
    return exit_operational;
  }
  return run_command(command, std::move(cfg), ov, out, err);
}

}  // namespace sepde::cli
