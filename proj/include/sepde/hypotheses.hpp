#pragma once

#include "sepde/constants.hpp"
#include "sepde/nemytskii.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace sepde {

enum class Hypothesis { H1, H2, H3, dissipativity };
enum class CheckMode { analytic, sampled };
enum class Verdict { pass, fail, boundary };

std::string to_string(Hypothesis h);
std::string to_string(CheckMode m);
std::string to_string(Verdict v);

struct HypothesisReport {
  Hypothesis hypothesis = Hypothesis::H1;
  CheckMode mode = CheckMode::analytic;
  double R = 0.0;
  Verdict verdict = Verdict::fail;
  /// R minus the worst image norm, the smallest f value (H3), or minus the
  /// largest (Bu,u)/|u|^2 (dissipativity).
  double margin = 0.0;
  /// Dissipativity only: min over samples of 1 - |Bu|/|u|.
  double norm_slack = 0.0;
  std::string worst_case;
  std::string note;
  int samples = 0;
  std::uint64_t seed = 0;
  /// Field attaining the worst case, when sampled.
  std::optional<Vector> witness;

  bool passed() const { return verdict != Verdict::fail; }
};

/// pass / fail by the sign of the margin, boundary when |margin| <= 1e-12 R.
Verdict verdict_from_margin(double margin, double R);

/// Closed-form sufficient condition for ball invariance:
/// PowerSource: R^p/2 + beta |h|_2 <= R;
/// growth-bounded: mu (a Gamma R^p + |b|_2) <= R with Gamma from `consts`.
HypothesisReport check_invariance_analytic(const Nonlinearity& nl, double R,
                                           const ConstantsReport& consts,
                                           bool plus_variant = false);

struct SamplingOptions {
  int samples = 200;
  std::uint64_t seed = 0;
  double inner_tol = 1e-12;
};

/// Draws fields on the spheres of radius R, R/2 and R/10, maps them through
/// phi^{-1} and then N (or N^+) and compares the image norm with R.
HypothesisReport check_invariance_sampled(const Nonlinearity& nl, const LaplacianOperator& op,
                                          double R, bool plus_variant,
                                          const SamplingOptions& options);

HypothesisReport check_sign_condition(const Nonlinearity& nl, const Grid& grid,
                                      const SamplingOptions& options);

/// B u = -lambda phi^{-1} u: checks (Bu,u) <= 0 and |Bu| <= |u| on samples.
HypothesisReport check_dissipativity(const LaplacianOperator& op, double lambda,
                                     const SamplingOptions& options);

}  // namespace sepde
