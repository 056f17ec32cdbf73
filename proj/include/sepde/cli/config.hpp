#pragma once

#include "sepde/solver.hpp"
#include "sepde/verify.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sepde::cli {

enum class ProblemKind { p, q, eigen };
enum class NonlinearityKind { power_source, growth };
enum class SourceKind { constant, sine, file };
enum class GammaMode { estimate, given };

std::string to_string(ProblemKind k);

/// A value that is either absolute or a multiple of a reference computed at
/// run time (lambda* for lambda, the regime threshold for mu).
struct Scaled {
  double value = 0.0;
  bool relative = false;
};

/// Parses `0.3`, `auto-threshold` / `lambda_star`, or `0.5*<keyword>`.
/// Throws std::invalid_argument.
Scaled parse_scaled(std::string_view text, std::string_view keyword);

struct RunConfig {
  // [domain]
  int dims = 1;
  std::vector<double> lengths{1.0};
  std::vector<int> resolution{63};

  // [problem]
  ProblemKind kind = ProblemKind::q;
  Scaled lambda{0.0, false};
  Scaled mu{1.0, true};
  double p = 2.0;
  std::optional<Variant> variant;
  NonlinearityKind nonlinearity = NonlinearityKind::power_source;
  SourceKind source_kind = SourceKind::constant;
  double source_value = 1.0;
  std::filesystem::path source_file;
  double growth_a = 1.0;  ///< g(u) = a u^p + b
  double growth_b = 1.0;
  double R = 1.0;

  // [solver]
  Method method = Method::hybrid;
  double omega = 0.5;
  double tol = 1e-10;
  int max_iter = 1000;
  double inner_tol = 1e-12;
  std::uint64_t seed = 0;

  // [constants]
  GammaMode gamma_mode = GammaMode::estimate;
  double gamma = 0.0;
  int starts = 16;
  int max_steps = 500;
  double safety_factor = 1.1;
  bool strict_paper_constants = false;
  bool estimate_C = false;

  // [check]
  int samples = 200;

  // [output]
  std::filesystem::path directory = ".";
  bool write_csv = true;
  bool write_fields = true;

  // [sweep]
  std::vector<double> mu_fractions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

  // [mms]
  std::vector<int> mms_resolutions{31, 63, 127};
  MmsMode mms_mode = MmsMode::analytic;
  int mms_wavenumber = 1;

  Grid grid() const;
};

struct ConfigIssue {
  int line;  ///< 1-based; 0 when the issue concerns the whole file
  std::string message;
};

class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

private:
  std::vector<ConfigIssue> issues_;
};

/// Parses and validates a config. Relative `source_file` paths resolve
/// against `base_dir`. Throws ConfigError listing every problem found.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});

/// Reads and parses a config file.
RunConfig load_config(const std::filesystem::path& path);

/// Cross-field checks, rerun after command-line overrides.
std::vector<ConfigIssue> validate(const RunConfig& cfg);

}  // namespace sepde::cli
