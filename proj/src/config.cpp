#include "sepde/cli/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace sepde::cli {

std::string to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::p: return "p";
    case ProblemKind::q: return "q";
    case ProblemKind::eigen: return "eigen";
  }
  return "unknown";
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(std::string_view s) {
  s = trim(s);
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("expected a number, got '" + std::string(s) + "'");
  }
  if (!std::isfinite(x)) throw std::invalid_argument("value must be finite");
  return x;
}

template <class Int>
Int to_integer(std::string_view s) {
  s = trim(s);
  Int x = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("expected an integer, got '" + std::string(s) + "'");
  }
  return x;
}

bool to_bool(std::string_view s) {
  s = trim(s);
  if (s == "true") return true;
  if (s == "false") return false;
  throw std::invalid_argument("expected true or false, got '" + std::string(s) + "'");
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> items;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto j = s.find_first_of(", \t", i);
    const auto item = s.substr(i, j == std::string_view::npos ? std::string_view::npos : j - i);
    if (!item.empty()) items.push_back(item);
    if (j == std::string_view::npos) break;
    i = j + 1;
  }
  if (items.empty()) throw std::invalid_argument("expected a non-empty list");
  return items;
}

template <class T, class F>
std::vector<T> to_list(std::string_view s, F convert) {
  std::vector<T> out;
  for (auto item : split_list(s)) out.push_back(convert(item));
  return out;
}

template <class E>
E to_enum(std::string_view s, std::initializer_list<std::pair<const char*, E>> table) {
  s = trim(s);
  std::string options;
  for (const auto& [name, value] : table) {
    if (s == name) return value;
    options += options.empty() ? name : std::string("|") + name;
  }
  throw std::invalid_argument("expected one of " + options + ", got '" + std::string(s) + "'");
}

using Setter = std::function<void(RunConfig&, std::string_view)>;
using Table = std::map<std::string, std::map<std::string, Setter>, std::less<>>;

const Table& setters() {
  static const Table table = {
      {"domain",
       {{"dims", [](RunConfig& c, auto v) { c.dims = to_integer<int>(v); }},
        {"lengths", [](RunConfig& c, auto v) { c.lengths = to_list<double>(v, to_double); }},
        {"resolution",
         [](RunConfig& c, auto v) { c.resolution = to_list<int>(v, to_integer<int>); }}}},
      {"problem",
       {{"kind",
         [](RunConfig& c, auto v) {
           c.kind = to_enum<ProblemKind>(
               v, {{"p", ProblemKind::p}, {"q", ProblemKind::q}, {"eigen", ProblemKind::eigen}});
         }},
        {"lambda",
         [](RunConfig& c, auto v) {
           c.lambda = parse_scaled(v, "lambda_star");
           if (c.lambda.value < 0.0) {
             throw std::invalid_argument("lambda must be ≥ 0 (the theory covers 0 ≤ λ ≤ λ*)");
           }
           if (c.lambda.relative && c.lambda.value > 1.0) {
             throw std::invalid_argument("lambda must not exceed lambda_star");
           }
         }},
        {"mu",
         [](RunConfig& c, auto v) {
           c.mu = parse_scaled(v, "auto-threshold");
           if (!(c.mu.value > 0.0)) throw std::invalid_argument("mu must be > 0");
         }},
        {"p", [](RunConfig& c, auto v) { c.p = to_double(v); }},
        {"variant",
         [](RunConfig& c, auto v) {
           c.variant = to_enum<Variant>(v, {{"a", Variant::a}, {"b", Variant::b}});
         }},
        {"nonlinearity",
         [](RunConfig& c, auto v) {
           c.nonlinearity = to_enum<NonlinearityKind>(
               v, {{"power-source", NonlinearityKind::power_source},
                   {"growth", NonlinearityKind::growth}});
         }},
        {"source",
         [](RunConfig& c, auto v) {
           c.source_kind = to_enum<SourceKind>(v, {{"constant", SourceKind::constant},
                                                   {"sine", SourceKind::sine},
                                                   {"file", SourceKind::file}});
         }},
        {"source_value", [](RunConfig& c, auto v) { c.source_value = to_double(v); }},
        {"source_file", [](RunConfig& c, auto v) { c.source_file = std::string(trim(v)); }},
        {"a", [](RunConfig& c, auto v) { c.growth_a = to_double(v); }},
        {"b", [](RunConfig& c, auto v) { c.growth_b = to_double(v); }},
        {"R", [](RunConfig& c, auto v) { c.R = to_double(v); }}}},
      {"solver",
       {{"method",
         [](RunConfig& c, auto v) {
           c.method = to_enum<Method>(
               v, {{"picard", Method::picard}, {"newton", Method::newton}, {"hybrid", Method::hybrid}});
         }},
        {"omega", [](RunConfig& c, auto v) { c.omega = to_double(v); }},
        {"tol", [](RunConfig& c, auto v) { c.tol = to_double(v); }},
        {"max_iter", [](RunConfig& c, auto v) { c.max_iter = to_integer<int>(v); }},
        {"inner_tol", [](RunConfig& c, auto v) { c.inner_tol = to_double(v); }},
        {"seed", [](RunConfig& c, auto v) { c.seed = to_integer<std::uint64_t>(v); }}}},
      {"constants",
       {{"gamma_mode",
         [](RunConfig& c, auto v) {
           c.gamma_mode = to_enum<GammaMode>(
               v, {{"estimate", GammaMode::estimate}, {"given", GammaMode::given}});
         }},
        {"gamma", [](RunConfig& c, auto v) { c.gamma = to_double(v); }},
        {"starts", [](RunConfig& c, auto v) { c.starts = to_integer<int>(v); }},
        {"max_steps", [](RunConfig& c, auto v) { c.max_steps = to_integer<int>(v); }},
        {"safety_factor", [](RunConfig& c, auto v) { c.safety_factor = to_double(v); }},
        {"strict_paper_constants",
         [](RunConfig& c, auto v) { c.strict_paper_constants = to_bool(v); }},
        {"estimate_C", [](RunConfig& c, auto v) { c.estimate_C = to_bool(v); }}}},
      {"check", {{"samples", [](RunConfig& c, auto v) { c.samples = to_integer<int>(v); }}}},
      {"output",
       {{"directory", [](RunConfig& c, auto v) { c.directory = std::string(trim(v)); }},
        {"formats",
         [](RunConfig& c, auto v) {
           c.write_csv = c.write_fields = false;
           for (auto f : split_list(v)) {
             if (f == "csv") c.write_csv = true;
             else if (f == "field") c.write_fields = true;
             else throw std::invalid_argument("unknown format '" + std::string(f) + "' (csv|field)");
           }
         }}}},
      {"sweep",
       {{"mu_fractions",
         [](RunConfig& c, auto v) { c.mu_fractions = to_list<double>(v, to_double); }}}},
      {"mms",
       {{"resolutions",
         [](RunConfig& c, auto v) { c.mms_resolutions = to_list<int>(v, to_integer<int>); }},
        {"mode",
         [](RunConfig& c, auto v) {
           c.mms_mode =
               to_enum<MmsMode>(v, {{"stencil", MmsMode::stencil}, {"analytic", MmsMode::analytic}});
         }},
        {"wavenumber", [](RunConfig& c, auto v) { c.mms_wavenumber = to_integer<int>(v); }}}},
  };
  return table;
}

std::string join_issues(const std::vector<ConfigIssue>& issues) {
  std::string s;
  for (const auto& i : issues) {
    if (!s.empty()) s += '\n';
    s += i.line > 0 ? "line " + std::to_string(i.line) + ": " + i.message : i.message;
  }
  return s;
}

// A single length or resolution applies to every axis.
void broadcast(RunConfig& c) {
  if (c.dims < 1 || c.dims > 3) return;
  const auto n = static_cast<std::size_t>(c.dims);
  if (c.lengths.size() == 1) c.lengths.assign(n, c.lengths.front());
  if (c.resolution.size() == 1) c.resolution.assign(n, c.resolution.front());
}

}  // namespace

Scaled parse_scaled(std::string_view text, std::string_view keyword) {
  text = trim(text);
  if (text == keyword) return {1.0, true};
  if (const auto star = text.find('*'); star != std::string_view::npos) {
    if (trim(text.substr(star + 1)) != keyword) {
      throw std::invalid_argument("expected <number>*" + std::string(keyword));
    }
    return {to_double(text.substr(0, star)), true};
  }
  return {to_double(text), false};
}

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

Grid RunConfig::grid() const { return make_grid(dims, lengths, resolution); }

std::vector<ConfigIssue> validate(const RunConfig& c) {
  std::vector<ConfigIssue> out;
  auto fail = [&](std::string msg) { out.push_back({0, std::move(msg)}); };
  if (c.dims < 1 || c.dims > 3) fail("domain.dims must be 1, 2 or 3");
  else {
    if (c.lengths.size() != static_cast<std::size_t>(c.dims)) fail("domain.lengths needs one entry per axis");
    if (c.resolution.size() != static_cast<std::size_t>(c.dims)) fail("domain.resolution needs one entry per axis");
  }
  for (double L : c.lengths) if (!(L > 0.0)) fail("domain.lengths must be positive");
  for (int n : c.resolution) if (n < 1) fail("domain.resolution must be >= 1");

  if (c.kind == ProblemKind::q && c.nonlinearity != NonlinearityKind::power_source) {
    fail("problem.kind = q requires nonlinearity = power-source");
  }
  if (c.kind == ProblemKind::eigen && c.nonlinearity != NonlinearityKind::growth) {
    fail("problem.kind = eigen requires nonlinearity = growth");
  }
  if (c.nonlinearity == NonlinearityKind::power_source && !(c.p > 1.0)) fail("problem.p must be > 1");
  if (c.nonlinearity == NonlinearityKind::growth && !(c.p >= 1.0)) fail("problem.p must be >= 1");
  if (!(c.growth_a >= 0.0)) fail("problem.a must be >= 0");
  if (!(c.R > 0.0)) fail("problem.R must be > 0");
  if (c.source_kind == SourceKind::file) {
    if (c.source_file.empty()) fail("problem.source = file requires problem.source_file");
    else if (!std::filesystem::exists(c.source_file)) {
      fail("problem.source_file does not exist: " + c.source_file.string());
    }
  }

  if (!(c.omega > 0.0 && c.omega <= 1.0)) fail("solver.omega must lie in (0, 1]");
  if (!(c.tol > 0.0)) fail("solver.tol must be > 0");
  if (!(c.inner_tol > 0.0)) fail("solver.inner_tol must be > 0");
  if (c.max_iter < 1) fail("solver.max_iter must be >= 1");

  if (c.gamma_mode == GammaMode::given && !(c.gamma > 0.0)) {
    fail("constants.gamma_mode = given requires constants.gamma > 0");
  }
  if (c.starts < 1) fail("constants.starts must be >= 1");
  if (c.max_steps < 1) fail("constants.max_steps must be >= 1");
  if (!(c.safety_factor >= 1.0)) fail("constants.safety_factor must be >= 1");
  if (c.samples < 1) fail("check.samples must be >= 1");

  for (double f : c.mu_fractions) if (!(f > 0.0)) fail("sweep.mu_fractions must be positive");
  if (c.mms_resolutions.size() < 2) fail("mms.resolutions needs at least two meshes");
  for (std::size_t i = 0; i < c.mms_resolutions.size(); ++i) {
    if (c.mms_resolutions[i] < 1 || (i > 0 && c.mms_resolutions[i] <= c.mms_resolutions[i - 1])) {
      fail("mms.resolutions must be positive and strictly increasing");
      break;
    }
  }
  if (c.mms_wavenumber < 1) fail("mms.wavenumber must be >= 1");
  return out;
}

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  std::vector<ConfigIssue> issues;
  std::map<std::string, int> seen;
  std::string section;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        issues.push_back({lineno, "malformed section header"});
        continue;
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!setters().contains(section)) {
        issues.push_back({lineno, "unknown section [" + section + "]"});
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      issues.push_back({lineno, "expected 'key = value'"});
      continue;
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (section.empty()) {
      issues.push_back({lineno, "key '" + key + "' outside any section"});
      continue;
    }
    const auto sec = setters().find(section);
    if (sec == setters().end()) continue;  // already reported
    const auto setter = sec->second.find(key);
    if (setter == sec->second.end()) {
      issues.push_back({lineno, "unknown key '" + key + "' in [" + section + "]"});
      continue;
    }
    const std::string full = section + "." + key;
    if (const auto prev = seen.find(full); prev != seen.end()) {
      issues.push_back({lineno, "duplicate key '" + full + "' (lines " + std::to_string(prev->second) +
                                    " and " + std::to_string(lineno) + ")"});
      continue;
    }
    seen.emplace(full, lineno);
    try {
      setter->second(cfg, value);
    } catch (const std::exception& e) {
      issues.push_back({lineno, full + ": " + e.what()});
    }
  }
  if (!cfg.source_file.empty() && cfg.source_file.is_relative()) {
    cfg.source_file = base_dir / cfg.source_file;
  }
  broadcast(cfg);
  if (issues.empty()) {
    for (auto issue : validate(cfg)) {
      const auto key = issue.message.substr(0, issue.message.find(' '));
      if (const auto it = seen.find(key); it != seen.end()) issue.line = it->second;
      issues.push_back(std::move(issue));
    }
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({{0, "cannot open config file " + path.string()}});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

}  // namespace sepde::cli
