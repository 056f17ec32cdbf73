#include "doctest.h"

#include "sepde/cli/cli.hpp"
#include "sepde/cli/field_io.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <unistd.h>

using namespace sepde;
using namespace sepde::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() /
                       ("sepde_cli_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') cells.back() += line[++i];
      else if (c == '"') quoted = false;
      else cells.back() += c;
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.emplace_back();
    } else {
      cells.back() += c;
    }
  }
  return cells;
}

std::vector<std::map<std::string, std::string>> read_csv(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line;
  std::getline(in, line);
  const auto header = split_csv_line(line);
  std::vector<std::map<std::string, std::string>> rows;
  while (std::getline(in, line)) {
    const auto cells = split_csv_line(line);
    REQUIRE(cells.size() == header.size());
    auto& row = rows.emplace_back();
    for (std::size_t i = 0; i < cells.size(); ++i) row[header[i]] = cells[i];
  }
  return rows;
}

const char* const kMinimalQ = R"(# guaranteed-regime example
[domain]
dims = 1
lengths = 1.0
resolution = 127

[problem]
kind = q
p = 2
mu = auto-threshold
lambda = 0
)";

int invoke(std::vector<std::string> args, std::string* err_text = nullptr) {
  args.insert(args.begin(), "sepde");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (err_text) *err_text = err.str();
  return code;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "run.cfg";
  std::ofstream(p) << text;
  return p;
}

std::string first_issue(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("parse_config accepts the minimal Q config") {
  const RunConfig c = parse_config(kMinimalQ);
  CHECK(c.dims == 1);
  CHECK(c.resolution == std::vector<int>{127});
  CHECK(c.kind == ProblemKind::q);
  CHECK(c.mu.relative);
  CHECK(c.mu.value == 1.0);
  CHECK_FALSE(c.lambda.relative);
  CHECK(c.lambda.value == 0.0);
}

TEST_CASE("parse_config broadcasts scalars and reads lists") {
  const RunConfig c = parse_config("[domain]\ndims = 2\nlengths = 1.0, 2.0\nresolution = 15\n"
                                   "[sweep]\nmu_fractions = 0.5 1.0\n");
  CHECK(c.lengths == std::vector<double>{1.0, 2.0});
  CHECK(c.resolution == std::vector<int>{15, 15});
  CHECK(c.mu_fractions == std::vector<double>{0.5, 1.0});
}

TEST_CASE("parse_config scaled values") {
  CHECK(parse_scaled("0.25*lambda_star", "lambda_star").relative);
  CHECK(parse_scaled("0.25*lambda_star", "lambda_star").value == 0.25);
  CHECK_FALSE(parse_scaled("3.5", "lambda_star").relative);
  CHECK_THROWS(parse_scaled("2*mu_star", "auto-threshold"));
}

TEST_CASE("parse_config errors carry line numbers") {
  SUBCASE("negative lambda") {
    const auto msg = first_issue("[problem]\nlambda = -0.5\n");
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("lambda must be ≥ 0") != std::string::npos);
    CHECK(msg.find("0 ≤ λ ≤ λ*") != std::string::npos);
  }
  SUBCASE("duplicate key reports both lines") {
    const auto msg = first_issue("[solver]\ntol = 1e-8\n# comment\ntol = 1e-9\n");
    CHECK(msg.find("duplicate") != std::string::npos);
    CHECK(msg.find("lines 2 and 4") != std::string::npos);
  }
  SUBCASE("unknown key") {
    const auto msg = first_issue("[solver]\ntolerance = 1\n");
    CHECK(msg.find("line 2: unknown key 'tolerance'") != std::string::npos);
  }
  SUBCASE("unknown section") {
    CHECK(first_issue("[solvers]\n").find("unknown section") != std::string::npos);
  }
  SUBCASE("type mismatch") {
    CHECK(first_issue("[domain]\n\nresolution = many\n").find("line 3") != std::string::npos);
    CHECK(first_issue("[constants]\nstrict_paper_constants = yes\n").find("true or false") !=
          std::string::npos);
  }
  SUBCASE("syntax") {
    CHECK(first_issue("[domain\n").find("line 1") != std::string::npos);
    CHECK(first_issue("dims = 1\n").find("outside any section") != std::string::npos);
    CHECK(first_issue("[domain]\ndims 1\n").find("key = value") != std::string::npos);
  }
  SUBCASE("constraint violations point at the key") {
    CHECK(first_issue("[domain]\ndims = 4\n").find("line 2") != std::string::npos);
    CHECK(first_issue("[solver]\n\nomega = 1.5\n").find("line 3") != std::string::npos);
    CHECK(first_issue("[mms]\nresolutions = 31, 31\n").find("strictly increasing") !=
          std::string::npos);
    CHECK(first_issue("[problem]\nkind = eigen\n").find("growth") != std::string::npos);
  }
  SUBCASE("missing source file") {
    CHECK(first_issue("[problem]\nsource = file\nsource_file = /nonexistent/h.field\n")
              .find("does not exist") != std::string::npos);
  }
  SUBCASE("every issue is collected") {
    try {
      parse_config("[domain]\nbogus = 1\n[solver]\nmax_iter = x\n");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.issues().size() == 2);
    }
  }
}

TEST_CASE("field files round-trip exactly") {
  const Grid g = make_grid(2, {1.0, 0.3}, {7, 5});
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  Vector v(g.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = nd(rng) * std::pow(10.0, (k % 13) - 6);
  v[0] = 0.1;
  v[1] = 1.0 / 3.0;
  v[2] = std::numeric_limits<double>::denorm_min();
  v[3] = -std::numeric_limits<double>::max();
  v[4] = -0.0;
  const Field f(g, v);

  const std::string text = format_field(f);
  CHECK(text.rfind("SEPDE-FIELD 1\ndims 2\nshape 7 5\nlengths 1 0.3\ndata\n0.1\n", 0) == 0);
  const Field back = parse_field(text);
  CHECK(back.grid() == g);
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    CHECK(std::bit_cast<std::uint64_t>(back.values()[k]) == std::bit_cast<std::uint64_t>(v[k]));
  }

  const fs::path dir = scratch("field");
  write_field(dir / "f.field", f);
  CHECK(slurp(dir / "f.field") == text);
  CHECK(read_field(dir / "f.field").values() == v);
  CHECK(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}) == 1);
}

TEST_CASE("malformed field files are rejected") {
  const std::string good = "SEPDE-FIELD 1\ndims 1\nshape 2\nlengths 1\ndata\n0.5\n0.25\n";
  CHECK(parse_field(good).values()[1] == 0.25);
  CHECK_THROWS_AS(parse_field("SEPDE-FIELD 2\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_field("SEPDE-FIELD 1\ndims 1\nshape 3\nlengths 1\ndata\n0.5\n0.25\n"),
                  InvalidArgument);
  CHECK_THROWS_AS(parse_field(good + "1\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_field("SEPDE-FIELD 1\ndims 1\nshape 2\nlengths 1\ndata\nnan\n0\n"),
                  InvalidArgument);
  CHECK_THROWS_AS(parse_field("SEPDE-FIELD 1\ndims 2\nshape 2\nlengths 1\ndata\n"),
                  InvalidArgument);
}

TEST_CASE("solve-q on the guaranteed-regime example") {
  const fs::path dir = scratch("solveq");
  const fs::path cfg = write_config(dir, kMinimalQ);
  REQUIRE(invoke({"solve-q", "--config", cfg.string(), "--out", (dir / "out").string()}) == 0);
  const auto rows = read_csv(dir / "out" / "solve_q.csv");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].at("converged") == "true");
  CHECK(std::stod(rows[0].at("min_w")) > 0.0);
  CHECK(rows[0].at("mu_fraction") == "1");
  CHECK(rows[0].at("positivity") == "strictly_positive");
  const Field w = read_field(dir / "out" / "w.field");
  CHECK(w.grid().count(0) == 127);
  for (const auto& e : fs::directory_iterator(dir / "out")) {
    CHECK(e.path().string().find(".tmp") == std::string::npos);
  }
}

TEST_CASE("check above the threshold exits 2") {
  const fs::path dir = scratch("check");
  const fs::path cfg = write_config(dir, kMinimalQ);
  const auto out = (dir / "out").string();
  CHECK(invoke({"check", "--config", cfg.string(), "--out", out}) == 0);
  CHECK(invoke({"check", "--config", cfg.string(), "--out", out, "--mu", "2*auto-threshold"}) == 2);
  bool found = false;
  for (const auto& row : read_csv(dir / "out" / "check.csv")) {
    if (row.at("hypothesis") == "H1" && row.at("mode") == "analytic") {
      found = true;
      CHECK(row.at("verdict") == "fail");
      CHECK(std::stod(row.at("margin")) < 0.0);
    }
  }
  CHECK(found);
}

TEST_CASE("sweep writes one deterministic row per fraction") {
  const fs::path dir = scratch("sweep");
  const fs::path cfg = write_config(dir, std::string(kMinimalQ) + "[solver]\nseed = 7\n");
  REQUIRE(invoke({"sweep", "--config", cfg.string(), "--out", (dir / "a").string(), "--threads", "1"}) == 0);
  REQUIRE(invoke({"sweep", "--config", cfg.string(), "--out", (dir / "b").string(), "--threads", "1"}) == 0);
  REQUIRE(invoke({"sweep", "--config", cfg.string(), "--out", (dir / "c").string(), "--threads", "3"}) == 0);
  const auto rows = read_csv(dir / "a" / "sweep.csv");
  REQUIRE(rows.size() == 10);
  CHECK(rows.front().at("mu_fraction") == "0.10000000000000001");
  CHECK(rows.back().at("mu_fraction") == "1");
  for (const auto& r : rows) CHECK(r.at("converged") == "true");
  CHECK(slurp(dir / "a" / "sweep.csv") == slurp(dir / "b" / "sweep.csv"));
  CHECK(slurp(dir / "a" / "sweep.csv") == slurp(dir / "c" / "sweep.csv"));
}

TEST_CASE("reruns are byte-identical") {
  const fs::path dir = scratch("repro");
  const fs::path cfg = write_config(dir, kMinimalQ);
  for (const char* cmd : {"constants", "check", "solve-q"}) {
    REQUIRE(invoke({cmd, "--config", cfg.string(), "--out", (dir / "a").string(), "--seed", "3"}) == 0);
    REQUIRE(invoke({cmd, "--config", cfg.string(), "--out", (dir / "b").string(), "--seed", "3"}) == 0);
  }
  for (const char* f : {"constants.csv", "check.csv", "solve_q.csv", "w.field", "gamma_maximizer.field"}) {
    CHECK_MESSAGE(slurp(dir / "a" / f) == slurp(dir / "b" / f), f);
  }
}

TEST_CASE("exit-code discipline over a config corpus") {
  const fs::path dir = scratch("corpus");
  struct Case {
    std::string command;
    std::string config;
    std::vector<std::string> extra;
    int expected;
  };
  const std::string q(kMinimalQ);
  const std::vector<Case> corpus = {
      {"solve-q", q, {}, 0},
      {"solve-q", q, {"--resolution", "31", "--lambda", "0.5*lambda_star"}, 0},
      {"solve-p", q, {}, 0},
      {"constants", q, {"--strict-paper-constants"}, 0},
      {"check", q, {"--mu", "4*auto-threshold"}, 2},
      {"solve-q", q + "[solver]\nmethod = picard\nmax_iter = 2\n", {}, 2},
      {"solve-q", q, {"--lambda", "2*lambda_star"}, 1},
      {"solve-q", q, {"--lambda", "-1"}, 1},
      {"solve-q", q, {"--lambda", "50"}, 1},
      {"solve-q", q + "[output]\nformats = pdf\n", {}, 1},
      {"solve-q", "[domain]\ndims = 0\n", {}, 1},
      {"solve-q", q + "[constants]\ngamma_mode = given\n", {}, 1},
      {"bogus", q, {}, 1},
      {"mms", q, {}, 1},
      {"mms", "[problem]\nmu = 0.05\nlambda = 1\n[mms]\nresolutions = 31, 63, 127\n", {}, 0},
      {"mms",
       "[problem]\nmu = 0.05\nlambda = 1\n[mms]\nmode = stencil\nresolutions = 15, 31\n",
       {},
       0},
      {"solve-eigen",
       "[domain]\nresolution = 63\n[problem]\nkind = eigen\nnonlinearity = growth\na = 1\nb = 1\n"
       "mu = 0.5*auto-threshold\n",
       {},
       0},
  };
  int index = 0;
  for (const auto& c : corpus) {
    const fs::path sub = dir / std::to_string(index++);
    fs::create_directories(sub);
    const fs::path cfg = write_config(sub, c.config);
    std::vector<std::string> args{c.command, "--config", cfg.string(), "--out", (sub / "out").string()};
    args.insert(args.end(), c.extra.begin(), c.extra.end());
    std::string err;
    const int code = invoke(args, &err);
    CHECK_MESSAGE(code == c.expected, c.command << " case " << index - 1 << ": " << err);
  }
  CHECK(invoke({"solve-q", "--config", (dir / "missing.cfg").string()}) == 1);
  CHECK(invoke({}) == 1);
  CHECK(invoke({"solve-q", "--threads", "0"}) == 1);
}

TEST_CASE("source fields can be read from file") {
  const fs::path dir = scratch("source");
  const Grid g = make_grid(1, {1.0}, {31});
  write_field(dir / "h.field", Field(g, Vector::LinSpaced(31, 0.5, 1.5)));
  const std::string cfg_text =
      "[domain]\nresolution = 31\n[problem]\nsource = file\nsource_file = h.field\n";
  const fs::path cfg = write_config(dir, cfg_text);
  CHECK(invoke({"solve-q", "--config", cfg.string(), "--out", (dir / "out").string()}) == 0);
  CHECK(invoke({"solve-q", "--config", cfg.string(), "--out", (dir / "out").string(),
                "--resolution", "15"}) == 1);
}
