#include "sepde/cli/field_io.hpp"

#include "sepde/errors.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace sepde::cli {

std::string shortest(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string fixed17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_field(const Field& f) {
  const Grid& g = f.grid();
  std::string s = "SEPDE-FIELD 1\ndims " + std::to_string(g.dims()) + "\nshape";
  for (int i = 0; i < g.dims(); ++i) s += " " + std::to_string(g.count(i));
  s += "\nlengths";
  for (int i = 0; i < g.dims(); ++i) s += " " + shortest(g.length(i));
  s += "\ndata\n";
  for (Eigen::Index k = 0; k < f.values().size(); ++k) {
    s += shortest(f.values()[k]);
    s += '\n';
  }
  return s;
}

namespace {

struct LineReader {
  std::string_view text;
  std::size_t pos = 0;
  int line = 0;

  bool next(std::string_view& out) {
    if (pos >= text.size()) return false;
    const auto eol = text.find('\n', pos);
    out = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    if (!out.empty() && out.back() == '\r') out.remove_suffix(1);
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    ++line;
    return true;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw InvalidArgument("field file line " + std::to_string(line) + ": " + msg);
  }

  std::string_view expect() {
    std::string_view s;
    if (!next(s)) fail("unexpected end of file");
    return s;
  }
};

template <class T>
T number(LineReader& r, std::string_view s) {
  T x{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    r.fail("malformed number '" + std::string(s) + "'");
  }
  return x;
}

template <class T>
std::vector<T> tagged_list(LineReader& r, std::string_view tag) {
  std::string_view s = r.expect();
  if (s.substr(0, tag.size()) != tag) r.fail("expected '" + std::string(tag) + "'");
  s.remove_prefix(tag.size());
  std::vector<T> out;
  while (!s.empty()) {
    if (s.front() != ' ') r.fail("expected a space separator");
    s.remove_prefix(1);
    const auto sp = s.find(' ');
    out.push_back(number<T>(r, s.substr(0, sp)));
    s = sp == std::string_view::npos ? std::string_view{} : s.substr(sp);
  }
  return out;
}

}  // namespace

Field parse_field(std::string_view text) {
  LineReader r{text};
  if (r.expect() != "SEPDE-FIELD 1") r.fail("expected header 'SEPDE-FIELD 1'");
  const auto dims = tagged_list<int>(r, "dims");
  if (dims.size() != 1) r.fail("dims takes one value");
  const auto shape = tagged_list<int>(r, "shape");
  const auto lengths = tagged_list<double>(r, "lengths");
  if (shape.size() != static_cast<std::size_t>(dims[0]) ||
      lengths.size() != static_cast<std::size_t>(dims[0])) {
    r.fail("shape and lengths need one entry per axis");
  }
  if (r.expect() != "data") r.fail("expected 'data'");
  Grid grid;
  try {
    grid = Grid(dims[0], lengths, shape);
  } catch (const InvalidArgument& e) {
    r.fail(e.what());
  }
  Vector values(grid.size());
  for (Eigen::Index k = 0; k < grid.size(); ++k) values[k] = number<double>(r, r.expect());
  std::string_view extra;
  while (r.next(extra)) {
    if (!extra.empty()) r.fail("trailing data after " + std::to_string(grid.size()) + " values");
  }
  try {
    return Field(grid, std::move(values));
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(std::string("field file: ") + e.what());
  }
}

Field read_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open field file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_field(ss.str());
}

void write_field(const std::filesystem::path& path, const Field& f) {
  write_atomic(path, format_field(f));
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

}  // namespace sepde::cli
