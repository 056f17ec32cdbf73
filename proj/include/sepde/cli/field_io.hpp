#pragma once

#include "sepde/grid.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace sepde::cli {

/// Shortest decimal that reads back to the same double.
std::string shortest(double x);
/// 17 significant digits, as used in CSV reports.
std::string fixed17(double x);

/// Field file text:
///   SEPDE-FIELD 1
///   dims N
///   shape n1 [n2] [n3]
///   lengths L1 [L2] [L3]
///   data
///   one value per line, row-major
std::string format_field(const Field& f);
/// Throws InvalidArgument naming the offending line.
Field parse_field(std::string_view text);

Field read_field(const std::filesystem::path& path);
void write_field(const std::filesystem::path& path, const Field& f);

/// Writes to a temporary sibling and renames it over `path`, so a reader
/// never sees a partial file under the final name.
void write_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace sepde::cli
