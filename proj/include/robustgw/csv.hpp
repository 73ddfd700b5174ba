#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "robustgw/types.hpp"

namespace robustgw {

/// Numeric CSV: one row per line, comma separated. A first line that does not
/// parse as numbers is treated as a header and skipped.
Matrix read_matrix_csv(const std::filesystem::path& path);
Matrix parse_matrix_csv(std::istream& in, const std::string& source = "<stream>");
/// Single column (or single row) of numbers.
Vector read_vector_csv(const std::filesystem::path& path);

void write_matrix_csv(std::ostream& out, const Matrix& m);

/// Writes through a temporary sibling file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace robustgw
