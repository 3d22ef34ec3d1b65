#pragma once

#include <string>

#include "gtn/types.hpp"

namespace gtn {

// Entry point of the gtn command-line tool. Returns 0 on success, 2 on a
// usage error and 1 on any other failure.
int cli_main(int argc, const char* const* argv);

// Whitespace-separated text matrix, one row per line.
Matrix read_matrix_text(const std::string& path);
void write_matrix_text(const Matrix& m, const std::string& path);

}  // namespace gtn
