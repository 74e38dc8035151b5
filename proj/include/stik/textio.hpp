#pragma once

// Plain-text matrix and vector files.
//
// Matrix: first line "rows cols", then one whitespace-separated row per line.
// Vector: one value per line.

#include <filesystem>
#include <iosfwd>
#include <string>

#include "stik/linops.hpp"

namespace stik {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

DenseMatrix read_matrix(std::istream& in);
DenseMatrix read_matrix(const std::filesystem::path& path);
void write_matrix(std::ostream& out, const DenseMatrix& a);
void write_matrix(const std::filesystem::path& path, const DenseMatrix& a);

Vector read_vector(std::istream& in);
Vector read_vector(const std::filesystem::path& path);
void write_vector(std::ostream& out, const Vector& v);
void write_vector(const std::filesystem::path& path, const Vector& v);

}  // namespace stik
