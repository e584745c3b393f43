#ifndef SPARSETRACK_IO_HPP
#define SPARSETRACK_IO_HPP

#include <string>

#include "sparsetrack/numerics.hpp"

namespace sparsetrack {

/// Shortest decimal form that round-trips a double (17 significant digits).
std::string format_real(double value);

/// Parse a real; throws IoError on garbage or trailing junk.
double parse_real(const std::string& text);

// Matrix CSV: one row per line, comma-separated reals, rectangular.
Matrix read_matrix_csv(const std::string& path);
void write_matrix_csv(const std::string& path, const Matrix& m);

// Vector CSV: one real per line.
Vector read_vector_csv(const std::string& path);
void write_vector_csv(const std::string& path, const Vector& v);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace sparsetrack

#endif  // SPARSETRACK_IO_HPP
