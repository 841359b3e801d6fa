#pragma once

#include <Eigen/Dense>
#include <string>

namespace jsmf {

// Binary format for symmetric co-occurrence matrices:
// 8-byte magic "JSMFCOOC", u64 N, then N*N little-endian f64 row-major.
void write_square_matrix(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_square_matrix(const std::string& path);

// General rectangular matrices use magic "JSMFMATX", u64 rows, u64 cols,
// then rows*cols little-endian f64 row-major.
void write_matrix(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(const std::string& path);

// Plain comma-separated values, one matrix row per line, %.17g cells.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::string& path);

// Deterministic formatting used by every CSV writer in the project.
std::string format_double(double x);

}  // namespace jsmf
