#include "jsmf/io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "jsmf/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "matrix files are little-endian; big-endian hosts are unsupported");

namespace jsmf {

namespace {

constexpr char kSquareMagic[8] = {'J', 'S', 'M', 'F', 'C', 'O', 'O', 'C'};
constexpr char kMatrixMagic[8] = {'J', 'S', 'M', 'F', 'M', 'A', 'T', 'X'};

void write_doubles_row_major(std::ofstream& out, const Eigen::MatrixXd& m) {
    std::vector<double> row(static_cast<size_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<size_t>(j)] = m(i, j);
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(double)));
    }
}

Eigen::MatrixXd read_doubles_row_major(std::ifstream& in, std::uint64_t rows,
                                       std::uint64_t cols, const std::string& path) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    std::vector<double> row(cols);
    for (std::uint64_t i = 0; i < rows; ++i) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(cols * sizeof(double)));
        if (!in) throw IoError("truncated matrix file: " + path);
        for (std::uint64_t j = 0; j < cols; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    }
    return m;
}

}  // namespace

void write_square_matrix(const std::string& path, const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols())
        throw IoError("square matrix writer given a " + std::to_string(m.rows()) + "x" +
                      std::to_string(m.cols()) + " matrix: " + path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(kSquareMagic, 8);
    const std::uint64_t n = static_cast<std::uint64_t>(m.rows());
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    write_doubles_row_major(out, m);
    if (!out) throw IoError("write failed: " + path);
}

Eigen::MatrixXd read_square_matrix(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kSquareMagic, 8) != 0)
        throw IoError("bad magic, not a co-occurrence matrix file: " + path);
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    if (!in) throw IoError("truncated header: " + path);
    return read_doubles_row_major(in, n, n, path);
}

void write_matrix(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(kMatrixMagic, 8);
    const std::uint64_t rows = static_cast<std::uint64_t>(m.rows());
    const std::uint64_t cols = static_cast<std::uint64_t>(m.cols());
    out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    write_doubles_row_major(out, m);
    if (!out) throw IoError("write failed: " + path);
}

Eigen::MatrixXd read_matrix(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMatrixMagic, 8) != 0)
        throw IoError("bad magic, not a matrix file: " + path);
    std::uint64_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    if (!in) throw IoError("truncated header: " + path);
    return read_doubles_row_major(in, rows, cols, path);
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (!rows.empty() && row.size() != rows.front().size())
            throw IoError("ragged csv: " + path);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) return Eigen::MatrixXd(0, 0);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front().size()));
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

}  // namespace jsmf
