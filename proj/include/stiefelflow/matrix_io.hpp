#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "stiefelflow/types.hpp"

namespace stiefelflow {

/// Format one double with 17 significant digits (shortest round-trippable).
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Plain-text matrix format: header "rows cols", then row-major whitespace
/// separated decimals.
inline MatrixR read_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open matrix file: " + path);
    long rows = 0, cols = 0;
    if (!(in >> rows >> cols) || rows < 1 || cols < 1)
        throw ConfigError("bad matrix header in " + path);
    MatrixR m(rows, cols);
    for (long i = 0; i < rows; ++i)
        for (long j = 0; j < cols; ++j)
            if (!(in >> m(i, j))) throw ConfigError("truncated matrix data in " + path);
    return m;
}

inline void write_matrix_file(const std::string& path, const MatrixR& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write matrix file: " + path);
    out << m.rows() << " " << m.cols() << "\n";
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) out << " ";
            out << format_double(m(i, j));
        }
        out << "\n";
    }
}

}  // namespace stiefelflow
