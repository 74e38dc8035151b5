#include "stik/textio.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "stik/errors.hpp"

namespace stik {

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

void put_double(std::ostream& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, res.ptr - buf);
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    return out;
}

}  // namespace

DenseMatrix read_matrix(std::istream& in) {
    long rows = 0;
    long cols = 0;
    std::string header;
    if (!std::getline(in, header)) throw InvalidArgument("matrix file: missing header line");
    std::istringstream hs(header);
    if (!(hs >> rows >> cols) || rows <= 0 || cols <= 0) {
        throw InvalidArgument("matrix file: header must be 'rows cols' with positive counts");
    }
    DenseMatrix a(rows, cols);
    std::string line;
    for (long i = 0; i < rows; ++i) {
        if (!std::getline(in, line)) {
            throw InvalidArgument("matrix file: expected " + std::to_string(rows) +
                                  " rows, found " + std::to_string(i));
        }
        std::istringstream ls(line);
        for (long j = 0; j < cols; ++j) {
            if (!(ls >> a(i, j))) {
                throw InvalidArgument("matrix file: row " + std::to_string(i + 1) + " has fewer than " +
                                      std::to_string(cols) + " values");
            }
        }
        double extra = 0.0;
        if (ls >> extra) {
            throw InvalidArgument("matrix file: row " + std::to_string(i + 1) + " has too many values");
        }
    }
    return a;
}

DenseMatrix read_matrix(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_matrix(in);
}

void write_matrix(std::ostream& out, const DenseMatrix& a) {
    out << a.rows() << ' ' << a.cols() << '\n';
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            if (j) out << ' ';
            put_double(out, a(i, j));
        }
        out << '\n';
    }
}

void write_matrix(const std::filesystem::path& path, const DenseMatrix& a) {
    auto out = open_out(path);
    write_matrix(out, a);
}

Vector read_vector(std::istream& in) {
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        double v = 0.0;
        if (!(ls >> v)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            throw InvalidArgument("vector file: cannot parse '" + line + "'");
        }
        values.push_back(v);
    }
    return Eigen::Map<Vector>(values.data(), static_cast<Index>(values.size()));
}

Vector read_vector(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_vector(in);
}

void write_vector(std::ostream& out, const Vector& v) {
    for (Index i = 0; i < v.size(); ++i) {
        put_double(out, v[i]);
        out << '\n';
    }
}

void write_vector(const std::filesystem::path& path, const Vector& v) {
    auto out = open_out(path);
    write_vector(out, v);
}

}  // namespace stik
