#ifndef LOCALKERNELS_POINT_CLOUD_HPP
#define LOCALKERNELS_POINT_CLOUD_HPP

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "localkernels/errors.hpp"

namespace localkernels {

using Index = Eigen::Index;

/// A point cloud in ambient space, optionally carrying the intrinsic coordinates it
/// was generated from and per-point labels that establish correspondence between clouds.
struct PointCloud {
    Eigen::MatrixXd points;           // N x n ambient coordinates
    Eigen::MatrixXd intrinsic;        // N x d intrinsic coordinates, or 0 x 0
    std::vector<std::int64_t> labels; // empty, or one unique label per point

    Index size() const { return points.rows(); }
    Index ambient_dim() const { return points.cols(); }
    bool has_intrinsic() const { return intrinsic.size() > 0; }
    Index intrinsic_dim() const { return intrinsic.cols(); }
    bool has_labels() const { return !labels.empty(); }

    /// Throws validation_error if any invariant is violated.
    void validate() const {
        if (points.rows() < 1 || points.cols() < 1)
            throw validation_error("point cloud must have N >= 1 points in dimension n >= 1");
        if (!points.allFinite())
            throw validation_error("point cloud contains non-finite ambient coordinates");
        if (has_intrinsic()) {
            if (intrinsic.rows() != points.rows())
                throw validation_error("intrinsic coordinate block must have exactly N rows");
            if (!intrinsic.allFinite())
                throw validation_error("point cloud contains non-finite intrinsic coordinates");
        }
        if (has_labels()) {
            if (static_cast<Index>(labels.size()) != points.rows())
                throw validation_error("label block must have exactly N entries");
            std::unordered_set<std::int64_t> seen;
            for (std::int64_t l : labels)
                if (!seen.insert(l).second)
                    throw validation_error("duplicate correspondence label " + std::to_string(l));
        }
    }
};

namespace detail {

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double_field(const std::string& field, Index row, Index col) {
    const char* s = field.c_str();
    char* end = nullptr;
    double v = std::strtod(s, &end);
    while (end && *end == ' ') ++end;
    if (end == s || (end && *end != '\0'))
        throw io_error("row " + std::to_string(row) + ": non-numeric field '" + field +
                       "' in column " + std::to_string(col + 1));
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace detail

/// Writes a cloud as CSV with header `x1,...,xn[,t1,...,td][,label]`.
/// Values are printed with 17 significant digits so a read-back is bit-exact.
inline void save_csv(const PointCloud& cloud, const std::string& path) {
    cloud.validate();
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    const Index n = cloud.ambient_dim();
    const Index d = cloud.has_intrinsic() ? cloud.intrinsic_dim() : 0;
    for (Index j = 0; j < n; ++j) out << (j ? ",x" : "x") << (j + 1);
    for (Index j = 0; j < d; ++j) out << ",t" << (j + 1);
    if (cloud.has_labels()) out << ",label";
    out << "\n";
    for (Index i = 0; i < cloud.size(); ++i) {
        for (Index j = 0; j < n; ++j) {
            if (j) out << ',';
            out << detail::format_g17(cloud.points(i, j));
        }
        for (Index j = 0; j < d; ++j) out << ',' << detail::format_g17(cloud.intrinsic(i, j));
        if (cloud.has_labels()) out << ',' << cloud.labels[static_cast<std::size_t>(i)];
        out << "\n";
    }
    if (!out) throw io_error("write failure on '" + path + "'");
}

/// Reads a cloud from the CSV layout written by save_csv. Malformed rows are reported
/// with their (1-based) data row number.
inline PointCloud load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(in, line)) throw io_error("'" + path + "' is empty");
    auto header = detail::split_csv_line(line);

    Index n = 0, d = 0;
    bool labelled = false;
    {
        std::size_t pos = 0;
        while (pos < header.size() && header[pos] == "x" + std::to_string(pos + 1)) ++pos;
        n = static_cast<Index>(pos);
        std::size_t t0 = pos;
        while (pos < header.size() && header[pos] == "t" + std::to_string(pos - t0 + 1)) ++pos;
        d = static_cast<Index>(pos - t0);
        if (pos < header.size() && header[pos] == "label") {
            labelled = true;
            ++pos;
        }
        if (n == 0 || pos != header.size())
            throw io_error("'" + path + "': malformed header '" + line + "'");
    }
    const std::size_t width = static_cast<std::size_t>(n + d) + (labelled ? 1 : 0);

    std::vector<std::vector<std::string>> rows;
    Index rownum = 0;
    while (std::getline(in, line)) {
        ++rownum;
        if (line.empty() && in.eof()) break;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != width)
            throw io_error("row " + std::to_string(rownum) + ": expected " + std::to_string(width) +
                           " fields, got " + std::to_string(fields.size()));
        rows.push_back(std::move(fields));
    }
    if (rows.empty()) throw io_error("'" + path + "' has a header but no data rows");

    PointCloud cloud;
    const Index N = static_cast<Index>(rows.size());
    cloud.points.resize(N, n);
    if (d > 0) cloud.intrinsic.resize(N, d);
    if (labelled) cloud.labels.reserve(static_cast<std::size_t>(N));
    for (Index i = 0; i < N; ++i) {
        const auto& f = rows[static_cast<std::size_t>(i)];
        for (Index j = 0; j < n; ++j)
            cloud.points(i, j) = detail::parse_double_field(f[static_cast<std::size_t>(j)], i + 1, j);
        for (Index j = 0; j < d; ++j)
            cloud.intrinsic(i, j) =
                detail::parse_double_field(f[static_cast<std::size_t>(n + j)], i + 1, n + j);
        if (labelled) {
            const std::string& s = f[static_cast<std::size_t>(n + d)];
            try {
                std::size_t used = 0;
                long long v = std::stoll(s, &used);
                if (used != s.size()) throw std::invalid_argument(s);
                cloud.labels.push_back(v);
            } catch (const std::exception&) {
                throw io_error("row " + std::to_string(i + 1) + ": non-integer label '" + s + "'");
            }
        }
    }
    cloud.validate();
    return cloud;
}

} // namespace localkernels

#endif
