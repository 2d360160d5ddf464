#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "perc/errors.hpp"
#include "perc/matrix.hpp"

namespace perc {

// A sample set: N points in ambient dimension D, plus provenance metadata.
// Immutable by convention after construction; safe to share across threads.
struct PointCloud {
    Matrix points;                     // N x D, row per point
    std::string label;                 // short tag, e.g. "hypersphere(d=2)"
    std::optional<std::uint64_t> seed; // generator seed, when synthetic
    std::map<std::string, std::string> meta; // e.g. kind, intrinsic d, vol

    std::size_t size() const { return points.rows; }
    std::size_t dim() const { return points.cols; }
};

// Enforces the cloud invariants: N >= 1, D >= 1, all coordinates finite.
// Throws data_error naming the first offending point.
inline void validate_cloud(const PointCloud& cloud) {
    if (cloud.points.rows < 1)
        throw data_error("point cloud is empty (N = 0)");
    if (cloud.points.cols < 1)
        throw data_error("point cloud has no coordinates (D = 0)");
    const auto& d = cloud.points.data;
    for (std::size_t k = 0; k < d.size(); ++k) {
        if (!std::isfinite(d[k])) {
            std::size_t row = k / cloud.points.cols;
            std::size_t col = k % cloud.points.cols;
            throw data_error("non-finite coordinate at point " + std::to_string(row) +
                             ", column " + std::to_string(col));
        }
    }
}

// Two clouds compared by the shift diagnostics. Dimensions must match so
// distances are comparable; matched N is additionally required by
// percolation_shift (the thresholds must be computed at the same sample size).
struct CloudPair {
    PointCloud real;
    PointCloud model;
};

inline void validate_pair(const CloudPair& pair) {
    validate_cloud(pair.real);
    validate_cloud(pair.model);
    if (pair.real.dim() != pair.model.dim())
        throw data_error("cloud dimension mismatch: real D=" + std::to_string(pair.real.dim()) +
                         ", model D=" + std::to_string(pair.model.dim()));
}

} // namespace perc
