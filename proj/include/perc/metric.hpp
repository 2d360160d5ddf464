#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "perc/cloud.hpp"
#include "perc/errors.hpp"
#include "perc/parallel.hpp"

namespace perc {

// One unordered pair (i < j) and its Euclidean distance.
struct SpectrumEntry {
    double distance;
    std::uint32_t i;
    std::uint32_t j;
};

// All N(N-1)/2 pairwise distances, sorted ascending with (distance, i, j)
// lexicographic tie-breaking, so the order is deterministic regardless of
// how the computation was scheduled.
struct DistanceSpectrum {
    std::vector<SpectrumEntry> entries;
    std::size_t source_n = 0;

    std::vector<double> distances() const {
        std::vector<double> d(entries.size());
        for (std::size_t k = 0; k < entries.size(); ++k) d[k] = entries[k].distance;
        return d;
    }
};

namespace detail {

// Squared distance with a fixed summation order (k = 0..D-1), shared by the
// spectrum kernel and any oracle that wants ULP-identical values.
inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        double t = a[k] - b[k];
        acc += t * t;
    }
    return acc;
}

} // namespace detail

// Exact Euclidean distances of all unordered pairs, sorted ascending.
// Squared values are accumulated per pair and rooted once at materialization.
// Row panels are computed in parallel; every pair lands in a fixed slot, so
// the result is independent of the thread count.
inline DistanceSpectrum distance_spectrum(const PointCloud& cloud, unsigned threads = 0) {
    validate_cloud(cloud);
    const std::size_t n = cloud.size();
    if (n < 2) throw data_error("insufficient points: distance spectrum needs N >= 2");
    if (n > 0xffffffffull) throw usage_error("cloud too large for 32-bit pair indices");

    DistanceSpectrum spec;
    spec.source_n = n;
    spec.entries.resize(n * (n - 1) / 2);

    auto row_offset = [n](std::size_t i) { return i * (n - 1) - i * (i - 1) / 2; };
    parallel_ranges(0, n - 1, threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            auto xi = cloud.points.row(i);
            SpectrumEntry* out = spec.entries.data() + row_offset(i);
            for (std::size_t j = i + 1; j < n; ++j) {
                double d2 = detail::squared_distance(xi, cloud.points.row(j));
                *out++ = {std::sqrt(d2), static_cast<std::uint32_t>(i),
                          static_cast<std::uint32_t>(j)};
            }
        }
    });

    std::sort(spec.entries.begin(), spec.entries.end(),
              [](const SpectrumEntry& a, const SpectrumEntry& b) {
                  if (a.distance != b.distance) return a.distance < b.distance;
                  if (a.i != b.i) return a.i < b.i;
                  return a.j < b.j;
              });
    return spec;
}

// A distance transform applied to whole clouds before percolation, modeling
// feature embeddings as explicit maps with known bi-Lipschitz bounds.
struct PointMap {
    enum class Kind { identity, linear, scale, custom };

    Kind kind = Kind::identity;
    Matrix matrix;       // linear: D_out x D_in
    double factor = 1.0; // scale
    std::string description;
    std::optional<double> lipschitz_lower; // c1
    std::optional<double> lipschitz_upper; // c2

    static PointMap identity() {
        PointMap m;
        m.kind = Kind::identity;
        m.lipschitz_lower = 1.0;
        m.lipschitz_upper = 1.0;
        return m;
    }

    static PointMap scale(double s) {
        if (!(s > 0.0)) throw usage_error("scale factor must be positive");
        PointMap m;
        m.kind = Kind::scale;
        m.factor = s;
        m.lipschitz_lower = s;
        m.lipschitz_upper = s;
        return m;
    }

    static PointMap linear(Matrix a);
    static PointMap linear(Matrix a, double c1, double c2);

    static PointMap custom(std::string desc, std::optional<double> c1 = std::nullopt,
                           std::optional<double> c2 = std::nullopt) {
        PointMap m;
        m.kind = Kind::custom;
        m.description = std::move(desc);
        m.lipschitz_lower = c1;
        m.lipschitz_upper = c2;
        return m;
    }
};

// Singular values of a small dense matrix, descending, by one-sided Jacobi
// rotations on the wider-than-tall orientation. Adequate for the D x D'
// matrices PointMap carries; not meant for large systems.
inline std::vector<double> singular_values(const Matrix& a) {
    if (a.rows == 0 || a.cols == 0) throw usage_error("singular_values: empty matrix");
    // operate on columns of an m x n copy with m >= n
    std::size_t m = a.rows, n = a.cols;
    Matrix w = a;
    if (m < n) { // transpose; singular values are shared
        w = Matrix(n, m);
        for (std::size_t r = 0; r < a.rows; ++r)
            for (std::size_t c = 0; c < a.cols; ++c) w(c, r) = a(r, c);
        std::swap(m, n);
    }
    const double eps = 1e-30;
    for (int sweep = 0; sweep < 60; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double app = 0, aqq = 0, apq = 0;
                for (std::size_t r = 0; r < m; ++r) {
                    app += w(r, p) * w(r, p);
                    aqq += w(r, q) * w(r, q);
                    apq += w(r, p) * w(r, q);
                }
                if (apq * apq <= 1e-30 * app * aqq + eps) continue;
                double tau = (aqq - app) / (2.0 * apq);
                double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                double cs = 1.0 / std::sqrt(1.0 + t * t);
                double sn = cs * t;
                for (std::size_t r = 0; r < m; ++r) {
                    double vp = w(r, p), vq = w(r, q);
                    w(r, p) = cs * vp - sn * vq;
                    w(r, q) = sn * vp + cs * vq;
                }
                rotated = true;
            }
        }
        if (!rotated) break;
    }
    std::vector<double> sv(n);
    for (std::size_t c = 0; c < n; ++c) {
        double s = 0;
        for (std::size_t r = 0; r < m; ++r) s += w(r, c) * w(r, c);
        sv[c] = std::sqrt(s);
    }
    std::sort(sv.begin(), sv.end(), std::greater<>());
    return sv;
}

inline PointMap PointMap::linear(Matrix a) {
    if (a.rows == 0 || a.cols == 0) throw usage_error("linear map matrix is empty");
    PointMap m;
    m.kind = Kind::linear;
    auto sv = singular_values(a);
    m.lipschitz_lower = sv.back();
    m.lipschitz_upper = sv.front();
    m.matrix = std::move(a);
    return m;
}

inline PointMap PointMap::linear(Matrix a, double c1, double c2) {
    PointMap m = linear(std::move(a));
    // supplied bounds must agree with the extreme singular values
    double smin = *m.lipschitz_lower, smax = *m.lipschitz_upper;
    auto rel = [](double x, double y) {
        double scale = std::max({std::abs(x), std::abs(y), 1e-300});
        return std::abs(x - y) / scale;
    };
    if (rel(c1, smin) > 1e-9 || rel(c2, smax) > 1e-9)
        throw usage_error("supplied Lipschitz bounds (" + std::to_string(c1) + ", " +
                          std::to_string(c2) + ") do not match singular values (" +
                          std::to_string(smin) + ", " + std::to_string(smax) + ")");
    return m;
}

// Transforms every point. Identity returns an equal cloud; custom maps carry
// no executable transform and are rejected.
inline PointCloud apply_map(const PointCloud& cloud, const PointMap& map) {
    validate_cloud(cloud);
    PointCloud out = cloud;
    switch (map.kind) {
    case PointMap::Kind::identity:
        return out;
    case PointMap::Kind::scale:
        for (double& x : out.points.data) x *= map.factor;
        return out;
    case PointMap::Kind::linear: {
        if (map.matrix.cols != cloud.dim())
            throw data_error("linear map expects D=" + std::to_string(map.matrix.cols) +
                             ", cloud has D=" + std::to_string(cloud.dim()));
        Matrix y(cloud.size(), map.matrix.rows);
        for (std::size_t r = 0; r < cloud.size(); ++r) {
            auto x = cloud.points.row(r);
            for (std::size_t o = 0; o < map.matrix.rows; ++o) {
                double acc = 0.0;
                for (std::size_t c = 0; c < map.matrix.cols; ++c)
                    acc += map.matrix(o, c) * x[c];
                y(r, o) = acc;
            }
        }
        out.points = std::move(y);
        return out;
    }
    case PointMap::Kind::custom:
        throw usage_error("custom point maps describe an external transform and cannot "
                          "be applied; transform the cloud before loading");
    }
    throw usage_error("unknown map kind");
}

} // namespace perc
