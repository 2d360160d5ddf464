#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "perc/cloud.hpp"
#include "perc/errors.hpp"
#include "perc/rng.hpp"

namespace perc {

enum class GeneratorKind { hypersphere, ball, cube, gaussian_mixture, step_density };

inline std::string to_string(GeneratorKind kind) {
    switch (kind) {
    case GeneratorKind::hypersphere: return "hypersphere";
    case GeneratorKind::ball: return "ball";
    case GeneratorKind::cube: return "cube";
    case GeneratorKind::gaussian_mixture: return "gaussian_mixture";
    case GeneratorKind::step_density: return "step_density";
    }
    return "?";
}

// Seeded synthetic sources for the controlled experiments. Clouds carry the
// true intrinsic dimension and, where defined, the analytic support volume in
// their metadata so scaling predictions can be checked against ground truth.
struct GeneratorSpec {
    GeneratorKind kind = GeneratorKind::cube;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::size_t d = 1;            // hypersphere / ball / cube intrinsic dimension
    double radius = 1.0;          // ball
    Matrix centers;               // gaussian_mixture: k x D
    double sigma = 0.0;           // gaussian_mixture
    std::vector<double> weights;  // gaussian_mixture; empty = equal weights
    double w = 0.0;               // step_density split in (0, 1)
    std::size_t ambient_pad = 0;  // extra zero coordinates

    static GeneratorSpec hypersphere(std::size_t d, std::size_t n, std::uint64_t seed) {
        GeneratorSpec s;
        s.kind = GeneratorKind::hypersphere;
        s.d = d;
        s.n = n;
        s.seed = seed;
        return s;
    }
    static GeneratorSpec ball(std::size_t d, std::size_t n, std::uint64_t seed,
                              double radius = 1.0) {
        GeneratorSpec s;
        s.kind = GeneratorKind::ball;
        s.d = d;
        s.n = n;
        s.seed = seed;
        s.radius = radius;
        return s;
    }
    static GeneratorSpec cube(std::size_t d, std::size_t n, std::uint64_t seed) {
        GeneratorSpec s;
        s.kind = GeneratorKind::cube;
        s.d = d;
        s.n = n;
        s.seed = seed;
        return s;
    }
    static GeneratorSpec gaussian_mixture(Matrix centers, double sigma,
                                          std::vector<double> weights, std::size_t n,
                                          std::uint64_t seed) {
        GeneratorSpec s;
        s.kind = GeneratorKind::gaussian_mixture;
        s.centers = std::move(centers);
        s.sigma = sigma;
        s.weights = std::move(weights);
        s.n = n;
        s.seed = seed;
        return s;
    }
    static GeneratorSpec step_density(double w, std::size_t n, std::uint64_t seed) {
        GeneratorSpec s;
        s.kind = GeneratorKind::step_density;
        s.w = w;
        s.n = n;
        s.seed = seed;
        return s;
    }
};

namespace detail {

inline double sphere_surface_area(std::size_t d) {
    // area of the unit d-sphere S^d embedded in R^{d+1}
    double k = static_cast<double>(d + 1);
    return 2.0 * std::pow(std::numbers::pi, k / 2.0) / std::tgamma(k / 2.0);
}

inline double ball_volume(std::size_t d, double r) {
    double k = static_cast<double>(d);
    return std::pow(std::numbers::pi, k / 2.0) / std::tgamma(k / 2.0 + 1.0) * std::pow(r, k);
}

inline std::string format_compact(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

} // namespace detail

inline void validate_spec(const GeneratorSpec& spec) {
    if (spec.n < 1) throw usage_error("generator needs n >= 1");
    switch (spec.kind) {
    case GeneratorKind::hypersphere:
    case GeneratorKind::ball:
    case GeneratorKind::cube:
        if (spec.d < 1) throw usage_error("intrinsic dimension must be >= 1");
        if (spec.kind == GeneratorKind::ball && !(spec.radius > 0.0))
            throw usage_error("ball radius must be positive");
        break;
    case GeneratorKind::gaussian_mixture: {
        if (spec.centers.rows < 1 || spec.centers.cols < 1)
            throw usage_error("gaussian mixture needs at least one center");
        if (!(spec.sigma > 0.0)) throw usage_error("gaussian mixture sigma must be positive");
        if (!spec.weights.empty()) {
            if (spec.weights.size() != spec.centers.rows)
                throw usage_error("weights count must match center count");
            double sum = 0.0;
            for (double wt : spec.weights) {
                if (!(wt >= 0.0)) throw usage_error("weights must be nonnegative");
                sum += wt;
            }
            if (std::abs(sum - 1.0) > 1e-12)
                throw usage_error("weights must sum to 1 (got " + std::to_string(sum) + ")");
        }
        break;
    }
    case GeneratorKind::step_density:
        if (!(spec.w > 0.0 && spec.w < 1.0)) throw usage_error("step density w must be in (0, 1)");
        break;
    }
}

// Deterministic for a fixed seed; metadata records the generator, the true
// intrinsic dimension, the analytic Vol(M) where defined, and the RNG.
inline PointCloud generate(const GeneratorSpec& spec) {
    validate_spec(spec);
    Engine eng = make_engine(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    PointCloud cloud;
    cloud.seed = spec.seed;
    cloud.meta["rng"] = kRngAlgorithm;
    cloud.meta["kind"] = to_string(spec.kind);
    cloud.meta["seed"] = std::to_string(spec.seed);
    auto set_vol = [&](double v) { cloud.meta["vol"] = detail::format_compact(v); };

    switch (spec.kind) {
    case GeneratorKind::hypersphere: {
        // normalized isotropic Gaussians are exactly uniform on S^d
        std::size_t dim = spec.d + 1;
        cloud.points = Matrix(spec.n, dim);
        for (std::size_t i = 0; i < spec.n; ++i) {
            auto row = cloud.points.row(i);
            double norm2 = 0.0;
            do {
                norm2 = 0.0;
                for (std::size_t c = 0; c < dim; ++c) {
                    row[c] = normal(eng);
                    norm2 += row[c] * row[c];
                }
            } while (norm2 == 0.0);
            double inv = 1.0 / std::sqrt(norm2);
            for (std::size_t c = 0; c < dim; ++c) row[c] *= inv;
        }
        cloud.label = "hypersphere(d=" + std::to_string(spec.d) + ")";
        cloud.meta["d"] = std::to_string(spec.d);
        set_vol(detail::sphere_surface_area(spec.d));
        break;
    }
    case GeneratorKind::ball: {
        cloud.points = Matrix(spec.n, spec.d);
        for (std::size_t i = 0; i < spec.n; ++i) {
            auto row = cloud.points.row(i);
            double norm2 = 0.0;
            do {
                norm2 = 0.0;
                for (std::size_t c = 0; c < spec.d; ++c) {
                    row[c] = normal(eng);
                    norm2 += row[c] * row[c];
                }
            } while (norm2 == 0.0);
            double r = spec.radius *
                       std::pow(unif(eng), 1.0 / static_cast<double>(spec.d)) /
                       std::sqrt(norm2);
            for (std::size_t c = 0; c < spec.d; ++c) row[c] *= r;
        }
        cloud.label = "ball(d=" + std::to_string(spec.d) + ")";
        cloud.meta["d"] = std::to_string(spec.d);
        cloud.meta["radius"] = detail::format_compact(spec.radius);
        set_vol(detail::ball_volume(spec.d, spec.radius));
        break;
    }
    case GeneratorKind::cube: {
        cloud.points = Matrix(spec.n, spec.d);
        for (double& x : cloud.points.data) x = unif(eng);
        cloud.label = "cube(d=" + std::to_string(spec.d) + ")";
        cloud.meta["d"] = std::to_string(spec.d);
        set_vol(1.0);
        break;
    }
    case GeneratorKind::gaussian_mixture: {
        std::size_t k = spec.centers.rows;
        std::size_t dim = spec.centers.cols;
        cloud.points = Matrix(spec.n, dim);
        for (std::size_t i = 0; i < spec.n; ++i) {
            // inverse-CDF component pick keeps the draw sequence portable
            double u = unif(eng);
            std::size_t comp = k - 1;
            double acc = 0.0;
            for (std::size_t c = 0; c < k; ++c) {
                acc += spec.weights.empty() ? 1.0 / static_cast<double>(k) : spec.weights[c];
                if (u < acc) {
                    comp = c;
                    break;
                }
            }
            auto row = cloud.points.row(i);
            for (std::size_t c = 0; c < dim; ++c)
                row[c] = spec.centers(comp, c) + spec.sigma * normal(eng);
        }
        cloud.label = "gaussian_mixture(k=" + std::to_string(k) + ")";
        cloud.meta["d"] = std::to_string(dim);
        cloud.meta["sigma"] = detail::format_compact(spec.sigma);
        cloud.meta["modes"] = std::to_string(k);
        break;
    }
    case GeneratorKind::step_density: {
        // density 2w on [0, 1/2) x [0,1], 2(1-w) on [1/2, 1] x [0,1]
        cloud.points = Matrix(spec.n, 2);
        for (std::size_t i = 0; i < spec.n; ++i) {
            double side = unif(eng);
            double x = unif(eng);
            double y = unif(eng);
            cloud.points(i, 0) = side < spec.w ? 0.5 * x : 0.5 + 0.5 * x;
            cloud.points(i, 1) = y;
        }
        cloud.label = "step_density(w=" + detail::format_compact(spec.w) + ")";
        cloud.meta["d"] = "2";
        cloud.meta["w"] = detail::format_compact(spec.w);
        set_vol(1.0);
        break;
    }
    }

    if (spec.ambient_pad > 0) {
        Matrix padded(cloud.points.rows, cloud.points.cols + spec.ambient_pad);
        for (std::size_t r = 0; r < cloud.points.rows; ++r)
            for (std::size_t c = 0; c < cloud.points.cols; ++c)
                padded(r, c) = cloud.points(r, c);
        cloud.points = std::move(padded);
        cloud.meta["ambient_pad"] = std::to_string(spec.ambient_pad);
    }
    validate_cloud(cloud);
    return cloud;
}

// Exact collision integral H2 = integral of p^2 over the support.
// For the gaussian mixture the closed form covers equal-weight isotropic
// modes whose centers are pairwise more than 8 sigma apart (cross terms
// are dropped; they are exponentially negligible in that regime).
inline double analytic_h2(const GeneratorSpec& spec) {
    validate_spec(spec);
    switch (spec.kind) {
    case GeneratorKind::cube:
        return 1.0;
    case GeneratorKind::ball:
        return 1.0 / detail::ball_volume(spec.d, spec.radius);
    case GeneratorKind::hypersphere:
        return 1.0 / detail::sphere_surface_area(spec.d);
    case GeneratorKind::step_density:
        return 2.0 * (spec.w * spec.w + (1.0 - spec.w) * (1.0 - spec.w));
    case GeneratorKind::gaussian_mixture: {
        std::size_t k = spec.centers.rows;
        std::size_t dim = spec.centers.cols;
        if (!spec.weights.empty()) {
            for (double wt : spec.weights)
                if (std::abs(wt - 1.0 / static_cast<double>(k)) > 1e-12)
                    throw data_error("analytic H2 for gaussian mixtures requires equal weights");
        }
        double min_sep2 = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a + 1 < k; ++a)
            for (std::size_t b = a + 1; b < k; ++b) {
                double s2 = 0.0;
                for (std::size_t c = 0; c < dim; ++c) {
                    double t = spec.centers(a, c) - spec.centers(b, c);
                    s2 += t * t;
                }
                min_sep2 = std::min(min_sep2, s2);
            }
        double sep8 = 8.0 * spec.sigma;
        if (k > 1 && min_sep2 <= sep8 * sep8)
            throw data_error("analytic H2 for gaussian mixtures requires centers more than "
                             "8*sigma apart; use a Monte-Carlo estimate instead");
        double self = std::pow(4.0 * std::numbers::pi * spec.sigma * spec.sigma,
                               -static_cast<double>(dim) / 2.0);
        return self / static_cast<double>(k);
    }
    }
    throw usage_error("unknown generator kind");
}

} // namespace perc
