#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "perc/cloud.hpp"
#include "perc/errors.hpp"
#include "perc/metric.hpp"

namespace perc {

// Disjoint sets with union by size and path compression. Component sizes are
// tracked because the sweep samples |C_max| continuously.
struct UnionFind {
    std::vector<std::uint32_t> parent;
    std::vector<std::uint32_t> size;

    explicit UnionFind(std::size_t n) : parent(n), size(n, 1) {
        for (std::size_t i = 0; i < n; ++i) parent[i] = static_cast<std::uint32_t>(i);
    }

    std::uint32_t find(std::uint32_t x) {
        std::uint32_t root = x;
        while (parent[root] != root) root = parent[root];
        while (parent[x] != root) {
            std::uint32_t next = parent[x];
            parent[x] = root;
            x = next;
        }
        return root;
    }

    // Returns the size of the merged component, or 0 if already joined.
    std::uint32_t unite(std::uint32_t a, std::uint32_t b) {
        std::uint32_t ra = find(a), rb = find(b);
        if (ra == rb) return 0;
        if (size[ra] < size[rb]) std::swap(ra, rb);
        parent[rb] = ra;
        size[ra] += size[rb];
        return size[ra];
    }
};

// P_inf(eps) = |C_max|/N sampled at eps = 0 and at every distinct pairwise
// distance. Right-continuous step function; monotone by construction.
struct PercolationCurve {
    std::vector<double> epsilons;
    std::vector<double> p_inf;
    std::size_t n = 0;
};

enum class ThresholdRule { strict_majority, at_least };

inline std::string to_string(ThresholdRule rule) {
    return rule == ThresholdRule::strict_majority ? "strict-majority" : "at-least";
}

struct ThresholdEstimate {
    double epsilon_c = 0.0;
    double alpha = 0.5;
    ThresholdRule rule = ThresholdRule::strict_majority;
    std::size_t n = 0;
    double connectivity_epsilon = 0.0; // radius at which P_inf first reaches 1
};

namespace detail {

inline void check_spectrum(const DistanceSpectrum& spectrum, std::size_t n) {
    if (n < 2) throw data_error("percolation needs N >= 2");
    if (spectrum.source_n != n)
        throw data_error("spectrum was computed for N=" + std::to_string(spectrum.source_n) +
                         ", not N=" + std::to_string(n));
    if (spectrum.entries.size() != n * (n - 1) / 2)
        throw data_error("spectrum entry count does not match N(N-1)/2");
}

// Walks the sorted spectrum through union-find, merging tied distances as a
// batch, and reports each batch to `emit(distance, cmax)`. Zero distances are
// merged before the first sample. Returns the largest merging edge, which is
// the longest MST edge by the Kruskal argument.
template <typename Emit>
double kruskal_sweep(const DistanceSpectrum& spectrum, std::size_t n, Emit&& emit) {
    UnionFind uf(n);
    std::uint32_t cmax = 1;
    double last_merge = 0.0;
    const auto& e = spectrum.entries;
    std::size_t k = 0;

    // coincident points belong to the eps = 0 state ("dist <= eps")
    while (k < e.size() && e[k].distance == 0.0) {
        if (e[k].i >= n || e[k].j >= n) throw data_error("spectrum index out of range");
        std::uint32_t merged = uf.unite(e[k].i, e[k].j);
        if (merged > cmax) cmax = merged;
        ++k;
    }
    emit(0.0, cmax);

    double prev_d = 0.0;
    while (k < e.size()) {
        double d = e[k].distance;
        if (!(d > prev_d) || !std::isfinite(d))
            throw data_error("spectrum contains a non-finite or unsorted distance");
        prev_d = d;
        while (k < e.size() && e[k].distance == d) {
            if (e[k].i >= n || e[k].j >= n) throw data_error("spectrum index out of range");
            std::uint32_t merged = uf.unite(e[k].i, e[k].j);
            if (merged > cmax) {
                cmax = merged;
                last_merge = d;
            } else if (merged > 0) {
                last_merge = d;
            }
            ++k;
        }
        emit(d, cmax);
    }
    return last_merge;
}

// Component size a curve point encodes; exact because p was produced as c/n.
inline std::uint32_t component_size(double p, std::size_t n) {
    return static_cast<std::uint32_t>(std::llround(p * static_cast<double>(n)));
}

inline std::size_t required_component(double alpha, std::size_t n, ThresholdRule rule) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw usage_error("alpha must lie in (0, 1)");
    double t = alpha * static_cast<double>(n);
    double r = std::round(t);
    bool integral = std::abs(t - r) <= 1e-9 * std::max(1.0, t);
    if (rule == ThresholdRule::strict_majority)
        return static_cast<std::size_t>(integral ? r : std::floor(t)) + 1;
    return static_cast<std::size_t>(integral ? r : std::ceil(t));
}

} // namespace detail

// Full giant-component evolution: one Kruskal-style pass over the sorted
// spectrum yields the curve at every distinct distance.
inline PercolationCurve percolate(const DistanceSpectrum& spectrum, std::size_t n) {
    detail::check_spectrum(spectrum, n);
    PercolationCurve curve;
    curve.n = n;
    double prev = 0.0;
    detail::kruskal_sweep(spectrum, n, [&](double d, std::uint32_t cmax) {
        double p = static_cast<double>(cmax) / static_cast<double>(n);
        if (p < prev) throw data_error("percolation curve lost monotonicity");
        prev = p;
        curve.epsilons.push_back(d);
        curve.p_inf.push_back(p);
    });
    if (curve.p_inf.empty() || curve.p_inf.back() != 1.0)
        throw data_error("percolation sweep did not reach full connectivity");
    return curve;
}

// Largest edge weight of the Euclidean MST, obtained from the same sweep.
// Equals the curve's connectivity epsilon exactly.
inline double mst_longest_edge(const DistanceSpectrum& spectrum, std::size_t n) {
    detail::check_spectrum(spectrum, n);
    return detail::kruskal_sweep(spectrum, n, [](double, std::uint32_t) {});
}

// Smallest radius whose component clears the alpha threshold under the given
// rule, plus the radius of full connectivity.
inline ThresholdEstimate critical_threshold(const PercolationCurve& curve, double alpha = 0.5,
                                            ThresholdRule rule = ThresholdRule::strict_majority) {
    if (curve.n < 1 || curve.epsilons.empty() || curve.epsilons.size() != curve.p_inf.size())
        throw data_error("invalid percolation curve");
    std::size_t need = detail::required_component(alpha, curve.n, rule);

    ThresholdEstimate est;
    est.alpha = alpha;
    est.rule = rule;
    est.n = curve.n;

    bool found = false, connected = false;
    for (std::size_t k = 0; k < curve.epsilons.size(); ++k) {
        std::uint32_t c = detail::component_size(curve.p_inf[k], curve.n);
        if (!found && c >= need) {
            est.epsilon_c = curve.epsilons[k];
            found = true;
        }
        if (!connected && curve.p_inf[k] == 1.0) {
            est.connectivity_epsilon = curve.epsilons[k];
            connected = true;
        }
    }
    if (!found || !connected)
        throw data_error("curve never reaches the threshold; is it complete?");
    return est;
}

// Step-function resampling of a curve onto an arbitrary ascending grid
// (right-continuous: the value at eps covers all edges <= eps).
inline PercolationCurve curve_on_grid(const PercolationCurve& curve,
                                      std::span<const double> grid) {
    if (curve.epsilons.empty()) throw data_error("invalid percolation curve");
    PercolationCurve out;
    out.n = curve.n;
    out.epsilons.assign(grid.begin(), grid.end());
    out.p_inf.reserve(grid.size());
    double prev = -1.0;
    for (double g : grid) {
        if (!(g >= 0.0) || g < prev) throw usage_error("grid must be ascending and nonnegative");
        prev = g;
        // last curve point with epsilon <= g
        auto it = std::upper_bound(curve.epsilons.begin(), curve.epsilons.end(), g);
        std::size_t idx = static_cast<std::size_t>(it - curve.epsilons.begin());
        if (idx == 0) throw usage_error("grid point below the curve origin");
        out.p_inf.push_back(curve.p_inf[idx - 1]);
    }
    return out;
}

// Convenience: spectrum + sweep + threshold for a single cloud.
inline ThresholdEstimate estimate_threshold(const PointCloud& cloud, double alpha = 0.5,
                                            ThresholdRule rule = ThresholdRule::strict_majority,
                                            unsigned threads = 0) {
    DistanceSpectrum spec = distance_spectrum(cloud, threads);
    return critical_threshold(percolate(spec, cloud.size()), alpha, rule);
}

} // namespace perc
