#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "perc/cloud.hpp"
#include "perc/errors.hpp"
#include "perc/generators.hpp"
#include "perc/metric.hpp"
#include "perc/parallel.hpp"
#include "perc/percolation.hpp"
#include "perc/rng.hpp"

namespace perc {

// Invoked as work completes (possibly from worker threads) so the CLI can
// keep a line-based counter on stderr.
using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

// Log-log fit of mean eps_c against N; d_hat = -1/slope estimates the
// intrinsic dimension, defined only for negative slopes.
struct ScalingFit {
    std::vector<std::size_t> n_values;
    std::vector<double> eps_means;
    std::vector<double> eps_stds;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::optional<double> d_hat;
    std::size_t trials = 0;
};

// Fits from per-N threshold samples. Kept separate from the experiment loop
// so the fit logic can be checked against hand-computed data.
inline ScalingFit scaling_fit_from_samples(std::span<const std::size_t> n_values,
                                           std::span<const std::vector<double>> samples) {
    if (n_values.size() != samples.size())
        throw usage_error("scaling fit: one sample vector per N required");
    std::vector<std::size_t> distinct(n_values.begin(), n_values.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2) throw usage_error("scaling fit needs >= 2 distinct N");

    ScalingFit fit;
    fit.n_values.assign(n_values.begin(), n_values.end());
    fit.trials = samples.empty() ? 0 : samples.front().size();
    for (std::size_t g = 0; g < samples.size(); ++g) {
        const auto& s = samples[g];
        if (s.empty()) throw usage_error("scaling fit needs >= 1 trial per N");
        double mean = 0.0;
        for (std::size_t t = 0; t < s.size(); ++t) {
            if (!(s[t] > 0.0))
                throw data_error("epsilon_c is 0 at N=" + std::to_string(n_values[g]) +
                                 ", trial " + std::to_string(t) + "; log scaling undefined");
            mean += s[t];
        }
        mean /= static_cast<double>(s.size());
        double var = 0.0;
        for (double v : s) var += (v - mean) * (v - mean);
        double std_dev = s.size() > 1 ? std::sqrt(var / static_cast<double>(s.size() - 1)) : 0.0;
        fit.eps_means.push_back(mean);
        fit.eps_stds.push_back(std_dev);
    }

    // ordinary least squares on (log N, log mean eps_c)
    std::size_t m = fit.n_values.size();
    double sx = 0, sy = 0;
    std::vector<double> xs(m), ys(m);
    for (std::size_t g = 0; g < m; ++g) {
        xs[g] = std::log(static_cast<double>(fit.n_values[g]));
        ys[g] = std::log(fit.eps_means[g]);
        sx += xs[g];
        sy += ys[g];
    }
    double mx = sx / static_cast<double>(m), my = sy / static_cast<double>(m);
    double sxx = 0, sxy = 0;
    for (std::size_t g = 0; g < m; ++g) {
        sxx += (xs[g] - mx) * (xs[g] - mx);
        sxy += (xs[g] - mx) * (ys[g] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0, ss_tot = 0;
    for (std::size_t g = 0; g < m; ++g) {
        double pred = fit.intercept + fit.slope * xs[g];
        ss_res += (ys[g] - pred) * (ys[g] - pred);
        ss_tot += (ys[g] - my) * (ys[g] - my);
    }
    fit.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
    if (fit.slope < 0.0) fit.d_hat = -1.0 / fit.slope;
    return fit;
}

// Runs `trials` independent clouds per N (streams derived from the spec seed
// and the grid/trial indices) and fits the scaling law on the per-N means.
inline ScalingFit fit_scaling(const GeneratorSpec& base, std::span<const std::size_t> n_grid,
                              std::size_t trials, double alpha = 0.5, unsigned threads = 0,
                              const ProgressFn& progress = nullptr) {
    GeneratorSpec probe = base; // base.n is a placeholder; the grid supplies N
    probe.n = std::max<std::size_t>(base.n, 1);
    validate_spec(probe);
    if (trials < 1) throw usage_error("fit_scaling needs trials >= 1");
    std::vector<std::size_t> distinct(n_grid.begin(), n_grid.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2) throw usage_error("need >= 2 distinct N");

    const std::size_t total = n_grid.size() * trials;
    std::atomic<std::size_t> done{0};
    std::vector<std::vector<double>> samples(n_grid.size(), std::vector<double>(trials, 0.0));
    parallel_tasks(total, threads, [&](std::size_t task) {
        std::size_t g = task / trials;
        std::size_t t = task % trials;
        GeneratorSpec spec = base;
        spec.n = n_grid[g];
        spec.seed = derive_seed(base.seed, g, t);
        PointCloud cloud = generate(spec);
        // trials are the parallel unit; the inner kernel runs single-threaded
        samples[g][t] = estimate_threshold(cloud, alpha, ThresholdRule::strict_majority, 1)
                            .epsilon_c;
        if (progress) progress(done.fetch_add(1) + 1, total);
    });
    return scaling_fit_from_samples(n_grid, samples);
}

enum class Zone { shrinkage, healthy, expansion };

inline std::string to_string(Zone z) {
    switch (z) {
    case Zone::shrinkage: return "shrinkage";
    case Zone::healthy: return "healthy";
    case Zone::expansion: return "expansion";
    }
    return "?";
}

// The Percolation Shift: delta = eps_c(model) - eps_c(real) at matched N,
// with a subsampling confidence interval and a CI-based zone call.
struct ShiftReport {
    double delta_eps = 0.0;
    double eps_real = 0.0;
    double eps_model = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    Zone zone = Zone::healthy;
    std::size_t n = 0;
    std::size_t resamples = 0;
};

namespace detail {

// Linear-interpolation empirical quantile on a sorted sample.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw usage_error("quantile of empty sample");
    if (sorted.size() == 1) return sorted[0];
    double h = p * static_cast<double>(sorted.size() - 1);
    std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline PointCloud subcloud(const PointCloud& cloud, const std::vector<std::uint32_t>& idx) {
    PointCloud out;
    out.points = Matrix(idx.size(), cloud.dim());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        auto src = cloud.points.row(idx[r]);
        auto dst = out.points.row(r);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return out;
}

} // namespace detail

// Point estimate from the full clouds; CI from `resamples` repetitions on
// equal-size subsamples drawn WITHOUT replacement from each cloud (sampling
// with replacement would inject duplicate points and spurious zero edges).
// Equal subsample sizes make the N^{-1/d} factor cancel inside the delta.
inline ShiftReport percolation_shift(const CloudPair& pair, double alpha,
                                     std::size_t resamples, double subsample_fraction,
                                     std::uint64_t seed, double confidence = 0.95,
                                     unsigned threads = 0,
                                     const ProgressFn& progress = nullptr) {
    validate_pair(pair);
    if (pair.real.size() != pair.model.size())
        throw data_error("percolation shift requires matched N (real N=" +
                         std::to_string(pair.real.size()) + ", model N=" +
                         std::to_string(pair.model.size()) + ")");
    if (!(confidence > 0.0 && confidence < 1.0))
        throw usage_error("confidence must lie in (0, 1)");

    const std::size_t n = pair.real.size();
    ShiftReport report;
    report.n = n;
    report.resamples = resamples;
    report.eps_real = estimate_threshold(pair.real, alpha, ThresholdRule::strict_majority,
                                         threads).epsilon_c;
    report.eps_model = estimate_threshold(pair.model, alpha, ThresholdRule::strict_majority,
                                          threads).epsilon_c;
    report.delta_eps = report.eps_model - report.eps_real;

    if (resamples == 0) {
        report.ci_low = report.ci_high = report.delta_eps;
    } else {
        if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0))
            throw usage_error("subsample fraction must lie in (0, 1]");
        std::size_t m = static_cast<std::size_t>(subsample_fraction * static_cast<double>(n));
        if (m < 2) throw usage_error("subsample size < 2; raise the subsample fraction");

        std::vector<double> deltas(resamples, 0.0);
        std::atomic<std::size_t> done{0};
        parallel_tasks(resamples, threads, [&](std::size_t r) {
            Engine er = make_engine(derive_seed(seed, r, 0));
            Engine em = make_engine(derive_seed(seed, r, 1));
            PointCloud sub_r = detail::subcloud(pair.real, sample_without_replacement(n, m, er));
            PointCloud sub_m = detail::subcloud(pair.model, sample_without_replacement(n, m, em));
            double e_r = estimate_threshold(sub_r, alpha, ThresholdRule::strict_majority, 1)
                             .epsilon_c;
            double e_m = estimate_threshold(sub_m, alpha, ThresholdRule::strict_majority, 1)
                             .epsilon_c;
            deltas[r] = e_m - e_r;
            if (progress) progress(done.fetch_add(1) + 1, resamples);
        });
        std::sort(deltas.begin(), deltas.end());
        double tail = (1.0 - confidence) / 2.0;
        report.ci_low = detail::quantile_sorted(deltas, tail);
        report.ci_high = detail::quantile_sorted(deltas, 1.0 - tail);
    }

    report.zone = report.ci_high < 0.0   ? Zone::shrinkage
                  : report.ci_low > 0.0 ? Zone::expansion
                                        : Zone::healthy;
    return report;
}

// Predicted ratio eps_c(spec) / eps_c(uniform on the same support) from the
// collision integral: (H2(spec) / H2(uniform))^{-1/d}. The uniform H2 is
// 1 / Vol(support), so uniform-density kinds return exactly 1.
inline double h2_corrected_prediction(const GeneratorSpec& spec, std::size_t n) {
    if (n < 1) throw usage_error("n must be >= 1");
    validate_spec(spec);
    double h2 = analytic_h2(spec);
    double d, support_vol;
    switch (spec.kind) {
    case GeneratorKind::cube:
        d = static_cast<double>(spec.d);
        support_vol = 1.0;
        break;
    case GeneratorKind::ball:
        d = static_cast<double>(spec.d);
        support_vol = detail::ball_volume(spec.d, spec.radius);
        break;
    case GeneratorKind::hypersphere:
        d = static_cast<double>(spec.d);
        support_vol = detail::sphere_surface_area(spec.d);
        break;
    case GeneratorKind::step_density:
        d = 2.0;
        support_vol = 1.0;
        break;
    default:
        throw data_error("no bounded uniform reference support for this generator kind");
    }
    double h2_uniform = 1.0 / support_vol;
    return std::pow(h2 / h2_uniform, -1.0 / d);
}

// Threshold sandwich under a bi-Lipschitz map: c1 * eps <= eps' <= c2 * eps.
// This is the edge-inclusion argument made checkable; for maps with exact
// constants both bounds are hard guarantees, not statistical ones.
struct InvarianceReport {
    double eps_original = 0.0;
    double eps_mapped = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    bool lower_ok = false;
    bool upper_ok = false;
};

inline InvarianceReport invariance_check(const PointCloud& cloud, const PointMap& map,
                                         double alpha = 0.5, unsigned threads = 0) {
    if (!map.lipschitz_lower || !map.lipschitz_upper)
        throw usage_error("invariance check needs known Lipschitz constants");
    InvarianceReport rep;
    rep.c1 = *map.lipschitz_lower;
    rep.c2 = *map.lipschitz_upper;
    if (!(rep.c1 > 0.0) || rep.c2 < rep.c1)
        throw usage_error("need 0 < c1 <= c2");
    rep.eps_original = estimate_threshold(cloud, alpha, ThresholdRule::strict_majority,
                                          threads).epsilon_c;
    PointCloud mapped = apply_map(cloud, map);
    rep.eps_mapped = estimate_threshold(mapped, alpha, ThresholdRule::strict_majority,
                                        threads).epsilon_c;
    rep.lower_ok = rep.c1 * rep.eps_original <= rep.eps_mapped;
    rep.upper_ok = rep.eps_mapped <= rep.c2 * rep.eps_original;
    return rep;
}

} // namespace perc
