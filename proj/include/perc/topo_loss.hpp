#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "perc/cloud.hpp"
#include "perc/errors.hpp"
#include "perc/metric.hpp"
#include "perc/percolation.hpp"

namespace perc {

// Which rank of the fake spectrum was matched to which real distance.
struct RankPairing {
    std::size_t rank;     // 0-based order statistic index
    std::uint32_t fake_i; // fake pair realizing this rank
    std::uint32_t fake_j;
    double fake_distance;
    double real_distance;
};

// Sorted-distance matching loss: mean squared gap between the first K order
// statistics of the two pairwise-distance spectra, with the analytic gradient
// with respect to the fake points. The real batch receives no gradient.
struct TopoLossResult {
    double value = 0.0;
    Matrix gradient; // N_fake x D_fake
    std::size_t k_used = 0;
    std::vector<RankPairing> pairing;
};

// The gradient fixes the current sort permutation (the subgradient at rank
// ties) and chains d'(x_i) = (x_i - x_j) / d_ij onto the pair realizing each
// rank. A used fake pair at distance 0 has no direction and is an error.
inline TopoLossResult topo_loss(const PointCloud& real, const PointCloud& fake,
                                std::optional<std::size_t> k = std::nullopt,
                                unsigned threads = 0) {
    DistanceSpectrum sr = distance_spectrum(real, threads);
    DistanceSpectrum sf = distance_spectrum(fake, threads);
    const std::size_t m_min = std::min(sr.entries.size(), sf.entries.size());
    std::size_t K = m_min;
    if (k) {
        if (*k == 0) throw usage_error("k must be >= 1");
        if (*k > m_min)
            throw usage_error("k=" + std::to_string(*k) + " exceeds available pair count " +
                              std::to_string(m_min));
        K = *k;
    }

    TopoLossResult res;
    res.k_used = K;
    res.gradient = Matrix(fake.size(), fake.dim());
    res.pairing.reserve(K);

    const double inv_k = 1.0 / static_cast<double>(K);
    double value = 0.0;
    for (std::size_t r = 0; r < K; ++r) {
        const SpectrumEntry& ef = sf.entries[r];
        const double dr = sr.entries[r].distance;
        const double diff = ef.distance - dr;
        value += diff * diff;
        res.pairing.push_back({r, ef.i, ef.j, ef.distance, dr});
        if (diff == 0.0) continue;
        if (ef.distance == 0.0)
            throw data_error("coincident fake points " + std::to_string(ef.i) + " and " +
                             std::to_string(ef.j) + " at rank " + std::to_string(r) +
                             ": gradient undefined");
        const double coef = 2.0 * inv_k * diff / ef.distance;
        auto xi = fake.points.row(ef.i);
        auto xj = fake.points.row(ef.j);
        auto gi = res.gradient.row(ef.i);
        auto gj = res.gradient.row(ef.j);
        for (std::size_t c = 0; c < fake.dim(); ++c) {
            double dir = xi[c] - xj[c];
            gi[c] += coef * dir;
            gj[c] -= coef * dir;
        }
    }
    res.value = value * inv_k;
    return res;
}

enum class LossDirection { repulsive, attractive, mixed };

inline std::string to_string(LossDirection dir) {
    switch (dir) {
    case LossDirection::repulsive: return "repulsive";
    case LossDirection::attractive: return "attractive";
    case LossDirection::mixed: return "mixed";
    }
    return "?";
}

// Repulsive when the fake spectrum sits strictly below the real one on every
// used rank (under-covering), attractive when strictly above, mixed otherwise
// (ties count as mixed).
inline LossDirection loss_direction(const PointCloud& real, const PointCloud& fake,
                                    std::size_t k, unsigned threads = 0) {
    if (k == 0) throw usage_error("k must be >= 1");
    DistanceSpectrum sr = distance_spectrum(real, threads);
    DistanceSpectrum sf = distance_spectrum(fake, threads);
    const std::size_t K = k;
    if (K > std::min(sr.entries.size(), sf.entries.size()))
        throw usage_error("k=" + std::to_string(k) + " exceeds available pair count " +
                          std::to_string(std::min(sr.entries.size(), sf.entries.size())));
    bool all_below = true, all_above = true;
    for (std::size_t r = 0; r < K; ++r) {
        double df = sf.entries[r].distance, dr = sr.entries[r].distance;
        all_below = all_below && df < dr;
        all_above = all_above && df > dr;
    }
    if (all_below) return LossDirection::repulsive;
    if (all_above) return LossDirection::attractive;
    return LossDirection::mixed;
}

struct ExpansionStep {
    std::size_t iteration;
    double loss;
    double eps_c;     // threshold of the current fake cloud
    double delta_eps; // vs. the fixed real threshold
};

struct ExpansionTrace {
    std::vector<ExpansionStep> steps;
    double learning_rate = 0.0;
    PointCloud final_cloud;
    bool diverged = false;
};

// Plain gradient descent on topo_loss over the fake points, tracking the
// loss and the percolation threshold of the evolving cloud. Starts must not
// be over-expanded (strictly attractive); a sustained loss increase aborts
// the run with the partial trace flagged as diverged.
inline ExpansionTrace expand_demo(const PointCloud& real, const PointCloud& fake0,
                                  std::size_t steps, double learning_rate, double alpha = 0.5,
                                  std::size_t eval_every = 1, unsigned threads = 0) {
    if (steps < 1) throw usage_error("need steps >= 1");
    if (!(learning_rate > 0.0)) throw usage_error("learning rate must be positive");
    if (eval_every < 1) throw usage_error("eval_every must be >= 1");

    DistanceSpectrum sr = distance_spectrum(real, threads);
    std::size_t k_all = std::min(sr.entries.size(),
                                 fake0.size() * (fake0.size() - 1) / 2);
    if (loss_direction(real, fake0, k_all, threads) == LossDirection::attractive)
        throw usage_error("fake cloud is over-expanded (spectrum strictly above real); "
                          "the expansion demo needs an under-covering start");

    const double eps_real = critical_threshold(percolate(sr, real.size()), alpha).epsilon_c;

    ExpansionTrace trace;
    trace.learning_rate = learning_rate;
    PointCloud fake = fake0;
    fake.label = fake0.label.empty() ? "expanded" : fake0.label + "+expanded";

    auto record = [&](std::size_t iter, double loss_value) {
        double eps = estimate_threshold(fake, alpha, ThresholdRule::strict_majority, threads)
                         .epsilon_c;
        trace.steps.push_back({iter, loss_value, eps, eps - eps_real});
    };

    TopoLossResult cur = topo_loss(real, fake, std::nullopt, threads);
    record(0, cur.value);

    double prev_loss = cur.value;
    int rising = 0;
    for (std::size_t it = 1; it <= steps; ++it) {
        std::vector<double> prev_points = fake.points.data;
        bool finite = true;
        for (std::size_t k = 0; k < fake.points.data.size(); ++k) {
            fake.points.data[k] -= learning_rate * cur.gradient.data[k];
            finite = finite && std::isfinite(fake.points.data[k]);
        }
        if (!finite) {
            // roll back so the trace ends on an evaluable cloud
            fake.points.data = std::move(prev_points);
            trace.diverged = true;
            break;
        }
        cur = topo_loss(real, fake, std::nullopt, threads);

        if (!std::isfinite(cur.value) || cur.value > prev_loss)
            ++rising;
        else
            rising = 0;
        prev_loss = cur.value;

        bool abort = rising >= 10 || !std::isfinite(cur.value);
        if (it % eval_every == 0 || it == steps || abort) record(it, cur.value);
        if (abort) {
            trace.diverged = true;
            break;
        }
    }
    trace.final_cloud = std::move(fake);
    return trace;
}

} // namespace perc
