#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "perc/analysis.hpp"
#include "perc/cloud_io.hpp"
#include "perc/errors.hpp"
#include "perc/generators.hpp"
#include "perc/metric.hpp"
#include "perc/percolation.hpp"
#include "perc/topo_loss.hpp"

namespace perc {

inline constexpr const char* kToolVersion = "0.1.0";

// Provenance block embedded in every JSON report: re-running the recorded
// command with the recorded seeds reproduces the point estimates bit-exactly
// (wall time excepted).
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> parameters;
    std::vector<std::uint64_t> seeds;
    std::string tool_version = kToolVersion;
    double wall_time_s = 0.0;
};

using json = nlohmann::json;

inline json to_json(const RunManifest& m) {
    json j;
    j["command"] = m.command;
    j["parameters"] = m.parameters;
    j["seed_info"] = {{"algorithm", kRngAlgorithm}, {"seeds", m.seeds}};
    j["tool_version"] = m.tool_version;
    j["wall_time_s"] = m.wall_time_s;
    return j;
}

inline json to_json(const ThresholdEstimate& est) {
    return {{"epsilon_c", est.epsilon_c},
            {"alpha", est.alpha},
            {"rule", to_string(est.rule)},
            {"n", est.n},
            {"connectivity_epsilon", est.connectivity_epsilon}};
}

inline json to_json(const PercolationCurve& curve) {
    json points = json::array();
    for (std::size_t k = 0; k < curve.epsilons.size(); ++k)
        points.push_back({curve.epsilons[k], curve.p_inf[k]});
    return {{"n", curve.n}, {"points", points}};
}

inline json to_json(const ScalingFit& fit) {
    json j;
    j["n_values"] = fit.n_values;
    j["eps_means"] = fit.eps_means;
    j["eps_stds"] = fit.eps_stds;
    j["slope"] = fit.slope;
    j["intercept"] = fit.intercept;
    j["r_squared"] = fit.r_squared;
    if (fit.d_hat)
        j["d_hat"] = *fit.d_hat;
    else
        j["d_hat"] = nullptr;
    j["trials"] = fit.trials;
    return j;
}

inline json to_json(const ShiftReport& rep) {
    return {{"delta_eps", rep.delta_eps}, {"eps_real", rep.eps_real},
            {"eps_model", rep.eps_model}, {"ci_low", rep.ci_low},
            {"ci_high", rep.ci_high},     {"zone", to_string(rep.zone)},
            {"n", rep.n},                 {"resamples", rep.resamples}};
}

inline json to_json(const InvarianceReport& rep) {
    return {{"eps_original", rep.eps_original}, {"eps_mapped", rep.eps_mapped},
            {"c1", rep.c1},                     {"c2", rep.c2},
            {"lower_ok", rep.lower_ok},         {"upper_ok", rep.upper_ok}};
}

inline json to_json(const TopoLossResult& res, bool include_gradient = false) {
    json j;
    j["value"] = res.value;
    j["k_used"] = res.k_used;
    if (include_gradient) {
        json g = json::array();
        for (std::size_t r = 0; r < res.gradient.rows; ++r) {
            json row = json::array();
            for (std::size_t c = 0; c < res.gradient.cols; ++c)
                row.push_back(res.gradient(r, c));
            g.push_back(std::move(row));
        }
        j["gradient"] = std::move(g);
    }
    return j;
}

inline json to_json(const ExpansionTrace& trace) {
    json steps = json::array();
    for (const auto& s : trace.steps)
        steps.push_back({{"iteration", s.iteration},
                         {"loss", s.loss},
                         {"eps_c", s.eps_c},
                         {"delta_eps", s.delta_eps}});
    return {{"steps", steps},
            {"learning_rate", trace.learning_rate},
            {"diverged", trace.diverged},
            {"final_n", trace.final_cloud.size()}};
}

// --- generator spec <-> JSON (the CLI's `gen --spec` format) ---

inline json to_json(const GeneratorSpec& spec) {
    json j;
    j["kind"] = to_string(spec.kind);
    j["n"] = spec.n;
    j["seed"] = spec.seed;
    if (spec.ambient_pad) j["ambient_pad"] = spec.ambient_pad;
    switch (spec.kind) {
    case GeneratorKind::hypersphere:
    case GeneratorKind::cube:
        j["d"] = spec.d;
        break;
    case GeneratorKind::ball:
        j["d"] = spec.d;
        j["radius"] = spec.radius;
        break;
    case GeneratorKind::gaussian_mixture: {
        json centers = json::array();
        for (std::size_t r = 0; r < spec.centers.rows; ++r) {
            json row = json::array();
            for (std::size_t c = 0; c < spec.centers.cols; ++c)
                row.push_back(spec.centers(r, c));
            centers.push_back(std::move(row));
        }
        j["centers"] = std::move(centers);
        j["sigma"] = spec.sigma;
        if (!spec.weights.empty()) j["weights"] = spec.weights;
        break;
    }
    case GeneratorKind::step_density:
        j["w"] = spec.w;
        break;
    }
    return j;
}

inline GeneratorSpec generator_spec_from_json(const json& j) {
    GeneratorSpec spec;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "hypersphere")
        spec.kind = GeneratorKind::hypersphere;
    else if (kind == "ball")
        spec.kind = GeneratorKind::ball;
    else if (kind == "cube")
        spec.kind = GeneratorKind::cube;
    else if (kind == "gaussian_mixture" || kind == "mixture")
        spec.kind = GeneratorKind::gaussian_mixture;
    else if (kind == "step_density" || kind == "step")
        spec.kind = GeneratorKind::step_density;
    else
        throw usage_error("unknown generator kind '" + kind + "'");

    spec.n = j.at("n").get<std::size_t>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.ambient_pad = j.value("ambient_pad", std::size_t{0});
    if (j.contains("d")) spec.d = j["d"].get<std::size_t>();
    if (j.contains("radius")) spec.radius = j["radius"].get<double>();
    if (j.contains("sigma")) spec.sigma = j["sigma"].get<double>();
    if (j.contains("w")) spec.w = j["w"].get<double>();
    if (j.contains("weights")) spec.weights = j["weights"].get<std::vector<double>>();
    if (j.contains("centers")) {
        const auto& rows = j["centers"];
        if (!rows.is_array() || rows.empty())
            throw usage_error("centers must be a non-empty array of rows");
        spec.centers = Matrix(rows.size(), rows[0].size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != spec.centers.cols)
                throw usage_error("ragged centers array");
            for (std::size_t c = 0; c < spec.centers.cols; ++c)
                spec.centers(r, c) = rows[r][c].get<double>();
        }
    }
    validate_spec(spec);
    return spec;
}

// --- CSV emitters for plot-ready data ---

namespace detail {

inline std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path.string() + "' for writing");
    return out;
}

} // namespace detail

inline void write_curve_csv(const PercolationCurve& curve, const std::filesystem::path& path) {
    auto out = detail::open_csv(path);
    out << "epsilon,p_inf\n";
    for (std::size_t k = 0; k < curve.epsilons.size(); ++k)
        out << detail::format_double(curve.epsilons[k]) << ','
            << detail::format_double(curve.p_inf[k]) << '\n';
    if (!out) throw io_error("write failure on '" + path.string() + "'");
}

inline void write_spectrum_csv(const DistanceSpectrum& spec,
                               const std::filesystem::path& path) {
    auto out = detail::open_csv(path);
    out << "distance,i,j\n";
    for (const auto& e : spec.entries)
        out << detail::format_double(e.distance) << ',' << e.i << ',' << e.j << '\n';
    if (!out) throw io_error("write failure on '" + path.string() + "'");
}

inline void write_scaling_csv(const ScalingFit& fit, const std::filesystem::path& path) {
    auto out = detail::open_csv(path);
    out << "n,eps_mean,eps_std\n";
    for (std::size_t k = 0; k < fit.n_values.size(); ++k)
        out << fit.n_values[k] << ',' << detail::format_double(fit.eps_means[k]) << ','
            << detail::format_double(fit.eps_stds[k]) << '\n';
    if (!out) throw io_error("write failure on '" + path.string() + "'");
}

inline void write_trace_csv(const ExpansionTrace& trace, const std::filesystem::path& path) {
    auto out = detail::open_csv(path);
    out << "iter,loss,eps_c,delta_eps\n";
    for (const auto& s : trace.steps)
        out << s.iteration << ',' << detail::format_double(s.loss) << ','
            << detail::format_double(s.eps_c) << ',' << detail::format_double(s.delta_eps)
            << '\n';
    if (!out) throw io_error("write failure on '" + path.string() + "'");
}

} // namespace perc
