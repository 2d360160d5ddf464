// perc: percolation analysis of point clouds.
//
// One binary, subcommand style. Every randomized command requires an explicit
// --seed; reports are JSON with an embedded run manifest, plot data is CSV.
// Exit codes: 0 success, 2 usage error, 3 data error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "perc/perc.hpp"

namespace {

using perc::json;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

perc::CloudFormat parse_format(const std::string& name, const std::filesystem::path& path) {
    if (name == "csv") return perc::CloudFormat::csv;
    if (name == "binary") return perc::CloudFormat::binary;
    if (name.empty()) return perc::format_from_path(path);
    throw perc::usage_error("unknown format '" + name + "' (expected csv or binary)");
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stoull(item));
    }
    if (out.empty()) throw perc::usage_error("empty count list '" + text + "'");
    return out;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

// rows separated by ';', values by ',' — e.g. "-2,0;2,0"
perc::Matrix parse_matrix(const std::string& text) {
    perc::Matrix m;
    std::stringstream rows(text);
    std::string row;
    while (std::getline(rows, row, ';')) {
        auto vals = parse_double_list(row);
        if (vals.empty()) continue;
        if (m.cols == 0) m.cols = vals.size();
        if (vals.size() != m.cols) throw perc::usage_error("ragged matrix '" + text + "'");
        m.data.insert(m.data.end(), vals.begin(), vals.end());
        ++m.rows;
    }
    if (m.rows == 0) throw perc::usage_error("empty matrix '" + text + "'");
    return m;
}

// The report goes to stdout only with --out -; diagnostics stay on stderr.
void emit_report(const json& report, const std::string& out) {
    if (out == "-") {
        std::cout << report.dump(2) << "\n";
        return;
    }
    std::ofstream f(out);
    if (!f) throw perc::io_error("cannot open '" + out + "' for writing");
    f << report.dump(2) << "\n";
    if (!f) throw perc::io_error("write failure on '" + out + "'");
}

perc::RunManifest make_manifest(const std::string& command, const CLI::App* sub,
                                std::vector<std::uint64_t> seeds, double wall_s) {
    perc::RunManifest m;
    m.command = command;
    for (const auto* opt : sub->get_options()) {
        if (opt->count() == 0) continue;
        std::string name = opt->get_name();
        if (name.rfind("--", 0) == 0) name = name.substr(2);
        m.parameters[name] = opt->as<std::string>();
    }
    m.seeds = std::move(seeds);
    m.wall_time_s = wall_s;
    return m;
}

perc::ProgressFn stderr_counter(const std::string& what, bool enabled) {
    if (!enabled) return nullptr;
    auto mtx = std::make_shared<std::mutex>();
    return [what, mtx](std::size_t done, std::size_t total) {
        std::size_t step = total >= 20 ? total / 10 : 1;
        if (done % step == 0 || done == total) {
            std::lock_guard<std::mutex> lock(*mtx);
            std::cerr << what << " " << done << "/" << total << "\n";
        }
    };
}

// --- subcommand configs ---

struct GenArgs {
    std::string kind, out, format, spec_json, centers, weights;
    std::size_t d = 2, n = 0, pad = 0;
    std::uint64_t seed = 0;
    double radius = 1.0, sigma = 0.0, w = 0.5;
    bool has_spec = false;
};

perc::GeneratorSpec spec_from_args(const GenArgs& a) {
    if (a.has_spec) {
        std::string text = a.spec_json;
        if (!text.empty() && text[0] == '@') {
            std::ifstream f(text.substr(1));
            if (!f) throw perc::io_error("cannot open spec file '" + text.substr(1) + "'");
            std::stringstream ss;
            ss << f.rdbuf();
            text = ss.str();
        }
        auto j = json::parse(text, nullptr, false);
        if (j.is_discarded()) throw perc::usage_error("malformed generator spec JSON");
        return perc::generator_spec_from_json(j);
    }
    perc::GeneratorSpec spec;
    if (a.kind == "hypersphere")
        spec = perc::GeneratorSpec::hypersphere(a.d, a.n, a.seed);
    else if (a.kind == "ball")
        spec = perc::GeneratorSpec::ball(a.d, a.n, a.seed, a.radius);
    else if (a.kind == "cube")
        spec = perc::GeneratorSpec::cube(a.d, a.n, a.seed);
    else if (a.kind == "mixture" || a.kind == "gaussian_mixture") {
        if (a.centers.empty()) throw perc::usage_error("mixture needs --centers");
        spec = perc::GeneratorSpec::gaussian_mixture(parse_matrix(a.centers), a.sigma,
                                                     parse_double_list(a.weights), a.n, a.seed);
    } else if (a.kind == "step" || a.kind == "step_density")
        spec = perc::GeneratorSpec::step_density(a.w, a.n, a.seed);
    else
        throw perc::usage_error("unknown kind '" + a.kind + "'");
    spec.ambient_pad = a.pad;
    return spec;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"percolation analysis of point clouds"};
    app.require_subcommand(1);
    app.set_version_flag("--version", perc::kToolVersion);

    unsigned threads = 0;
    app.add_option("--threads", threads, "worker thread cap (0 = PERC_THREADS env or hardware)")
        ->capture_default_str();
    bool quiet = false;
    app.add_flag("--quiet", quiet, "suppress the stderr progress counter");

    // gen
    GenArgs gen;
    auto* cmd_gen = app.add_subcommand("gen", "generate a synthetic cloud");
    cmd_gen->add_option("--kind", gen.kind, "hypersphere|ball|cube|mixture|step");
    cmd_gen->add_option("--d", gen.d, "intrinsic dimension");
    auto* gen_n = cmd_gen->add_option("--n", gen.n, "sample count");
    auto* gen_seed = cmd_gen->add_option("--seed", gen.seed, "generator seed (required)");
    cmd_gen->add_option("--radius", gen.radius, "ball radius");
    cmd_gen->add_option("--sigma", gen.sigma, "mixture sigma");
    cmd_gen->add_option("--centers", gen.centers, "mixture centers, e.g. \"-2,0;2,0\"");
    cmd_gen->add_option("--weights", gen.weights, "mixture weights, e.g. \"0.65,0.35\"");
    cmd_gen->add_option("--w", gen.w, "step density split in (0,1)");
    cmd_gen->add_option("--ambient-pad", gen.pad, "extra zero coordinates");
    auto* gen_spec_opt =
        cmd_gen->add_option("--spec", gen.spec_json, "full spec as JSON (or @file)");
    cmd_gen->add_option("--out", gen.out, "output cloud path")->required();
    cmd_gen->add_option("--format", gen.format, "csv|binary (default: by extension)");

    // curve
    std::string in_path, out_path = "-", csv_path, fmt, grid_text, spectrum_csv;
    auto* cmd_curve = app.add_subcommand("curve", "percolation curve of a cloud");
    cmd_curve->add_option("--in", in_path, "input cloud")->required();
    cmd_curve->add_option("--format", fmt, "csv|binary (default: by extension)");
    cmd_curve->add_option("--out", out_path, "JSON report path or -")->capture_default_str();
    cmd_curve->add_option("--csv", csv_path, "write curve CSV (epsilon,p_inf)");
    cmd_curve->add_option("--grid", grid_text, "resample onto comma-separated radii");
    cmd_curve->add_option("--spectrum-csv", spectrum_csv, "debug: dump sorted distances");

    // threshold
    std::string th_in, th_out = "-", th_fmt, th_rule = "strict-majority";
    double th_alpha = 0.5;
    auto* cmd_threshold = app.add_subcommand("threshold", "critical threshold of a cloud");
    cmd_threshold->add_option("--in", th_in, "input cloud")->required();
    cmd_threshold->add_option("--format", th_fmt, "csv|binary (default: by extension)");
    cmd_threshold->add_option("--alpha", th_alpha, "threshold fraction in (0,1)")
        ->capture_default_str();
    cmd_threshold->add_option("--rule", th_rule, "strict-majority|at-least")
        ->capture_default_str();
    cmd_threshold->add_option("--out", th_out, "JSON report path or -")->capture_default_str();

    // shift
    std::string sh_real, sh_model, sh_out = "-";
    double sh_alpha = 0.5, sh_subsample = 0.5, sh_confidence = 0.95;
    std::size_t sh_resamples = 100;
    std::uint64_t sh_seed = 0;
    auto* cmd_shift = app.add_subcommand("shift", "percolation shift between two clouds");
    cmd_shift->add_option("--real", sh_real, "reference cloud")->required();
    cmd_shift->add_option("--model", sh_model, "model cloud")->required();
    cmd_shift->add_option("--alpha", sh_alpha, "threshold fraction")->capture_default_str();
    cmd_shift->add_option("--resamples", sh_resamples, "CI resamples (0 disables)")
        ->capture_default_str();
    cmd_shift->add_option("--subsample", sh_subsample, "subsample fraction")
        ->capture_default_str();
    cmd_shift->add_option("--confidence", sh_confidence, "CI confidence level")
        ->capture_default_str();
    auto* sh_seed_opt = cmd_shift->add_option("--seed", sh_seed, "resampling seed");
    cmd_shift->add_option("--out", sh_out, "JSON report path or -")->capture_default_str();

    // fit-scaling
    GenArgs fs;
    std::string fs_n_text, fs_out = "-", fs_csv;
    std::size_t fs_trials = 5;
    double fs_alpha = 0.5;
    auto* cmd_fit = app.add_subcommand("fit-scaling", "scaling-law fit over sample sizes");
    cmd_fit->add_option("--kind", fs.kind, "hypersphere|ball|cube|mixture|step")->required();
    cmd_fit->add_option("--d", fs.d, "intrinsic dimension");
    cmd_fit->add_option("--radius", fs.radius, "ball radius");
    cmd_fit->add_option("--sigma", fs.sigma, "mixture sigma");
    cmd_fit->add_option("--centers", fs.centers, "mixture centers");
    cmd_fit->add_option("--weights", fs.weights, "mixture weights");
    cmd_fit->add_option("--w", fs.w, "step density split");
    cmd_fit->add_option("--ambient-pad", fs.pad, "extra zero coordinates");
    cmd_fit->add_option("--n", fs_n_text, "comma-separated sample counts")->required();
    cmd_fit->add_option("--trials", fs_trials, "trials per N")->capture_default_str();
    cmd_fit->add_option("--alpha", fs_alpha, "threshold fraction")->capture_default_str();
    cmd_fit->add_option("--seed", fs.seed, "base seed")->required();
    cmd_fit->add_option("--out", fs_out, "JSON report path or -")->capture_default_str();
    cmd_fit->add_option("--csv", fs_csv, "write (n,eps_mean,eps_std) CSV");

    // invariance
    std::string inv_in, inv_out = "-", inv_fmt, inv_map = "identity", inv_matrix;
    double inv_factor = 1.0, inv_alpha = 0.5;
    auto* cmd_inv = app.add_subcommand("invariance", "bi-Lipschitz threshold sandwich check");
    cmd_inv->add_option("--in", inv_in, "input cloud")->required();
    cmd_inv->add_option("--format", inv_fmt, "csv|binary (default: by extension)");
    cmd_inv->add_option("--map", inv_map, "identity|scale|linear")->capture_default_str();
    cmd_inv->add_option("--factor", inv_factor, "scale factor");
    cmd_inv->add_option("--matrix", inv_matrix, "linear map rows, e.g. \"0,1;1,0\"");
    cmd_inv->add_option("--alpha", inv_alpha, "threshold fraction")->capture_default_str();
    cmd_inv->add_option("--out", inv_out, "JSON report path or -")->capture_default_str();

    // loss
    std::string ls_real, ls_fake, ls_out = "-";
    std::size_t ls_k = 0;
    bool ls_grad = false;
    auto* cmd_loss = app.add_subcommand("loss", "sorted-distance matching loss");
    cmd_loss->add_option("--real", ls_real, "reference cloud")->required();
    cmd_loss->add_option("--fake", ls_fake, "generated cloud")->required();
    cmd_loss->add_option("--k", ls_k, "order statistics used (0 = all)")->capture_default_str();
    cmd_loss->add_flag("--grad", ls_grad, "include the gradient matrix in the report");
    cmd_loss->add_option("--out", ls_out, "JSON report path or -")->capture_default_str();

    // expand
    std::string ex_real, ex_fake, ex_out = "-", ex_trace, ex_final;
    std::size_t ex_steps = 500, ex_eval = 10;
    double ex_lr = 5.0, ex_alpha = 0.5;
    auto* cmd_expand = app.add_subcommand("expand", "gradient-descent support expansion demo");
    cmd_expand->add_option("--real", ex_real, "reference cloud")->required();
    cmd_expand->add_option("--fake", ex_fake, "starting cloud (under-covering)")->required();
    cmd_expand->add_option("--steps", ex_steps, "descent steps")->capture_default_str();
    cmd_expand->add_option("--lr", ex_lr, "learning rate")->capture_default_str();
    cmd_expand->add_option("--alpha", ex_alpha, "threshold fraction")->capture_default_str();
    cmd_expand->add_option("--eval-every", ex_eval, "record interval")->capture_default_str();
    cmd_expand->add_option("--trace", ex_trace, "write trace CSV (iter,loss,eps_c,delta_eps)");
    cmd_expand->add_option("--final-out", ex_final, "write the final cloud");
    cmd_expand->add_option("--out", ex_out, "JSON report path or -")->capture_default_str();

    // let --threads / --quiet appear after the subcommand too
    for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; }))
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    Timer timer;
    try {
        if (cmd_gen->parsed()) {
            gen.has_spec = gen_spec_opt->count() > 0;
            if (!gen.has_spec) {
                if (gen.kind.empty()) throw perc::usage_error("gen needs --kind (or --spec)");
                if (gen_n->count() == 0) throw perc::usage_error("gen needs --n");
                if (gen_seed->count() == 0) throw perc::usage_error("gen needs --seed");
            }
            perc::GeneratorSpec spec = spec_from_args(gen);
            perc::PointCloud cloud = perc::generate(spec);
            perc::save_cloud(cloud, gen.out, parse_format(gen.format, gen.out));
            std::cerr << "wrote " << cloud.size() << "x" << cloud.dim() << " cloud to "
                      << gen.out << "\n";
        } else if (cmd_curve->parsed()) {
            perc::PointCloud cloud = perc::load_cloud(in_path, parse_format(fmt, in_path));
            perc::DistanceSpectrum spec = perc::distance_spectrum(cloud, threads);
            if (!spectrum_csv.empty()) perc::write_spectrum_csv(spec, spectrum_csv);
            perc::PercolationCurve curve = perc::percolate(spec, cloud.size());
            if (!grid_text.empty()) {
                auto grid = parse_double_list(grid_text);
                curve = perc::curve_on_grid(curve, grid);
            }
            if (!csv_path.empty()) perc::write_curve_csv(curve, csv_path);
            json report;
            report["report"] = perc::to_json(curve);
            report["manifest"] =
                perc::to_json(make_manifest("curve", cmd_curve, {}, timer.seconds()));
            emit_report(report, out_path);
        } else if (cmd_threshold->parsed()) {
            perc::ThresholdRule rule;
            if (th_rule == "strict-majority")
                rule = perc::ThresholdRule::strict_majority;
            else if (th_rule == "at-least")
                rule = perc::ThresholdRule::at_least;
            else
                throw perc::usage_error("unknown rule '" + th_rule + "'");
            perc::PointCloud cloud = perc::load_cloud(th_in, parse_format(th_fmt, th_in));
            auto est = perc::estimate_threshold(cloud, th_alpha, rule, threads);
            json report;
            report["report"] = perc::to_json(est);
            report["manifest"] =
                perc::to_json(make_manifest("threshold", cmd_threshold, {}, timer.seconds()));
            emit_report(report, th_out);
        } else if (cmd_shift->parsed()) {
            if (sh_resamples > 0 && sh_seed_opt->count() == 0)
                throw perc::usage_error("shift with resamples needs --seed");
            perc::CloudPair pair{perc::load_cloud(sh_real), perc::load_cloud(sh_model)};
            auto rep = perc::percolation_shift(pair, sh_alpha, sh_resamples, sh_subsample,
                                               sh_seed, sh_confidence, threads,
                                               stderr_counter("resample", !quiet));
            json report;
            report["report"] = perc::to_json(rep);
            report["manifest"] = perc::to_json(
                make_manifest("shift", cmd_shift, {sh_seed}, timer.seconds()));
            emit_report(report, sh_out);
        } else if (cmd_fit->parsed()) {
            perc::GeneratorSpec base = spec_from_args(fs);
            auto n_grid = parse_size_list(fs_n_text);
            auto fit = perc::fit_scaling(base, n_grid, fs_trials, fs_alpha, threads,
                                         stderr_counter("trial", !quiet));
            if (!fs_csv.empty()) perc::write_scaling_csv(fit, fs_csv);
            json report;
            report["report"] = perc::to_json(fit);
            report["manifest"] =
                perc::to_json(make_manifest("fit-scaling", cmd_fit, {fs.seed}, timer.seconds()));
            emit_report(report, fs_out);
        } else if (cmd_inv->parsed()) {
            perc::PointMap map;
            if (inv_map == "identity")
                map = perc::PointMap::identity();
            else if (inv_map == "scale")
                map = perc::PointMap::scale(inv_factor);
            else if (inv_map == "linear")
                map = perc::PointMap::linear(parse_matrix(inv_matrix));
            else
                throw perc::usage_error("unknown map '" + inv_map + "'");
            perc::PointCloud cloud = perc::load_cloud(inv_in, parse_format(inv_fmt, inv_in));
            auto rep = perc::invariance_check(cloud, map, inv_alpha, threads);
            json report;
            report["report"] = perc::to_json(rep);
            report["manifest"] =
                perc::to_json(make_manifest("invariance", cmd_inv, {}, timer.seconds()));
            emit_report(report, inv_out);
            if (!rep.lower_ok || !rep.upper_ok) return 3;
        } else if (cmd_loss->parsed()) {
            perc::PointCloud real = perc::load_cloud(ls_real);
            perc::PointCloud fake = perc::load_cloud(ls_fake);
            std::optional<std::size_t> k;
            if (ls_k > 0) k = ls_k;
            auto res = perc::topo_loss(real, fake, k, threads);
            json report;
            report["report"] = perc::to_json(res, ls_grad);
            report["manifest"] =
                perc::to_json(make_manifest("loss", cmd_loss, {}, timer.seconds()));
            emit_report(report, ls_out);
        } else if (cmd_expand->parsed()) {
            perc::PointCloud real = perc::load_cloud(ex_real);
            perc::PointCloud fake = perc::load_cloud(ex_fake);
            auto trace =
                perc::expand_demo(real, fake, ex_steps, ex_lr, ex_alpha, ex_eval, threads);
            if (!ex_trace.empty()) perc::write_trace_csv(trace, ex_trace);
            if (!ex_final.empty())
                perc::save_cloud(trace.final_cloud, ex_final,
                                 perc::format_from_path(ex_final));
            json report;
            report["report"] = perc::to_json(trace);
            report["manifest"] =
                perc::to_json(make_manifest("expand", cmd_expand, {}, timer.seconds()));
            emit_report(report, ex_out);
            if (trace.diverged) {
                std::cerr << "expand: descent diverged; aborted with partial trace\n";
                return 3;
            }
        }
    } catch (const perc::usage_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const perc::data_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
