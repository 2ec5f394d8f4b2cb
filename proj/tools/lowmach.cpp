// Command-line front end: run, sweep, audit, dispersion.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure
// (vacuum, blow-up), 4 file IO error.

#include "lowmach/lowmach.hpp"

#include <CLI11.hpp>

#include <glob.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace lowmach;

namespace {

enum Exit { ok = 0, config_error = 2, numerical_error = 3, io_error = 4 };

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<double> parse_eps_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("--eps: cannot parse '" + item + "' as a number");
        }
    }
    if (out.empty()) throw ConfigError("--eps: empty list");
    return out;
}

std::string snapshot_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "snapshot_%05zu.bin", index);
    return buf;
}

// ---------------------------------------------------------------------------

struct RunArgs {
    std::string config;
    std::string out;
    int snapshots_every = 0;
    bool quiet = false;
};

template <class State>
void run_simulation(State s0, const RunConfig& cfg, const fs::path& out, const RunArgs& a) {
    const auto& c = cfg.constitutive;
    const auto times = equispaced_times(cfg.stepper.t_end, cfg.output.samples);
    Table table{run_columns(cfg.regime), {}};
    std::size_t index = 0;
    integrate<State>(std::move(s0), c, cfg.stepper, times, [&](double t, const State& s, double dt) {
        table.rows.push_back(run_row(s, c, t, dt));
        if (a.snapshots_every > 0 && index % std::size_t(a.snapshots_every) == 0)
            write_snapshot(out / snapshot_name(index), s, t);
        if (!a.quiet) {
            const auto& row = table.rows.back();
            const std::size_t total_col = cfg.regime == Regime::compressible ? 6 : 5;
            std::printf("t = %-10.6g dt = %-10.4g energy = %.10g\n", t, dt, row[total_col]);
        }
        ++index;
    });
    write_timeseries(out / "timeseries.csv", table);
}

int cmd_run(const RunArgs& a) {
    RunConfig cfg = load_config(a.config);
    const fs::path out = a.out.empty() ? fs::path(cfg.output.directory) : fs::path(a.out);
    if (a.snapshots_every < 0) throw ConfigError("--snapshots-every must be >= 0");
    ensure_dir(out);
    write_json(out / "config.resolved.json", config_to_json(cfg));

    const TorusGrid g = cfg.grid();
    const auto init = initial_preset(cfg.initial.preset, g, cfg.initial.velocity_amplitude);
    if (cfg.regime == Regime::compressible) {
        auto s0 = well_prepared_initial(init.u0, init.phi0, *cfg.eps, cfg.initial.kappa0, cfg.initial.seed, cfg.model);
        run_simulation(std::move(s0), cfg, out, a);
    } else {
        IncompressibleState s0{leray_project(init.u0.to_spectral()).to_physical(), init.phi0, cfg.model};
        run_simulation(std::move(s0), cfg, out, a);
    }
    if (!a.quiet) std::printf("wrote %s\n", (out / "timeseries.csv").string().c_str());
    return ok;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
    std::string config;
    std::string out;
    std::string eps;
    int parallel = 0;
    bool resolution_check = false;
};

int cmd_sweep(const SweepArgs& a) {
    RunConfig cfg = load_config(a.config);
    if (!a.eps.empty()) cfg.sweep.eps_list = parse_eps_list(a.eps);
    if (a.parallel < 0) throw ConfigError("--parallel must be >= 1");
    if (a.parallel > 0) cfg.sweep.parallel = a.parallel;
    const SweepConfig sc = cfg.sweep_config();
    sc.validate();
    const fs::path out = a.out.empty() ? fs::path(cfg.output.directory) : fs::path(a.out);
    ensure_dir(out);

    const SweepResult r = run_sweep(sc, cfg.constitutive);
    write_timeseries(out / "sweep_trace.csv", sweep_trace_table(r));
    write_timeseries(out / "sweep_summary.csv", sweep_summary_table(r));
    write_timeseries(out / "sweep_slopes.csv", sweep_slope_table(r));
    json meta = sweep_metadata(sc, r);
    meta["config"] = config_to_json(cfg);
    if (a.resolution_check) {
        const double gap = reference_resolution_gap(sc, cfg.constitutive);
        meta["reference_resolution_gap"] = gap;
        std::printf("reference gap n=%d vs n=%d: %.3e\n", sc.n, 2 * sc.n, gap);
    }
    write_json(out / "sweep_meta.json", meta);

    const auto names = sweep_slope_names();
    const std::optional<RateFit>* fits[] = {&r.slopes.err_u,   &r.slopes.err_phi,      &r.slopes.err_combined,
                                            &r.slopes.err_rho, &r.slopes.err_grad_rho, &r.slopes.time_integrated};
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (*fits[i])
            std::printf("%-16s slope %8.4f  r2 %.4f\n", names[i].c_str(), (*fits[i])->slope, (*fits[i])->r2);
        else
            std::printf("%-16s slope   (absent)\n", names[i].c_str());
    }
    if (!r.complete()) {
        for (const auto& rec : r.records)
            if (rec.failed) std::fprintf(stderr, "eps = %g failed: %s\n", rec.eps, rec.failure.c_str());
        return numerical_error;
    }
    return ok;
}

// ---------------------------------------------------------------------------

struct AuditArgs {
    std::string snapshots;
    std::string out;
    std::string config;
};

std::vector<fs::path> expand_glob(const std::string& pattern) {
    glob_t g{};
    const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
    std::vector<fs::path> out;
    if (rc == 0)
        for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    globfree(&g);
    if (rc != 0 && rc != GLOB_NOMATCH) throw IoError("cannot expand '" + pattern + "'");
    if (out.empty()) throw IoError("no snapshots match '" + pattern + "'");
    std::sort(out.begin(), out.end());
    return out;
}

int cmd_audit(const AuditArgs& a) {
    Constitutive c;
    if (!a.config.empty()) c = load_config(a.config).constitutive;
    std::vector<Snapshot> snaps;
    for (const auto& p : expand_glob(a.snapshots)) snaps.push_back(read_snapshot(p));
    std::stable_sort(snaps.begin(), snaps.end(), [](const Snapshot& x, const Snapshot& y) { return x.time < y.time; });
    const Regime regime = snaps.front().compressible() ? Regime::compressible : Regime::incompressible;
    Table table{run_columns(regime), {}};
    for (const auto& s : snaps) {
        if (s.compressible() != (regime == Regime::compressible))
            throw IoError("audit: snapshots mix compressible and incompressible states");
        // Step sizes are not stored in snapshots.
        table.rows.push_back(s.compressible() ? run_row(s.comp(), c, s.time, 0.0) : run_row(s.inc(), c, s.time, 0.0));
    }
    const fs::path out = a.out.empty() ? fs::path("audit.csv") : fs::path(a.out);
    if (out.has_parent_path()) ensure_dir(out.parent_path());
    write_timeseries(out, table);
    std::printf("audited %zu snapshots -> %s\n", snaps.size(), out.string().c_str());
    return ok;
}

// ---------------------------------------------------------------------------

struct DispersionArgs {
    double eps = 0.1;
    int k = 1;
    std::string config;
    std::string out;
};

int cmd_dispersion(const DispersionArgs& a) {
    RunConfig cfg;
    if (!a.config.empty()) cfg = load_config(a.config);
    const auto r = acoustic_dispersion_check(a.eps, a.k, cfg.dispersion.amplitude_factor * a.eps * a.eps,
                                             cfg.constitutive, cfg.dispersion_config());
    std::printf("eps %g k %d: measured %.8f predicted %.8f relative error %.3e (%d zero crossings)\n", a.eps, a.k,
                r.measured, r.predicted, r.relative_error(), r.crossings);
    if (!a.out.empty()) {
        const fs::path out(a.out);
        if (out.has_parent_path()) ensure_dir(out.parent_path());
        write_timeseries(out, Table{{"eps", "k", "measured", "predicted", "relative_error", "crossings"},
                                    {{a.eps, double(a.k), r.measured, r.predicted, r.relative_error(),
                                      double(r.crossings)}}});
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Compressible and incompressible Navier-Stokes/phase-field solver on the periodic torus"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "integrate one configured simulation");
    run->add_option("--config", run_args.config, "JSON run configuration")->required();
    run->add_option("--out", run_args.out, "output directory (overrides output.directory)");
    run->add_option("--snapshots-every", run_args.snapshots_every, "write a snapshot every N samples (0: none)");
    run->add_flag("--quiet", run_args.quiet, "suppress progress output");

    SweepArgs sweep_args;
    auto* sweep = app.add_subcommand("sweep", "run the eps sweep against the incompressible reference");
    sweep->add_option("--config", sweep_args.config, "JSON run configuration")->required();
    sweep->add_option("--out", sweep_args.out, "output directory");
    sweep->add_option("--eps", sweep_args.eps, "comma-separated eps list, e.g. \"0.2,0.1\"");
    sweep->add_option("--parallel", sweep_args.parallel, "number of eps values run concurrently");
    sweep->add_flag("--resolution-check", sweep_args.resolution_check,
                    "also compare the incompressible reference against a run at twice the resolution");

    AuditArgs audit_args;
    auto* audit = app.add_subcommand("audit", "recompute diagnostics from stored snapshots");
    audit->add_option("--snapshots", audit_args.snapshots, "glob pattern of snapshot files")->required();
    audit->add_option("--out", audit_args.out, "CSV output path");
    audit->add_option("--config", audit_args.config, "configuration supplying constitutive parameters");

    DispersionArgs disp_args;
    auto* disp = app.add_subcommand("dispersion", "measure the acoustic frequency of one density mode");
    disp->add_option("--eps", disp_args.eps, "Mach parameter")->required();
    disp->add_option("--k", disp_args.k, "wavenumber")->required();
    disp->add_option("--config", disp_args.config, "configuration supplying grid, constitutive and stepper");
    disp->add_option("--out", disp_args.out, "CSV output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : config_error;
    }

    try {
        if (*run) return cmd_run(run_args);
        if (*sweep) return cmd_sweep(sweep_args);
        if (*audit) return cmd_audit(audit_args);
        if (*disp) return cmd_dispersion(disp_args);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return config_error;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return numerical_error;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return io_error;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return config_error;
    }
    return ok;
}
