#pragma once

#include "lowmach/constitutive.hpp"
#include "lowmach/diagnostics.hpp"
#include "lowmach/dynamics.hpp"
#include "lowmach/errors.hpp"
#include "lowmach/harness.hpp"
#include "lowmach/state.hpp"
#include "lowmach/timestepper.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace lowmach {

using json = nlohmann::json;

enum class Regime { compressible, incompressible };

inline const char* to_string(Regime r) { return r == Regime::compressible ? "compressible" : "incompressible"; }

// ---------------------------------------------------------------------------
// Run configuration

struct InitialConfig {
    std::string preset = "taylor_green_bubble";
    double kappa0 = 0.1;
    std::uint64_t seed = 1;
    double velocity_amplitude = 1.0;
};

struct OutputConfig {
    std::string directory = "out";
    int samples = 10;  // equispaced sampling intervals on [0, t_end]
};

struct SweepBlock {
    std::vector<double> eps_list{0.4, 0.2, 0.1, 0.05};
    double t_end = 0.5;
    int samples = 10;
    int s_index = 3;
    int parallel = 1;
};

struct DispersionBlock {
    double amplitude_factor = 1e-3;  // amplitude = factor * eps^2
    double periods = 6.0;
    int samples_per_period = 100;
};

struct RunConfig {
    ModelKind model = ModelKind::cahn_hilliard;
    Regime regime = Regime::compressible;
    int dim = 2;
    int n = 64;
    Constitutive constitutive;
    StepperConfig stepper;
    std::optional<double> eps;
    InitialConfig initial;
    OutputConfig output;
    SweepBlock sweep;
    DispersionBlock dispersion;

    TorusGrid grid() const { return TorusGrid(dim, n); }

    SweepConfig sweep_config() const {
        SweepConfig s;
        s.model = model;
        s.eps_list = sweep.eps_list;
        s.dim = dim;
        s.n = n;
        s.t_end = sweep.t_end;
        s.sample_times = equispaced_times(sweep.t_end, sweep.samples);
        s.s_index = sweep.s_index;
        s.initial = initial.preset;
        s.velocity_amplitude = initial.velocity_amplitude;
        s.kappa0 = initial.kappa0;
        s.seed = initial.seed;
        s.stepper = stepper;
        s.parallel = sweep.parallel;
        return s;
    }

    DispersionConfig dispersion_config() const {
        DispersionConfig d;
        d.dim = dim;
        d.n = n;
        d.periods = dispersion.periods;
        d.samples_per_period = dispersion.samples_per_period;
        d.stepper = stepper;
        return d;
    }
};

namespace detail {

// Strict reader over one JSON object: every key must be consumed.
class ObjectReader {
  public:
    ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(loc() + ": expected an object");
    }

    template <class T>
    void opt(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        out = convert<T>(j_.at(key), path(key));
    }

    template <class T>
    void req(const char* key, T& out) {
        if (!j_.contains(key)) throw ConfigError(loc() + ": missing required key \"" + key + "\"");
        opt(key, out);
    }

    std::optional<ObjectReader> child(const char* key) {
        seen_.insert(key);
        if (!j_.contains(key)) return std::nullopt;
        return ObjectReader(j_.at(key), path(key));
    }

    bool has(const char* key) const { return j_.contains(key); }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(loc() + ": unknown key \"" + it.key() + "\" at " + path(it.key()));
    }

    std::string path(const std::string& key) const { return where_ + "/" + key; }
    std::string loc() const { return where_.empty() ? "config root" : where_; }

  private:
    template <class T>
    static T convert(const json& v, const std::string& at) {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError("type mismatch at " + at + ": expected boolean");
            return v.get<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError("type mismatch at " + at + ": expected string");
            return v.get<std::string>();
        } else if constexpr (std::is_same_v<T, int>) {
            if (!v.is_number_integer()) throw ConfigError("type mismatch at " + at + ": expected integer");
            return v.get<int>();
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            if (!v.is_number_unsigned()) throw ConfigError("type mismatch at " + at + ": expected nonnegative integer");
            return v.get<std::uint64_t>();
        } else if constexpr (std::is_same_v<T, double>) {
            if (!v.is_number()) throw ConfigError("type mismatch at " + at + ": expected number");
            return v.get<double>();
        } else if constexpr (std::is_same_v<T, std::optional<double>>) {
            if (v.is_null()) return std::nullopt;
            if (!v.is_number()) throw ConfigError("type mismatch at " + at + ": expected number or null");
            return v.get<double>();
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
            if (!v.is_array()) throw ConfigError("type mismatch at " + at + ": expected array of numbers");
            std::vector<double> out;
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (!v[i].is_number())
                    throw ConfigError("type mismatch at " + at + "/" + std::to_string(i) + ": expected number");
                out.push_back(v[i].get<double>());
            }
            return out;
        } else {
            static_assert(sizeof(T) == 0, "unsupported config type");
        }
    }

    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

inline ModelKind parse_model(const std::string& s, const std::string& at) {
    if (s == "nsch") return ModelKind::cahn_hilliard;
    if (s == "nsac") return ModelKind::allen_cahn;
    throw ConfigError("invalid value \"" + s + "\" at " + at + ": expected \"nsch\" or \"nsac\"");
}

inline Regime parse_regime(const std::string& s, const std::string& at) {
    if (s == "compressible") return Regime::compressible;
    if (s == "incompressible") return Regime::incompressible;
    throw ConfigError("invalid value \"" + s + "\" at " + at + ": expected \"compressible\" or \"incompressible\"");
}

}  // namespace detail

/// Parses and validates a run configuration. Unknown keys, type mismatches
/// and missing required keys raise ConfigError naming the JSON path.
inline RunConfig parse_config(const json& root) {
    RunConfig cfg;
    detail::ObjectReader r(root, "");

    std::string model = "nsch", regime = "compressible";
    r.req("model", model);
    r.opt("regime", regime);
    cfg.model = detail::parse_model(model, "/model");
    cfg.regime = detail::parse_regime(regime, "/regime");

    if (auto g = r.child("grid")) {
        g->opt("dim", cfg.dim);
        g->opt("n", cfg.n);
        g->finish();
    }

    if (auto c = r.child("constitutive")) {
        auto& k = cfg.constitutive;
        std::string visc = "constant";
        c->opt("gamma", k.gamma);
        c->opt("pressure_coeff", k.pressure_coeff);
        c->opt("viscosity", visc);
        if (visc == "constant") {
            k.visc_kind = ViscosityKind::constant;
        } else if (visc == "affine") {
            k.visc_kind = ViscosityKind::affine;
        } else {
            throw ConfigError("invalid value \"" + visc + "\" at /constitutive/viscosity: expected \"constant\" or \"affine\"");
        }
        c->opt("nu0", k.nu0);
        c->opt("nu_rho", k.nu_rho);
        c->opt("nu_phi", k.nu_phi);
        c->opt("eta0", k.eta0);
        c->opt("eta_rho", k.eta_rho);
        c->opt("eta_phi", k.eta_phi);
        c->opt("nu_star", k.nu_star);
        c->opt("nu_upper", k.nu_upper);
        c->opt("eta_star", k.eta_star);
        c->opt("eta_upper", k.eta_upper);
        c->finish();
    }

    if (auto s = r.child("stepper")) {
        std::string scheme = to_string(cfg.stepper.scheme);
        s->opt("scheme", scheme);
        try {
            cfg.stepper.scheme = parse_scheme(scheme);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string(e.what()) + " at /stepper/scheme");
        }
        s->opt("cfl", cfg.stepper.cfl);
        s->opt("dt_override", cfg.stepper.dt_override);
        s->opt("t_end", cfg.stepper.t_end);
        s->opt("dealias_each_stage", cfg.stepper.dealias_each_stage);
        if (auto p = s->child("picard")) {
            p->opt("enabled", cfg.stepper.picard.enabled);
            p->opt("tol", cfg.stepper.picard.tol);
            p->opt("max_iter", cfg.stepper.picard.max_iter);
            p->finish();
        }
        s->finish();
    }

    if (cfg.regime == Regime::compressible) {
        double eps = 0.0;
        r.req("eps", eps);
        cfg.eps = eps;
    } else if (r.has("eps")) {
        throw ConfigError("key \"eps\" at /eps is only valid for the compressible regime");
    }

    if (auto i = r.child("initial")) {
        i->opt("preset", cfg.initial.preset);
        i->opt("kappa0", cfg.initial.kappa0);
        i->opt("seed", cfg.initial.seed);
        i->opt("velocity_amplitude", cfg.initial.velocity_amplitude);
        i->finish();
    }

    if (auto o = r.child("output")) {
        o->opt("directory", cfg.output.directory);
        o->opt("samples", cfg.output.samples);
        o->finish();
    }

    if (auto s = r.child("sweep")) {
        s->opt("eps_list", cfg.sweep.eps_list);
        s->opt("t_end", cfg.sweep.t_end);
        s->opt("samples", cfg.sweep.samples);
        s->opt("s_index", cfg.sweep.s_index);
        s->opt("parallel", cfg.sweep.parallel);
        s->finish();
    }

    if (auto d = r.child("dispersion")) {
        d->opt("amplitude_factor", cfg.dispersion.amplitude_factor);
        d->opt("periods", cfg.dispersion.periods);
        d->opt("samples_per_period", cfg.dispersion.samples_per_period);
        d->finish();
    }
    r.finish();

    // Semantic checks.
    try {
        TorusGrid(cfg.dim, cfg.n);
        cfg.constitutive.validate();
        cfg.stepper.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (cfg.eps && !(*cfg.eps > 0.0)) throw ConfigError("/eps must be > 0");
    if (!is_known_preset(cfg.initial.preset))
        throw ConfigError("unknown preset \"" + cfg.initial.preset + "\" at /initial/preset");
    if (cfg.initial.kappa0 < 0.0) throw ConfigError("/initial/kappa0 must be >= 0");
    if (cfg.output.samples < 1) throw ConfigError("/output/samples must be >= 1");
    if (cfg.sweep.samples < 1) throw ConfigError("/sweep/samples must be >= 1");
    if (cfg.regime == Regime::incompressible && cfg.dim != 2)
        throw ConfigError("/grid/dim must be 2 for the incompressible regime");
    if (!(cfg.dispersion.amplitude_factor > 0.0 && cfg.dispersion.amplitude_factor <= 1e-3))
        throw ConfigError("/dispersion/amplitude_factor must lie in (0, 1e-3]");
    if (cfg.dispersion.samples_per_period < 4) throw ConfigError("/dispersion/samples_per_period must be >= 4");
    return cfg;
}

/// Fully resolved configuration; parse_config(config_to_json(c)) == c.
inline json config_to_json(const RunConfig& c) {
    const auto& k = c.constitutive;
    json j{{"model", to_string(c.model)},
           {"regime", to_string(c.regime)},
           {"grid", {{"dim", c.dim}, {"n", c.n}}},
           {"constitutive",
            {{"gamma", k.gamma},
             {"pressure_coeff", k.pressure_coeff},
             {"viscosity", k.constant_viscosity() ? "constant" : "affine"},
             {"nu0", k.nu0},
             {"nu_rho", k.nu_rho},
             {"nu_phi", k.nu_phi},
             {"eta0", k.eta0},
             {"eta_rho", k.eta_rho},
             {"eta_phi", k.eta_phi},
             {"nu_star", k.nu_star},
             {"nu_upper", k.nu_upper},
             {"eta_star", k.eta_star},
             {"eta_upper", k.eta_upper}}},
           {"stepper",
            {{"scheme", to_string(c.stepper.scheme)},
             {"cfl", c.stepper.cfl},
             {"dt_override", c.stepper.dt_override ? json(*c.stepper.dt_override) : json(nullptr)},
             {"t_end", c.stepper.t_end},
             {"dealias_each_stage", c.stepper.dealias_each_stage},
             {"picard",
              {{"enabled", c.stepper.picard.enabled},
               {"tol", c.stepper.picard.tol},
               {"max_iter", c.stepper.picard.max_iter}}}}},
           {"initial",
            {{"preset", c.initial.preset},
             {"kappa0", c.initial.kappa0},
             {"seed", c.initial.seed},
             {"velocity_amplitude", c.initial.velocity_amplitude}}},
           {"output", {{"directory", c.output.directory}, {"samples", c.output.samples}}},
           {"sweep",
            {{"eps_list", c.sweep.eps_list},
             {"t_end", c.sweep.t_end},
             {"samples", c.sweep.samples},
             {"s_index", c.sweep.s_index},
             {"parallel", c.sweep.parallel}}},
           {"dispersion",
            {{"amplitude_factor", c.dispersion.amplitude_factor},
             {"periods", c.dispersion.periods},
             {"samples_per_period", c.dispersion.samples_per_period}}}};
    if (c.eps) j["eps"] = *c.eps;
    return j;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    try {
        return parse_config(j);
    } catch (const ConfigError& e) {
        throw ConfigError("config '" + path.string() + "': " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Snapshots

inline constexpr int snapshot_schema_version = 1;

struct Snapshot {
    double time = 0.0;
    std::variant<CompressibleState, IncompressibleState> state;

    bool compressible() const { return std::holds_alternative<CompressibleState>(state); }
    const CompressibleState& comp() const { return std::get<CompressibleState>(state); }
    const IncompressibleState& inc() const { return std::get<IncompressibleState>(state); }
};

namespace detail {

inline std::vector<std::string> field_names(Regime r, int dim) {
    static const char* axes[] = {"x", "y"};
    std::vector<std::string> names;
    if (r == Regime::compressible) {
        names.push_back("rho");
        for (int a = 0; a < dim; ++a) names.push_back(std::string("mom_") + axes[a]);
        names.push_back("q");
    } else {
        for (int a = 0; a < dim; ++a) names.push_back(std::string("u_") + axes[a]);
        names.push_back("phi");
    }
    return names;
}

inline std::uint64_t to_little_endian(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        std::uint64_t r = 0;
        for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
        return r;
    }
    return v;
}

inline void write_payload(std::ostream& out, const Field& f) {
    const Field p = f.to_physical();
    for (double v : p.values()) {
        const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(v));
        char buf[8];
        std::memcpy(buf, &bits, 8);
        out.write(buf, 8);
    }
}

inline Field read_payload(const char* data, const TorusGrid& g) {
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, data + 8 * i, 8);
        v[i] = std::bit_cast<double>(to_little_endian(bits));
    }
    return Field::from_values(g, std::move(v));
}

inline void write_snapshot_impl(const std::filesystem::path& path, const json& header, const std::vector<Field>& fields) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open snapshot '" + path.string() + "' for writing");
    out << header.dump() << '\n';
    for (const auto& f : fields) write_payload(out, f);
    out.flush();
    if (!out) throw IoError("failed writing snapshot '" + path.string() + "'");
}

}  // namespace detail

inline void write_snapshot(const std::filesystem::path& path, const CompressibleState& s, double time) {
    const int d = s.grid().dim();
    json h{{"schema_version", snapshot_schema_version},
           {"time", time},
           {"model", to_string(s.model)},
           {"regime", "compressible"},
           {"eps", s.eps},
           {"grid", {{"dim", d}, {"n", s.grid().n()}}},
           {"fields", detail::field_names(Regime::compressible, d)}};
    std::vector<Field> f{s.rho};
    for (const auto& m : s.mom) f.push_back(m);
    f.push_back(s.q);
    detail::write_snapshot_impl(path, h, f);
}

inline void write_snapshot(const std::filesystem::path& path, const IncompressibleState& s, double time) {
    const int d = s.grid().dim();
    json h{{"schema_version", snapshot_schema_version},
           {"time", time},
           {"model", to_string(s.model)},
           {"regime", "incompressible"},
           {"eps", nullptr},
           {"grid", {{"dim", d}, {"n", s.grid().n()}}},
           {"fields", detail::field_names(Regime::incompressible, d)}};
    std::vector<Field> f;
    for (const auto& u : s.u) f.push_back(u);
    f.push_back(s.phi);
    detail::write_snapshot_impl(path, h, f);
}

inline Snapshot read_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open snapshot '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw IoError("snapshot '" + path.string() + "': missing header line");
    const std::size_t payload_offset = line.size() + 1;
    json h;
    try {
        h = json::parse(line);
    } catch (const json::parse_error& e) {
        throw IoError("snapshot '" + path.string() + "': malformed header: " + e.what());
    }
    auto bad = [&](const std::string& what) { return IoError("snapshot '" + path.string() + "': " + what); };
    try {
        const int version = h.at("schema_version").get<int>();
        if (version != snapshot_schema_version)
            throw bad("unsupported schema_version " + std::to_string(version) + " (this build reads version " +
                      std::to_string(snapshot_schema_version) + ")");
        const double time = h.at("time").get<double>();
        const ModelKind model = detail::parse_model(h.at("model").get<std::string>(), "header model");
        const Regime regime = detail::parse_regime(h.at("regime").get<std::string>(), "header regime");
        const int dim = h.at("grid").at("dim").get<int>();
        const int n = h.at("grid").at("n").get<int>();
        const auto names = h.at("fields").get<std::vector<std::string>>();
        if (names != detail::field_names(regime, dim)) throw bad("unexpected field list in header");
        const TorusGrid g(dim, n);

        std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        const std::size_t expected = names.size() * g.size() * 8;
        if (payload.size() != expected)
            throw bad("payload " + std::string(payload.size() < expected ? "truncated" : "too long") + ": expected " +
                      std::to_string(expected) + " bytes, found " + std::to_string(payload.size()) +
                      " (payload starts at byte offset " + std::to_string(payload_offset) + ", data ends at byte " +
                      std::to_string(payload_offset + payload.size()) + ")");

        std::vector<Field> f;
        for (std::size_t i = 0; i < names.size(); ++i) f.push_back(detail::read_payload(payload.data() + 8 * i * g.size(), g));
        Snapshot snap;
        snap.time = time;
        if (regime == Regime::compressible) {
            std::vector<Field> m(f.begin() + 1, f.begin() + 1 + dim);
            snap.state = CompressibleState{h.at("eps").get<double>(), f[0], VectorField(std::move(m)), f[1 + dim], model};
        } else {
            std::vector<Field> u(f.begin(), f.begin() + dim);
            snap.state = IncompressibleState{VectorField(std::move(u)), f[dim], model};
        }
        return snap;
    } catch (const json::exception& e) {
        throw bad(std::string("malformed header: ") + e.what());
    } catch (const ConfigError& e) {
        throw bad(std::string("malformed header: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw bad(std::string("malformed header: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// CSV

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Writes one header line and one line per row with 17 significant digits.
/// Any non-finite value aborts before the file is touched.
inline void write_timeseries(const std::filesystem::path& path, const Table& t) {
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (t.rows[r].size() != t.columns.size())
            throw std::invalid_argument("write_timeseries: row " + std::to_string(r) + " has " +
                                        std::to_string(t.rows[r].size()) + " values for " +
                                        std::to_string(t.columns.size()) + " columns");
        for (std::size_t c = 0; c < t.columns.size(); ++c)
            if (!std::isfinite(t.rows[r][c]))
                throw NumericalError("write_timeseries: non-finite value in column '" + t.columns[c] + "' at row " +
                                     std::to_string(r) + "; nothing written to '" + path.string() + "'");
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
    out << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_double(row[c]);
        out << '\n';
    }
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

// Column sets.

inline std::vector<std::string> run_columns(Regime r) {
    if (r == Regime::compressible)
        return {"time", "dt", "kinetic", "internal", "gradient", "potential", "total", "dissipation",
                "mass", "phase_mass", "rho_min", "rho_max", "div_u_max"};
    return {"time", "dt", "kinetic", "gradient", "potential", "total", "dissipation", "phase_mass", "div_u_max"};
}

inline std::vector<double> run_row(const CompressibleState& s, const Constitutive& c, double t, double dt) {
    const auto e = energy_compressible(s, c, t);
    const Field rho = s.rho.to_physical();
    return {t, dt, e.kinetic, e.internal, e.gradient, e.potential, e.total, e.dissipation, integrate(s.rho),
            integrate(s.q), rho.min(), rho.max(), divergence(primitives(s).first).to_physical().max_abs()};
}

inline std::vector<double> run_row(const IncompressibleState& s, const Constitutive& c, double t, double dt) {
    const auto e = energy_incompressible(s, c, t);
    return {t,           dt, e.kinetic, e.gradient, e.potential, e.total, e.dissipation, integrate(s.phi),
            divergence(s.u).to_physical().max_abs()};
}

inline Table sweep_trace_table(const SweepResult& r) {
    Table t{{"eps", "time", "err_u", "err_phi", "err_rho", "err_grad_rho", "integrand", "distance", "modulated_full"}, {}};
    for (const auto& rec : r.records)
        for (const auto& s : rec.trace)
            t.rows.push_back({rec.eps, s.time, s.err_u, s.err_phi, s.err_rho, s.err_grad_rho, s.integrand, s.distance,
                              s.modulated_full});
    return t;
}

inline Table sweep_summary_table(const SweepResult& r) {
    Table t{{"eps", "failed", "err_u", "err_phi", "err_combined", "err_rho", "err_grad_rho", "time_integrated",
             "distance_final"},
            {}};
    for (const auto& rec : r.records)
        t.rows.push_back({rec.eps, rec.failed ? 1.0 : 0.0, rec.err_u, rec.err_phi, rec.err_combined, rec.err_rho,
                          rec.err_grad_rho, rec.time_integrated, rec.trace.empty() ? 0.0 : rec.trace.back().distance});
    return t;
}

/// Slopes table; family index follows sweep_slope_names().
inline std::vector<std::string> sweep_slope_names() {
    return {"err_u", "err_phi", "err_combined", "err_rho", "err_grad_rho", "time_integrated"};
}

inline Table sweep_slope_table(const SweepResult& r) {
    Table t{{"family", "slope", "intercept", "r2"}, {}};
    const std::optional<RateFit>* fits[] = {&r.slopes.err_u,   &r.slopes.err_phi,      &r.slopes.err_combined,
                                            &r.slopes.err_rho, &r.slopes.err_grad_rho, &r.slopes.time_integrated};
    for (std::size_t i = 0; i < 6; ++i)
        if (*fits[i]) t.rows.push_back({double(i), (*fits[i])->slope, (*fits[i])->intercept, (*fits[i])->r2});
    return t;
}

/// Describes how the sweep tables were produced.
inline json sweep_metadata(const SweepConfig& cfg, const SweepResult& r) {
    json families = json::array();
    for (const auto& n : sweep_slope_names()) families.push_back(n);
    const bool ch = cfg.model == ModelKind::cahn_hilliard;
    return json{{"model", to_string(cfg.model)},
                {"eps_list", cfg.eps_list},
                {"grid", {{"dim", cfg.dim}, {"n", cfg.n}}},
                {"t_end", cfg.t_end},
                {"sample_times", r.sample_times},
                {"sup_in_time", "maximum over sample_times, not a continuous supremum"},
                {"s_index", cfg.s_index},
                {"norms",
                 {{"err_u", "squared L2"},
                  {"err_phi", ch ? "squared H1" : "squared H2"},
                  {"err_rho", "squared H^s"},
                  {"err_grad_rho", ch ? "squared H^s of the gradient" : "squared H^(s-2) of the gradient"},
                  {"time_integrated", "trapezoid rule over sample_times of squared H1 velocity plus squared H3 phase"}}},
                {"slope_families", families},
                {"scheme", to_string(cfg.stepper.scheme)},
                {"cfl", cfg.stepper.cfl},
                {"seed", cfg.seed},
                {"kappa0", cfg.kappa0},
                {"initial", cfg.initial},
                {"failed_eps", r.failed_eps()}};
}

}  // namespace lowmach
