#pragma once

// Experiment driver: a flat key = value configuration, validation with line
// numbers, and dispatch to the library operations with CSV output.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccnet/dynamics.hpp"
#include "ccnet/resolvent.hpp"
#include "ccnet/spectral.hpp"

#ifndef CCNET_VERSION
#define CCNET_VERSION "unknown"
#endif

namespace ccnet {

enum class Experiment { unitarity, spectrum, gaps, moments, correlator, contraction, spread, strip };

inline constexpr Experiment kExperiments[] = {Experiment::unitarity, Experiment::spectrum,    Experiment::gaps,
                                              Experiment::moments,   Experiment::correlator,  Experiment::contraction,
                                              Experiment::spread,    Experiment::strip};

inline std::string to_string(Experiment e) {
    switch (e) {
        case Experiment::unitarity: return "unitarity";
        case Experiment::spectrum: return "spectrum";
        case Experiment::gaps: return "gaps";
        case Experiment::moments: return "moments";
        case Experiment::correlator: return "correlator";
        case Experiment::contraction: return "contraction";
        case Experiment::spread: return "spread";
        case Experiment::strip: return "strip";
    }
    return "?";
}

inline std::optional<Experiment> parse_experiment(std::string_view text) {
    for (auto e : kExperiments) {
        if (to_string(e) == text) return e;
    }
    return std::nullopt;
}

enum class Observable { correlator_decay, spread };

inline std::string to_string(Observable o) { return o == Observable::spread ? "spread" : "correlator_decay"; }

inline std::optional<Observable> parse_observable(std::string_view text) {
    if (text == "correlator_decay") return Observable::correlator_decay;
    if (text == "spread") return Observable::spread;
    return std::nullopt;
}

namespace detail {

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
std::optional<T> parse_number(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace detail

struct ExperimentConfig {
    Experiment experiment = Experiment::gaps;
    double phi = 0.05;
    int L1 = 2;
    int L2 = 2;
    std::optional<Mode> mode;     // unset: box, or torus for correlator/spread, strip for strip
    int length = 64;              // strip length along x
    double s = 0.5;
    std::vector<double> rho;      // empty: 1 for gaps, 1.1 for moments, 1.05 for contraction
    int theta_count = 1;          // θ_k = 2πk / theta_count
    double eta = 0.05;
    double p = 2.0;
    long horizon = 2000;
    std::size_t trials = 200;
    std::size_t seeds = 32;
    std::uint64_t seed = 0;
    unsigned workers = 0;         // 0: default_workers()
    Observable observable = Observable::correlator_decay;
    int fit_dmin = 2;
    int fit_dmax = 8;
    std::string out;

    Mode effective_mode() const {
        if (experiment == Experiment::strip) return Mode::strip_x;
        if (mode) return *mode;
        return experiment == Experiment::correlator || experiment == Experiment::spread ? Mode::torus : Mode::box;
    }

    BoxSpec geometry() const {
        switch (effective_mode()) {
            case Mode::torus: return BoxSpec::torus(L1, L2);
            case Mode::strip_x: return BoxSpec::strip(L2, length);
            case Mode::box: break;
        }
        return BoxSpec::box(L1, L2);
    }

    std::vector<double> rho_values() const {
        if (!rho.empty()) return rho;
        switch (experiment) {
            case Experiment::gaps: return {1.0};
            case Experiment::contraction: return {1.05};
            default: return {1.1};
        }
    }

    std::vector<double> theta_values() const {
        std::vector<double> out;
        for (int k = 0; k < theta_count; ++k) out.push_back(2.0 * std::numbers::pi * k / theta_count);
        return out;
    }

    unsigned worker_count() const { return workers > 0 ? workers : default_workers(); }

    bool operator==(const ExperimentConfig&) const = default;
};

/// Ordered key/value pairs of the text form. Execution-only keys (workers,
/// out) are listed last and are left out of the metadata and hash.
inline std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& c, bool execution = true) {
    using detail::format_double;
    std::string rho;
    for (std::size_t i = 0; i < c.rho.size(); ++i) rho += (i ? ", " : "") + format_double(c.rho[i]);
    std::vector<std::pair<std::string, std::string>> kv{
        {"experiment", to_string(c.experiment)},
        {"phi", format_double(c.phi)},
        {"L1", std::to_string(c.L1)},
        {"L2", std::to_string(c.L2)},
        {"mode", c.mode ? to_string(*c.mode) : "auto"},
        {"length", std::to_string(c.length)},
        {"s", format_double(c.s)},
        {"rho", rho},
        {"theta_count", std::to_string(c.theta_count)},
        {"eta", format_double(c.eta)},
        {"p", format_double(c.p)},
        {"horizon", std::to_string(c.horizon)},
        {"trials", std::to_string(c.trials)},
        {"seeds", std::to_string(c.seeds)},
        {"seed", std::to_string(c.seed)},
        {"observable", to_string(c.observable)},
        {"fit_dmin", std::to_string(c.fit_dmin)},
        {"fit_dmax", std::to_string(c.fit_dmax)},
    };
    if (execution) {
        kv.emplace_back("workers", std::to_string(c.workers));
        kv.emplace_back("out", c.out);
    }
    return kv;
}

inline std::string to_text(const ExperimentConfig& c) {
    std::string out;
    for (const auto& [k, v] : config_entries(c)) out += k + " = " + v + "\n";
    return out;
}

/// Sets one key from its text value; returns an error message on failure.
inline std::optional<std::string> set_config_value(ExperimentConfig& c, const std::string& key, std::string_view raw) {
    using detail::parse_number;
    const auto value = detail::trim(raw);
    auto bad = [&](const char* what) { return std::optional<std::string>("invalid value '" + std::string(value) + "' for " + key + " (" + what + ")"); };
    auto set_double = [&](double& dst) -> std::optional<std::string> {
        const auto v = parse_number<double>(value);
        if (!v) return bad("expected a real number");
        dst = *v;
        return std::nullopt;
    };
    auto set_int = [&](auto& dst) -> std::optional<std::string> {
        const auto v = parse_number<std::remove_reference_t<decltype(dst)>>(value);
        if (!v) return bad("expected an integer");
        dst = *v;
        return std::nullopt;
    };
    if (key == "experiment") {
        const auto e = parse_experiment(value);
        if (!e) return bad("expected unitarity|spectrum|gaps|moments|correlator|contraction|spread|strip");
        c.experiment = *e;
        return std::nullopt;
    }
    if (key == "mode") {
        if (value == "auto") {
            c.mode.reset();
            return std::nullopt;
        }
        try {
            c.mode = parse_mode(std::string(value));
        } catch (const GeometryError&) {
            return bad("expected auto|box|torus|strip");
        }
        return std::nullopt;
    }
    if (key == "observable") {
        const auto o = parse_observable(value);
        if (!o) return bad("expected correlator_decay|spread");
        c.observable = *o;
        return std::nullopt;
    }
    if (key == "rho") {
        std::vector<double> out;
        std::string_view rest = value;
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            const auto v = parse_number<double>(rest.substr(0, comma));
            if (!v) return bad("expected a comma-separated list of reals");
            out.push_back(*v);
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
            if (detail::trim(rest).empty()) return bad("trailing comma");
        }
        c.rho = std::move(out);
        return std::nullopt;
    }
    if (key == "out") {
        c.out = std::string(value);
        return std::nullopt;
    }
    if (key == "phi") return set_double(c.phi);
    if (key == "s") return set_double(c.s);
    if (key == "eta") return set_double(c.eta);
    if (key == "p") return set_double(c.p);
    if (key == "L1") return set_int(c.L1);
    if (key == "L2") return set_int(c.L2);
    if (key == "length") return set_int(c.length);
    if (key == "theta_count") return set_int(c.theta_count);
    if (key == "horizon") return set_int(c.horizon);
    if (key == "trials") return set_int(c.trials);
    if (key == "seeds") return set_int(c.seeds);
    if (key == "seed") return set_int(c.seed);
    if (key == "workers") return set_int(c.workers);
    if (key == "fit_dmin") return set_int(c.fit_dmin);
    if (key == "fit_dmax") return set_int(c.fit_dmax);
    return "unknown key '" + key + "'";
}

struct ConfigViolation {
    std::string key;
    std::string message;
};

/// First range violation, checked before any computation.
inline std::optional<ConfigViolation> check_config(const ExperimentConfig& c) {
    auto fail = [](std::string key, std::string msg) { return std::optional<ConfigViolation>({std::move(key), std::move(msg)}); };
    const Experiment e = c.experiment;
    if (!std::isfinite(c.phi)) return fail("phi", "phi must be finite");
    if (e != Experiment::strip && c.L1 < 1) return fail("L1", "L1 must be >= 1");
    if (c.L2 < 1) return fail("L2", "L2 must be >= 1");
    if (c.length < 4 || c.length % 2 != 0) return fail("length", "length must be even and >= 4");
    if (!(c.s > 0.0 && c.s < 1.0)) return fail("s", "s must lie in (0, 1)");
    for (double r : c.rho) {
        if (!(r > 0.0) || !std::isfinite(r)) return fail("rho", "rho values must be positive and finite");
    }
    if (c.theta_count < 1) return fail("theta_count", "theta_count must be >= 1");
    if (!(c.eta > 0.0) || !std::isfinite(c.eta)) return fail("eta", "eta must be positive and finite");
    if (!(c.p >= 0.0) || !std::isfinite(c.p)) return fail("p", "p must be nonnegative and finite");
    if (c.horizon < 0) return fail("horizon", "horizon must be >= 0");
    if (c.trials < 1) return fail("trials", "trials must be >= 1");
    if (c.seeds < 1) return fail("seeds", "seeds must be >= 1");
    if (c.fit_dmin < 0 || c.fit_dmax <= c.fit_dmin) return fail("fit_dmax", "need 0 <= fit_dmin < fit_dmax");

    BoxSpec g;
    try {
        g = c.geometry();
    } catch (const GeometryError& err) {
        return fail(e == Experiment::strip || c.mode == Mode::strip_x ? "length" : "L1", err.what());
    }
    const bool dense = e == Experiment::spectrum || e == Experiment::correlator ||
                       (e == Experiment::strip && c.observable == Observable::correlator_decay);
    if (dense && g.site_count() > kDenseLimit) {
        return fail("L1", "dense diagonalization limited to " + std::to_string(kDenseLimit) + " sites, geometry has " +
                              std::to_string(g.site_count()));
    }
    const auto rhos = c.rho_values();
    switch (e) {
        case Experiment::gaps: {
            if (c.trials < 100) return fail("trials", "gap experiment needs at least 100 trials");
            for (double r : rhos) {
                if (std::abs(1.0 - r) > c.eta) return fail("rho", "B_eta(z) misses the unit circle (|1 - rho| > eta)");
                if (arc_measure(r, c.eta) >= 0.25) return fail("eta", "arc measure must stay below 1/4");
            }
            break;
        }
        case Experiment::moments:
        case Experiment::contraction:
            if (e == Experiment::moments && c.trials < 100) return fail("trials", "fractional moments need at least 100 trials");
            for (double r : rhos) {
                if (r == 1.0) return fail("rho", "rho must differ from 1");
            }
            break;
        case Experiment::spread:
            if (g.mode == Mode::box) return fail("mode", "spread runs on a torus or strip");
            break;
        case Experiment::strip:
            if (c.length < 8 * c.L2) return fail("length", "strip length must be >= 8 M (M = L2)");
            break;
        default: break;
    }
    return std::nullopt;
}

inline void validate(const ExperimentConfig& c) {
    if (const auto v = check_config(c)) throw ConfigError(v->key + ": " + v->message);
}

/// Parses the text form. Unknown keys, duplicates, malformed values and range
/// violations raise ConfigError carrying the offending line.
inline ExperimentConfig parse_config(std::istream& is) {
    ExperimentConfig c;
    std::map<std::string, int> lines;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line_no);
        const std::string key(detail::trim(t.substr(0, eq)));
        if (key.empty()) throw ConfigError("missing key before '='", line_no);
        if (lines.count(key)) throw ConfigError("duplicate key '" + key + "' (first set on line " + std::to_string(lines[key]) + ")", line_no);
        if (const auto err = set_config_value(c, key, t.substr(eq + 1))) throw ConfigError(*err, line_no);
        lines[key] = line_no;
    }
    if (const auto v = check_config(c)) {
        const auto it = lines.find(v->key);
        throw ConfigError(v->key + ": " + v->message, it == lines.end() ? 0 : it->second);
    }
    return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is);
}

inline std::uint64_t config_hash(const ExperimentConfig& c) {
    std::string canon;
    for (const auto& [k, v] : config_entries(c, false)) canon += k + "=" + v + "\n";
    return detail::fnv1a64(canon);
}

inline nlohmann::ordered_json metadata(const ExperimentConfig& c) {
    char hash[20];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(c)));
    nlohmann::ordered_json cfg;
    for (const auto& [k, v] : config_entries(c, false)) cfg[k] = v;
    return {{"format", "ccnet-csv/1"}, {"version", CCNET_VERSION}, {"experiment", to_string(c.experiment)},
            {"seed", c.seed},           {"config_hash", hash},      {"config", cfg}};
}

namespace detail {

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}

    template <class... Ts>
    void row(const Ts&... cells) {
        bool first = true;
        ((os_ << (first ? "" : ",") << cell(cells), first = false), ...);
        os_ << '\n';
    }

private:
    static std::string cell(double v) { return format_double(v); }
    static std::string cell(const std::string& v) { return v; }
    static std::string cell(const char* v) { return v; }
    template <class T>
        requires std::is_integral_v<T>
    static std::string cell(T v) { return std::to_string(v); }

    std::ostream& os_;
};

inline nlohmann::ordered_json fit_json(const DecayFit& f) {
    nlohmann::ordered_json bins = nlohmann::ordered_json::array();
    for (const auto& b : f.bins) bins.push_back({{"distance", b.distance}, {"mean", b.mean}, {"std_error", b.std_error}, {"count", b.count}});
    return {{"g", f.g},           {"c", f.c},         {"r2", f.r_squared}, {"ci_low", f.ci_low}, {"ci_high", f.ci_high},
            {"d_min", f.d_min},   {"d_max", f.d_max}, {"bins", bins},      {"warnings", f.warnings}};
}

inline nlohmann::ordered_json plateau_json(const PlateauSummary& p, const std::vector<SpreadSeries>& runs) {
    double drift = 0.0;
    for (const auto& r : runs) drift = std::max(drift, r.max_norm_drift);
    return {{"early_max", p.early_max},     {"late_max", p.late_max}, {"ratio", p.ratio},
            {"median_final", p.median_final}, {"leaked", p.leaked},   {"used", p.used},
            {"max_norm_drift", drift}};
}

/// Binned ensemble means of distance samples, in increasing distance.
inline std::vector<DecayBin> bin_samples(const std::vector<DistanceSample>& samples) {
    std::map<int, std::vector<double>> grouped;
    for (const auto& s : samples) grouped[int(std::lround(s.distance))].push_back(s.value);
    std::vector<DecayBin> out;
    for (const auto& [d, v] : grouped) {
        const auto est = batch_means(v);
        out.push_back({d, est.mean, est.std_error, v.size()});
    }
    return out;
}

}  // namespace detail

struct RunResult {
    std::string csv;                  // '#' metadata line, header row, data rows
    nlohmann::ordered_json summary;   // fits and summary statistics
    std::size_t failed_trials = 0;    // trials dropped after numerical failures
};

/// Data rows of a CSV produced by run(), without the metadata line.
inline std::string data_section(const std::string& csv) {
    std::istringstream is(csv);
    std::string line;
    std::string out;
    while (std::getline(is, line)) {
        if (!line.empty() && line[0] == '#') continue;
        out += line + "\n";
    }
    return out;
}

struct CorrelatorSamples {
    std::vector<DistanceSample> samples;
    std::size_t failed = 0;
};

/// Correlator Q(origin, ·) over disorder samples; `select` maps a site to the
/// distance it contributes at, or nullopt to skip it.
template <class Select>
CorrelatorSamples correlator_samples(double phi, const BoxSpec& g, Site origin, std::size_t trials, std::uint64_t seed,
                                     unsigned workers, Select select) {
    const IndexMap map(g);
    const std::size_t o = map.at(origin);
    std::vector<std::pair<std::size_t, double>> picks;
    for (std::size_t i = 0; i < map.size(); ++i) {
        if (const auto d = select(map.site(i))) picks.emplace_back(i, *d);
    }
    const auto s_op = build_s({phi}, g);
    auto rows = run_trials(trials, workers, [&](std::size_t t) -> std::optional<Eigen::VectorXd> {
        try {
            return correlator_row(diagonalize(build_u(DisorderField::sample(derive_seed(seed, t), g), s_op)), o);
        } catch (const NumericalError&) {
            return std::nullopt;
        }
    });
    CorrelatorSamples out;
    for (const auto& r : rows) {
        if (!r) {
            ++out.failed;
            continue;
        }
        for (const auto& [i, d] : picks) out.samples.push_back({d, (*r)(Eigen::Index(i))});
    }
    return out;
}

struct StripRequest {
    double phi = 0.05;
    int M = 1;
    int length = 64;
    Observable observable = Observable::correlator_decay;
    std::size_t trials = 200;   // disorder samples, or seeds for the spread observable
    std::uint64_t seed = 0;
    unsigned workers = 1;
    int fit_dmin = 2;
    int fit_dmax = 8;
    double p = 2.0;
    long horizon = 2000;
};

struct StripReport {
    BoxSpec strip;
    std::vector<DecayBin> bins;                // correlator means by x-distance
    std::optional<DecayFit> fit;
    std::vector<std::string> fit_errors;
    std::vector<SpreadSeries> runs;            // spread observable
    std::optional<PlateauSummary> plateau;
    std::size_t failed = 0;
};

/// Observables on the strip Z x [-2M+2, 2M+1], periodic in x with the given length.
/// The correlator is sampled at (±d, 0) and (±d, 1) from the origin.
inline StripReport strip_experiment(const StripRequest& req) {
    if (req.M < 1) throw GeometryError("strip height M must be >= 1");
    if (req.length % 2 != 0 || req.length < 8 * req.M) throw GeometryError("strip length must be even and >= 8 M");
    StripReport rep;
    rep.strip = BoxSpec::strip(req.M, req.length);
    if (req.observable == Observable::spread) {
        SpreadRequest sr;
        sr.phi = req.phi;
        sr.torus = rep.strip;
        sr.p = req.p;
        sr.horizon = req.horizon;
        sr.seeds = req.trials;
        sr.seed = req.seed;
        sr.workers = req.workers;
        rep.runs = spread_experiment(sr);
        rep.plateau = summarize_plateau(rep.runs);
        return rep;
    }
    const auto& strip = rep.strip;
    auto cs = correlator_samples(req.phi, strip, {0, 0}, req.trials, req.seed, req.workers, [&](Site s) -> std::optional<double> {
        if (s.n != 0 && s.n != 1) return std::nullopt;
        const int dx = std::abs(strip.displacement({0, 0}, s).m);
        if (dx == 0 && s.n == 1) return std::nullopt;
        return double(dx);
    });
    rep.failed = cs.failed;
    rep.bins = detail::bin_samples(cs.samples);
    try {
        FitOptions opt;
        opt.d_min = req.fit_dmin;
        opt.d_max = req.fit_dmax;
        rep.fit = fit_decay(cs.samples, opt);
    } catch (const NumericalError& err) {
        rep.fit_errors.push_back(err.what());
    }
    return rep;
}

namespace detail {

inline void write_spread_rows(CsvWriter& csv, const std::vector<SpreadSeries>& runs) {
    csv.row("seed", "n", "moment_p", "leakage");
    for (const auto& r : runs) {
        for (std::size_t n = 0; n < r.moment.size(); ++n) csv.row(r.seed, n, r.moment[n], r.leakage[n]);
    }
}

inline void write_bins(CsvWriter& csv, const std::vector<DecayBin>& bins) {
    csv.row("distance", "mean", "std_error", "count");
    for (const auto& b : bins) csv.row(b.distance, b.mean, b.std_error, b.count);
}

}  // namespace detail

/// Runs a validated configuration. Config and geometry problems raise
/// ConfigError; solver failures that sink a whole experiment raise NumericalError.
inline RunResult run(const ExperimentConfig& c) {
    validate(c);
    const BoxSpec g = c.geometry();
    const unsigned workers = c.worker_count();
    const auto rhos = c.rho_values();
    const auto thetas = c.theta_values();

    std::ostringstream os;
    os << "# " << metadata(c).dump() << '\n';
    detail::CsvWriter csv(os);
    RunResult res;
    res.summary = nlohmann::ordered_json::object();

    switch (c.experiment) {
        case Experiment::unitarity: {
            const auto s_op = build_s({c.phi}, g);
            const auto defects = run_trials(c.trials, workers, [&](std::size_t t) {
                return unitarity_defect(build_u(DisorderField::sample(derive_seed(c.seed, t), g), s_op).matrix);
            });
            csv.row("trial", "seed", "dimension", "defect");
            double worst = 0.0;
            for (std::size_t t = 0; t < defects.size(); ++t) {
                csv.row(t, derive_seed(c.seed, t), g.site_count(), defects[t]);
                worst = std::max(worst, defects[t]);
            }
            res.summary["max_defect"] = worst;
            break;
        }
        case Experiment::spectrum: {
            const auto s_op = build_s({c.phi}, g);
            auto spectra = run_trials(c.trials, workers, [&](std::size_t t) -> std::optional<std::pair<std::vector<cplx>, double>> {
                const auto omega = DisorderField::sample(derive_seed(c.seed, t), g);
                try {
                    auto values = diagonalize(build_u(omega, s_op), false).eigenvalues;
                    const double mismatch = c.phi == 0.0 ? spectrum_mismatch(values, phi0_spectrum(omega, g).eigenvalues) : 0.0;
                    return std::pair{std::move(values), mismatch};
                } catch (const NumericalError&) {
                    return std::nullopt;
                }
            });
            csv.row("trial", "seed", "index", "re", "im", "arg");
            double worst = 0.0;
            for (std::size_t t = 0; t < spectra.size(); ++t) {
                if (!spectra[t]) {
                    ++res.failed_trials;
                    continue;
                }
                const auto& values = spectra[t]->first;
                worst = std::max(worst, spectra[t]->second);
                for (std::size_t k = 0; k < values.size(); ++k) {
                    csv.row(t, derive_seed(c.seed, t), k, values[k].real(), values[k].imag(), std::arg(values[k]));
                }
            }
            if (c.phi == 0.0) res.summary["max_phi0_mismatch"] = worst;
            break;
        }
        case Experiment::gaps: {
            csv.row("rho", "theta", "eta", "blocks", "trials", "hit", "no_hit", "std_error", "arc", "exact_no_hit",
                    "no_hit_lower_bound", "small_eta_vol");
            for (double rho : rhos) {
                for (double theta : thetas) {
                    const auto est = gap_probability_mc({std::polar(rho, theta), c.eta, g, c.trials, c.seed, workers});
                    csv.row(rho, theta, c.eta, g.block_count(), est.trials, est.hit, est.no_hit(), est.std_error, est.arc,
                            est.exact_no_hit, est.no_hit_lower_bound, int(est.small_eta_vol));
                }
            }
            break;
        }
        case Experiment::moments: {
            const Site nu{0, 0};
            std::vector<SitePair> pairs{{nu, nu}};
            for (const auto& mu : ray_sites(g, nu, c.fit_dmax)) pairs.push_back({mu, nu});
            csv.row("rho", "theta", "mu_m", "mu_n", "nu_m", "nu_n", "distance", "s", "estimate", "std_error", "trials",
                    "dropped");
            auto fits = nlohmann::ordered_json::array();
            for (double rho : rhos) {
                for (double theta : thetas) {
                    const auto recs = fractional_moment_mc({c.phi, {rho, theta}, c.s, pairs, g, c.trials, c.seed, workers});
                    std::vector<DistanceSample> samples;
                    for (const auto& r : recs) {
                        csv.row(rho, theta, r.mu.m, r.mu.n, r.nu.m, r.nu.n, r.distance, r.s, r.estimate, r.std_error,
                                r.trials, r.dropped);
                        samples.push_back({r.distance, r.estimate});
                        res.failed_trials = std::max(res.failed_trials, r.dropped);
                    }
                    nlohmann::ordered_json entry{{"rho", rho}, {"theta", theta}};
                    try {
                        FitOptions opt;
                        opt.d_min = c.fit_dmin;
                        opt.d_max = c.fit_dmax;
                        opt.min_samples = 1;
                        entry["fit"] = detail::fit_json(fit_decay(samples, opt));
                    } catch (const NumericalError& err) {
                        entry["fit_error"] = err.what();
                    }
                    fits.push_back(entry);
                }
            }
            res.summary["fits"] = fits;
            break;
        }
        case Experiment::correlator: {
            auto cs = correlator_samples(c.phi, g, {0, 0}, c.trials, c.seed, workers, [&](Site s) -> std::optional<double> {
                const double d = g.distance({0, 0}, s);
                if (std::lround(d) > c.fit_dmax) return std::nullopt;
                return d;
            });
            res.failed_trials = cs.failed;
            detail::write_bins(csv, detail::bin_samples(cs.samples));
            try {
                FitOptions opt;
                opt.d_min = c.fit_dmin;
                opt.d_max = c.fit_dmax;
                res.summary["fit"] = detail::fit_json(fit_decay(cs.samples, opt));
            } catch (const NumericalError& err) {
                res.summary["fit_error"] = err.what();
            }
            break;
        }
        case Experiment::contraction: {
            csv.row("rho", "theta", "phi", "lhs", "lhs_std_error", "rhs", "rhs_m", "rhs_n", "q_hat", "trials", "dropped",
                    "ring_size");
            for (double rho : rhos) {
                for (double theta : thetas) {
                    ContractionRequest req;
                    req.phi = c.phi;
                    req.L1 = c.L1;
                    req.L2 = c.L2;
                    req.s = c.s;
                    req.z = {rho, theta};
                    req.trials = c.trials;
                    req.seed = c.seed;
                    req.workers = workers;
                    const auto rep = iteration_contraction_check(req);
                    csv.row(rho, theta, c.phi, rep.lhs, rep.lhs_std_error, rep.rhs, rep.rhs_site.m, rep.rhs_site.n, rep.q_hat,
                            rep.trials, rep.dropped, rep.ring_size);
                    res.failed_trials = std::max(res.failed_trials, rep.dropped);
                }
            }
            break;
        }
        case Experiment::spread: {
            SpreadRequest req;
            req.phi = c.phi;
            req.torus = g;
            req.p = c.p;
            req.horizon = c.horizon;
            req.seeds = c.seeds;
            req.seed = c.seed;
            req.workers = workers;
            const auto runs = spread_experiment(req);
            detail::write_spread_rows(csv, runs);
            res.summary["plateau"] = detail::plateau_json(summarize_plateau(runs), runs);
            break;
        }
        case Experiment::strip: {
            StripRequest req;
            req.phi = c.phi;
            req.M = c.L2;
            req.length = c.length;
            req.observable = c.observable;
            req.trials = c.observable == Observable::spread ? c.seeds : c.trials;
            req.seed = c.seed;
            req.workers = workers;
            req.fit_dmin = c.fit_dmin;
            req.fit_dmax = c.fit_dmax;
            req.p = c.p;
            req.horizon = c.horizon;
            const auto rep = strip_experiment(req);
            res.failed_trials = rep.failed;
            if (rep.plateau) {
                detail::write_spread_rows(csv, rep.runs);
                res.summary["plateau"] = detail::plateau_json(*rep.plateau, rep.runs);
            } else {
                detail::write_bins(csv, rep.bins);
                if (rep.fit) res.summary["fit"] = detail::fit_json(*rep.fit);
                for (const auto& e : rep.fit_errors) res.summary["fit_error"] = e;
            }
            break;
        }
    }
    res.summary["failed_trials"] = res.failed_trials;
    res.csv = os.str();
    return res;
}

}  // namespace ccnet
