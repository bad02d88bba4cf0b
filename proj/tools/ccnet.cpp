#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ccnet/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Flags {
    double phi = 0.0;
    double epsilon = 0.0;
    int L1 = 0;
    int L2 = 0;
    std::string mode;
    int length = 0;
    double s = 0.0;
    std::vector<double> rho;
    int theta_count = 0;
    double eta = 0.0;
    double p = 0.0;
    long horizon = 0;
    std::size_t trials = 0;
    std::size_t seeds = 0;
    std::uint64_t seed = 0;
    unsigned workers = 0;
    std::string out;
    std::string config;
    std::string observable;
    int fit_dmin = 0;
    int fit_dmax = 0;
    bool print_config = false;
};

// Writes to a sibling temporary and renames, so a failed run never leaves a partial file.
void write_atomically(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open " + tmp + " for writing");
        f << content;
        if (!f.flush()) throw std::runtime_error("write to " + tmp + " failed");
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

int main(int argc, char** argv) {
    using namespace ccnet;
    CLI::App app{"Chalker-Coddington network experiments"};
    app.set_version_flag("--version", std::string(CCNET_VERSION));
    app.require_subcommand(1);

    Flags f;
    std::map<std::string, CLI::Option*> opts;
    for (auto e : kExperiments) {
        auto* sub = app.add_subcommand(to_string(e));
        auto* phi = sub->add_option("--phi", f.phi, "scattering angle");
        auto* eps = sub->add_option("--epsilon", f.epsilon, "energy, mapped to phi = arccos((1 + e^eps)^(-1/2))");
        phi->excludes(eps);
        sub->add_option("--L1", f.L1, "box half-width in blocks");
        sub->add_option("--L2", f.L2, "box half-height in blocks (strip height M)");
        sub->add_option("--mode", f.mode, "geometry")->check(CLI::IsMember({"auto", "box", "torus", "strip"}));
        sub->add_option("--length", f.length, "strip length along x");
        sub->add_option("--s", f.s, "fractional moment exponent");
        sub->add_option("--rho", f.rho, "|z| values")->delimiter(',');
        sub->add_option("--theta-count", f.theta_count, "number of equally spaced arguments of z");
        sub->add_option("--eta", f.eta, "gap radius");
        sub->add_option("--p", f.p, "moment order");
        sub->add_option("--horizon", f.horizon, "number of time steps");
        sub->add_option("--trials", f.trials, "disorder samples");
        sub->add_option("--seeds", f.seeds, "disorder realizations for dynamics");
        sub->add_option("--seed", f.seed, "master seed");
        sub->add_option("--workers", f.workers, std::string("worker threads (default $") + kWorkersEnv + " or hardware)");
        sub->add_option("--out", f.out, "output CSV path (default stdout)");
        sub->add_option("--config", f.config, "configuration file (key = value); flags override it");
        sub->add_option("--observable", f.observable, "strip observable")->check(CLI::IsMember({"correlator_decay", "spread"}));
        sub->add_option("--fit-dmin", f.fit_dmin, "smallest distance in decay fits");
        sub->add_option("--fit-dmax", f.fit_dmax, "largest distance in decay fits");
        sub->add_flag("--print-config", f.print_config, "print the resolved configuration and exit");
    }

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
        return kExitConfig;
    }

    const CLI::App* sub = app.get_subcommands().front();
    auto given = [&](const char* name) { return sub->get_option(name)->count() > 0; };

    ExperimentConfig cfg;
    try {
        if (given("--config")) {
            std::ifstream in(f.config);
            if (!in) throw ConfigError("cannot read config file " + f.config);
            try {
                cfg = parse_config(in);
            } catch (const ConfigError& e) {
                throw ConfigError(f.config + ": " + e.what());
            }
        }
        cfg.experiment = *parse_experiment(sub->get_name());
        auto set = [&](const char* flag, const char* key, const std::string& value) {
            if (!given(flag)) return;
            if (const auto err = set_config_value(cfg, key, value)) throw ConfigError(std::string(flag) + ": " + *err);
        };
        auto num = [](auto v) {
            if constexpr (std::is_floating_point_v<decltype(v)>) {
                return detail::format_double(v);
            } else {
                return std::to_string(v);
            }
        };
        set("--phi", "phi", num(f.phi));
        if (given("--epsilon")) cfg.phi = phi_from_energy(f.epsilon).phi;
        set("--L1", "L1", num(f.L1));
        set("--L2", "L2", num(f.L2));
        set("--mode", "mode", f.mode);
        set("--length", "length", num(f.length));
        set("--s", "s", num(f.s));
        if (given("--rho")) cfg.rho = f.rho;
        set("--theta-count", "theta_count", num(f.theta_count));
        set("--eta", "eta", num(f.eta));
        set("--p", "p", num(f.p));
        set("--horizon", "horizon", num(f.horizon));
        set("--trials", "trials", num(f.trials));
        set("--seeds", "seeds", num(f.seeds));
        set("--seed", "seed", num(f.seed));
        set("--workers", "workers", num(f.workers));
        set("--out", "out", f.out);
        set("--observable", "observable", f.observable);
        set("--fit-dmin", "fit_dmin", num(f.fit_dmin));
        set("--fit-dmax", "fit_dmax", num(f.fit_dmax));
        validate(cfg);
    } catch (const std::invalid_argument& e) {
        std::cerr << "ccnet: configuration error: " << e.what() << '\n';
        return kExitConfig;
    }

    if (f.print_config) {
        std::cout << to_text(cfg);
        return 0;
    }

    RunResult result;
    try {
        result = run(cfg);
    } catch (const std::invalid_argument& e) {
        std::cerr << "ccnet: configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::cerr << "ccnet: numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }

    try {
        if (cfg.out.empty()) {
            std::cout << result.csv;
            std::cerr << result.summary.dump(2) << '\n';
        } else {
            write_atomically(cfg.out, result.csv);
            write_atomically(cfg.out + ".summary.json", result.summary.dump(2) + "\n");
        }
    } catch (const std::exception& e) {
        std::cerr << "ccnet: " << e.what() << '\n';
        return 1;
    }
    if (result.failed_trials > 0) std::cerr << "ccnet: " << result.failed_trials << " trial(s) dropped after solver failures\n";
    return 0;
}
