#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "rim/config.hpp"
#include "rim/experiments.hpp"
#include "rim/format.hpp"
#include "rim/parallel.hpp"
#include "rim/report.hpp"

namespace {

// exit codes: 0 pass, 1 acceptance/conditions fail, 2 config error, 3 runtime error
constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::string default_out_dir() {
    if (const char* env = std::getenv("RIMSIM_OUT")) return env;
    return "runs";
}

int cmd_conditions(const std::string& config_file, bool quiet,
                   const std::string& tensor_csv) {
    const rim::ExperimentConfig cfg = rim::ExperimentConfig::load(config_file);
    const rim::SpectralModel model = rim::build_model(cfg.model);
    if (!tensor_csv.empty()) {
        std::ofstream os(tensor_csv, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + tensor_csv);
        model.write_tensor_csv(os);
    }
    const auto rep = model.check_conditions(cfg.dynamics.nu, cfg.dynamics.eta,
                                            cfg.dynamics.delta, cfg.dynamics.lambda);
    if (!quiet) {
        std::cout << "C_B            = " << rim::fmt_g(rep.c_b) << "\n";
        std::cout << "L_R = 2 R C_B  = " << rim::fmt_g(rep.l_r) << "\n";
        std::cout << "M_alpha_lambda = " << rim::fmt_g(rep.m_alpha_lambda) << "\n";
        std::cout << "Gamma(1-alpha) = " << rim::fmt_g(rep.gamma_1ma) << "\n";
        std::cout << "lambda_*       = " << rim::fmt_g(rep.lambda_star) << "\n";
        std::cout << "condition 1: value " << rim::fmt_g(rep.cond1_value) << " < 1"
                  << "  [" << (rep.cond1_ok ? "ok" : "VIOLATED") << "]"
                  << "  margin " << rim::fmt_g(rep.cond1_margin()) << "\n";
        std::cout << "condition 2: lhs " << rim::fmt_g(rep.cond2_lhs)
                  << " <= lambda_*  [" << (rep.cond2_ok ? "ok" : "VIOLATED") << "]"
                  << "  margin " << rim::fmt_g(rep.cond2_margin()) << "\n";
        std::cout << "condition 3: lhs " << rim::fmt_g(rep.cond3_lhs)
                  << " < lambda_*   [" << (rep.cond3_ok ? "ok" : "VIOLATED") << "]"
                  << "  margin " << rim::fmt_g(rep.cond3_margin()) << "\n";
    }
    return rep.all_ok() ? kExitPass : kExitFail;
}

int cmd_run(const std::string& experiment, rim::ExperimentConfig cfg,
            const std::string& out_dir, unsigned threads, bool quiet) {
    const std::string started = rim::utc_timestamp_iso();
    const rim::ExperimentReport rep = rim::run_experiment(experiment, cfg, threads);
    const std::string finished = rim::utc_timestamp_iso();
    const std::string dir =
        rim::write_run_dir(rep, cfg, out_dir, threads, started, finished);
    if (!quiet) {
        std::cout << "run directory: " << dir << "\n";
        std::cout << "config hash:   " << cfg.content_hash() << "\n";
        std::cout << "result:        " << (rep.passed ? "PASS" : "FAIL") << "\n";
    }
    return rep.passed ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rimsim - random invariant manifolds for spectral SPDE truncations"};
    app.require_subcommand(1);

    std::string config_file, out_dir = default_out_dir(), manifest_file;
    bool quiet = false;
    unsigned threads = rim::default_threads();
    std::uint64_t seed_override = 0;
    bool seed_set = false;
    std::uint64_t paths_override = 0;
    bool paths_set = false;

    auto add_common = [&](CLI::App* sub, bool need_config) {
        auto* copt = sub->add_option("--config", config_file, "experiment config file");
        if (need_config) copt->required();
        sub->add_option("--out", out_dir, "output base directory (default $RIMSIM_OUT or ./runs)");
        sub->add_option("--threads", threads, "worker thread cap (default: cores)");
        sub->add_option("--seed", seed_override, "override monte_carlo.master_seed")
            ->each([&](const std::string&) { seed_set = true; });
        sub->add_option("--paths", paths_override, "override monte_carlo.n_paths")
            ->each([&](const std::string&) { paths_set = true; });
        sub->add_flag("--quiet", quiet, "suppress progress output");
    };

    auto* c_cond = app.add_subcommand("conditions", "evaluate conditions (1)-(3) and exit");
    c_cond->add_option("--config", config_file, "experiment config file")->required();
    c_cond->add_flag("--quiet", quiet, "suppress output");
    std::string tensor_csv;
    c_cond->add_option("--tensor-csv", tensor_csv, "also dump the bilinear tensor to CSV");

    auto* c_run = app.add_subcommand("run", "run a Monte-Carlo experiment");
    std::string experiment;
    c_run->add_option("experiment", experiment,
                      "one of shape|attract|cone|ktail|amplitude|simulate");
    c_run->add_option("--from-manifest", manifest_file,
                      "re-run with the exact config recorded in a manifest.json");
    add_common(c_run, false);

    auto* c_sim = app.add_subcommand("simulate", "integrate one trajectory set");
    add_common(c_sim, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitPass : kExitConfig;
    }

    try {
        if (c_cond->parsed()) return cmd_conditions(config_file, quiet, tensor_csv);

        rim::ExperimentConfig cfg;
        if (c_run->parsed() && !manifest_file.empty()) {
            std::ifstream is(manifest_file);
            if (!is) throw rim::ConfigError("cannot open manifest " + manifest_file);
            nlohmann::json manifest;
            is >> manifest;
            cfg = rim::ExperimentConfig::parse(manifest.at("config_ini").get<std::string>());
            if (experiment.empty())
                experiment = manifest.at("experiment").get<std::string>();
        } else if (!config_file.empty()) {
            cfg = rim::ExperimentConfig::load(config_file);
        } else if (c_run->parsed()) {
            throw rim::ConfigError("run: provide --config or --from-manifest");
        }
        if (seed_set) cfg.monte_carlo.master_seed = seed_override;
        if (paths_set) cfg.monte_carlo.n_paths = paths_override;

        if (c_run->parsed()) {
            if (experiment.empty()) throw rim::ConfigError("run: missing experiment name");
            return cmd_run(experiment, cfg, out_dir, threads, quiet);
        }
        if (c_sim->parsed()) return cmd_run("simulate", cfg, out_dir, threads, quiet);
    } catch (const rim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitConfig;
}
