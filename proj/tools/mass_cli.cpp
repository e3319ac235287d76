// Command-line front end: run / sweep experiments, emit simulated datasets,
// and report run-to-run stability.

#include "mass/harness/settings.hpp"
#include "mass/harness/stability.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

using mass::harness::KeyValueConfig;

struct CommonFlags {
    std::string config;
    std::optional<std::string> study, reps, seed, out, workers, method, p, iters, lambda, xi;

    void attach(CLI::App* app) {
        app->add_option("--config", config, "key = value settings file");
        app->add_option("--study", study, "simulation study: I, II1, II2, III, IV or V");
        app->add_option("--reps", reps, "replications (or runs, for stability)");
        app->add_option("--seed", seed, "master seed");
        app->add_option("--out", out, "output directory");
        app->add_option("--workers", workers, "worker threads (0 = all cores)");
        app->add_option("--method", method, "comma-separated methods, e.g. FD,PCA,MASS,MFSS:xi=0.98");
        app->add_option("--p", p, "reduced dimension");
        app->add_option("--iters", iters, "search iterations");
        app->add_option("--lambda", lambda, "curvature budget for MASS/MFSS (enables spline mode)");
        app->add_option("--xi", xi, "default MFSS sparsity level");
    }

    KeyValueConfig resolve() const {
        KeyValueConfig cfg = config.empty() ? KeyValueConfig{} : KeyValueConfig::load(config);
        auto put = [&](const char* key, const std::optional<std::string>& v) {
            if (v) cfg.set(key, *v);
        };
        put("study", study);
        put("reps", reps);
        put("seed", seed);
        put("out", out);
        put("workers", workers);
        put("method", method);
        put("p", p);
        put("iters", iters);
        put("lambda", lambda);
        put("xi", xi);
        return cfg;
    }
};

std::string num(double v, int prec = 4) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

void print_summary(const mass::harness::ExperimentResult& res) {
    std::printf("%-28s %5s %6s %9s %8s %8s\n", "method", "p", "reps", "mean_mcr", "se", "bayes");
    for (const auto& s : res.summary) {
        std::string p = std::to_string(s.p) + (s.swept ? "*" : "");
        std::printf("%-28s %5s %6d %9s %8s %8s\n", s.method.c_str(), p.c_str(), s.reps_ok, num(s.mean_mcr).c_str(),
                    num(s.se_mcr).c_str(), std::isnan(s.mean_bayes) ? "-" : num(s.mean_bayes).c_str());
    }
    if (!res.failures.empty()) std::printf("%zu failed cells (see failures.csv)\n", res.failures.size());
}

int cmd_run(const CommonFlags& flags, bool sweep) {
    auto cfg = flags.resolve();
    if (sweep) cfg.set("run.sweep", "true");
    auto spec = mass::harness::experiment_from_config(cfg, sweep ? "Lars,PCA,SIS" : "MASS");
    const auto res = mass::harness::run_experiment(spec);
    print_summary(res);
    std::printf("wrote %s\n", spec.out_dir.c_str());
    return 0;
}

int cmd_sim(const CommonFlags& flags) {
    auto cfg = flags.resolve();
    if (!cfg.has("reps")) cfg.set("reps", "1");
    const auto spec = mass::harness::experiment_from_config(cfg);
    if (!spec.study) throw mass::ParameterError("sim: needs a study");
    const std::filesystem::path root = spec.out_dir;
    for (int r = 0; r < spec.reps; ++r) {
        mass::StudySpec ss = spec.study_spec;
        ss.study = *spec.study;
        const auto rep_seed = mass::harness::replication_seed(spec.seed, r);
        mass::RngStream rng = mass::RngStream(rep_seed).child("data");
        const auto data = mass::gen_sim(ss, spec.sizes, rng);
        const auto dir = spec.reps == 1 ? root : root / ("rep_" + std::to_string(r));
        std::filesystem::create_directories(dir);
        mass::harness::write_dataset_csv((dir / "train.csv").string(), data.x_train, data.y_train);
        mass::harness::write_dataset_csv((dir / "test.csv").string(), data.x_test, data.y_test);
        std::ofstream meta(dir / "truth.txt");
        meta << "study = " << mass::to_string(data.study) << "\n"
             << "replication = " << r << "\n"
             << "seed = " << rep_seed << "\n"
             << "bayes_mcr = " << mass::harness::format_double(mass::bayes_rate_estimate(data)) << "\n"
             << "p0 = " << data.truth->p0 << "\n"
             << "gh_clamped = " << data.clamp_count << "\n";
        std::printf("%s: %lldx%lld train, %lldx%lld test, bayes %.4f\n", dir.string().c_str(),
                    static_cast<long long>(data.x_train.rows()), static_cast<long long>(data.x_train.cols()),
                    static_cast<long long>(data.x_test.rows()), static_cast<long long>(data.x_test.cols()),
                    mass::bayes_rate_estimate(data));
    }
    return 0;
}

int cmd_stability(const CommonFlags& flags) {
    auto cfg = flags.resolve();
    if (!cfg.has("reps")) cfg.set("reps", "100");
    const auto spec = mass::harness::experiment_from_config(cfg);
    const auto res = mass::harness::run_stability(spec);
    mass::harness::write_stability_outputs(res, spec.out_dir);
    std::printf("runs %zu  mean|rho_PC1| %.4f  PC1 share %.4f  skipped pairs %zu  MCR %.4f (se %.4f)\n", res.runs.size(),
                res.report.mean_abs_rho, res.report.mean_pc1_share, res.report.pairs_skipped, res.mean_mcr, res.se_mcr);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive stochastic search for dimension reduction in classification"};
    app.require_subcommand(1);

    CommonFlags run_flags, sweep_flags, sim_flags, stab_flags;
    auto* run = app.add_subcommand("run", "run a replicated experiment");
    run_flags.attach(run);
    auto* sweep = app.add_subcommand("sweep", "p-sweep for the Lars/PCA/SIS baselines");
    sweep_flags.attach(sweep);
    auto* sim = app.add_subcommand("sim", "write simulated train/test datasets as CSV");
    sim_flags.attach(sim);
    auto* stab = app.add_subcommand("stability", "repeat a search on one dataset and report agreement");
    stab_flags.attach(stab);

    CLI11_PARSE(app, argc, argv);
    try {
        if (run->parsed()) return cmd_run(run_flags, false);
        if (sweep->parsed()) return cmd_run(sweep_flags, true);
        if (sim->parsed()) return cmd_sim(sim_flags);
        if (stab->parsed()) return cmd_stability(stab_flags);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
