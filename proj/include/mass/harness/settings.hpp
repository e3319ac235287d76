#pragma once

#include "mass/harness/config.hpp"
#include "mass/harness/experiment.hpp"

#include <set>
#include <string>

namespace mass::harness {

/// Keys understood by experiment_from_config. Top-level keys mirror the CLI
/// flags; the sectioned ones are file-only.
inline const std::set<std::string>& known_config_keys() {
    static const std::set<std::string> keys = {
        "study", "reps", "seed", "out", "workers", "method", "p", "iters", "lambda", "xi",
        "data.n_train", "data.n_test", "data.d", "data.train_csv", "data.test_csv", "data.lambda0", "data.xi0",
        "reduction.kind", "reduction.m",
        "mass.alpha", "mass.xi0", "mass.l_start", "mass.l_end", "mass.spline_df", "mass.curvature_grid",
        "run.sweep", "run.p_max", "run.trace_test", "run.timing",
    };
    return keys;
}

inline ExperimentSpec experiment_from_config(const KeyValueConfig& cfg, const std::string& default_methods = "MASS") {
    for (const auto& [key, value] : cfg.values()) {
        if (!known_config_keys().count(key)) throw ParameterError("unknown config key '" + key + "'");
    }
    ExperimentSpec spec;

    auto train = cfg.get_string("data.train_csv");
    auto test = cfg.get_string("data.test_csv");
    if (train || test) {
        if (cfg.has("study")) throw ParameterError("config: give either a study or data.train_csv/data.test_csv, not both");
        spec.study.reset();
        spec.train_csv = train.value_or("");
        spec.test_csv = test.value_or("");
    } else {
        spec.study = parse_study(cfg.get_string("study").value_or("II1"));
    }
    if (auto v = cfg.get_int("data.n_train")) spec.sizes.n_train = *v;
    if (auto v = cfg.get_int("data.n_test")) spec.sizes.n_test = *v;
    if (auto v = cfg.get_int("data.d")) spec.sizes.d = *v;
    if (auto v = cfg.get_double("data.lambda0")) spec.study_spec.lambda0 = *v;
    if (auto v = cfg.get_double("data.xi0")) spec.study_spec.xi0 = *v;

    spec.reduction = parse_reduction_kind(cfg.get_string("reduction.kind").value_or("none"));
    if (auto v = cfg.get_int("reduction.m")) spec.m = *v;

    std::optional<double> xi = cfg.get_double("xi");
    std::optional<double> lambda = cfg.get_double("lambda");
    spec.methods = parse_method_list(cfg.get_string("method").value_or(default_methods), xi, lambda);

    if (auto v = cfg.get_int("p")) spec.p = *v;
    spec.mass.p = spec.p;
    if (auto v = cfg.get_int("iters")) spec.mass.iterations = static_cast<int>(*v);
    if (auto v = cfg.get_double("mass.alpha")) spec.mass.alpha = *v;
    if (auto v = cfg.get_double("mass.xi0")) spec.mass.xi0 = *v;
    if (auto v = cfg.get_int("mass.l_start")) spec.mass.l_start = *v;
    if (auto v = cfg.get_int("mass.l_end")) spec.mass.l_end = *v;
    if (auto v = cfg.get_int("mass.spline_df")) spec.mass.spline_df = static_cast<int>(*v);
    if (auto v = cfg.get_int("mass.curvature_grid")) spec.mass.curvature_grid = static_cast<int>(*v);

    if (auto v = cfg.get_bool("run.sweep")) spec.sweep = *v;
    if (auto v = cfg.get_int("run.p_max")) spec.p_max = *v;
    if (auto v = cfg.get_bool("run.trace_test")) spec.trace_test = *v;
    if (auto v = cfg.get_bool("run.timing")) spec.timing = *v;

    if (auto v = cfg.get_int("reps")) spec.reps = static_cast<int>(*v);
    if (auto v = cfg.get_int("seed")) {
        if (*v < 0) throw ParameterError("seed must be non-negative");
        spec.seed = static_cast<std::uint64_t>(*v);
    }
    if (auto v = cfg.get_int("workers")) spec.workers = static_cast<int>(*v);
    spec.out_dir = cfg.get_string("out").value_or("out");
    return spec;
}

}  // namespace mass::harness
