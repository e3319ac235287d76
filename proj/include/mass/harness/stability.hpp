#pragma once

#include "mass/harness/experiment.hpp"
#include "mass/numerics.hpp"

#include <cmath>
#include <fstream>
#include <vector>

namespace mass::harness {

struct StabilityReport {
    double mean_abs_rho = 0.0;
    std::vector<double> pc1_share;  // per run: PC1 variance / total variance
    double mean_pc1_share = 0.0;
    std::size_t pairs_used = 0;
    std::size_t pairs_skipped = 0;  // a run with constant PC1 scores
};

/// Agreement between repeated reductions of one test set: each run's reduced
/// test data is summarised by its first principal component scores, and the
/// report averages |Pearson correlation| over all unordered pairs of runs.
inline StabilityReport stability_metric(const std::vector<Matrix>& z_list) {
    if (z_list.size() < 2) throw ParameterError("stability_metric: need at least two runs");
    const Index n = z_list.front().rows();
    for (const auto& z : z_list) {
        if (z.rows() != n) throw ShapeError("stability_metric: runs disagree on the test set size (" + shape_of(z) + " vs " + std::to_string(n) + " rows)");
        if (z.cols() < 1) throw ShapeError("stability_metric: empty reduced matrix");
    }

    StabilityReport rep;
    std::vector<Vector> scores;
    std::vector<bool> constant;
    for (const auto& z : z_list) {
        const Matrix centered = z.rowwise() - z.colwise().mean();
        const auto dec = svd(centered);
        const double total = dec.singular_values.squaredNorm();
        Vector s = centered * dec.v.col(0);
        const double spread = (s.array() - s.mean()).matrix().norm();
        const bool flat = !(total > 0.0) || !(spread > 1e-12 * std::sqrt(static_cast<double>(n)));
        rep.pc1_share.push_back(total > 0.0 ? dec.singular_values(0) * dec.singular_values(0) / total : 0.0);
        constant.push_back(flat);
        scores.push_back(std::move(s));
    }

    double acc = 0.0;
    for (std::size_t s = 0; s < scores.size(); ++s) {
        for (std::size_t t = s + 1; t < scores.size(); ++t) {
            if (constant[s] || constant[t]) {
                ++rep.pairs_skipped;
                continue;
            }
            const Vector a = scores[s].array() - scores[s].mean();
            const Vector b = scores[t].array() - scores[t].mean();
            acc += std::abs(a.dot(b)) / (a.norm() * b.norm());
            ++rep.pairs_used;
        }
    }
    rep.mean_abs_rho = rep.pairs_used > 0 ? acc / static_cast<double>(rep.pairs_used) : std::nan("");
    double share = 0.0;
    for (double v : rep.pc1_share) share += v;
    rep.mean_pc1_share = share / static_cast<double>(rep.pc1_share.size());
    return rep;
}

struct StabilityRun {
    std::uint64_t seed = 0;
    double test_mcr = 0.0;
    double final_sparsity = 0.0;
    Matrix z_test;
};

struct StabilityResult {
    std::vector<StabilityRun> runs;
    StabilityReport report;
    double mean_mcr = 0.0;
    double se_mcr = 0.0;
};

/// Repeats one search method `spec.reps` times on a single train/test pair
/// (replication 0 of the configured data) with independent search seeds.
inline StabilityResult run_stability(const ExperimentSpec& spec) {
    spec.validate();
    const MethodSpec method = spec.methods.front();
    if (!method.is_search()) throw ParameterError("stability: method must be MASS or MFSS, got " + method.name());
    if (spec.reps < 2) throw ParameterError("stability: need at least two runs");

    const std::uint64_t rep_seed = replication_seed(spec.seed, 0);
    Matrix x_train, x_test;
    Labels y_train, y_test;
    if (spec.study) {
        StudySpec ss = spec.study_spec;
        ss.study = *spec.study;
        RngStream data_rng = RngStream(rep_seed).child("data");
        auto data = gen_sim(ss, spec.sizes, data_rng);
        x_train = std::move(data.x_train);
        y_train = std::move(data.y_train);
        x_test = std::move(data.x_test);
        y_test = std::move(data.y_test);
    } else {
        auto tr = read_dataset_csv(spec.train_csv);
        auto te = read_dataset_csv(spec.test_csv);
        x_train = std::move(tr.x);
        y_train = std::move(tr.y);
        x_test = std::move(te.x);
        y_test = std::move(te.y);
    }
    if (spec.reduction != ReductionKind::none) {
        const Index m = spec.m > 0 ? spec.m : std::min(intermediate_dim(x_train.rows()), x_train.cols());
        const auto red = fit_reduction(spec.reduction, x_train, y_train, m);
        x_train = red.apply(x_train);
        x_test = red.apply(x_test);
    }

    StabilityResult res;
    res.runs.resize(static_cast<std::size_t>(spec.reps));
    const RngStream seeds = RngStream(method_seed(rep_seed, method)).child("stability");
    int workers = spec.workers > 0 ? spec.workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    workers = std::min(workers, spec.reps);
    std::atomic<int> next{0};
    std::exception_ptr fatal;
    std::mutex fatal_mutex;
    auto worker = [&] {
        for (int r = next++; r < spec.reps; r = next++) {
            try {
                auto& run = res.runs[static_cast<std::size_t>(r)];
                run.seed = seeds.child(static_cast<std::uint64_t>(r)).seed();
                const auto out = run_method(method, x_train, y_train, x_test, y_test, spec.p, spec.mass, run.seed, false);
                run.test_mcr = out.test_mcr;
                run.final_sparsity = out.final_sparsity;
                run.z_test = out.z_test;
            } catch (...) {
                std::lock_guard lock(fatal_mutex);
                if (!fatal) fatal = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (fatal) std::rethrow_exception(fatal);

    std::vector<Matrix> z;
    std::vector<double> mcrs;
    for (const auto& run : res.runs) {
        z.push_back(run.z_test);
        mcrs.push_back(run.test_mcr);
    }
    res.report = stability_metric(z);
    const auto ms = detail::mean_se(mcrs);
    res.mean_mcr = ms.mean;
    res.se_mcr = ms.se;
    return res;
}

inline void write_stability_outputs(const StabilityResult& res, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "stability_runs.csv", std::ios::binary);
        out << "run,seed,test_mcr,final_sparsity,pc1_share\n";
        for (std::size_t r = 0; r < res.runs.size(); ++r) {
            out << r << ',' << res.runs[r].seed << ',' << format_double(res.runs[r].test_mcr) << ','
                << format_double(res.runs[r].final_sparsity) << ',' << format_double(res.report.pc1_share[r]) << '\n';
        }
    }
    std::ofstream out(dir / "stability.csv", std::ios::binary);
    out << "runs,mean_abs_rho_pc1,mean_pc1_share,pairs_used,pairs_skipped,mean_test_mcr,se_test_mcr\n";
    out << res.runs.size() << ',' << format_double(res.report.mean_abs_rho) << ',' << format_double(res.report.mean_pc1_share) << ','
        << res.report.pairs_used << ',' << res.report.pairs_skipped << ',' << format_double(res.mean_mcr) << ','
        << format_double(res.se_mcr) << '\n';
}

}  // namespace mass::harness
