#pragma once

#include "mass/harness/csv.hpp"
#include "mass/harness/methods.hpp"
#include "mass/harness/svg.hpp"
#include "mass/reduce.hpp"
#include "mass/simgen.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace mass::harness {

struct ExperimentSpec {
    // data: a simulation study, or fixed train/test CSV files
    std::optional<Study> study = Study::II1;
    StudySpec study_spec;
    SimSizes sizes;
    std::string train_csv;
    std::string test_csv;

    ReductionKind reduction = ReductionKind::none;
    Index m = 0;  // 0: round(2n / ln n)

    std::vector<MethodSpec> methods;
    MassConfig mass;
    Index p = 5;
    bool sweep = false;  // Lars/PCA/SIS report every p = 1..p_max
    Index p_max = 0;     // 0: every available dimension

    int reps = 20;
    std::uint64_t seed = 1;
    std::string out_dir;
    int workers = 0;        // 0: hardware concurrency
    bool trace_test = true; // record test MCR per iteration in traces
    bool timing = false;    // fill wall_seconds (makes results.csv run-dependent)

    void validate() const {
        if (reps < 1) throw ParameterError("experiment: reps must be at least 1");
        if (methods.empty()) throw ParameterError("experiment: no methods given");
        if (p < 1) throw ParameterError("experiment: p must be positive");
        if (workers < 0) throw ParameterError("experiment: workers must be non-negative");
        if (!study && (train_csv.empty() || test_csv.empty())) {
            throw ParameterError("experiment: give a study or both train and test CSV files");
        }
        mass.validate();
    }
};

/// One (method, p, replication) cell. test_mcr is empty when the method failed.
struct ResultRow {
    std::string method;
    Index p = 0;
    int replication = 0;
    std::uint64_t seed = 0;
    std::optional<double> test_mcr;
    std::optional<double> bayes_mcr;
    std::optional<double> final_sparsity;
    std::optional<double> wall_seconds;
};

struct Failure {
    std::string method;
    int replication = 0;
    std::string reason;
};

struct SummaryRow {
    std::string method;
    Index p = 0;          // fixed p, or p* for a sweep
    bool swept = false;
    int reps_ok = 0;
    int failures = 0;
    double mean_mcr = std::nan("");  // MCR* for a sweep
    double se_mcr = std::nan("");
    double mean_bayes = std::nan("");
};

struct SweepPoint {
    std::string method;
    Index p = 0;
    int reps_ok = 0;
    double mean_mcr = std::nan("");
    double se_mcr = std::nan("");
};

struct ExperimentResult {
    std::vector<ResultRow> rows;
    std::vector<SummaryRow> summary;
    std::vector<SweepPoint> sweep;
    std::vector<Failure> failures;
    std::map<std::string, std::vector<std::pair<int, MassTrace>>> traces;  // method name -> (replication, trace)
};

inline std::uint64_t replication_seed(std::uint64_t master, int replication) {
    return RngStream(master).child(static_cast<std::uint64_t>(replication)).seed();
}

inline std::uint64_t method_seed(std::uint64_t rep_seed, const MethodSpec& method) {
    return RngStream(rep_seed).child(method.name()).seed();
}

inline std::string method_slug(const std::string& name) {
    std::string out;
    for (char ch : name) out += (ch == ':' || ch == '=' || ch == '/' || ch == ' ') ? '_' : ch;
    return out;
}

namespace detail {

struct MeanSe {
    int count = 0;
    double mean = std::nan("");
    double se = std::nan("");
};

inline MeanSe mean_se(const std::vector<double>& v) {
    MeanSe out;
    out.count = static_cast<int>(v.size());
    if (v.empty()) return out;
    double sum = 0.0;
    for (double x : v) sum += x;
    out.mean = sum / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - out.mean) * (x - out.mean);
        out.se = std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
    } else {
        out.se = 0.0;
    }
    return out;
}

struct ReplicationOutput {
    std::vector<ResultRow> rows;
    std::vector<Failure> failures;
    std::vector<std::pair<std::string, MassTrace>> traces;
};

struct LoadedData {
    Dataset train;
    Dataset test;
};

inline ReplicationOutput run_replication(const ExperimentSpec& spec, int r, const std::optional<LoadedData>& loaded) {
    ReplicationOutput out;
    const std::uint64_t rep_seed = replication_seed(spec.seed, r);

    auto fail_all = [&](const std::string& reason) {
        for (const auto& m : spec.methods) {
            ResultRow row;
            row.method = m.name();
            row.p = spec.p;
            row.replication = r;
            row.seed = rep_seed;
            out.rows.push_back(row);
            out.failures.push_back({m.name(), r, reason});
        }
    };

    Matrix x_train, x_test;
    Labels y_train, y_test;
    std::optional<double> bayes;
    try {
        if (spec.study) {
            StudySpec ss = spec.study_spec;
            ss.study = *spec.study;
            RngStream data_rng = RngStream(rep_seed).child("data");
            auto data = gen_sim(ss, spec.sizes, data_rng);
            bayes = bayes_rate_estimate(data);
            x_train = std::move(data.x_train);
            y_train = std::move(data.y_train);
            x_test = std::move(data.x_test);
            y_test = std::move(data.y_test);
        } else {
            x_train = loaded->train.x;
            y_train = loaded->train.y;
            x_test = loaded->test.x;
            y_test = loaded->test.y;
        }
    } catch (const std::exception& e) {
        fail_all(std::string("data generation: ") + e.what());
        return out;
    }

    Matrix w_train, w_test;
    try {
        if (spec.reduction == ReductionKind::none) {
            w_train = x_train;
            w_test = x_test;
        } else {
            const Index m = spec.m > 0 ? spec.m : std::min(intermediate_dim(x_train.rows()), x_train.cols());
            const auto red = fit_reduction(spec.reduction, x_train, y_train, m);
            w_train = red.apply(x_train);
            w_test = red.apply(x_test);
        }
    } catch (const std::exception& e) {
        fail_all(std::string("preliminary reduction: ") + e.what());
        return out;
    }

    for (const auto& method : spec.methods) {
        const std::string name = method.name();
        const auto t0 = std::chrono::steady_clock::now();
        auto elapsed = [&]() -> std::optional<double> {
            if (!spec.timing) return std::nullopt;
            return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        };
        ResultRow base;
        base.method = name;
        base.replication = r;
        base.seed = rep_seed;
        base.bayes_mcr = bayes;
        try {
            if (spec.sweep && method.sweepable()) {
                const Index cap = std::min(w_train.cols(), w_train.rows() - 1);
                const Index p_max = spec.p_max > 0 ? std::min(spec.p_max, cap) : cap;
                const auto mcrs = sweep_method(method, w_train, y_train, w_test, y_test, p_max);
                const auto wall = elapsed();
                for (std::size_t k = 0; k < mcrs.size(); ++k) {
                    ResultRow row = base;
                    row.p = static_cast<Index>(k) + 1;
                    row.test_mcr = mcrs[k];
                    row.wall_seconds = wall;
                    out.rows.push_back(row);
                }
            } else {
                const auto outcome = run_method(method, w_train, y_train, w_test, y_test, spec.p, spec.mass,
                                                method_seed(rep_seed, method), spec.trace_test);
                ResultRow row = base;
                row.p = outcome.p;
                row.test_mcr = outcome.test_mcr;
                if (method.is_search()) row.final_sparsity = outcome.final_sparsity;
                row.wall_seconds = elapsed();
                out.rows.push_back(row);
                if (outcome.trace) out.traces.emplace_back(name, *outcome.trace);
            }
        } catch (const std::exception& e) {
            ResultRow row = base;
            row.p = spec.p;
            out.rows.push_back(row);
            out.failures.push_back({name, r, e.what()});
        }
    }
    return out;
}

}  // namespace detail

/// Per-method means and standard errors. A method reported at several p
/// values is a sweep: its entry is the p with the lowest mean MCR (MCR*, p*).
inline std::vector<SummaryRow> aggregate(const std::vector<ResultRow>& rows, std::vector<SweepPoint>* sweep = nullptr) {
    std::vector<std::string> order;
    std::map<std::string, std::map<Index, std::vector<double>>> mcr;
    std::map<std::string, std::vector<double>> bayes;
    std::map<std::string, std::map<int, bool>> failed_reps;
    for (const auto& row : rows) {
        if (!mcr.count(row.method)) order.push_back(row.method);
        auto& by_p = mcr[row.method];
        auto& cell = by_p[row.p];
        if (row.test_mcr) {
            cell.push_back(*row.test_mcr);
        } else {
            failed_reps[row.method][row.replication] = true;
        }
    }
    // Bayes rate is per replication, so take it once per (method, replication).
    std::map<std::string, std::map<int, double>> bayes_by_rep;
    for (const auto& row : rows)
        if (row.bayes_mcr) bayes_by_rep[row.method][row.replication] = *row.bayes_mcr;
    for (auto& [method, reps] : bayes_by_rep)
        for (auto& [r, b] : reps) bayes[method].push_back(b);

    std::vector<SummaryRow> out;
    for (const auto& method : order) {
        const auto& by_p = mcr[method];
        SummaryRow s;
        s.method = method;
        s.swept = by_p.size() > 1;
        s.failures = static_cast<int>(failed_reps[method].size());
        bool first = true;
        for (const auto& [p, values] : by_p) {
            const auto ms = detail::mean_se(values);
            if (sweep && s.swept) sweep->push_back({method, p, ms.count, ms.mean, ms.se});
            if (ms.count == 0) continue;
            if (first || ms.mean < s.mean_mcr) {
                s.p = p;
                s.mean_mcr = ms.mean;
                s.se_mcr = ms.se;
                s.reps_ok = ms.count;
                first = false;
            }
        }
        if (first) s.p = by_p.begin()->first;
        if (bayes.count(method)) s.mean_bayes = detail::mean_se(bayes[method]).mean;
        out.push_back(s);
    }
    return out;
}

inline MassTrace mean_trace(const std::vector<MassTrace>& traces) {
    if (traces.empty()) return {};
    MassTrace out = traces.front();
    for (std::size_t i = 0; i < out.size(); ++i) {
        double dev = 0.0, xi = 0.0, err = 0.0;
        int n_dev = 0, n_err = 0;
        for (const auto& t : traces) {
            if (i >= t.size()) continue;
            if (std::isfinite(t[i].deviance)) {
                dev += t[i].deviance;
                ++n_dev;
            }
            xi += t[i].xi_bar;
            if (t[i].test_mcr) {
                err += *t[i].test_mcr;
                ++n_err;
            }
        }
        out[i].deviance = n_dev > 0 ? dev / n_dev : std::nan("");
        out[i].xi_bar = xi / static_cast<double>(traces.size());
        out[i].test_mcr = n_err > 0 ? std::optional<double>(err / n_err) : std::nullopt;
    }
    return out;
}

// ---- output files ----

inline const char* kResultsHeader = "method,p,replication,seed,test_mcr,bayes_mcr,final_sparsity,wall_seconds";

inline void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << kResultsHeader << '\n';
    for (const auto& r : rows) {
        out << csv_escape(r.method) << ',' << r.p << ',' << r.replication << ',' << r.seed << ','
            << (r.test_mcr ? format_double(*r.test_mcr) : std::string("NA")) << ',' << format_optional(r.bayes_mcr) << ','
            << format_optional(r.final_sparsity) << ',' << format_optional(r.wall_seconds) << '\n';
    }
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != kResultsHeader) throw ParameterError("'" + path.string() + "' is not a results table");
    auto opt = [](const std::string& s) -> std::optional<double> {
        if (s.empty() || s == "NA") return std::nullopt;
        return std::stod(s);
    };
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto c = split_csv_line(line);
        if (c.size() != 8) throw ParameterError("results row has " + std::to_string(c.size()) + " fields: " + line);
        ResultRow r;
        r.method = c[0];
        r.p = std::stoll(c[1]);
        r.replication = std::stoi(c[2]);
        r.seed = std::stoull(c[3]);
        r.test_mcr = opt(c[4]);
        r.bayes_mcr = opt(c[5]);
        r.final_sparsity = opt(c[6]);
        r.wall_seconds = opt(c[7]);
        rows.push_back(r);
    }
    return rows;
}

inline void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& summary) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << "method,p,swept,reps_ok,failures,mean_test_mcr,se_test_mcr,mean_bayes_mcr\n";
    for (const auto& s : summary) {
        out << csv_escape(s.method) << ',' << s.p << ',' << (s.swept ? 1 : 0) << ',' << s.reps_ok << ',' << s.failures << ','
            << format_double(s.mean_mcr) << ',' << format_double(s.se_mcr) << ',' << format_double(s.mean_bayes) << '\n';
    }
}

inline void write_trace_csv(const std::filesystem::path& path, const MassTrace& trace) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << "iteration,L,deviance,xi_bar,test_mcr\n";
    for (const auto& row : trace) {
        out << row.iteration << ',' << row.l << ',' << (std::isfinite(row.deviance) ? format_double(row.deviance) : std::string()) << ','
            << format_double(row.xi_bar) << ',' << format_optional(row.test_mcr) << '\n';
    }
}

inline void write_outputs(const ExperimentResult& res, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_results_csv(dir / "results.csv", res.rows);
    write_summary_csv(dir / "summary.csv", res.summary);
    {
        std::ofstream out(dir / "failures.csv", std::ios::binary);
        out << "method,replication,reason\n";
        for (const auto& f : res.failures) out << csv_escape(f.method) << ',' << f.replication << ',' << csv_escape(f.reason) << '\n';
    }
    if (!res.sweep.empty()) {
        std::ofstream out(dir / "sweep.csv", std::ios::binary);
        out << "method,p,reps_ok,mean_test_mcr,se_test_mcr\n";
        for (const auto& s : res.sweep) {
            out << csv_escape(s.method) << ',' << s.p << ',' << s.reps_ok << ',' << format_double(s.mean_mcr) << ','
                << format_double(s.se_mcr) << '\n';
        }
    }
    for (const auto& [method, traces] : res.traces) {
        const auto tdir = dir / "traces" / method_slug(method);
        std::filesystem::create_directories(tdir);
        std::vector<MassTrace> all;
        for (const auto& [r, trace] : traces) {
            char name[32];
            std::snprintf(name, sizeof name, "rep_%03d.csv", r);
            write_trace_csv(tdir / name, trace);
            all.push_back(trace);
        }
        const auto mean = mean_trace(all);
        write_trace_csv(tdir / "trace.csv", mean);
        emit_plots(mean, tdir, "trace");
    }
}

/// Runs every method on every replication, fanning replications out to a
/// worker pool, then aggregates and (when out_dir is set) writes the tables.
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    std::optional<detail::LoadedData> loaded;
    if (!spec.study) {
        loaded.emplace();
        loaded->train = read_dataset_csv(spec.train_csv);
        loaded->test = read_dataset_csv(spec.test_csv);
        if (loaded->train.x.cols() != loaded->test.x.cols()) {
            throw ShapeError("train has " + std::to_string(loaded->train.x.cols()) + " predictors, test has " + std::to_string(loaded->test.x.cols()));
        }
    }

    std::vector<detail::ReplicationOutput> outputs(static_cast<std::size_t>(spec.reps));
    int workers = spec.workers > 0 ? spec.workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    workers = std::min(workers, spec.reps);
    std::atomic<int> next{0};
    std::exception_ptr fatal;
    std::mutex fatal_mutex;
    auto worker = [&] {
        for (int r = next++; r < spec.reps; r = next++) {
            try {
                outputs[static_cast<std::size_t>(r)] = detail::run_replication(spec, r, loaded);
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

    ExperimentResult res;
    for (int r = 0; r < spec.reps; ++r) {
        auto& o = outputs[static_cast<std::size_t>(r)];
        res.rows.insert(res.rows.end(), o.rows.begin(), o.rows.end());
        res.failures.insert(res.failures.end(), o.failures.begin(), o.failures.end());
        for (auto& [name, trace] : o.traces) res.traces[name].emplace_back(r, std::move(trace));
    }
    res.summary = aggregate(res.rows, &res.sweep);
    if (!spec.out_dir.empty()) write_outputs(res, spec.out_dir);
    return res;
}

}  // namespace mass::harness
