#pragma once

#include "mass/classify.hpp"
#include "mass/reduce.hpp"
#include "mass/search.hpp"
#include "mass/selection.hpp"

#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace mass::harness {

enum class MethodKind { fd, lars, pca, sis, mass, mfss };

/// One comparison method. MASS/MFSS carry their own sparsity and curvature
/// settings so several variants can share an experiment.
struct MethodSpec {
    MethodKind kind = MethodKind::fd;
    std::optional<double> xi;      // MFSS sparsity level
    std::optional<double> lambda;  // spline curvature budget; unset = linear

    bool is_search() const { return kind == MethodKind::mass || kind == MethodKind::mfss; }
    bool sweepable() const { return kind == MethodKind::lars || kind == MethodKind::pca || kind == MethodKind::sis; }

    std::string name() const {
        std::string base;
        switch (kind) {
            case MethodKind::fd: base = "FD"; break;
            case MethodKind::lars: base = "Lars"; break;
            case MethodKind::pca: base = "PCA"; break;
            case MethodKind::sis: base = "SIS"; break;
            case MethodKind::mass: base = "MASS"; break;
            case MethodKind::mfss: base = "MFSS"; break;
        }
        std::ostringstream os;
        os << base;
        if (xi) os << ":xi=" << *xi;
        if (lambda) os << ":lambda=" << *lambda;
        return os.str();
    }
};

/// Parses "FD", "Lars", "PCA", "SIS", "MASS", "MFSS" with optional
/// ":xi=X" / ":lambda=X" suffixes. Unset options fall back to the defaults.
inline MethodSpec parse_method(const std::string& text, std::optional<double> default_xi = std::nullopt,
                               std::optional<double> default_lambda = std::nullopt) {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream is(text);
    while (std::getline(is, part, ':')) parts.push_back(part);
    if (parts.empty()) throw ParameterError("empty method name");

    MethodSpec m;
    const std::string& head = parts.front();
    if (head == "FD") m.kind = MethodKind::fd;
    else if (head == "Lars" || head == "LARS") m.kind = MethodKind::lars;
    else if (head == "PCA") m.kind = MethodKind::pca;
    else if (head == "SIS") m.kind = MethodKind::sis;
    else if (head == "MASS") m.kind = MethodKind::mass;
    else if (head == "MFSS") m.kind = MethodKind::mfss;
    else throw ParameterError("unknown method '" + head + "'");

    for (std::size_t i = 1; i < parts.size(); ++i) {
        const auto eq = parts[i].find('=');
        if (eq == std::string::npos) throw ParameterError("bad method option '" + parts[i] + "' in " + text);
        const std::string key = parts[i].substr(0, eq);
        const double value = std::stod(parts[i].substr(eq + 1));
        if (key == "xi") m.xi = value;
        else if (key == "lambda") m.lambda = value;
        else throw ParameterError("unknown method option '" + key + "' in " + text);
    }
    if (!m.is_search() && (m.xi || m.lambda)) throw ParameterError("options only apply to MASS/MFSS: " + text);
    if (m.kind == MethodKind::mfss && !m.xi) m.xi = default_xi ? *default_xi : 0.5;
    if (m.kind == MethodKind::mass && m.xi) throw ParameterError("MASS adapts its sparsity; use MFSS for a fixed xi");
    if (m.is_search() && !m.lambda && default_lambda) m.lambda = default_lambda;
    return m;
}

inline std::vector<MethodSpec> parse_method_list(const std::string& list, std::optional<double> default_xi = std::nullopt,
                                                 std::optional<double> default_lambda = std::nullopt) {
    std::vector<MethodSpec> out;
    std::string item;
    std::istringstream is(list);
    while (std::getline(is, item, ',')) {
        if (!item.empty()) out.push_back(parse_method(item, default_xi, default_lambda));
    }
    if (out.empty()) throw ParameterError("no methods given");
    return out;
}

struct MethodOutcome {
    double test_mcr = std::numeric_limits<double>::quiet_NaN();
    Index p = 0;
    double final_sparsity = std::numeric_limits<double>::quiet_NaN();
    std::optional<MassTrace> trace;
    Matrix z_test;
    Matrix a_final;  // MASS/MFSS only
};

inline MassConfig search_config(const MethodSpec& method, const MassConfig& base, std::uint64_t seed) {
    MassConfig c = base;
    c.seed = seed;
    c.policy = method.kind == MethodKind::mfss ? SparsityPolicy::fixed : SparsityPolicy::adaptive;
    if (method.kind == MethodKind::mfss) c.xi0 = *method.xi;
    if (method.lambda) {
        c.mode = SearchMode::spline;
        c.lambda = *method.lambda;
    } else {
        c.mode = SearchMode::linear;
        c.lambda = 0.0;
    }
    return c;
}

inline MethodOutcome score_logistic(const Matrix& z_train, const Labels& y_train, const Matrix& z_test,
                                    const Labels& y_test) {
    MethodOutcome out;
    const auto model = fit_logistic(z_train, y_train);
    out.test_mcr = mcr(predict_classes(model, z_test), y_test);
    out.p = z_train.cols();
    out.z_test = z_test;
    return out;
}

inline Matrix take_columns(const Matrix& x, const std::vector<Index>& cols) {
    Matrix out(x.rows(), static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = x.col(cols[j]);
    return out;
}

/// Fits one method on (already preliminarily reduced) training data and
/// scores it on the test split.
inline MethodOutcome run_method(const MethodSpec& method, const Matrix& x_train, const Labels& y_train,
                                const Matrix& x_test, const Labels& y_test, Index p, const MassConfig& base,
                                std::uint64_t seed, bool trace_test = false) {
    switch (method.kind) {
        case MethodKind::fd: return score_logistic(x_train, y_train, x_test, y_test);
        case MethodKind::lars: {
            const auto path = lars_path(x_train, y_train, p);
            const auto first = select_first_p(path, p);
            return score_logistic(take_columns(x_train, first.indices), y_train, take_columns(x_test, first.indices),
                                  y_test);
        }
        case MethodKind::pca: {
            const auto r = pca_reduce(x_train, std::min({p, x_train.rows(), x_train.cols()}));
            return score_logistic(r.apply(x_train), y_train, r.apply(x_test), y_test);
        }
        case MethodKind::sis: {
            const auto r = sis_reduce(x_train, y_train, std::min(p, x_train.cols()));
            return score_logistic(r.apply(x_train), y_train, r.apply(x_test), y_test);
        }
        case MethodKind::mass:
        case MethodKind::mfss: {
            MassConfig c = search_config(method, base, seed);
            c.p = p;
            std::optional<EvalSet> eval;
            if (trace_test) eval.emplace(EvalSet{x_test, y_test});
            const auto res = run_mass(x_train, y_train, c, eval);
            MethodOutcome out;
            out.z_test = res.transform(x_test);
            out.test_mcr = mcr(predict_classes(res.model, out.z_test), y_test);
            out.p = res.a_final.cols();
            out.final_sparsity = res.final_sparsity;
            out.trace = res.trace;
            out.a_final = res.a_final;
            return out;
        }
    }
    throw ParameterError("run_method: unsupported method");
}

/// Test MCR for p = 1..p_max of a baseline, reusing one fit of the ordering.
inline std::vector<double> sweep_method(const MethodSpec& method, const Matrix& x_train, const Labels& y_train,
                                        const Matrix& x_test, const Labels& y_test, Index p_max) {
    std::vector<double> out;
    switch (method.kind) {
        case MethodKind::lars: {
            const auto path = lars_path(x_train, y_train, p_max);
            for (Index p = 1; p <= static_cast<Index>(path.entry_order.size()) && p <= p_max; ++p) {
                const std::vector<Index> cols(path.entry_order.begin(), path.entry_order.begin() + p);
                out.push_back(score_logistic(take_columns(x_train, cols), y_train, take_columns(x_test, cols), y_test).test_mcr);
            }
            break;
        }
        case MethodKind::pca: {
            const Index top = std::min({p_max, x_train.rows(), x_train.cols()});
            const auto r = pca_reduce(x_train, top);
            const Matrix tr = r.apply(x_train), te = r.apply(x_test);
            for (Index p = 1; p <= r.m; ++p) out.push_back(score_logistic(tr.leftCols(p), y_train, te.leftCols(p), y_test).test_mcr);
            break;
        }
        case MethodKind::sis: {
            const auto r = sis_reduce(x_train, y_train, std::min(p_max, x_train.cols()));
            const Matrix tr = r.apply(x_train), te = r.apply(x_test);
            for (Index p = 1; p <= r.m; ++p) out.push_back(score_logistic(tr.leftCols(p), y_train, te.leftCols(p), y_test).test_mcr);
            break;
        }
        default: throw ParameterError("sweep_method: only Lars, PCA and SIS support a p-sweep");
    }
    return out;
}

}  // namespace mass::harness
