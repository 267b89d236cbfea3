#pragma once

// Outer loop of the proximal subgradient method: step-size policy,
// iteration records, termination and trace export.

#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "modc/errors.hpp"
#include "modc/funcs.hpp"
#include "modc/linalg.hpp"
#include "modc/model.hpp"
#include "modc/sets.hpp"
#include "modc/subproblem.hpp"

namespace modc {

enum class InnerStrategy { epigraph, simplex_weight };
enum class GammaPolicy { constant, decreasing };

inline const char* to_string(InnerStrategy s) { return s == InnerStrategy::epigraph ? "epigraph" : "simplex"; }
inline const char* to_string(GammaPolicy g) { return g == GammaPolicy::constant ? "constant" : "decreasing"; }

using WarningSink = std::function<void(const std::string&)>;

struct SolverConfig {
    double gamma_bar_fraction = 0.9;  ///< gamma_bar = fraction / (ell + beta)
    GammaPolicy gamma_policy = GammaPolicy::constant;
    double k0 = 10.0;          ///< decreasing policy: gamma_k = gamma_bar k0 / (k0 + k)
    double gamma_min_fraction = 0.1;  ///< floor gamma_min = fraction * gamma_bar
    double gamma_cap = 1.0;    ///< gamma_bar when ell + beta = 0
    double tol_step = 1e-6;
    int max_outer = 10000;
    InnerStrategy inner = InnerStrategy::epigraph;
    double inner_tol = kInnerTol;
    int inner_max_iter = kInnerMaxIter;
    WarningSink warn;  ///< optional; receives soft-assertion and repair messages

    void validate() const {
        if (!(gamma_bar_fraction > 0.0 && gamma_bar_fraction < 1.0))
            throw InputError("solver: gamma_bar_fraction must lie in the open interval (0, 1), got " +
                             std::to_string(gamma_bar_fraction));
        if (!(k0 > 0.0) || !std::isfinite(k0)) throw InputError("solver: k0 must be positive");
        if (!(gamma_min_fraction > 0.0 && gamma_min_fraction <= 1.0))
            throw InputError("solver: gamma_min_fraction must lie in (0, 1]");
        if (!(gamma_cap > 0.0) || !std::isfinite(gamma_cap)) throw InputError("solver: gamma_cap must be positive");
        if (!(tol_step > 0.0)) throw InputError("solver: tol_step must be positive");
        if (max_outer < 1) throw InputError("solver: max_outer must be at least 1");
        if (!(inner_tol > 0.0)) throw InputError("solver: inner tol must be positive");
        if (inner_max_iter < 1) throw InputError("solver: inner max_iter must be at least 1");
    }
};

/// gamma_bar for a problem: fraction / (ell + beta), or gamma_cap when ell + beta = 0.
inline double gamma_bar(const ProblemInstance& p, const SolverConfig& cfg) {
    const double lb = p.ell() + p.beta();
    return lb > 0.0 ? cfg.gamma_bar_fraction / lb : cfg.gamma_cap;
}

inline double gamma_at(std::size_t k, double gbar, const SolverConfig& cfg) {
    if (cfg.gamma_policy == GammaPolicy::constant) return gbar;
    const double g = gbar * cfg.k0 / (cfg.k0 + static_cast<double>(k));
    return std::max(g, cfg.gamma_min_fraction * gbar);
}

/// One outer step k -> k+1. `x` and `F_values` describe x^{k+1}.
struct IterationRecord {
    std::size_t k = 0;
    Vector x;
    double gamma = 0.0;
    Vector F_values;
    double step_norm = 0.0;
    Vector descent_margins;  ///< F_i(x^k) - F_i(x^{k+1}) - (1/(2 gamma) - (ell+beta)/2) ||step||^2
    int inner_iterations = 0;
    double inner_residual = 0.0;
    Vector weights;
};

enum class SolveStatus { step_tol_met, max_outer, inner_failure };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::step_tol_met: return "step_tol_met";
        case SolveStatus::max_outer: return "max_outer";
        case SolveStatus::inner_failure: return "inner_failure";
    }
    return "?";
}

struct SolveOutcome {
    Vector x0;  ///< starting point after any projection
    Vector F0;
    Vector final_point;
    std::vector<IterationRecord> trace;
    SolveStatus status = SolveStatus::max_outer;
    double stationarity_residual = std::numeric_limits<double>::infinity();
    double gamma_bar = 0.0;
    std::string failure;  ///< inner-failure message, if any
    int descent_violations = 0;  ///< margins below tolerance at exact inner solves

    double min_margin() const {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& r : trace)
            if (r.descent_margins.size() > 0) m = std::min(m, r.descent_margins.minCoeff());
        return m;
    }
};

inline double descent_coefficient(double gamma, const ProblemInstance& p) {
    return 1.0 / (2.0 * gamma) - 0.5 * (p.ell() + p.beta());
}

namespace detail {

inline void warn(const SolverConfig& cfg, const std::string& msg) {
    if (cfg.warn) cfg.warn(msg);
}

inline Vector objectives_at(const ProblemInstance& p, const Vector& x, std::size_t k) {
    try {
        return evaluate_objectives(p, x);
    } catch (const EvaluationError& e) {
        throw EvaluationError("iteration " + std::to_string(k) + ": " + e.what());
    }
}

}  // namespace detail

inline SolveOutcome run(const ProblemInstance& p, const Vector& x0_in, const SolverConfig& cfg) {
    cfg.validate();
    require_dim(x0_in, p.n(), "run: x0");
    if (!x0_in.allFinite()) throw InputError("run: x0 must be finite");

    SolveOutcome out;
    Vector x = x0_in;
    if (!contains(p.set(), x, 1e-10)) {
        x = project(p.set(), x);
        detail::warn(cfg, "x0 is infeasible; projected onto the feasible set");
    }
    out.x0 = x;
    out.gamma_bar = gamma_bar(p, cfg);
    Vector F = detail::objectives_at(p, x, 0);
    out.F0 = F;

    const std::size_t m = p.m();
    SubproblemInput in;
    in.set = p.set();
    for (const auto& o : p.objectives()) in.f_specs.push_back(o.f);
    in.grads.resize(m);
    in.f_at_xk.resize(static_cast<Eigen::Index>(m));

    for (std::size_t k = 0; k < static_cast<std::size_t>(cfg.max_outer); ++k) {
        const double gamma = gamma_at(k, out.gamma_bar, cfg);
        in.xk = x;
        in.gamma = gamma;
        for (std::size_t i = 0; i < m; ++i) {
            const auto& o = p.objective(i);
            const auto ii = static_cast<Eigen::Index>(i);
            try {
                in.grads[i] = gradient(o.g, x) - subgradient_select(o.h, x);
                in.f_at_xk(ii) = eval(o.f, x);
            } catch (const EvaluationError& e) {
                throw EvaluationError("iteration " + std::to_string(k) + ", objective " + std::to_string(i + 1) + ": " +
                                      e.what());
            }
            if (!in.grads[i].allFinite())
                throw EvaluationError("iteration " + std::to_string(k) + ", objective " + std::to_string(i + 1) +
                                      ": non-finite gradient or subgradient");
        }

        SubproblemResult sr;
        try {
            sr = cfg.inner == InnerStrategy::epigraph ? solve_epigraph(in, cfg.inner_tol, cfg.inner_max_iter)
                                                      : solve_simplex_weight(in, cfg.inner_tol, cfg.inner_max_iter);
        } catch (const ConvergenceError& e) {
            out.status = SolveStatus::inner_failure;
            out.failure = "iteration " + std::to_string(k) + ": " + e.what();
            break;
        }

        IterationRecord rec;
        rec.k = k;
        rec.x = sr.x_next;
        rec.gamma = gamma;
        rec.F_values = detail::objectives_at(p, sr.x_next, k + 1);
        rec.step_norm = (sr.x_next - x).norm();
        rec.descent_margins = F - rec.F_values -
                              Vector::Constant(static_cast<Eigen::Index>(m),
                                               descent_coefficient(gamma, p) * rec.step_norm * rec.step_norm);
        rec.inner_iterations = sr.inner_iterations;
        rec.inner_residual = sr.residual;
        rec.weights = sr.weights;

        for (Eigen::Index i = 0; i < rec.descent_margins.size(); ++i) {
            if (rec.descent_margins(i) < -1e-8 * (1.0 + std::abs(F(i)))) {
                std::ostringstream msg;
                msg << "descent inequality violated at k=" << k << ", objective " << i + 1
                    << ": margin " << rec.descent_margins(i) << " (inner residual " << sr.residual << ")";
                if (sr.residual <= cfg.inner_tol) ++out.descent_violations;
                detail::warn(cfg, msg.str());
            }
        }

        x = sr.x_next;
        F = rec.F_values;
        out.stationarity_residual = rec.step_norm / gamma;
        out.trace.push_back(std::move(rec));
        if (out.stationarity_residual <= cfg.tol_step) {
            out.status = SolveStatus::step_tol_met;
            break;
        }
    }
    out.final_point = x;
    return out;
}

struct ResidualHistory {
    std::vector<double> squared_steps;
    std::vector<double> running_sum;
};

inline ResidualHistory residual_history(const SolveOutcome& out) {
    if (out.trace.empty()) throw PreconditionError("residual_history: empty trace");
    ResidualHistory h;
    double s = 0.0;
    for (const auto& r : out.trace) {
        const double q = r.step_norm * r.step_norm;
        s += q;
        h.squared_steps.push_back(q);
        h.running_sum.push_back(s);
    }
    return h;
}

/// Telescoped bound on the sum of squared steps for objective i, given a
/// lower bound on F_i along the run.
inline double summability_bound(const SolveOutcome& out, const ProblemInstance& p, std::size_t i, double lower) {
    const double c = descent_coefficient(out.gamma_bar, p);
    if (!(c > 0.0)) return std::numeric_limits<double>::infinity();
    return (out.F0(static_cast<Eigen::Index>(i)) - lower) / c;
}

inline std::string format_double(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

inline void write_trace_csv(std::ostream& os, const SolveOutcome& out, std::size_t m, Eigen::Index n) {
    os << "k,gamma,step_norm,inner_iters,inner_residual";
    for (std::size_t i = 1; i <= m; ++i) os << ",F_" << i;
    for (std::size_t i = 1; i <= m; ++i) os << ",margin_" << i;
    for (Eigen::Index j = 1; j <= n; ++j) os << ",x_" << j;
    os << '\n';
    for (const auto& r : out.trace) {
        os << r.k << ',' << format_double(r.gamma) << ',' << format_double(r.step_norm) << ',' << r.inner_iterations
           << ',' << format_double(r.inner_residual);
        for (Eigen::Index i = 0; i < r.F_values.size(); ++i) os << ',' << format_double(r.F_values(i));
        for (Eigen::Index i = 0; i < r.descent_margins.size(); ++i) os << ',' << format_double(r.descent_margins(i));
        for (Eigen::Index j = 0; j < r.x.size(); ++j) os << ',' << format_double(r.x(j));
        os << '\n';
    }
}

}  // namespace modc
