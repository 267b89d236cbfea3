#pragma once

// The proximal subgradient step
//
//   minimize_{x in S}  Phi(x) = max_i phi_i(x) + 1/(2 gamma) ||x - xk||^2,
//   phi_i(x) = f_i(x) - f_i(xk) + <grad_i, x - xk>,   grad_i = grad g_i(xk) - u_i,
//
// solved three ways:
//  * solve_epigraph: outer approximation of the epigraph constraints
//    phi_i(x) <= t by cutting planes; each master problem is solved through
//    its dual over the simplex of cut multipliers.
//  * solve_simplex_weight: projected ascent over objective weights lambda on
//    the simplex, each weight vector giving a strongly convex x-problem.
//  * solve_bruteforce: exhaustive coarse-to-fine grid search (n <= 2), used
//    as an independent oracle.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "modc/errors.hpp"
#include "modc/funcs.hpp"
#include "modc/linalg.hpp"
#include "modc/sets.hpp"

namespace modc {

inline constexpr double kInnerTol = 1e-10;
inline constexpr int kInnerMaxIter = 500;

struct SubproblemInput {
    Vector xk;
    std::vector<Vector> grads;  ///< grad g_i(xk) - u_i, one per objective
    std::vector<FunctionSpec> f_specs;
    Vector f_at_xk;  ///< f_i(xk)
    double gamma = 1.0;
    FeasibleSetSpec set;

    std::size_t m() const noexcept { return f_specs.size(); }
    Eigen::Index n() const noexcept { return xk.size(); }

    void validate() const {
        if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InputError("subproblem: gamma must be positive");
        if (f_specs.empty()) throw InputError("subproblem: at least one objective is required");
        if (grads.size() != f_specs.size() || static_cast<std::size_t>(f_at_xk.size()) != f_specs.size())
            throw InputError("subproblem: grads, f_specs and f_at_xk must have one entry per objective");
        if (xk.size() == 0 || !xk.allFinite()) throw InputError("subproblem: xk must be finite and nonempty");
        if (!f_at_xk.allFinite()) throw InputError("subproblem: f_at_xk must be finite");
        for (const auto& g : grads) {
            require_dim(g, xk.size(), "subproblem grad");
            if (!g.allFinite()) throw InputError("subproblem: grads must be finite");
        }
        for (const auto& f : f_specs)
            if (auto d = f.dimension(); d && *d != xk.size()) throw InputError("subproblem: f dimension mismatch");
        if (auto d = set.dimension(); d && *d != xk.size()) throw InputError("subproblem: set dimension mismatch");
    }
};

struct SubproblemResult {
    Vector x_next;
    Vector weights;  ///< lambda on the unit simplex
    double objective_value = 0.0;
    int inner_iterations = 0;
    double residual = 0.0;  ///< certified bound on objective_value - optimal value (convex f)
    bool converged = true;
};

/// phi_i(x) for every objective.
inline Vector piece_values(const SubproblemInput& in, const Vector& x) {
    Vector v(static_cast<Eigen::Index>(in.m()));
    const Vector d = x - in.xk;
    for (std::size_t i = 0; i < in.m(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        v(ii) = eval(in.f_specs[i], x) - in.f_at_xk(ii) + in.grads[i].dot(d);
    }
    return v;
}

/// The step objective Phi(x) (without the indicator of S).
inline double step_objective(const SubproblemInput& in, const Vector& x) {
    return piece_values(in, x).maxCoeff() + (x - in.xk).squaredNorm() / (2.0 * in.gamma);
}

namespace detail {

struct MasterSolution {
    Vector x;
    Vector mu;                ///< multipliers over cuts
    double primal = 0.0;      ///< model objective at x
    double dual = 0.0;        ///< certified lower bound on the model optimum
    int iterations = 0;
};

/// Cuts grouped into blocks; block i carries weight w_i. The model is
/// sum_i w_i max_{c in block i} (A_c x + b_c) + 1/(2 gamma)||x - xk||^2.
struct MasterProblem {
    Matrix A;
    Vector b;
    std::vector<std::vector<Eigen::Index>> blocks;
    Vector block_weights;

    double model_head(const Vector& vals) const {
        double s = 0.0;
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            const double w = block_weights(static_cast<Eigen::Index>(i));
            if (w == 0.0 || blocks[i].empty()) continue;
            double mx = -std::numeric_limits<double>::infinity();
            for (auto c : blocks[i]) mx = std::max(mx, vals(c));
            s += w * mx;
        }
        return s;
    }

    /// Projection onto the product of scaled simplices {mu_block >= 0, sum = w_i}.
    Vector project_dual(const Vector& mu) const {
        Vector out = Vector::Zero(mu.size());
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            const double w = block_weights(static_cast<Eigen::Index>(i));
            if (w == 0.0 || blocks[i].empty()) continue;
            Vector sub(static_cast<Eigen::Index>(blocks[i].size()));
            for (std::size_t k = 0; k < blocks[i].size(); ++k) sub(static_cast<Eigen::Index>(k)) = mu(blocks[i][k]);
            sub = project_simplex(sub, w);
            for (std::size_t k = 0; k < blocks[i].size(); ++k) out(blocks[i][k]) = sub(static_cast<Eigen::Index>(k));
        }
        return out;
    }

    Vector uniform_dual() const {
        Vector out = Vector::Zero(A.rows());
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            const double w = block_weights(static_cast<Eigen::Index>(i));
            for (auto c : blocks[i]) out(c) = w / static_cast<double>(blocks[i].size());
        }
        return out;
    }
};

/// Solves the master model through its dual max_mu D(mu) with
/// x(mu) = P_S(xk - gamma A^T mu) and grad D(mu) = A x(mu) + b, by
/// accelerated projected ascent with adaptive restarts. Stops when
/// primal - dual <= gap_tol.
inline MasterSolution solve_master(const MasterProblem& mp, const Vector& xk, double gamma,
                                   const FeasibleSetSpec& set, double gap_tol, int max_iter,
                                   const Vector* warm_mu = nullptr) {
    const Matrix& A = mp.A;
    const Vector& b = mp.b;
    const Eigen::Index c = A.rows();
    auto x_of = [&](const Vector& mu) { return project(set, Vector(xk - gamma * (A.transpose() * mu))); };
    auto quad = [&](const Vector& x) { return (x - xk).squaredNorm() / (2.0 * gamma); };

    MasterSolution best;
    Vector mu = mp.uniform_dual();
    if (warm_mu && warm_mu->size() <= c && warm_mu->size() > 0) {
        Vector padded = Vector::Zero(c);
        padded.head(warm_mu->size()) = *warm_mu;
        mu = mp.project_dual(padded);
    }
    Vector x = x_of(mu);
    Vector vals = A * x + b;
    double dual = mu.dot(vals) + quad(x);
    double primal = mp.model_head(vals) + quad(x);
    best.x = x;
    best.mu = mu;
    best.primal = primal;
    best.dual = dual;
    if (best.primal - best.dual <= gap_tol) return best;

    const auto pw = spectral_norm(A, 1e-8, 5000);
    const double frob2 = A.squaredNorm();
    const double lip = std::max(1e-300, gamma * (pw.converged ? std::min(frob2, 1.05 * pw.value * pw.value) : frob2));
    Vector y = mu;
    double t = 1.0;
    double prev_dual = dual;
    for (int it = 1; it <= max_iter; ++it) {
        const Vector xy = x_of(y);
        const Vector grad = A * xy + b;
        const Vector mu_new = mp.project_dual(Vector(y + grad / lip));
        x = x_of(mu_new);
        vals = A * x + b;
        dual = mu_new.dot(vals) + quad(x);
        primal = mp.model_head(vals) + quad(x);
        best.iterations = it;
        if (primal < best.primal) {
            best.primal = primal;
            best.x = x;
        }
        if (dual > best.dual) {
            best.dual = dual;
            best.mu = mu_new;
        }
        if (best.primal - best.dual <= gap_tol) break;
        if (dual < prev_dual) {
            // Adaptive restart: drop momentum when the dual value decreases.
            t = 1.0;
            y = mu_new;
        } else {
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            y = mu_new + ((t - 1.0) / t_next) * (mu_new - mu);
            t = t_next;
        }
        mu = mu_new;
        prev_dual = dual;
    }
    return best;
}

/// Per-objective affine minorants collected at trial points:
/// phi_i(y) >= a . y + b for each stored (a, b).
struct Bundle {
    std::vector<Vector> a;
    std::vector<double> b;
    std::vector<std::size_t> owner;

    std::size_t size() const noexcept { return a.size(); }

    void add(std::size_t i, Vector slope, double offset) {
        for (std::size_t c = 0; c < a.size(); ++c) {
            if (owner[c] == i && std::abs(b[c] - offset) <= 1e-14 * (1.0 + std::abs(offset)) &&
                (a[c] - slope).cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + slope.cwiseAbs().maxCoeff()))
                return;
        }
        a.push_back(std::move(slope));
        b.push_back(offset);
        owner.push_back(i);
    }

    /// Cut of phi_i at trial point x using subgradient s of f_i.
    void add_cut(const SubproblemInput& in, std::size_t i, const Vector& x, const Vector& s, double f_x) {
        const auto ii = static_cast<Eigen::Index>(i);
        Vector slope = s + in.grads[i];
        const double offset = f_x - s.dot(x) - in.f_at_xk(ii) - in.grads[i].dot(in.xk);
        add(i, std::move(slope), offset);
    }

    /// Cuts at x for every objective. At xk itself all vertices of a small
    /// piecewise-affine subdifferential are added.
    void add_cuts_at(const SubproblemInput& in, const Vector& x, bool all_vertices) {
        for (std::size_t i = 0; i < in.m(); ++i) {
            const auto& f = in.f_specs[i];
            const double fx = eval(f, x);
            bool done = false;
            if (all_vertices && f.is_builtin() && f.is_piecewise_affine()) {
                try {
                    const auto poly = subdifferential_polytope(f, x);
                    if (poly.vertices().size() <= 64) {
                        for (const auto& v : poly.vertices()) add_cut(in, i, x, v, fx);
                        done = true;
                    }
                } catch (const CapacityError&) {
                }
            }
            if (!done) add_cut(in, i, x, f.is_builtin() ? vertex_subgradient(f, x) : subgradient_select(f, x), fx);
        }
    }
};

inline double master_gap_tol(double tol) { return std::max(1e-15, 1e-2 * tol); }

/// Cutting-plane prox for the weighted function theta = sum_i w_i phi_i
/// (w on the simplex); `w` empty means the max-form max_i phi_i.
struct ProxSolve {
    Vector x;
    double value = 0.0;        ///< true objective at x
    double lower = 0.0;        ///< certified lower bound on the optimum
    Vector mu_by_objective;    ///< aggregated master multipliers (max-form only)
    int iterations = 0;
};

inline ProxSolve cutting_plane_prox(const SubproblemInput& in, Bundle& bundle, const Vector& weights, double tol,
                                    int max_iter) {
    const bool max_form = weights.size() == 0;
    const Eigen::Index n = in.n();
    auto true_value = [&](const Vector& x) {
        const Vector v = piece_values(in, x);
        const double head = max_form ? v.maxCoeff() : weights.dot(v);
        return head + (x - in.xk).squaredNorm() / (2.0 * in.gamma);
    };

    ProxSolve out;
    out.value = std::numeric_limits<double>::infinity();
    out.lower = -std::numeric_limits<double>::infinity();
    Vector warm;
    for (int it = 1; it <= max_iter; ++it) {
        MasterProblem mp;
        mp.A.resize(static_cast<Eigen::Index>(bundle.size()), n);
        mp.b.resize(static_cast<Eigen::Index>(bundle.size()));
        for (std::size_t c = 0; c < bundle.size(); ++c) {
            mp.A.row(static_cast<Eigen::Index>(c)) = bundle.a[c].transpose();
            mp.b(static_cast<Eigen::Index>(c)) = bundle.b[c];
        }
        if (max_form) {
            mp.blocks.assign(1, {});
            for (std::size_t c = 0; c < bundle.size(); ++c) mp.blocks[0].push_back(static_cast<Eigen::Index>(c));
            mp.block_weights = Vector::Ones(1);
        } else {
            mp.blocks.assign(in.m(), {});
            for (std::size_t c = 0; c < bundle.size(); ++c)
                mp.blocks[bundle.owner[c]].push_back(static_cast<Eigen::Index>(c));
            mp.block_weights = weights;
        }

        const MasterSolution ms = solve_master(mp, in.xk, in.gamma, in.set, master_gap_tol(tol), 50000,
                                               &warm);
        warm = ms.mu;
        out.iterations = it;
        out.lower = std::max(out.lower, ms.dual);
        const double val = true_value(ms.x);
        if (val < out.value) {
            out.value = val;
            out.x = ms.x;
            if (max_form) {
                out.mu_by_objective = Vector::Zero(static_cast<Eigen::Index>(in.m()));
                for (std::size_t c = 0; c < bundle.size(); ++c)
                    out.mu_by_objective(static_cast<Eigen::Index>(bundle.owner[c])) += ms.mu(static_cast<Eigen::Index>(c));
            }
        }
        if (out.value - out.lower <= tol) break;
        const std::size_t before = bundle.size();
        bundle.add_cuts_at(in, ms.x, false);
        if (bundle.size() == before) break;  // no new information: model is exact at x
    }
    return out;
}

/// Uniform weights over objectives whose piece value is within `tol` of the max.
inline Vector active_weights(const Vector& values, double tol) {
    const double mx = values.maxCoeff();
    Vector w = Vector::Zero(values.size());
    for (Eigen::Index i = 0; i < values.size(); ++i)
        if (values(i) >= mx - tol) w(i) = 1.0;
    return w / w.sum();
}

/// Normalizes raw multipliers and drops mass on objectives inactive by more
/// than 1e-5 at the returned point.
inline Vector clean_weights(const Vector& raw, const Vector& vals) {
    if (raw.size() != vals.size() || !(raw.sum() > 0.0)) return active_weights(vals, 1e-7);
    Vector w = raw.cwiseMax(0.0);
    const double mx = vals.maxCoeff();
    for (Eigen::Index i = 0; i < vals.size(); ++i)
        if (vals(i) < mx - 1e-5) w(i) = 0.0;
    if (!(w.sum() > 0.0)) return active_weights(vals, 1e-7);
    return w / w.sum();
}

inline void ensure_no_worse_than_xk(const SubproblemInput& in, SubproblemResult& r) {
    if (!contains(in.set, in.xk, 0.0)) return;
    if (r.objective_value > 0.0) {
        // Phi(xk) = 0; an inexact or nonconvex inner solve must not be worse.
        r.x_next = in.xk;
        r.objective_value = 0.0;
        r.weights = active_weights(piece_values(in, in.xk), 1e-7);
    }
}

}  // namespace detail

/// Epigraph route: cutting planes on phi_i(x) <= t, master problems solved
/// exactly through their simplex dual. Weights are the master multipliers
/// aggregated per objective.
inline SubproblemResult solve_epigraph(const SubproblemInput& in, double tol = kInnerTol, int max_iter = kInnerMaxIter) {
    in.validate();
    detail::Bundle bundle;
    bundle.add_cuts_at(in, in.xk, true);
    const detail::ProxSolve ps = detail::cutting_plane_prox(in, bundle, Vector(), tol, max_iter);

    SubproblemResult r;
    r.x_next = ps.x;
    r.objective_value = ps.value;
    r.inner_iterations = ps.iterations;
    r.residual = std::max(0.0, ps.value - ps.lower);
    r.converged = r.residual <= tol;
    r.weights = detail::clean_weights(ps.mu_by_objective, piece_values(in, r.x_next));
    detail::ensure_no_worse_than_xk(in, r);
    return r;
}

/// Weight route: maximize psi(lambda) = min_{x in S} sum_i lambda_i phi_i(x) +
/// 1/(2 gamma)||x - xk||^2 over the simplex. grad psi(lambda) is the vector of
/// per-objective values phi(x(lambda)); accelerated projected ascent with
/// backtracking. Stops when max_i phi_i - lambda . phi (certified) < tol.
namespace detail {

/// Golden-section minimizer of Phi on the segment [a, b] (Phi is convex there).
inline Vector segment_min(const SubproblemInput& in, const Vector& a, const Vector& b) {
    const Vector d = b - a;
    if (d.norm() == 0.0) return a;
    auto at = [&](double t) { return step_objective(in, Vector(a + t * d)); };
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = 0.0, hi = 1.0;
    double t1 = hi - r * (hi - lo), t2 = lo + r * (hi - lo);
    double f1 = at(t1), f2 = at(t2);
    for (int it = 0; it < 90 && hi - lo > 1e-18; ++it) {
        if (f1 <= f2) {
            hi = t2;
            t2 = t1;
            f2 = f1;
            t1 = hi - r * (hi - lo);
            f1 = at(t1);
        } else {
            lo = t1;
            t1 = t2;
            f1 = f2;
            t2 = lo + r * (hi - lo);
            f2 = at(t2);
        }
    }
    double best_t = f1 <= f2 ? t1 : t2;
    double best = std::min(f1, f2);
    for (double t : {0.0, 1.0})
        if (const double v = at(t); v < best) {
            best = v;
            best_t = t;
        }
    return a + best_t * d;
}

}  // namespace detail

inline SubproblemResult solve_simplex_weight(const SubproblemInput& in, double tol = kInnerTol,
                                             int max_iter = kInnerMaxIter) {
    in.validate();
    const std::size_t m = in.m();
    const auto me = static_cast<Eigen::Index>(m);
    detail::Bundle bundle;
    bundle.add_cuts_at(in, in.xk, true);

    struct Eval {
        Vector lambda;
        Vector x;
        Vector values;
        double psi = 0.0;    // lambda . values + quad(x)
        double lower = 0.0;  // certified lower bound on psi(lambda)
        int inner = 0;
    };
    int total_inner = 0;
    const double inner_tol = std::max(1e-15, 1e-2 * tol);
    auto evaluate = [&](const Vector& lambda) {
        Eval e;
        e.lambda = lambda;
        const detail::ProxSolve ps = detail::cutting_plane_prox(in, bundle, lambda, inner_tol, max_iter);
        e.x = ps.x;
        e.values = piece_values(in, e.x);
        e.psi = lambda.dot(e.values) + (e.x - in.xk).squaredNorm() / (2.0 * in.gamma);
        e.lower = ps.lower;
        e.inner = ps.iterations;
        total_inner += ps.iterations;
        return e;
    };
    auto full = [&](const Eval& e) { return e.values.maxCoeff() + (e.x - in.xk).squaredNorm() / (2.0 * in.gamma); };

    Eval cur = evaluate(Vector::Constant(me, 1.0 / static_cast<double>(m)));
    Eval best_primal = cur;
    double best_lower = cur.lower;
    Vector best_lambda = cur.lambda;
    int outer = 0;
    if (m > 1) {
        double step = 1.0;
        Eval y = cur;
        double t = 1.0;
        for (outer = 1; outer <= max_iter; ++outer) {
            if (full(best_primal) - best_lower <= tol) break;
            // Backtracking on the ascent step from y.
            Eval cand;
            for (int bt = 0; bt < 60; ++bt) {
                const Vector lam = project_simplex(Vector(y.lambda + step * y.values));
                cand = evaluate(lam);
                const Vector d = lam - y.lambda;
                const double model = y.psi + y.values.dot(d) - d.squaredNorm() / (2.0 * step);
                if (cand.psi >= model - 1e-14 * (1.0 + std::abs(y.psi)) || d.norm() < 1e-16) break;
                step *= 0.5;
            }
            // x(lambda) is only sqrt-accurate in the dual gap; recover a
            // better primal point on the segment to the incumbent.
            {
                const double before = full(best_primal);
                Vector xs = detail::segment_min(in, best_primal.x, cand.x);
                Eval e;
                e.lambda = cand.lambda;
                e.x = std::move(xs);
                e.values = piece_values(in, e.x);
                if (full(e) < before) best_primal = std::move(e);
                if (full(cand) < full(best_primal)) best_primal = cand;
            }
            if (cand.lower > best_lower) {
                best_lower = cand.lower;
                best_lambda = cand.lambda;
            }
            if (cand.psi < cur.psi) {
                t = 1.0;
                y = cand;
            } else {
                const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
                const Vector lam_y = project_simplex(Vector(cand.lambda + ((t - 1.0) / t_next) * (cand.lambda - cur.lambda)));
                y = (lam_y - cand.lambda).norm() < 1e-16 ? cand : evaluate(lam_y);
                t = t_next;
            }
            cur = cand;
            step *= 1.5;
        }
    }

    SubproblemResult r;
    r.x_next = best_primal.x;
    r.objective_value = full(best_primal);
    r.inner_iterations = total_inner;
    r.residual = std::max(0.0, r.objective_value - best_lower);
    r.converged = r.residual <= tol;
    r.weights = detail::clean_weights(best_lambda, piece_values(in, r.x_next));
    detail::ensure_no_worse_than_xk(in, r);
    return r;
}

/// Radius around xk that contains the step minimizer. With s_i a
/// subgradient of f_i at xk, Phi(x) >= -G ||x - xk|| + ||x - xk||^2 / (2 gamma)
/// for G = min_i ||s_i + grad_i||, and Phi(x*) <= Phi(P(xk)), which gives
/// ||x* - xk|| <= 2 gamma G + d with d = ||P(xk) - xk||.
inline double bruteforce_radius(const SubproblemInput& in) {
    double g = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < in.m(); ++i)
        g = std::min(g, (subgradient_select(in.f_specs[i], in.xk) + in.grads[i]).norm());
    const double d = (project(in.set, in.xk) - in.xk).norm();
    return 2.0 * in.gamma * g + d;
}

namespace detail {

/// Minimizes a convex function of one variable over [lo, hi] by repeated
/// uniform sampling: the best sample of a convex function brackets the
/// minimizer between its two neighbours. Stops once the sample spacing is
/// at most `spacing`. `f` may return +inf outside its domain.
template <class F>
std::pair<double, double> bracket_min(F&& f, double lo, double hi, double spacing, long& evals) {
    constexpr int kSamples = 40;
    const double inf = std::numeric_limits<double>::infinity();
    double best_t = lo, best = inf;
    if (hi <= lo) {
        ++evals;
        return {lo, f(lo)};
    }
    while (true) {
        const double h = (hi - lo) / kSamples;
        int jbest = 0;
        double level_best = inf;
        for (int j = 0; j <= kSamples; ++j) {
            const double t = j == kSamples ? hi : lo + j * h;
            const double v = f(t);
            ++evals;
            if (v < level_best) {
                level_best = v;
                jbest = j;
            }
            if (v < best) {
                best = v;
                best_t = t;
            }
        }
        if (h <= spacing) break;
        const double nlo = lo + std::max(0, jbest - 1) * h;
        const double nhi = jbest + 1 >= kSamples ? hi : lo + (jbest + 1) * h;
        if (!(nhi - nlo < hi - lo)) break;
        lo = nlo;
        hi = nhi;
    }
    return {best_t, best};
}

/// Interval of t on the line {base + t e} inside the set, clipped to [lo, hi].
inline std::pair<double, double> line_section(const FeasibleSetSpec& set, const Vector& base, const Vector& e, double lo,
                                              double hi) {
    return std::visit(
        [&](const auto& s) -> std::pair<double, double> {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, WholeSpace>) {
                return {lo, hi};
            } else if constexpr (std::is_same_v<T, Box>) {
                for (Eigen::Index j = 0; j < e.size(); ++j) {
                    if (e(j) == 0.0) {
                        if (base(j) < s.lo(j) || base(j) > s.hi(j)) return {1.0, 0.0};
                        continue;
                    }
                    double a = (s.lo(j) - base(j)) / e(j), b = (s.hi(j) - base(j)) / e(j);
                    if (a > b) std::swap(a, b);
                    lo = std::max(lo, a);
                    hi = std::min(hi, b);
                }
                return {lo, hi};
            } else if constexpr (std::is_same_v<T, Ball>) {
                const Vector w = base - s.center;
                const double a = e.squaredNorm(), b = w.dot(e), c = w.squaredNorm() - s.radius * s.radius;
                const double disc = b * b - a * c;
                if (disc < 0.0) return {1.0, 0.0};
                const double r = std::sqrt(disc);
                return {std::max(lo, (-b - r) / a), std::min(hi, (-b + r) / a)};
            } else if constexpr (std::is_same_v<T, Halfspaces>) {
                const Vector ae = s.A * e;
                const Vector slack = s.b - s.A * base;
                for (Eigen::Index j = 0; j < s.A.rows(); ++j) {
                    if (ae(j) > 0.0) hi = std::min(hi, slack(j) / ae(j));
                    else if (ae(j) < 0.0) lo = std::max(lo, slack(j) / ae(j));
                    else if (slack(j) < 0.0) return {1.0, 0.0};
                }
                return {lo, hi};
            } else {
                throw ContractError("line_section: simplex is handled by its parametrization");
            }
        },
        set.variant());
}

/// Range of x_1 over set ∩ [lo, hi] in the plane.
inline std::pair<double, double> first_coordinate_range(const FeasibleSetSpec& set, const Vector& lo, const Vector& hi) {
    if (set.is<Ball>()) {
        const auto& b = set.as<Ball>();
        // Chord of the ball at each x_1, intersected with the x_2 range.
        const double c1 = b.center(0), c2 = b.center(1), r = b.radius;
        double a = std::max(lo(0), c1 - r), z = std::min(hi(0), c1 + r);
        // Exclude the caps where the chord misses [lo_2, hi_2].
        auto meets = [&](double x1) {
            const double half = std::sqrt(std::max(0.0, r * r - (x1 - c1) * (x1 - c1)));
            return c2 - half <= hi(1) && c2 + half >= lo(1);
        };
        if (a > z) return {1.0, 0.0};
        if (!meets(a) || !meets(z)) {
            // The x_2 strip cuts the disc; its x_1 range follows from the
            // nearest horizontal line.
            const double y = std::clamp(c2, lo(1), hi(1));
            const double dy = y - c2;
            if (std::abs(dy) > r) return {1.0, 0.0};
            const double half = std::sqrt(r * r - dy * dy);
            a = std::max(a, c1 - half);
            z = std::min(z, c1 + half);
        }
        return {a, z};
    }
    if (set.is<Halfspaces>()) {
        // Vertices of the polygon {A x <= b} ∩ box: all pairwise line intersections.
        const auto& h = set.as<Halfspaces>();
        std::vector<Vector> normals;
        std::vector<double> rhs;
        for (Eigen::Index j = 0; j < h.A.rows(); ++j) {
            normals.push_back(h.A.row(j).transpose());
            rhs.push_back(h.b(j));
        }
        for (int k = 0; k < 2; ++k) {
            Vector e = Vector::Zero(2);
            e(k) = 1.0;
            normals.push_back(e);
            rhs.push_back(hi(k));
            normals.push_back(-e);
            rhs.push_back(-lo(k));
        }
        const double tol = 1e-9 * (1.0 + (hi - lo).cwiseAbs().maxCoeff() + lo.cwiseAbs().maxCoeff());
        double a = std::numeric_limits<double>::infinity(), z = -a;
        for (std::size_t p = 0; p < normals.size(); ++p) {
            for (std::size_t q = p + 1; q < normals.size(); ++q) {
                Eigen::Matrix2d mtx;
                mtx.row(0) = normals[p].transpose();
                mtx.row(1) = normals[q].transpose();
                const double det = mtx.determinant();
                if (std::abs(det) < 1e-14 * normals[p].norm() * normals[q].norm()) continue;
                const Eigen::Vector2d v = mtx.inverse() * Eigen::Vector2d(rhs[p], rhs[q]);
                bool ok = true;
                for (std::size_t r = 0; r < normals.size() && ok; ++r)
                    ok = normals[r].dot(Vector(v)) <= rhs[r] + tol;
                if (ok) {
                    a = std::min(a, v(0));
                    z = std::max(z, v(0));
                }
            }
        }
        return {a, z};
    }
    if (set.is<Box>()) {
        const auto& b = set.as<Box>();
        return {std::max(lo(0), b.lo(0)), std::min(hi(0), b.hi(0))};
    }
    return {lo(0), hi(0)};
}

}  // namespace detail

/// Grid oracle for n <= 2. Phi is minimized by nested one-dimensional
/// bracketing grids (the inner minimum over x_2 is convex in x_1) over the
/// region that provably contains the minimizer, down to sample spacing
/// `spacing`. Independent of the cut-based solvers.
inline SubproblemResult solve_bruteforce(const SubproblemInput& in, double spacing) {
    in.validate();
    const Eigen::Index n = in.n();
    if (n > 2) throw CapacityError("solve_bruteforce: only n <= 2 is supported");
    if (!(spacing > 0.0)) throw InputError("solve_bruteforce: spacing must be positive");

    SubproblemResult r;
    long evals = 0;
    const double inf = std::numeric_limits<double>::infinity();

    if (in.set.is<Simplex>()) {
        const double s = in.set.as<Simplex>().scale;
        if (n == 1) {
            r.x_next = Vector::Constant(1, s);
        } else {
            auto point = [&](double t) {
                Vector x(2);
                x << t, s - t;
                return x;
            };
            const auto [t, v] = detail::bracket_min([&](double tt) { return step_objective(in, point(tt)); }, 0.0, s,
                                                    spacing, evals);
            (void)v;
            r.x_next = point(t);
        }
    } else {
        const double radius = bruteforce_radius(in) * (1.0 + 1e-9) + spacing;
        Vector lo = in.xk.array() - radius;
        Vector hi = in.xk.array() + radius;
        if (n == 1) {
            const auto [a, z] = detail::line_section(in.set, Vector::Zero(1), Vector::Ones(1), lo(0), hi(0));
            if (a > z) throw InputError("solve_bruteforce: empty search region");
            auto f = [&](double t) { return step_objective(in, Vector::Constant(1, t)); };
            r.x_next = Vector::Constant(1, detail::bracket_min(f, a, z, spacing, evals).first);
        } else {
            const auto [a, z] = detail::first_coordinate_range(in.set, lo, hi);
            if (a > z) throw InputError("solve_bruteforce: empty search region");
            Vector e2(2);
            e2 << 0.0, 1.0;
            // Section minima must be much sharper than the x_1 resolution:
            // an error eps in them can move the outer bracket by about
            // sqrt(2 gamma eps).
            const double inner_spacing = std::max(spacing * spacing, 1e-15);
            auto inner = [&](double x1) {
                Vector base(2);
                base << x1, 0.0;
                const auto [b0, b1] = detail::line_section(in.set, base, e2, lo(1), hi(1));
                if (b0 > b1) return std::make_pair(0.0, inf);
                return detail::bracket_min(
                    [&](double x2) {
                        Vector x(2);
                        x << x1, x2;
                        return step_objective(in, x);
                    },
                    b0, b1, inner_spacing, evals);
            };
            const double x1 = detail::bracket_min([&](double t) { return inner(t).second; }, a, z, spacing, evals).first;
            const auto best = inner(x1);
            if (!std::isfinite(best.second)) throw InputError("solve_bruteforce: no feasible sample found");
            r.x_next.resize(2);
            r.x_next << x1, best.first;
        }
    }
    r.objective_value = step_objective(in, r.x_next);
    r.weights = detail::active_weights(piece_values(in, r.x_next), 1e-7);
    r.inner_iterations = static_cast<int>(std::min<long>(evals, std::numeric_limits<int>::max()));
    r.residual = spacing;
    return r;
}

}  // namespace modc
