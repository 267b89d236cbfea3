#pragma once

// Certification of stationary and strong stationary points for the
// piecewise-affine class, the affine-h sufficiency certificate, and a grid
// check of local weak Pareto optimality.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "modc/errors.hpp"
#include "modc/funcs.hpp"
#include "modc/linalg.hpp"
#include "modc/min_norm.hpp"
#include "modc/model.hpp"
#include "modc/sets.hpp"

namespace modc {

inline constexpr double kMembershipTol = 1e-7;
inline constexpr int kStrongGridM2 = 2001;
inline constexpr int kStrongGridM3 = 201;

enum class Strong { yes, no, not_applicable };

inline const char* to_string(Strong s) {
    switch (s) {
        case Strong::yes: return "yes";
        case Strong::no: return "no";
        case Strong::not_applicable: return "not_applicable";
    }
    return "?";
}

/// One linear constraint alpha + delta * lambda_2 <= 0 of the exact
/// strong-stationarity system (n = 1, m = 2, lambda_1 = 1 - lambda_2).
struct LambdaConstraint {
    double alpha = 0.0;
    double delta = 0.0;
    std::string text;  ///< e.g. "lambda_2 <= 0.25"
};

struct StationarityVerdict {
    bool stationary = false;
    std::optional<Vector> multipliers;
    double witness_distance = std::numeric_limits<double>::infinity();
    Vector witness_point;  ///< least-norm element of conv(U C_i) + N_S
    std::vector<Vector> witness_elements;  ///< c_i in C_i, meaningful where lambda_i > 0
    Vector cone_element;   ///< element of N_S used by the witness
    double tol = kMembershipTol;

    Strong strong = Strong::not_applicable;
    std::optional<Vector> strong_multipliers;
    std::optional<Vector> strong_counterexample;  ///< LHS vertex outside the RHS at the best lambda
    std::optional<Vector> strong_best_lambda;
    double strong_violation = 0.0;  ///< its distance to the RHS
    int lambda_grid = 0;
    std::vector<LambdaConstraint> strong_system;  ///< exact system, when n = 1 and m = 2
    std::optional<std::pair<double, double>> strong_interval;  ///< feasible lambda_2 range, if nonempty
};

namespace detail {

/// Exact convex subdifferential for the certifiable class: piecewise-affine
/// built-ins, smooth built-ins (a single gradient), and sums of these.
inline SubdifferentialPolytope exact_subdifferential(const FunctionSpec& spec, const Vector& x, double activity_tol) {
    if (spec.is_piecewise_affine()) return subdifferential_polytope(spec, x, activity_tol);
    if (spec.is_builtin() && spec.is_smooth()) return SubdifferentialPolytope::point(gradient(spec, x));
    if (spec.is<SumFn>() && spec.is_builtin()) {
        const auto& terms = spec.as<SumFn>().terms;
        SubdifferentialPolytope acc = exact_subdifferential(terms.front(), x, activity_tol);
        for (std::size_t t = 1; t < terms.size(); ++t)
            acc = minkowski_sum(acc, exact_subdifferential(terms[t], x, activity_tol));
        return acc;
    }
    throw ContractError("stationarity checks need piecewise-affine or smooth built-in functions");
}

inline void check_class(const ProblemInstance& p, const Vector& xbar) {
    require_dim(xbar, p.n(), "stationarity: point");
    if (!xbar.allFinite()) throw InputError("stationarity: point must be finite");
    for (std::size_t i = 0; i < p.m(); ++i) {
        const auto& o = p.objective(i);
        const std::string tag = "objective " + std::to_string(i + 1);
        if (!o.g.is_builtin() || !o.g.is_smooth()) throw ContractError(tag + ": g must be a smooth built-in");
        for (const auto* s : {&o.f, &o.h})
            if (!s->is_builtin()) throw ContractError(tag + ": user oracles cannot be certified");
    }
}

inline void check_feasible(const ProblemInstance& p, const Vector& xbar) {
    if (!contains(p.set(), xbar, kNormalConeTol)) throw PreconditionError("stationarity: point is not feasible");
}

struct ObjectiveSets {
    std::vector<SubdifferentialPolytope> f_plus_grad;  ///< df_i + grad g_i
    std::vector<SubdifferentialPolytope> h;           ///< dh_i
};

inline ObjectiveSets objective_sets(const ProblemInstance& p, const Vector& xbar, double activity_tol) {
    ObjectiveSets s;
    for (const auto& o : p.objectives()) {
        s.f_plus_grad.push_back(translated(exact_subdifferential(o.f, xbar, activity_tol), gradient(o.g, xbar)));
        s.h.push_back(exact_subdifferential(o.h, xbar, activity_tol));
    }
    return s;
}

/// C_i = df_i + grad g_i - dh_i
inline SubdifferentialPolytope combined(const SubdifferentialPolytope& fg, const SubdifferentialPolytope& h) {
    return minkowski_sum(fg, scaled(h, -1.0));
}

}  // namespace detail

/// Decides 0 in sum_i lambda_i C_i + N_S(xbar) for some lambda in the
/// simplex, through the least-norm point of conv(U_i C_i) + N_S(xbar).
inline StationarityVerdict check_stationary(const ProblemInstance& p, const Vector& xbar, double tol = kMembershipTol,
                                            double activity_tol = kActivityTol) {
    detail::check_class(p, xbar);
    detail::check_feasible(p, xbar);
    const Eigen::Index n = p.n();
    const std::size_t m = p.m();
    const auto sets = detail::objective_sets(p, xbar, activity_tol);

    std::vector<SubdifferentialPolytope> c;
    std::vector<std::size_t> owner;
    std::vector<Vector> cols;
    for (std::size_t i = 0; i < m; ++i) {
        c.push_back(detail::combined(sets.f_plus_grad[i], sets.h[i]));
        for (const auto& v : c.back().vertices()) {
            cols.push_back(v);
            owner.push_back(i);
        }
    }
    Matrix verts(n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) verts.col(static_cast<Eigen::Index>(j)) = cols[j];
    const Matrix rays = normal_cone(p.set(), xbar).rays(n);

    const MinNormResult mn = min_norm_point(verts, rays);

    StationarityVerdict v;
    v.tol = tol;
    Vector lambda = Vector::Zero(static_cast<Eigen::Index>(m));
    std::vector<Vector> sums(m, Vector::Zero(n));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        const double w = mn.hull_weights(static_cast<Eigen::Index>(j));
        lambda(static_cast<Eigen::Index>(owner[j])) += w;
        sums[owner[j]] += w * cols[j];
    }
    lambda /= lambda.sum();
    for (std::size_t i = 0; i < m; ++i) {
        const double li = lambda(static_cast<Eigen::Index>(i));
        v.witness_elements.push_back(li > 0.0 ? Vector(sums[i] / li) : c[i].centroid());
    }
    v.cone_element = rays.cols() > 0 ? Vector(rays * mn.cone_weights) : Vector::Zero(n);
    v.witness_point = mn.point;
    v.witness_distance = mn.distance;
    v.stationary = mn.distance <= tol;
    if (v.stationary) {
        v.multipliers = lambda;
        // Prefer a single-objective multiplier when one is valid.
        for (std::size_t i = 0; i < m && m > 1; ++i) {
            const MinNormResult mi = min_norm_point(c[i].as_matrix(), rays);
            if (mi.distance > tol) continue;
            Vector e = Vector::Zero(static_cast<Eigen::Index>(m));
            e(static_cast<Eigen::Index>(i)) = 1.0;
            v.multipliers = e;
            v.witness_elements[i] = c[i].as_matrix() * mi.hull_weights;
            v.cone_element = rays.cols() > 0 ? Vector(rays * mi.cone_weights) : Vector::Zero(n);
            v.witness_point = mi.point;
            v.witness_distance = mi.distance;
            break;
        }
    }
    return v;
}

/// Distance from 0 to sum_i lambda_i C_i + N_S(xbar) for a fixed lambda.
inline double multiplier_distance(const ProblemInstance& p, const Vector& xbar, const Vector& lambda,
                                  double activity_tol = kActivityTol) {
    detail::check_class(p, xbar);
    detail::check_feasible(p, xbar);
    if (lambda.size() != static_cast<Eigen::Index>(p.m()) || (lambda.array() < 0.0).any() ||
        std::abs(lambda.sum() - 1.0) > 1e-9)
        throw InputError("multiplier_distance: lambda must lie on the unit simplex");
    const auto sets = detail::objective_sets(p, xbar, activity_tol);
    SubdifferentialPolytope acc = scaled(detail::combined(sets.f_plus_grad[0], sets.h[0]), lambda(0));
    for (std::size_t i = 1; i < p.m(); ++i)
        acc = minkowski_sum(acc, scaled(detail::combined(sets.f_plus_grad[i], sets.h[i]), lambda(static_cast<Eigen::Index>(i))));
    return min_norm_point(acc.as_matrix(), normal_cone(p.set(), xbar).rays(p.n())).distance;
}

/// Recomputes || sum_i lambda_i c_i + cone_element || from a stationary verdict.
inline double witness_norm(const StationarityVerdict& v) {
    if (!v.multipliers) throw PreconditionError("witness_norm: verdict carries no multipliers");
    Vector s = v.cone_element;
    for (std::size_t i = 0; i < v.witness_elements.size(); ++i)
        s += (*v.multipliers)(static_cast<Eigen::Index>(i)) * v.witness_elements[i];
    return s.norm();
}

namespace detail {

/// Simplex grid with `per_edge` points per edge, m <= 3.
inline std::vector<Vector> simplex_grid(std::size_t m, int per_edge) {
    std::vector<Vector> out;
    if (m == 1) {
        out.push_back(Vector::Ones(1));
        return out;
    }
    const int g = per_edge - 1;
    if (g < 1) throw InputError("lambda grid needs at least 2 points per edge");
    if (m == 2) {
        for (int a = 0; a <= g; ++a) {
            Vector l(2);
            l(1) = static_cast<double>(a) / g;
            l(0) = static_cast<double>(g - a) / g;
            out.push_back(l);
        }
        return out;
    }
    for (int a = 0; a <= g; ++a)
        for (int b = 0; a + b <= g; ++b) {
            Vector l(3);
            l(1) = static_cast<double>(a) / g;
            l(2) = static_cast<double>(b) / g;
            l(0) = static_cast<double>(g - a - b) / g;
            out.push_back(l);
        }
    return out;
}

inline SubdifferentialPolytope weighted_sum(const std::vector<SubdifferentialPolytope>& sets, const Vector& lambda) {
    SubdifferentialPolytope acc = scaled(sets.front(), lambda(0));
    for (std::size_t i = 1; i < sets.size(); ++i)
        acc = minkowski_sum(acc, scaled(sets[i], lambda(static_cast<Eigen::Index>(i))));
    return acc;
}

inline std::string fmt(double x) {
    std::ostringstream s;
    s << x;
    return s.str();
}

/// Exact lambda_2 system for one-dimensional, two-objective instances.
/// Inclusion [lo_L, hi_L] in [lo_R, hi_R] + N means lo_R <= lo_L unless N has
/// a negative ray, and hi_L <= hi_R unless N has a positive ray.
inline void exact_interval_system(const ObjectiveSets& s, const Matrix& rays, StationarityVerdict& v) {
    bool pos = false, neg = false;
    for (Eigen::Index j = 0; j < rays.cols(); ++j) {
        if (rays(0, j) > 0.0) pos = true;
        if (rays(0, j) < 0.0) neg = true;
    }
    auto add = [&](double c1, double c2) {
        // c1 (1 - l) + c2 l <= 0
        LambdaConstraint c;
        c.alpha = c1;
        c.delta = c2 - c1;
        if (c.delta > 0.0) c.text = "lambda_2 <= " + fmt(-c.alpha / c.delta);
        else if (c.delta < 0.0) c.text = "lambda_2 >= " + fmt(-c.alpha / c.delta);
        else c.text = c.alpha <= 0.0 ? "always satisfied" : "never satisfied";
        v.strong_system.push_back(std::move(c));
    };
    if (!neg) add(s.f_plus_grad[0].lo() - s.h[0].lo(), s.f_plus_grad[1].lo() - s.h[1].lo());
    if (!pos) add(s.h[0].hi() - s.f_plus_grad[0].hi(), s.h[1].hi() - s.f_plus_grad[1].hi());
    double lo = 0.0, hi = 1.0;
    for (const auto& c : v.strong_system) {
        if (c.delta > 0.0) hi = std::min(hi, -c.alpha / c.delta);
        else if (c.delta < 0.0) lo = std::max(lo, -c.alpha / c.delta);
        else if (c.alpha > 0.0) hi = -1.0;
    }
    if (lo <= hi) v.strong_interval = std::make_pair(lo, hi);
}

}  // namespace detail

/// Strong stationarity by a uniform lambda grid. lambda_grid <= 0 selects the
/// default for m (2001 points per edge for m = 2, 201 for m = 3).
inline StationarityVerdict check_strong_stationary(const ProblemInstance& p, const Vector& xbar,
                                                   double tol = kMembershipTol, int lambda_grid = 0,
                                                   double activity_tol = kActivityTol) {
    const std::size_t m = p.m();
    if (m > 3) throw CapacityError("check_strong_stationary: the lambda grid supports m <= 3");
    StationarityVerdict v = check_stationary(p, xbar, tol, activity_tol);
    if (lambda_grid <= 0) lambda_grid = m == 3 ? kStrongGridM3 : kStrongGridM2;
    v.lambda_grid = m == 1 ? 1 : lambda_grid;

    const Eigen::Index n = p.n();
    const auto sets = detail::objective_sets(p, xbar, activity_tol);
    const Matrix rays = normal_cone(p.set(), xbar).rays(n);
    if (n == 1 && m == 2) detail::exact_interval_system(sets, rays, v);

    double best_violation = std::numeric_limits<double>::infinity();
    for (const Vector& lambda : detail::simplex_grid(m, lambda_grid)) {
        const SubdifferentialPolytope lhs = detail::weighted_sum(sets.h, lambda);
        const SubdifferentialPolytope rhs = detail::weighted_sum(sets.f_plus_grad, lambda);
        const Matrix rv = rhs.as_matrix();
        double worst = 0.0;
        Vector worst_vertex = lhs.vertices().front();
        for (const auto& u : lhs.vertices()) {
            const double d = distance_to_hull_plus_cone(u, rv, rays).distance;
            if (d > worst) {
                worst = d;
                worst_vertex = u;
            }
        }
        if (worst <= tol) {
            v.strong = Strong::yes;
            v.strong_multipliers = lambda;
            v.strong_counterexample.reset();
            v.strong_best_lambda = lambda;
            v.strong_violation = worst;
            return v;
        }
        if (worst < best_violation) {
            best_violation = worst;
            v.strong_best_lambda = lambda;
            v.strong_counterexample = worst_vertex;
            v.strong_violation = worst;
        }
    }
    v.strong = Strong::no;
    return v;
}

/// Result of the affine-h sufficiency certificate.
struct Type2Certificate {
    bool granted = false;
    std::string statement;
    std::vector<std::string> premises;
    double radius = 0.0;
    std::string reason;  ///< why the certificate was refused
    std::string note;
};

namespace detail {

/// Radius of a ball around x on which a piecewise-affine built-in stays
/// affine; 0 when x is a kink. Infinity for globally affine functions.
inline double affine_radius(const FunctionSpec& spec, const Vector& x, double activity_tol) {
    const double inf = std::numeric_limits<double>::infinity();
    if (spec.is<ZeroFn>() || spec.is<AffineFn>()) return inf;
    if (spec.is<QuadraticFn>()) return spec.as<QuadraticFn>().Q.cwiseAbs().maxCoeff() == 0.0 ? inf : 0.0;
    if (spec.is<WeightedL1Fn>()) {
        const auto& w = spec.as<WeightedL1Fn>().w;
        double r = inf;
        for (Eigen::Index j = 0; j < x.size(); ++j)
            if (w(j) > 0.0) r = std::min(r, std::abs(x(j)) <= activity_tol ? 0.0 : std::abs(x(j)));
        return r;
    }
    if (spec.is<MaxAffineFn>()) {
        const auto& f = spec.as<MaxAffineFn>();
        const auto poly = subdifferential_polytope(spec, x, activity_tol);
        if (!poly.is_singleton()) return 0.0;
        const Vector a = poly.vertices().front();
        const Vector vals = f.A * x + f.b;
        const double top = vals.maxCoeff();
        double r = inf;
        for (Eigen::Index j = 0; j < f.A.rows(); ++j) {
            const Vector d = f.A.row(j).transpose() - a;
            const double dn = d.norm();
            if (dn == 0.0) continue;  // same slope as the active piece
            r = std::min(r, (top - vals(j)) / dn);
        }
        return r;
    }
    if (spec.is<SumFn>()) {
        double r = inf;
        for (const auto& t : spec.as<SumFn>().terms) r = std::min(r, affine_radius(t, x, activity_tol));
        return r;
    }
    return 0.0;
}

}  // namespace detail

/// Sufficiency certificate for convex f and g with h affine near xbar:
/// a stationary point is then a local weak Pareto solution.
inline Type2Certificate certify_type2(const ProblemInstance& p, const Vector& xbar, const StationarityVerdict& verdict,
                                      double max_radius = 1.0, int samples = 64) {
    Type2Certificate c;
    c.note = "only the affine-h subclass is decided; general polyhedral convex h is not verified";
    auto refuse = [&](std::string why) {
        c.granted = false;
        c.reason = std::move(why);
        return c;
    };
    if (!verdict.stationary) return refuse("point is not stationary");
    if (xbar.size() != p.n() || !contains(p.set(), xbar, kNormalConeTol)) return refuse("point is not feasible");
    c.premises.push_back("point is stationary (distance " + detail::fmt(verdict.witness_distance) + ")");
    for (std::size_t i = 0; i < p.m(); ++i) {
        const auto& o = p.objective(i);
        const std::string tag = "objective " + std::to_string(i + 1);
        if (!o.f.is_builtin() || !o.f.is_convex()) return refuse(tag + ": f is not a convex built-in");
        if (!o.g.is_builtin() || !o.g.is_convex()) return refuse(tag + ": g is not a convex built-in");
        if (!o.h.is_builtin()) return refuse(tag + ": h is a user oracle; affinity cannot be verified");
    }
    c.premises.push_back("every f_i and g_i is a convex built-in");
    c.premises.push_back("feasible set is convex");

    double r = max_radius;
    for (std::size_t i = 0; i < p.m(); ++i) {
        const double ri = detail::affine_radius(p.objective(i).h, xbar, kActivityTol);
        if (!(ri > 0.0)) return refuse("objective " + std::to_string(i + 1) + ": h is not affine near the point");
        r = std::min(r, ri);
    }
    r *= 0.5;  // stay clear of the boundary where a new piece ties

    // Sampled confirmation: the subdifferential of every h_i is the same
    // single vertex on the ball.
    const Eigen::Index n = p.n();
    std::vector<Vector> grads;
    for (std::size_t i = 0; i < p.m(); ++i) {
        const auto& h = p.objective(i).h;
        grads.push_back(h.is_smooth() ? gradient(h, xbar) : subdifferential_polytope(h, xbar).vertices().front());
    }
    for (int s = 0; s < samples; ++s) {
        Vector d(n);
        for (Eigen::Index j = 0; j < n; ++j)
            d(j) = std::cos(2.399963229728653 * (s + 1) * (j + 1) + 0.7 * j);  // deterministic spread
        if (d.norm() == 0.0) continue;
        const Vector y = xbar + (r * (0.25 + 0.75 * (s % 4) / 3.0) / d.norm()) * d;
        for (std::size_t i = 0; i < p.m(); ++i) {
            const auto& h = p.objective(i).h;
            const Vector g = h.is_smooth() ? gradient(h, y) : [&] {
                const auto poly = subdifferential_polytope(h, y);
                return poly.is_singleton() ? poly.vertices().front() : Vector(Vector::Constant(n, std::nan("")));
            }();
            if (!g.allFinite() || (g - grads[i]).cwiseAbs().maxCoeff() > 1e-12)
                return refuse("objective " + std::to_string(i + 1) + ": h is not affine on the sampled ball");
        }
    }
    c.premises.push_back("every h_i is affine on the ball of radius " + detail::fmt(r) + " (analytic bound, " +
                         std::to_string(samples) + " sampled points)");
    c.radius = r;
    c.granted = true;
    c.statement = "the point is a local weak Pareto solution (checked neighbourhood radius " + detail::fmt(r) + ")";
    return c;
}

/// Grid test of local weak Pareto optimality for n <= 2: true iff
/// max_i (F_i(x) - F_i(xbar)) >= -1e-9 at every grid point of S in the ball.
inline bool weak_pareto_bruteforce(const ProblemInstance& p, const Vector& xbar, double radius, double spacing) {
    const Eigen::Index n = p.n();
    if (n > 2) throw CapacityError("weak_pareto_bruteforce: only n <= 2 is supported");
    require_dim(xbar, n, "weak_pareto_bruteforce: point");
    if (!(radius > 0.0) || !(spacing > 0.0)) throw InputError("weak_pareto_bruteforce: radius and spacing must be positive");
    const auto steps = static_cast<long>(std::floor(radius / spacing));
    if (steps > 100000) throw CapacityError("weak_pareto_bruteforce: grid too fine for the radius");
    const Vector f0 = evaluate_objectives(p, xbar);
    Vector x = xbar;
    const long s1 = n == 2 ? steps : 0;
    for (long a = -steps; a <= steps; ++a) {
        for (long b = -s1; b <= s1; ++b) {
            x(0) = xbar(0) + static_cast<double>(a) * spacing;
            if (n == 2) x(1) = xbar(1) + static_cast<double>(b) * spacing;
            if ((x - xbar).norm() > radius) continue;
            if (!contains(p.set(), x, 0.0)) continue;
            if ((evaluate_objectives(p, x) - f0).maxCoeff() < -1e-9) return false;
        }
    }
    return true;
}

namespace detail {

inline std::string vec_text(const Vector& v) {
    std::ostringstream s;
    s << '(';
    for (Eigen::Index j = 0; j < v.size(); ++j) s << (j ? ", " : "") << v(j);
    s << ')';
    return s.str();
}

}  // namespace detail

/// Human-readable report.
inline std::string verdict_text(const StationarityVerdict& v) {
    std::ostringstream s;
    s << "stationary: " << (v.stationary ? "yes" : "no");
    if (v.multipliers) s << " (lambda=" << detail::vec_text(*v.multipliers) << " valid)";
    s << "\n  distance from 0 to the candidate set: " << v.witness_distance << " (tol " << v.tol << ")\n";
    if (v.strong != Strong::not_applicable) {
        s << "strong: " << (v.strong == Strong::yes ? "yes" : "NO") << "  (lambda grid " << v.lambda_grid
          << " points per edge)\n";
        if (v.strong_multipliers) s << "  inclusion holds at lambda=" << detail::vec_text(*v.strong_multipliers) << "\n";
        if (v.strong == Strong::no && v.strong_counterexample)
            s << "  best lambda=" << detail::vec_text(*v.strong_best_lambda) << " leaves "
              << detail::vec_text(*v.strong_counterexample) << " outside the right-hand side (distance "
              << v.strong_violation << ")\n";
        if (!v.strong_system.empty()) {
            s << "  multiplier system with lambda_1 = 1 - lambda_2:\n";
            for (const auto& c : v.strong_system) s << "    " << c.text << "\n";
            if (v.strong_interval)
                s << "  feasible: lambda_2 in [" << v.strong_interval->first << ", " << v.strong_interval->second << "]\n";
            else
                s << "  infeasible: the constraints contradict each other\n";
        }
    }
    return s.str();
}

}  // namespace modc
