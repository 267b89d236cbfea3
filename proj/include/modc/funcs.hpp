#pragma once

// Built-in function catalog: zero, affine, quadratic, weighted l1, max-affine,
// sums of these, and opaque user oracles. Every built-in supports evaluation
// and deterministic subgradient selection; the piecewise-affine ones also
// expose their exact convex subdifferential as a vertex list.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "modc/errors.hpp"
#include "modc/linalg.hpp"

namespace modc {

/// Rows of a max-affine function (or coordinates of an l1 term) are treated as
/// active when within this tolerance, scaled by 1 + |max|.
inline constexpr double kActivityTol = 1e-9;
/// Vertices closer than this (max-norm) are merged.
inline constexpr double kVertexMergeTol = 1e-12;
/// Largest vertex list a polytope may hold.
inline constexpr std::size_t kMaxPolytopeVertices = 4096;
/// Weighted-l1 subdifferentials are expanded only up to this dimension.
inline constexpr Eigen::Index kMaxL1ExpandDim = 12;
inline constexpr int kMaxSumDepth = 4;

class FunctionSpec;

struct ZeroFn {};

struct AffineFn {
    Vector a;
    double b = 0.0;
};

/// x -> 1/2 x^T Q x + q^T x + c with Q symmetric.
struct QuadraticFn {
    Matrix Q;
    Vector q;
    double c = 0.0;
};

/// x -> sum_j w_j |x_j| with w >= 0.
struct WeightedL1Fn {
    Vector w;
};

/// x -> max_j (A_j x + b_j).
struct MaxAffineFn {
    Matrix A;
    Vector b;
};

struct SumFn {
    std::vector<FunctionSpec> terms;
};

/// Caller-supplied oracle. `subgradient` must return an element of the
/// (convex or limiting) subdifferential; `gradient` is required when smooth.
struct UserFn {
    std::string name;
    Eigen::Index dim = 0;
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&)> gradient;
    std::function<Vector(const Vector&)> subgradient;
    bool smooth = false;
    bool convex = false;
};

class FunctionSpec {
public:
    using Variant = std::variant<ZeroFn, AffineFn, QuadraticFn, WeightedL1Fn, MaxAffineFn, SumFn, UserFn>;

    FunctionSpec() : v_(ZeroFn{}) {}

    static FunctionSpec zero() { return FunctionSpec(ZeroFn{}); }

    static FunctionSpec affine(Vector a, double b = 0.0) {
        if (a.size() == 0) throw InputError("affine: empty coefficient vector");
        if (!a.allFinite() || !std::isfinite(b)) throw InputError("affine: non-finite data");
        return FunctionSpec(AffineFn{std::move(a), b});
    }

    static FunctionSpec quadratic(Matrix Q, Vector q = Vector(), double c = 0.0) {
        const Eigen::Index n = Q.rows();
        if (n == 0 || Q.cols() != n) throw InputError("quadratic: Q must be square and nonempty");
        if (q.size() == 0) q = Vector::Zero(n);
        if (q.size() != n) throw InputError("quadratic: q has wrong dimension");
        if (!Q.allFinite() || !q.allFinite() || !std::isfinite(c)) throw InputError("quadratic: non-finite data");
        const double asym = (Q - Q.transpose()).cwiseAbs().maxCoeff();
        if (asym > 1e-12) throw InputError("quadratic: Q is not symmetric (asymmetry " + std::to_string(asym) + ")");
        Matrix sym = 0.5 * (Q + Q.transpose());
        return FunctionSpec(QuadraticFn{std::move(sym), std::move(q), c});
    }

    static FunctionSpec weighted_l1(Vector w) {
        if (w.size() == 0) throw InputError("weighted_l1: empty weight vector");
        if (!w.allFinite() || (w.array() < 0.0).any()) throw InputError("weighted_l1: weights must be finite and nonnegative");
        return FunctionSpec(WeightedL1Fn{std::move(w)});
    }

    static FunctionSpec max_affine(Matrix A, Vector b) {
        if (A.rows() == 0 || A.cols() == 0) throw InputError("max_affine: A must be nonempty");
        if (b.size() != A.rows()) throw InputError("max_affine: b must have one entry per row of A");
        if (!A.allFinite() || !b.allFinite()) throw InputError("max_affine: non-finite data");
        return FunctionSpec(MaxAffineFn{std::move(A), std::move(b)});
    }

    static FunctionSpec sum(std::vector<FunctionSpec> terms) {
        if (terms.empty()) throw InputError("sum: at least one term is required");
        FunctionSpec s(SumFn{std::move(terms)});
        if (s.depth() > kMaxSumDepth) throw InputError("sum: nesting depth exceeds " + std::to_string(kMaxSumDepth));
        std::optional<Eigen::Index> dim;
        for (const auto& t : std::get<SumFn>(s.v_).terms) {
            auto d = t.dimension();
            if (d && dim && *d != *dim) throw InputError("sum: terms have inconsistent dimensions");
            if (d) dim = d;
        }
        return s;
    }

    static FunctionSpec user(UserFn fn) {
        if (!fn.value) throw InputError("user oracle: value callback is required");
        if (!fn.subgradient && !fn.gradient) throw InputError("user oracle: a gradient or subgradient callback is required");
        if (fn.smooth && !fn.gradient) throw InputError("user oracle: smooth oracle needs a gradient callback");
        return FunctionSpec(std::move(fn));
    }

    const Variant& variant() const noexcept { return v_; }

    template <class T>
    bool is() const noexcept { return std::holds_alternative<T>(v_); }

    template <class T>
    const T& as() const { return std::get<T>(v_); }

    /// Dimension fixed by the data, or nullopt for zero (and sums of zeros).
    std::optional<Eigen::Index> dimension() const {
        return std::visit(
            [](const auto& f) -> std::optional<Eigen::Index> {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, ZeroFn>) return std::nullopt;
                else if constexpr (std::is_same_v<T, AffineFn>) return f.a.size();
                else if constexpr (std::is_same_v<T, QuadraticFn>) return f.Q.rows();
                else if constexpr (std::is_same_v<T, WeightedL1Fn>) return f.w.size();
                else if constexpr (std::is_same_v<T, MaxAffineFn>) return f.A.cols();
                else if constexpr (std::is_same_v<T, SumFn>) {
                    for (const auto& t : f.terms)
                        if (auto d = t.dimension()) return d;
                    return std::nullopt;
                } else {
                    return f.dim > 0 ? std::optional<Eigen::Index>(f.dim) : std::nullopt;
                }
            },
            v_);
    }

    int depth() const {
        if (const auto* s = std::get_if<SumFn>(&v_)) {
            int d = 0;
            for (const auto& t : s->terms) d = std::max(d, t.depth());
            return d + 1;
        }
        return 0;
    }

    bool is_builtin() const {
        if (is<UserFn>()) return false;
        if (const auto* s = std::get_if<SumFn>(&v_))
            return std::all_of(s->terms.begin(), s->terms.end(), [](const auto& t) { return t.is_builtin(); });
        return true;
    }

    /// Zero, affine, quadratic, smooth user oracles, and sums of these.
    bool is_smooth() const {
        return std::visit(
            [](const auto& f) -> bool {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, ZeroFn> || std::is_same_v<T, AffineFn> || std::is_same_v<T, QuadraticFn>)
                    return true;
                else if constexpr (std::is_same_v<T, SumFn>)
                    return std::all_of(f.terms.begin(), f.terms.end(), [](const auto& t) { return t.is_smooth(); });
                else if constexpr (std::is_same_v<T, UserFn>)
                    return f.smooth;
                else
                    return false;
            },
            v_);
    }

    /// Zero, affine, weighted l1, max-affine, and sums of these.
    bool is_piecewise_affine() const {
        return std::visit(
            [](const auto& f) -> bool {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, ZeroFn> || std::is_same_v<T, AffineFn> ||
                              std::is_same_v<T, WeightedL1Fn> || std::is_same_v<T, MaxAffineFn>)
                    return true;
                else if constexpr (std::is_same_v<T, SumFn>)
                    return std::all_of(f.terms.begin(), f.terms.end(), [](const auto& t) { return t.is_piecewise_affine(); });
                else
                    return false;
            },
            v_);
    }

    /// Convexity is exact for built-ins (quadratics test Q >= 0) and
    /// declared for user oracles.
    bool is_convex() const {
        return std::visit(
            [](const auto& f) -> bool {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, QuadraticFn>)
                    return min_eigenvalue(f.Q) >= -1e-12 * std::max(1.0, f.Q.cwiseAbs().maxCoeff());
                else if constexpr (std::is_same_v<T, SumFn>)
                    return std::all_of(f.terms.begin(), f.terms.end(), [](const auto& t) { return t.is_convex(); });
                else if constexpr (std::is_same_v<T, UserFn>)
                    return f.convex;
                else
                    return true;
            },
            v_);
    }

private:
    explicit FunctionSpec(Variant v) : v_(std::move(v)) {}
    Variant v_;
};

namespace detail {

inline void check_dim(const FunctionSpec& spec, const Vector& x) {
    if (auto d = spec.dimension(); d && *d != x.size()) {
        throw InputError("function of dimension " + std::to_string(*d) + " evaluated at a point of dimension " +
                         std::to_string(x.size()));
    }
}

inline double raw_eval(const FunctionSpec& spec, const Vector& x) {
    return std::visit(
        [&](const auto& f) -> double {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, ZeroFn>) return 0.0;
            else if constexpr (std::is_same_v<T, AffineFn>) return f.a.dot(x) + f.b;
            else if constexpr (std::is_same_v<T, QuadraticFn>) return 0.5 * x.dot(f.Q * x) + f.q.dot(x) + f.c;
            else if constexpr (std::is_same_v<T, WeightedL1Fn>) return f.w.dot(x.cwiseAbs());
            else if constexpr (std::is_same_v<T, MaxAffineFn>) return (f.A * x + f.b).maxCoeff();
            else if constexpr (std::is_same_v<T, SumFn>) {
                double s = 0.0;
                for (const auto& t : f.terms) s += raw_eval(t, x);
                return s;
            } else {
                return f.value(x);
            }
        },
        spec.variant());
}

/// Indices of max-affine rows active at x.
inline std::vector<Eigen::Index> active_rows(const MaxAffineFn& f, const Vector& x, double tol) {
    const Vector vals = f.A * x + f.b;
    const double mx = vals.maxCoeff();
    const double thr = mx - tol * (1.0 + std::abs(mx));
    std::vector<Eigen::Index> rows;
    for (Eigen::Index j = 0; j < vals.size(); ++j)
        if (vals(j) >= thr) rows.push_back(j);
    return rows;
}

}  // namespace detail

/// f(x). Throws EvaluationError on a non-finite result.
inline double eval(const FunctionSpec& spec, const Vector& x) {
    detail::check_dim(spec, x);
    return require_finite(detail::raw_eval(spec, x), "function value");
}

/// Exact gradient of a smooth spec.
inline Vector gradient(const FunctionSpec& spec, const Vector& x) {
    detail::check_dim(spec, x);
    if (!spec.is_smooth()) throw ContractError("gradient requested for a nonsmooth function; use subgradient_select");
    Vector g = std::visit(
        [&](const auto& f) -> Vector {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, ZeroFn>) return Vector::Zero(x.size());
            else if constexpr (std::is_same_v<T, AffineFn>) return f.a;
            else if constexpr (std::is_same_v<T, QuadraticFn>) return f.Q * x + f.q;
            else if constexpr (std::is_same_v<T, SumFn>) {
                Vector s = Vector::Zero(x.size());
                for (const auto& t : f.terms) s += gradient(t, x);
                return s;
            } else if constexpr (std::is_same_v<T, UserFn>) {
                return f.gradient(x);
            } else {
                throw ContractError("unreachable");
            }
        },
        spec.variant());
    if (g.size() != x.size() || !g.allFinite()) throw EvaluationError("gradient is not finite or has wrong size");
    return g;
}

/// Deterministic subgradient: the centroid of the subdifferential at kinks
/// (midpoint per coordinate for l1, mean of the active rows for max-affine),
/// the gradient for smooth pieces, and the sum of term selections for sums.
inline Vector subgradient_select(const FunctionSpec& spec, const Vector& x) {
    detail::check_dim(spec, x);
    Vector g = std::visit(
        [&](const auto& f) -> Vector {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, ZeroFn>) return Vector::Zero(x.size());
            else if constexpr (std::is_same_v<T, AffineFn>) return f.a;
            else if constexpr (std::is_same_v<T, QuadraticFn>) return f.Q * x + f.q;
            else if constexpr (std::is_same_v<T, WeightedL1Fn>) {
                Vector s(x.size());
                for (Eigen::Index j = 0; j < x.size(); ++j) {
                    if (std::abs(x(j)) <= kActivityTol) s(j) = 0.0;
                    else s(j) = x(j) > 0.0 ? f.w(j) : -f.w(j);
                }
                return s;
            } else if constexpr (std::is_same_v<T, MaxAffineFn>) {
                const auto rows = detail::active_rows(f, x, kActivityTol);
                // Average distinct rows so duplicates do not bias the centroid.
                std::vector<Vector> distinct;
                for (auto j : rows) {
                    Vector r = f.A.row(j).transpose();
                    bool dup = std::any_of(distinct.begin(), distinct.end(), [&](const Vector& d) {
                        return (d - r).cwiseAbs().maxCoeff() <= kVertexMergeTol;
                    });
                    if (!dup) distinct.push_back(std::move(r));
                }
                Vector s = Vector::Zero(x.size());
                for (const auto& d : distinct) s += d;
                return s / static_cast<double>(distinct.size());
            } else if constexpr (std::is_same_v<T, SumFn>) {
                Vector s = Vector::Zero(x.size());
                for (const auto& t : f.terms) s += subgradient_select(t, x);
                return s;
            } else {
                return f.subgradient ? f.subgradient(x) : f.gradient(x);
            }
        },
        spec.variant());
    if (g.size() != x.size() || !g.allFinite()) throw EvaluationError("subgradient is not finite or has wrong size");
    return g;
}

/// A subgradient that is an extreme point of the subdifferential (one active
/// max-affine row, one sign per l1 coordinate). Cutting-plane models built
/// from these recover the affine pieces exactly.
inline Vector vertex_subgradient(const FunctionSpec& spec, const Vector& x) {
    detail::check_dim(spec, x);
    return std::visit(
        [&](const auto& f) -> Vector {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, WeightedL1Fn>) {
                Vector s(x.size());
                for (Eigen::Index j = 0; j < x.size(); ++j) s(j) = x(j) >= 0.0 ? f.w(j) : -f.w(j);
                return s;
            } else if constexpr (std::is_same_v<T, MaxAffineFn>) {
                Eigen::Index best = 0;
                (f.A * x + f.b).maxCoeff(&best);
                return f.A.row(best).transpose();
            } else if constexpr (std::is_same_v<T, SumFn>) {
                Vector s = Vector::Zero(x.size());
                for (const auto& t : f.terms) s += vertex_subgradient(t, x);
                return s;
            } else {
                return subgradient_select(spec, x);
            }
        },
        spec.variant());
}

/// Global Lipschitz constant of a built-in, when one exists (not for
/// quadratics with Q != 0 or user oracles).
inline std::optional<double> lipschitz_bound(const FunctionSpec& spec) {
    return std::visit(
        [](const auto& f) -> std::optional<double> {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, ZeroFn>) return 0.0;
            else if constexpr (std::is_same_v<T, AffineFn>) return f.a.norm();
            else if constexpr (std::is_same_v<T, QuadraticFn>) {
                if (f.Q.isZero(0.0)) return f.q.norm();
                return std::nullopt;
            } else if constexpr (std::is_same_v<T, WeightedL1Fn>) return f.w.norm();
            else if constexpr (std::is_same_v<T, MaxAffineFn>) return f.A.rowwise().norm().maxCoeff();
            else if constexpr (std::is_same_v<T, SumFn>) {
                double s = 0.0;
                for (const auto& t : f.terms) {
                    auto b = lipschitz_bound(t);
                    if (!b) return std::nullopt;
                    s += *b;
                }
                return s;
            } else {
                return std::nullopt;
            }
        },
        spec.variant());
}

/// Sum of the quadratic Hessians inside a built-in (zero elsewhere). For a
/// smooth built-in this is its exact Hessian; for a nonsmooth one it is the
/// curvature of its only nonconvex-capable part.
inline Matrix quadratic_hessian(const FunctionSpec& spec, Eigen::Index n) {
    return std::visit(
        [&](const auto& f) -> Matrix {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, QuadraticFn>) return f.Q;
            else if constexpr (std::is_same_v<T, SumFn>) {
                Matrix h = Matrix::Zero(n, n);
                for (const auto& t : f.terms) h += quadratic_hessian(t, n);
                return h;
            } else {
                return Matrix::Zero(n, n);
            }
        },
        spec.variant());
}

/// Vertex-represented convex polytope. In one dimension it is kept as the
/// interval [lo, hi] (one vertex when degenerate).
class SubdifferentialPolytope {
public:
    SubdifferentialPolytope() = default;
    SubdifferentialPolytope(std::vector<Vector> vertices, bool exact) : exact_(exact) {
        if (vertices.empty()) throw InputError("polytope: empty vertex list");
        const Eigen::Index n = vertices.front().size();
        for (const auto& v : vertices)
            if (v.size() != n) throw InputError("polytope: vertices of mixed dimension");
        if (n == 1) {
            double lo = vertices.front()(0), hi = lo;
            for (const auto& v : vertices) {
                lo = std::min(lo, v(0));
                hi = std::max(hi, v(0));
            }
            vertices_.push_back(Vector::Constant(1, lo));
            if (hi - lo > kVertexMergeTol) vertices_.push_back(Vector::Constant(1, hi));
        } else {
            for (auto& v : vertices) {
                const bool dup = std::any_of(vertices_.begin(), vertices_.end(), [&](const Vector& u) {
                    return (u - v).cwiseAbs().maxCoeff() <= kVertexMergeTol;
                });
                if (!dup) vertices_.push_back(std::move(v));
            }
        }
        if (vertices_.size() > kMaxPolytopeVertices)
            throw CapacityError("polytope: vertex count exceeds " + std::to_string(kMaxPolytopeVertices));
    }

    static SubdifferentialPolytope point(Vector v) { return SubdifferentialPolytope({std::move(v)}, true); }

    const std::vector<Vector>& vertices() const noexcept { return vertices_; }
    bool exact() const noexcept { return exact_; }
    Eigen::Index dim() const { return vertices_.empty() ? 0 : vertices_.front().size(); }
    bool is_singleton() const noexcept { return vertices_.size() == 1; }

    bool is_interval() const { return dim() == 1; }
    double lo() const { return vertices_.front()(0); }
    double hi() const { return vertices_.back()(0); }

    Vector centroid() const {
        Vector c = Vector::Zero(dim());
        for (const auto& v : vertices_) c += v;
        return c / static_cast<double>(vertices_.size());
    }

    /// Vertices as matrix columns.
    Matrix as_matrix() const {
        Matrix m(dim(), static_cast<Eigen::Index>(vertices_.size()));
        for (std::size_t j = 0; j < vertices_.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = vertices_[j];
        return m;
    }

private:
    std::vector<Vector> vertices_;
    bool exact_ = true;
};

inline SubdifferentialPolytope minkowski_sum(const SubdifferentialPolytope& a, const SubdifferentialPolytope& b) {
    if (a.vertices().size() * b.vertices().size() > kMaxPolytopeVertices * 4)
        throw CapacityError("minkowski_sum: vertex count exceeds capacity");
    std::vector<Vector> out;
    out.reserve(a.vertices().size() * b.vertices().size());
    for (const auto& u : a.vertices())
        for (const auto& v : b.vertices()) out.push_back(u + v);
    return SubdifferentialPolytope(std::move(out), a.exact() && b.exact());
}

inline SubdifferentialPolytope scaled(const SubdifferentialPolytope& a, double s) {
    std::vector<Vector> out;
    for (const auto& v : a.vertices()) out.push_back(s * v);
    return SubdifferentialPolytope(std::move(out), a.exact());
}

inline SubdifferentialPolytope translated(const SubdifferentialPolytope& a, const Vector& t) {
    std::vector<Vector> out;
    for (const auto& v : a.vertices()) out.push_back(v + t);
    return SubdifferentialPolytope(std::move(out), a.exact());
}

/// Exact convex subdifferential of a piecewise-affine built-in at x.
inline SubdifferentialPolytope subdifferential_polytope(const FunctionSpec& spec, const Vector& x,
                                                        double activity_tol = kActivityTol) {
    detail::check_dim(spec, x);
    if (!spec.is_piecewise_affine())
        throw ContractError("subdifferential_polytope: function is not piecewise-affine");
    return std::visit(
        [&](const auto& f) -> SubdifferentialPolytope {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, ZeroFn>) return SubdifferentialPolytope::point(Vector::Zero(x.size()));
            else if constexpr (std::is_same_v<T, AffineFn>) return SubdifferentialPolytope::point(f.a);
            else if constexpr (std::is_same_v<T, WeightedL1Fn>) {
                const Eigen::Index n = x.size();
                std::vector<Eigen::Index> kinks;
                Vector base(n);
                for (Eigen::Index j = 0; j < n; ++j) {
                    if (std::abs(x(j)) <= activity_tol && f.w(j) > 0.0) {
                        kinks.push_back(j);
                        base(j) = -f.w(j);
                    } else {
                        base(j) = x(j) > 0.0 ? f.w(j) : (x(j) < 0.0 ? -f.w(j) : 0.0);
                    }
                }
                if (n > kMaxL1ExpandDim && !kinks.empty())
                    throw CapacityError("subdifferential_polytope: weighted_l1 expansion refused above dimension " +
                                        std::to_string(kMaxL1ExpandDim));
                std::vector<Vector> verts;
                const std::size_t count = std::size_t{1} << kinks.size();
                verts.reserve(count);
                for (std::size_t mask = 0; mask < count; ++mask) {
                    Vector v = base;
                    for (std::size_t b = 0; b < kinks.size(); ++b)
                        if (mask & (std::size_t{1} << b)) v(kinks[b]) = f.w(kinks[b]);
                    verts.push_back(std::move(v));
                }
                return SubdifferentialPolytope(std::move(verts), true);
            } else if constexpr (std::is_same_v<T, MaxAffineFn>) {
                std::vector<Vector> verts;
                for (auto j : detail::active_rows(f, x, activity_tol)) verts.push_back(f.A.row(j).transpose());
                return SubdifferentialPolytope(std::move(verts), true);
            } else if constexpr (std::is_same_v<T, SumFn>) {
                SubdifferentialPolytope acc = subdifferential_polytope(f.terms.front(), x, activity_tol);
                for (std::size_t t = 1; t < f.terms.size(); ++t)
                    acc = minkowski_sum(acc, subdifferential_polytope(f.terms[t], x, activity_tol));
                return acc;
            } else {
                throw ContractError("subdifferential_polytope: function is not piecewise-affine");
            }
        },
        spec.variant());
}

}  // namespace modc
