#pragma once

// Convex feasible-set catalog: membership, Euclidean projection and the
// polyhedral normal cone at a point.

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "modc/errors.hpp"
#include "modc/linalg.hpp"

namespace modc {

inline constexpr double kNormalConeTol = 1e-7;
inline constexpr double kDykstraTol = 1e-10;
inline constexpr int kDykstraMaxSweeps = 100000;

struct WholeSpace {};

struct Box {
    Vector lo;
    Vector hi;
};

struct Ball {
    Vector center;
    double radius = 1.0;
};

/// {x >= 0, sum(x) = scale}
struct Simplex {
    double scale = 1.0;
};

/// {x : A x <= b}
struct Halfspaces {
    Matrix A;
    Vector b;
};

class FeasibleSetSpec;
inline Vector project(const FeasibleSetSpec& set, const Vector& x);
inline bool contains(const FeasibleSetSpec& set, const Vector& x, double tol);

class FeasibleSetSpec {
public:
    using Variant = std::variant<WholeSpace, Box, Ball, Simplex, Halfspaces>;

    FeasibleSetSpec() : v_(WholeSpace{}) {}

    static FeasibleSetSpec whole_space() { return FeasibleSetSpec(WholeSpace{}); }

    static FeasibleSetSpec box(Vector lo, Vector hi) {
        if (lo.size() == 0 || lo.size() != hi.size()) throw InputError("box: lo and hi must be nonempty and of equal size");
        if (lo.hasNaN() || hi.hasNaN()) throw InputError("box: NaN bound");
        if ((lo.array() > hi.array()).any()) throw InputError("box: lo must be <= hi componentwise");
        return FeasibleSetSpec(Box{std::move(lo), std::move(hi)});
    }

    static FeasibleSetSpec ball(Vector center, double radius) {
        if (center.size() == 0 || !center.allFinite()) throw InputError("ball: center must be a finite nonempty vector");
        if (!(radius > 0.0) || !std::isfinite(radius)) throw InputError("ball: radius must be positive");
        return FeasibleSetSpec(Ball{std::move(center), radius});
    }

    static FeasibleSetSpec simplex(double scale = 1.0) {
        if (!(scale > 0.0) || !std::isfinite(scale)) throw InputError("simplex: scale must be positive");
        return FeasibleSetSpec(Simplex{scale});
    }

    static FeasibleSetSpec halfspaces(Matrix A, Vector b) {
        if (A.rows() == 0 || A.cols() == 0 || b.size() != A.rows())
            throw InputError("halfspaces: A must be nonempty with one entry of b per row");
        if (!A.allFinite() || !b.allFinite()) throw InputError("halfspaces: non-finite data");
        for (Eigen::Index j = 0; j < A.rows(); ++j)
            if (A.row(j).norm() == 0.0) throw InputError("halfspaces: zero normal in row " + std::to_string(j));
        FeasibleSetSpec s(Halfspaces{std::move(A), std::move(b)});
        // Certify nonemptiness by projecting the origin.
        const Vector origin = Vector::Zero(s.as<Halfspaces>().A.cols());
        try {
            const Vector p = project(s, origin);
            if (!contains(s, p, 1e-8)) throw InputError("halfspaces: region appears to be empty");
        } catch (const ConvergenceError&) {
            throw InputError("halfspaces: region appears to be empty (projection did not converge)");
        }
        return s;
    }

    const Variant& variant() const noexcept { return v_; }
    template <class T>
    bool is() const noexcept { return std::holds_alternative<T>(v_); }
    template <class T>
    const T& as() const { return std::get<T>(v_); }

    std::optional<Eigen::Index> dimension() const {
        if (const auto* b = std::get_if<Box>(&v_)) return b->lo.size();
        if (const auto* b = std::get_if<Ball>(&v_)) return b->center.size();
        if (const auto* h = std::get_if<Halfspaces>(&v_)) return h->A.cols();
        return std::nullopt;
    }

    bool is_bounded() const { return is<Box>() ? as<Box>().lo.allFinite() && as<Box>().hi.allFinite() : (is<Ball>() || is<Simplex>()); }

private:
    explicit FeasibleSetSpec(Variant v) : v_(std::move(v)) {}
    Variant v_;
};

/// Generators of the normal cone: cone(generators) + span(lineality).
struct NormalConeRep {
    std::vector<Vector> generators;
    std::vector<Vector> lineality;

    bool is_trivial() const noexcept { return generators.empty() && lineality.empty(); }

    /// All rays as matrix columns, lineality directions entered with both signs.
    Matrix rays(Eigen::Index n) const {
        Matrix m(n, static_cast<Eigen::Index>(generators.size() + 2 * lineality.size()));
        Eigen::Index c = 0;
        for (const auto& g : generators) m.col(c++) = g;
        for (const auto& l : lineality) {
            m.col(c++) = l;
            m.col(c++) = -l;
        }
        return m;
    }
};

namespace detail {

inline void check_set_dim(const FeasibleSetSpec& set, const Vector& x) {
    if (auto d = set.dimension(); d && *d != x.size())
        throw InputError("set of dimension " + std::to_string(*d) + " used with a point of dimension " +
                         std::to_string(x.size()));
}

inline Vector dykstra(const Halfspaces& h, const Vector& y) {
    const Eigen::Index k = h.A.rows();
    const Vector row_sq = h.A.rowwise().squaredNorm();
    Vector x = y;
    Matrix incr = Matrix::Zero(y.size(), k);
    double change = 0.0;
    double viol = 0.0;
    for (int sweep = 0; sweep < kDykstraMaxSweeps; ++sweep) {
        const Vector start = x;
        for (Eigen::Index j = 0; j < k; ++j) {
            const Vector z = x + incr.col(j);
            const double excess = h.A.row(j).dot(z) - h.b(j);
            x = excess > 0.0 ? Vector(z - (excess / row_sq(j)) * h.A.row(j).transpose()) : z;
            incr.col(j) = z - x;
        }
        change = (x - start).norm();
        viol = std::max(0.0, (h.A * x - h.b).maxCoeff());
        if (change <= kDykstraTol * (1.0 + x.norm()) && viol <= kDykstraTol) return x;
    }
    throw ConvergenceError("halfspace projection (Dykstra) hit the sweep cap; residual " + std::to_string(std::max(change, viol)),
                           std::max(change, viol));
}

}  // namespace detail

/// True iff x violates no defining inequality by more than tol.
inline bool contains(const FeasibleSetSpec& set, const Vector& x, double tol) {
    detail::check_set_dim(set, x);
    return std::visit(
        [&](const auto& s) -> bool {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, WholeSpace>) return true;
            else if constexpr (std::is_same_v<T, Box>)
                return ((x - s.lo).array() >= -tol).all() && ((s.hi - x).array() >= -tol).all();
            else if constexpr (std::is_same_v<T, Ball>) return (x - s.center).norm() <= s.radius + tol;
            else if constexpr (std::is_same_v<T, Simplex>)
                return (x.array() >= -tol).all() && std::abs(x.sum() - s.scale) <= tol;
            else
                return ((s.A * x - s.b).array() <= tol).all();
        },
        set.variant());
}

/// Euclidean projection onto the set.
inline Vector project(const FeasibleSetSpec& set, const Vector& x) {
    detail::check_set_dim(set, x);
    return std::visit(
        [&](const auto& s) -> Vector {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, WholeSpace>) return x;
            else if constexpr (std::is_same_v<T, Box>) return x.cwiseMax(s.lo).cwiseMin(s.hi);
            else if constexpr (std::is_same_v<T, Ball>) {
                const Vector d = x - s.center;
                const double r = d.norm();
                if (r <= s.radius) return x;
                return s.center + (s.radius / r) * d;
            } else if constexpr (std::is_same_v<T, Simplex>) {
                return project_simplex(x, s.scale);
            } else {
                if (((s.A * x - s.b).array() <= 0.0).all()) return x;
                return detail::dykstra(s, x);
            }
        },
        set.variant());
}

/// Normal cone of the convex set at a feasible x; constraints within `tol`
/// of binding contribute generators.
inline NormalConeRep normal_cone(const FeasibleSetSpec& set, const Vector& x, double tol = kNormalConeTol) {
    detail::check_set_dim(set, x);
    if (!contains(set, x, tol)) throw PreconditionError("normal_cone: point is not feasible");
    const Eigen::Index n = x.size();
    NormalConeRep cone;
    auto unit = [n](Eigen::Index j, double sign) {
        Vector e = Vector::Zero(n);
        e(j) = sign;
        return e;
    };
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, WholeSpace>) {
            } else if constexpr (std::is_same_v<T, Box>) {
                for (Eigen::Index j = 0; j < n; ++j) {
                    if (x(j) >= s.hi(j) - tol) cone.generators.push_back(unit(j, 1.0));
                    if (x(j) <= s.lo(j) + tol) cone.generators.push_back(unit(j, -1.0));
                }
            } else if constexpr (std::is_same_v<T, Ball>) {
                const Vector d = x - s.center;
                const double r = d.norm();
                if (r >= s.radius - tol && r > 0.0) cone.generators.push_back(d / r);
            } else if constexpr (std::is_same_v<T, Simplex>) {
                cone.lineality.push_back(Vector::Ones(n) / std::sqrt(static_cast<double>(n)));
                for (Eigen::Index j = 0; j < n; ++j)
                    if (x(j) <= tol) cone.generators.push_back(unit(j, -1.0));
            } else {
                const Vector slack = s.b - s.A * x;
                for (Eigen::Index j = 0; j < s.A.rows(); ++j)
                    if (slack(j) <= tol) cone.generators.push_back(s.A.row(j).transpose());
            }
        },
        set.variant());
    return cone;
}

/// Axis-aligned bounding box of the set in dimension n, when it is bounded.
inline std::optional<std::pair<Vector, Vector>> bounding_box(const FeasibleSetSpec& set, Eigen::Index n) {
    if (set.is<Box>()) {
        const auto& b = set.as<Box>();
        if (b.lo.allFinite() && b.hi.allFinite()) return std::make_pair(b.lo, b.hi);
    } else if (set.is<Ball>()) {
        const auto& b = set.as<Ball>();
        return std::make_pair(Vector(b.center.array() - b.radius), Vector(b.center.array() + b.radius));
    } else if (set.is<Simplex>()) {
        return std::make_pair(Vector(Vector::Zero(n)), Vector(Vector::Constant(n, set.as<Simplex>().scale)));
    }
    return std::nullopt;
}

}  // namespace modc
