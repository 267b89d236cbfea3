#pragma once

// Least-norm points of sets of the form conv(V) + cone(G).
//
// The problem min ||V a + G b|| s.t. a in simplex, b >= 0 is mapped onto a
// nonnegative least-squares problem (the least-distance-programming dual):
//
//     min_{u >= 0} || [V G; 1 0] u - e_{n+1} ||
//
// With z = V u_V + G u_G and s = sum(u_V), the KKT conditions of the NNLS
// give ||z||^2 = s (1 - s), so z / s is the least-norm point of the set and
// u_V / s its convex-combination weights. The active-set NNLS terminates
// finitely, so membership decisions do not depend on an iteration budget.

#include <cmath>
#include <limits>
#include <vector>

#include "modc/linalg.hpp"

namespace modc {

struct NnlsResult {
    Vector solution;
    double residual_norm = 0.0;
    int iterations = 0;
};

/// Lawson-Hanson active-set NNLS: min ||E u - f|| subject to u >= 0.
inline NnlsResult nnls(const Matrix& e, const Vector& f, int max_outer = 0) {
    const Eigen::Index q = e.cols();
    if (max_outer <= 0) max_outer = static_cast<int>(3 * q + 30);
    NnlsResult out;
    out.solution = Vector::Zero(q);
    Vector& u = out.solution;
    std::vector<char> passive(static_cast<std::size_t>(q), 0);

    const double scale = std::max(1.0, e.cwiseAbs().maxCoeff());
    const double wtol = 1e-13 * scale * scale;

    auto solve_passive = [&](Vector& s) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index j = 0; j < q; ++j)
            if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
        Matrix ep(e.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) ep.col(static_cast<Eigen::Index>(k)) = e.col(idx[k]);
        Vector sp = ep.completeOrthogonalDecomposition().solve(f);
        s = Vector::Zero(q);
        for (std::size_t k = 0; k < idx.size(); ++k) s(idx[k]) = sp(static_cast<Eigen::Index>(k));
    };

    Vector w = e.transpose() * (f - e * u);
    for (int outer = 0; outer < max_outer; ++outer) {
        Eigen::Index best = -1;
        double wmax = wtol;
        for (Eigen::Index j = 0; j < q; ++j) {
            if (!passive[static_cast<std::size_t>(j)] && w(j) > wmax) {
                wmax = w(j);
                best = j;
            }
        }
        if (best < 0) break;
        passive[static_cast<std::size_t>(best)] = 1;
        ++out.iterations;

        Vector s;
        solve_passive(s);
        // A freshly added column with a nonpositive coefficient means the
        // gradient test was numerically marginal; drop it and stop.
        if (s(best) <= 0.0) {
            passive[static_cast<std::size_t>(best)] = 0;
            break;
        }
        for (int inner = 0; inner < 3 * q + 10; ++inner) {
            double alpha = std::numeric_limits<double>::infinity();
            bool infeasible = false;
            for (Eigen::Index j = 0; j < q; ++j) {
                if (passive[static_cast<std::size_t>(j)] && s(j) <= 0.0) {
                    infeasible = true;
                    alpha = std::min(alpha, u(j) / (u(j) - s(j)));
                }
            }
            if (!infeasible) break;
            u += alpha * (s - u);
            for (Eigen::Index j = 0; j < q; ++j) {
                if (passive[static_cast<std::size_t>(j)] && u(j) <= 1e-15) {
                    passive[static_cast<std::size_t>(j)] = 0;
                    u(j) = 0.0;
                }
            }
            solve_passive(s);
        }
        u = s;
        w = e.transpose() * (f - e * u);
    }
    out.residual_norm = (e * u - f).norm();
    return out;
}

struct MinNormResult {
    Vector point;       ///< least-norm element of conv(V) + cone(G)
    Vector hull_weights;  ///< convex weights over the columns of V
    Vector cone_weights;  ///< nonnegative weights over the columns of G
    double distance = 0.0;
};

/// Least-norm point of conv(columns of `vertices`) + cone(columns of `rays`).
/// `rays` may have zero columns. `vertices` must have at least one column.
inline MinNormResult min_norm_point(const Matrix& vertices, const Matrix& rays) {
    const Eigen::Index n = vertices.rows();
    const Eigen::Index k = vertices.cols();
    const Eigen::Index l = rays.cols();
    if (k == 0) throw InputError("min_norm_point: empty vertex set");
    if (l > 0 && rays.rows() != n) throw InputError("min_norm_point: ray dimension mismatch");

    Matrix e = Matrix::Zero(n + 1, k + l);
    e.topLeftCorner(n, k) = vertices;
    if (l > 0) e.topRightCorner(n, l) = rays;
    e.row(n).head(k).setOnes();
    Vector f = Vector::Zero(n + 1);
    f(n) = 1.0;

    const NnlsResult sol = nnls(e, f);
    const Vector u_v = sol.solution.head(k);
    const Vector u_g = sol.solution.tail(l);
    const double s = u_v.sum();

    MinNormResult out;
    if (s <= 0.0) {
        // Degenerate: every vertex is the zero vector after scaling.
        out.hull_weights = Vector::Constant(k, 1.0 / static_cast<double>(k));
        out.cone_weights = Vector::Zero(l);
    } else {
        out.hull_weights = u_v / s;
        out.cone_weights = u_g / s;
    }
    out.point = vertices * out.hull_weights;
    if (l > 0) out.point += rays * out.cone_weights;
    out.distance = out.point.norm();
    return out;
}

/// Distance from `target` to conv(V) + cone(G).
inline MinNormResult distance_to_hull_plus_cone(const Vector& target, const Matrix& vertices,
                                                const Matrix& rays) {
    Matrix shifted = vertices.colwise() - target;
    MinNormResult r = min_norm_point(shifted, rays);
    r.point += target;
    return r;
}

}  // namespace modc
