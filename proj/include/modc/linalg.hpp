#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "modc/errors.hpp"

namespace modc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline bool all_finite(const Vector& v) { return v.allFinite(); }

inline void require_dim(const Vector& v, Eigen::Index n, const char* what) {
    if (v.size() != n) {
        throw InputError(std::string(what) + ": expected dimension " + std::to_string(n) +
                         ", got " + std::to_string(v.size()));
    }
}

inline double require_finite(double value, const char* what) {
    if (!std::isfinite(value)) throw EvaluationError(std::string(what) + " is not finite");
    return value;
}

/// Euclidean projection onto {x >= 0, sum(x) = scale} (sort-based).
inline Vector project_simplex(const Vector& y, double scale = 1.0) {
    const Eigen::Index n = y.size();
    std::vector<double> sorted(y.data(), y.data() + n);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumsum = 0.0;
    double theta = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        cumsum += sorted[j];
        const double t = (cumsum - scale) / static_cast<double>(j + 1);
        if (j + 1 == n || sorted[j + 1] <= t) {
            theta = t;
            break;
        }
    }
    return (y.array() - theta).max(0.0).matrix();
}

struct PowerIterationResult {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Spectral norm of a symmetric matrix by power iteration on Q^T Q.
/// Stops when successive estimates agree to `rel_tol`.
inline PowerIterationResult spectral_norm(const Matrix& q, double rel_tol = 1e-10,
                                          int max_iter = 100000) {
    PowerIterationResult out;
    const Eigen::Index n = q.cols();
    if (n == 0 || q.isZero(0.0)) {
        out.converged = true;
        return out;
    }
    // Fixed non-degenerate start so the result is reproducible.
    Vector v(n);
    for (Eigen::Index j = 0; j < n; ++j) v(j) = 1.0 + 0.618033988749895 * static_cast<double>(j % 7) + 1e-3 * static_cast<double>(j);
    v.normalize();
    double prev = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        Vector w = q.transpose() * (q * v);
        const double nrm = w.norm();
        if (nrm == 0.0) {
            // Start vector in the null space; restart from a coordinate vector.
            v.setZero();
            v(it % n) = 1.0;
            continue;
        }
        const double est = std::sqrt(nrm);
        v = w / nrm;
        out.iterations = it;
        out.value = est;
        if (std::abs(est - prev) <= rel_tol * est) {
            out.converged = true;
            break;
        }
        prev = est;
    }
    return out;
}

/// Smallest eigenvalue of a symmetric matrix.
inline double min_eigenvalue(const Matrix& q) {
    if (q.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(q, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace modc
