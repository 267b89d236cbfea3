#pragma once

// Problem data: objectives F_i = f_i + g_i - h_i over a feasible set, with the
// global constants ell (Lipschitz modulus of every grad g_i) and beta (weak
// convexity modulus of every h_i).

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "modc/errors.hpp"
#include "modc/funcs.hpp"
#include "modc/linalg.hpp"
#include "modc/sets.hpp"

namespace modc {

struct ObjectiveTriple {
    FunctionSpec f;  ///< locally Lipschitz (convex for built-ins)
    FunctionSpec g;  ///< differentiable with ell-Lipschitz gradient
    FunctionSpec h;  ///< beta-weakly convex
};

class ProblemInstance {
public:
    ProblemInstance(Eigen::Index n, std::vector<ObjectiveTriple> objectives, FeasibleSetSpec set, double ell,
                    double beta)
        : n_(n), objectives_(std::move(objectives)), set_(std::move(set)), ell_(ell), beta_(beta) {
        if (n_ <= 0) throw InputError("problem: dimension n must be positive");
        if (objectives_.empty()) throw InputError("problem: at least one objective is required (m >= 1)");
        if (!(ell_ >= 0.0) || !std::isfinite(ell_)) throw InputError("problem: ell must be a finite nonnegative number");
        if (!(beta_ >= 0.0) || !std::isfinite(beta_)) throw InputError("problem: beta must be a finite nonnegative number");
        if (auto d = set_.dimension(); d && *d != n_) throw InputError("problem: feasible set has the wrong dimension");
        for (std::size_t i = 0; i < objectives_.size(); ++i) {
            const auto& o = objectives_[i];
            const std::string tag = "objective " + std::to_string(i + 1);
            for (const auto* spec : {&o.f, &o.g, &o.h})
                if (auto d = spec->dimension(); d && *d != n_)
                    throw InputError(tag + ": function dimension " + std::to_string(*d) + " != n = " + std::to_string(n_));
            if (!o.g.is_smooth()) throw InputError(tag + ": g must be smooth (zero, affine, quadratic, or a sum of these)");
        }
    }

    Eigen::Index n() const noexcept { return n_; }
    std::size_t m() const noexcept { return objectives_.size(); }
    const std::vector<ObjectiveTriple>& objectives() const noexcept { return objectives_; }
    const ObjectiveTriple& objective(std::size_t i) const { return objectives_.at(i); }
    const FeasibleSetSpec& set() const noexcept { return set_; }
    double ell() const noexcept { return ell_; }
    double beta() const noexcept { return beta_; }

    bool all_builtin() const {
        return std::all_of(objectives_.begin(), objectives_.end(), [](const ObjectiveTriple& o) {
            return o.f.is_builtin() && o.g.is_builtin() && o.h.is_builtin();
        });
    }

private:
    Eigen::Index n_;
    std::vector<ObjectiveTriple> objectives_;
    FeasibleSetSpec set_;
    double ell_;
    double beta_;
};

/// F_i(x) = f_i(x) + g_i(x) - h_i(x), with i zero-based.
inline double evaluate_objective(const ProblemInstance& p, std::size_t i, const Vector& x) {
    require_dim(x, p.n(), "evaluate_objective");
    if (i >= p.m()) throw InputError("evaluate_objective: objective index " + std::to_string(i) + " out of range");
    const auto& o = p.objective(i);
    return require_finite(eval(o.f, x) + eval(o.g, x) - eval(o.h, x), "objective value");
}

inline Vector evaluate_objectives(const ProblemInstance& p, const Vector& x) {
    Vector out(static_cast<Eigen::Index>(p.m()));
    for (std::size_t i = 0; i < p.m(); ++i) out(static_cast<Eigen::Index>(i)) = evaluate_objective(p, i, x);
    return out;
}

enum class CheckStatus { pass, fail, unverified };

inline const char* to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::pass: return "pass";
        case CheckStatus::fail: return "fail";
        case CheckStatus::unverified: return "unverified";
    }
    return "?";
}

struct ConstantCheck {
    CheckStatus status = CheckStatus::unverified;
    double bound = 0.0;  ///< smallest admissible constant computed from the data
    std::string note;
};

struct ObjectiveConstantReport {
    ConstantCheck ell;   ///< Lipschitz modulus of grad g_i
    ConstantCheck beta;  ///< weak-convexity modulus of h_i
};

struct ConstantsReport {
    std::vector<ObjectiveConstantReport> objectives;

    bool ok() const {
        return std::none_of(objectives.begin(), objectives.end(), [](const ObjectiveConstantReport& r) {
            return r.ell.status == CheckStatus::fail || r.beta.status == CheckStatus::fail;
        });
    }
};

/// Lipschitz modulus of grad g for a smooth built-in: ||Hessian||_2 by power iteration.
inline double gradient_lipschitz_bound(const FunctionSpec& g, Eigen::Index n) {
    return spectral_norm(quadratic_hessian(g, n), 1e-10).value;
}

/// Weak-convexity modulus of a built-in: max(0, -lambda_min) of its quadratic curvature.
inline double weak_convexity_bound(const FunctionSpec& h, Eigen::Index n) {
    return std::max(0.0, -min_eigenvalue(quadratic_hessian(h, n)));
}

/// Certifies ell and beta against the built-in data. User oracles are
/// reported as unverified rather than failed.
inline ConstantsReport validate_constants(const ProblemInstance& p) {
    ConstantsReport report;
    const double rel = 1e-9;
    for (const auto& o : p.objectives()) {
        ObjectiveConstantReport r;
        if (!o.g.is_builtin()) {
            r.ell.note = "user oracle; ell not verified";
        } else {
            r.ell.bound = gradient_lipschitz_bound(o.g, p.n());
            r.ell.status = p.ell() >= r.ell.bound * (1.0 - rel) ? CheckStatus::pass : CheckStatus::fail;
            if (r.ell.status == CheckStatus::fail)
                r.ell.note = "ell = " + std::to_string(p.ell()) + " is below the gradient Lipschitz bound";
        }
        if (!o.h.is_builtin()) {
            r.beta.note = "user oracle; beta not verified";
        } else {
            r.beta.bound = weak_convexity_bound(o.h, p.n());
            r.beta.status = p.beta() >= r.beta.bound * (1.0 - rel) ? CheckStatus::pass : CheckStatus::fail;
            if (r.beta.status == CheckStatus::fail)
                r.beta.note = "beta = " + std::to_string(p.beta()) + " is below the weak-convexity bound";
        }
        report.objectives.push_back(std::move(r));
    }
    return report;
}

/// Smallest admissible (ell, beta) for all-built-in objectives: the maxima of
/// the per-objective bounds.
inline std::pair<double, double> derive_constants(const std::vector<ObjectiveTriple>& objectives, Eigen::Index n) {
    double ell = 0.0, beta = 0.0;
    for (const auto& o : objectives) {
        if (!o.g.is_builtin() || !o.h.is_builtin())
            throw InputError("constants can only be derived when every function is a built-in; give ell and beta explicitly");
        ell = std::max(ell, gradient_lipschitz_bound(o.g, n));
        beta = std::max(beta, weak_convexity_bound(o.h, n));
    }
    return {ell, beta};
}

}  // namespace modc
