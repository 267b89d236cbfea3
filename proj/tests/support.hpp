#pragma once

// Shared instances and random generators for the test suites.

#include <random>
#include <string>
#include <vector>

#include "modc/funcs.hpp"
#include "modc/model.hpp"
#include "modc/psg.hpp"
#include "modc/sets.hpp"
#include "modc/subproblem.hpp"

namespace modc::testing {

inline Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index r = 0;
    for (const auto& row : rows) {
        Eigen::Index c = 0;
        for (double x : row) m(r, c++) = x;
        ++r;
    }
    return m;
}

/// |x| as max(x, -x).
inline FunctionSpec abs_max_affine() { return FunctionSpec::max_affine(mat({{1}, {-1}}), vec({0, 0})); }

/// f_1 = |x|, f_2 = 2x, h_1 = |x| + x, h_2 = |x|, g = 0, on the given set.
inline std::vector<ObjectiveTriple> example1_objectives() {
    return {
        {FunctionSpec::weighted_l1(vec({1})), FunctionSpec::zero(), FunctionSpec::max_affine(mat({{2}, {0}}), vec({0, 0}))},
        {FunctionSpec::affine(vec({2}), 0.0), FunctionSpec::zero(), FunctionSpec::weighted_l1(vec({1}))},
    };
}

inline ProblemInstance example1(FeasibleSetSpec set = FeasibleSetSpec::whole_space()) {
    return ProblemInstance(1, example1_objectives(), std::move(set), 0.0, 0.0);
}

inline ProblemInstance example1_box() { return example1(FeasibleSetSpec::box(vec({-1}), vec({1}))); }

/// ||x - c||^2 as a quadratic spec.
inline FunctionSpec sq_dist(const Vector& c) {
    const Eigen::Index n = c.size();
    return FunctionSpec::quadratic(2.0 * Matrix::Identity(n, n), -2.0 * c, c.squaredNorm());
}

inline ProblemInstance two_quadratics() {
    return ProblemInstance(2,
                           {{FunctionSpec::zero(), sq_dist(vec({0, 0})), FunctionSpec::zero()},
                            {FunctionSpec::zero(), sq_dist(vec({1, 0})), FunctionSpec::zero()}},
                           FeasibleSetSpec::whole_space(), 2.0, 0.0);
}

struct SuiteCase {
    std::string name;
    ProblemInstance problem;
    Vector x0;
    SolverConfig cfg;
    bool coercive = true;
};

/// Instances for the descent, summability, level-set and stationarity checks:
/// one- and two-dimensional, mixed f/g/h, every set type.
inline std::vector<SuiteCase> run_suite() {
    std::vector<SuiteCase> s;
    SolverConfig base;
    auto add = [&](std::string name, Eigen::Index n, std::vector<ObjectiveTriple> obj, FeasibleSetSpec set, Vector x0,
                   SolverConfig cfg, bool coercive = true) {
        auto [ell, beta] = derive_constants(obj, n);
        s.push_back({std::move(name), ProblemInstance(n, std::move(obj), std::move(set), ell, beta), std::move(x0), cfg,
                     coercive});
    };
    add("example1-box-from-1", 1, example1_objectives(), FeasibleSetSpec::box(vec({-1}), vec({1})), vec({1.0}), base);
    add("example1-box-from-0.3", 1, example1_objectives(), FeasibleSetSpec::box(vec({-1}), vec({1})), vec({0.3}), base);
    add("abs-plus-quadratics-1d", 1,
        {{FunctionSpec::weighted_l1(vec({1})), sq_dist(vec({2})), FunctionSpec::zero()},
         {FunctionSpec::zero(), sq_dist(vec({-1})), FunctionSpec::zero()}},
        FeasibleSetSpec::whole_space(), vec({3.0}), base);
    add("dc-interval-m3", 1,
        {{FunctionSpec::weighted_l1(vec({0.5})), sq_dist(vec({0.7})), abs_max_affine()},
         {abs_max_affine(), sq_dist(vec({-0.4})), FunctionSpec::weighted_l1(vec({0.2}))},
         {FunctionSpec::affine(vec({0.3}), 0.0), sq_dist(vec({0.1})), FunctionSpec::zero()}},
        FeasibleSetSpec::ball(vec({0.0}), 1.0), vec({-0.9}), base);
    add("two-quadratics", 2,
        {{FunctionSpec::zero(), sq_dist(vec({0, 0})), FunctionSpec::zero()},
         {FunctionSpec::zero(), sq_dist(vec({1, 0})), FunctionSpec::zero()}},
        FeasibleSetSpec::whole_space(), vec({-0.5, 1.5}), base);
    add("dc-box-2d", 2,
        {{FunctionSpec::weighted_l1(vec({1, 0.5})), FunctionSpec::quadratic(Matrix::Identity(2, 2), vec({-1, 0.5}), 0.0),
          FunctionSpec::max_affine(mat({{0.5, 0}, {-0.5, 0}}), vec({0, 0}))},
         {FunctionSpec::max_affine(mat({{1, 1}, {-1, 0}, {0, -1}}), vec({0, 0.2, 0.2})),
          FunctionSpec::quadratic(0.5 * Matrix::Identity(2, 2), vec({0, -0.5}), 0.0),
          FunctionSpec::weighted_l1(vec({0.3, 0.3}))}},
        FeasibleSetSpec::box(vec({-2, -2}), vec({2, 2})), vec({1.7, -1.2}), base);
    add("weakly-convex-h-ball", 2,
        {{FunctionSpec::weighted_l1(vec({0.2, 0.2})), FunctionSpec::quadratic(2.0 * Matrix::Identity(2, 2), vec({-1, -1}), 0.0),
          FunctionSpec::quadratic(mat({{-0.5, 0}, {0, 0}}), vec({0, 0}), 0.0)},
         {FunctionSpec::zero(), FunctionSpec::quadratic(Matrix::Identity(2, 2), vec({1, 0}), 0.0), FunctionSpec::zero()}},
        FeasibleSetSpec::ball(vec({0, 0}), 1.5), vec({1.0, 1.0}), base);
    add("simplex-2d", 2,
        {{FunctionSpec::weighted_l1(vec({0.3, 0.1})), sq_dist(vec({0.9, 0.4})), FunctionSpec::zero()},
         {FunctionSpec::max_affine(mat({{1, 0}, {0, 1}}), vec({0, 0})), sq_dist(vec({0.1, 0.8})),
          FunctionSpec::weighted_l1(vec({0.1, 0.1}))}},
        FeasibleSetSpec::simplex(1.0), vec({0.5, 0.5}), base);
    add("max-affine-dc-whole-space", 2,
        {{FunctionSpec::max_affine(mat({{1, 0}, {-1, 0}, {0, 1}, {0, -1}}), vec({0, 0, 0, 0})), sq_dist(vec({0.5, -0.5})),
          FunctionSpec::max_affine(mat({{0.5, 0}, {-0.5, 0}}), vec({0, 0}))},
         {FunctionSpec::weighted_l1(vec({0.5, 0.5})), sq_dist(vec({-0.5, 0.5})), FunctionSpec::zero()}},
        FeasibleSetSpec::whole_space(), vec({2.0, 2.0}), base);
    {
        SolverConfig dec = base;
        dec.gamma_policy = GammaPolicy::decreasing;
        dec.k0 = 5.0;
        add("decreasing-gamma-box", 2,
            {{FunctionSpec::weighted_l1(vec({1, 1})), sq_dist(vec({1.5, 0.5})), FunctionSpec::zero()},
             {FunctionSpec::zero(), sq_dist(vec({-1, 0})), FunctionSpec::weighted_l1(vec({0.5, 0}))}},
            FeasibleSetSpec::box(vec({-1, -1}), vec({1, 1})), vec({-1.0, 1.0}), dec);
    }
    add("single-objective-l1-quadratic", 1,
        {{FunctionSpec::weighted_l1(vec({0.5})), sq_dist(vec({0.2})), abs_max_affine()}},
        FeasibleSetSpec::box(vec({-3}), vec({3})), vec({-2.5}), base);
    add("halfspaces-2d", 2,
        {{FunctionSpec::weighted_l1(vec({0.2, 0.2})), sq_dist(vec({1, 1})), FunctionSpec::zero()},
         {FunctionSpec::zero(), sq_dist(vec({-1, 1})), FunctionSpec::zero()}},
        FeasibleSetSpec::halfspaces(mat({{1, 1}, {-1, 0}, {0, -1}}), vec({1, 1, 0})), vec({0.0, 0.5}), base);
    return s;
}

/// Random subproblem inputs (n <= 2, m <= 3, all set types).
inline std::vector<SubproblemInput> random_subproblems(std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<SubproblemInput> out;
    for (std::size_t t = 0; t < count; ++t) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(t % 2);
        const std::size_t m = 1 + (t / 2) % 3;
        SubproblemInput in;
        in.xk = Vector(n);
        for (Eigen::Index j = 0; j < n; ++j) in.xk(j) = 0.5 * u(rng);
        in.gamma = 0.1 + 0.45 * (u(rng) + 1.0);
        for (std::size_t i = 0; i < m; ++i) {
            const int kind = static_cast<int>((t + i) % 4);
            FunctionSpec f;
            if (kind == 0) {
                f = FunctionSpec::weighted_l1(Vector::Constant(n, 0.5 + 0.5 * (u(rng) + 1.0)));
            } else if (kind == 1) {
                Matrix a(3, n);
                Vector b(3);
                for (Eigen::Index r = 0; r < 3; ++r) {
                    for (Eigen::Index j = 0; j < n; ++j) a(r, j) = u(rng);
                    b(r) = 0.3 * u(rng);
                }
                f = FunctionSpec::max_affine(a, b);
            } else if (kind == 2) {
                Vector a(n);
                for (Eigen::Index j = 0; j < n; ++j) a(j) = u(rng);
                f = FunctionSpec::affine(a, 0.1);
            } else {
                Vector c(n);
                for (Eigen::Index j = 0; j < n; ++j) c(j) = 0.3 * u(rng);
                f = FunctionSpec::sum({FunctionSpec::weighted_l1(Vector::Ones(n)), FunctionSpec::affine(c, 0.0)});
            }
            in.f_specs.push_back(f);
            Vector g(n);
            for (Eigen::Index j = 0; j < n; ++j) g(j) = u(rng);
            in.grads.push_back(g);
        }
        switch (t % 5) {
            case 0: in.set = FeasibleSetSpec::whole_space(); break;
            case 1: in.set = FeasibleSetSpec::box(Vector::Constant(n, -0.6), Vector::Constant(n, 0.6)); break;
            case 2: in.set = FeasibleSetSpec::ball(Vector::Zero(n), 0.7); break;
            case 3: {
                Matrix a = Matrix::Zero(2, n);
                a(0, 0) = 1;
                a(1, n - 1) = -1;
                if (n == 2) a(0, 1) = 1;
                in.set = FeasibleSetSpec::halfspaces(a, vec({0.6, 0.6}));
                break;
            }
            default: {
                in.set = FeasibleSetSpec::simplex(1.0);
                in.xk = project(in.set, in.xk);
                break;
            }
        }
        if (!contains(in.set, in.xk, 0.0)) in.xk = project(in.set, in.xk);
        in.f_at_xk = Vector(static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < m; ++i) in.f_at_xk(static_cast<Eigen::Index>(i)) = eval(in.f_specs[i], in.xk);
        out.push_back(std::move(in));
    }
    return out;
}

/// Uniform random feasible points (rejection from a box, then projection).
inline Vector random_feasible(const FeasibleSetSpec& set, Eigen::Index n, std::mt19937_64& rng, double spread = 2.0) {
    std::uniform_real_distribution<double> u(-spread, spread);
    Vector x(n);
    for (Eigen::Index j = 0; j < n; ++j) x(j) = u(rng);
    return project(set, x);
}

}  // namespace modc::testing
