#include <gtest/gtest.h>

#include <random>

#include "modc/subproblem.hpp"
#include "support.hpp"

using namespace modc;
using namespace modc::testing;

namespace {

SubproblemInput make(Vector xk, std::vector<FunctionSpec> f, std::vector<Vector> grads, double gamma,
                     FeasibleSetSpec set = FeasibleSetSpec::whole_space()) {
    SubproblemInput in;
    in.xk = std::move(xk);
    in.f_specs = std::move(f);
    in.grads = std::move(grads);
    in.gamma = gamma;
    in.set = std::move(set);
    in.f_at_xk = Vector(static_cast<Eigen::Index>(in.f_specs.size()));
    for (std::size_t i = 0; i < in.f_specs.size(); ++i) in.f_at_xk(static_cast<Eigen::Index>(i)) = eval(in.f_specs[i], in.xk);
    return in;
}

/// Example 1 at x^k = 1: u_1 = 2 (from |x| + x), u_2 = 1 (from |x|).
SubproblemInput example1_step() {
    return make(vec({1.0}), {FunctionSpec::weighted_l1(vec({1})), FunctionSpec::affine(vec({2}))}, {vec({-2}), vec({-1})},
                0.25);
}

void expect_valid_weights(const SubproblemResult& r, const SubproblemInput& in) {
    EXPECT_GE(r.weights.minCoeff(), 0.0);
    EXPECT_NEAR(r.weights.sum(), 1.0, 1e-9);
    const Vector vals = piece_values(in, r.x_next);
    for (Eigen::Index i = 0; i < vals.size(); ++i) {
        if (vals(i) < vals.maxCoeff() - 1e-5) {
            EXPECT_LE(r.weights(i), 1e-6);
        }
    }
}

}  // namespace

TEST(Subproblem, ProximalGradientClosedForm) {
    const auto in = make(vec({1, 0}), {FunctionSpec::zero()}, {vec({1, 0})}, 0.5);
    for (const auto& r : {solve_epigraph(in), solve_simplex_weight(in), solve_bruteforce(in, 1e-5)}) {
        EXPECT_NEAR(r.x_next(0), 0.5, 1e-5);
        EXPECT_NEAR(r.x_next(1), 0.0, 1e-5);
    }
    EXPECT_NEAR(solve_epigraph(in).x_next(0), 0.5, 1e-9);
}

TEST(Subproblem, PureQuadraticStaysPut) {
    for (const auto& set : {FeasibleSetSpec::whole_space(), FeasibleSetSpec::ball(vec({0, 0}), 2.0),
                            FeasibleSetSpec::simplex(1.0)}) {
        const Vector xk = set.is<Simplex>() ? vec({0.3, 0.7}) : vec({0.3, -0.4});
        const auto in = make(xk, {FunctionSpec::zero(), FunctionSpec::zero()}, {vec({0, 0}), vec({0, 0})}, 0.7, set);
        EXPECT_LE((solve_epigraph(in).x_next - xk).norm(), 1e-12);
        EXPECT_LE((solve_simplex_weight(in).x_next - xk).norm(), 1e-12);
    }
}

TEST(Subproblem, Example1MatchesGrid) {
    const auto in = example1_step();
    const auto grid = solve_bruteforce(in, 1e-5);
    const auto e = solve_epigraph(in);
    const auto s = solve_simplex_weight(in);
    EXPECT_LE((e.x_next - grid.x_next).norm(), 1e-4);
    EXPECT_LE((s.x_next - grid.x_next).norm(), 1e-4);
    EXPECT_LE((e.x_next - s.x_next).norm(), 1e-4);
    // Near 1 the pieces are 1 - x and x - 1, so Phi = |x - 1| + 2(x - 1)^2.
    EXPECT_NEAR(e.x_next(0), 1.0, 1e-8);
}

TEST(Subproblem, SoftThreshold) {
    for (auto [xk, expect] : {std::pair{0.3, 0.0}, std::pair{2.0, 1.0}, std::pair{-1.7, -0.7}}) {
        const auto in = make(vec({xk}), {FunctionSpec::weighted_l1(vec({1}))}, {vec({0})}, 1.0);
        EXPECT_NEAR(solve_bruteforce(in, 1e-5).x_next(0), expect, 1e-5);
        EXPECT_NEAR(solve_epigraph(in).x_next(0), expect, 1e-8);
        EXPECT_NEAR(solve_simplex_weight(in).x_next(0), expect, 1e-8);
    }
}

TEST(Subproblem, SingleObjectiveSolversAgree) {
    const auto in = make(vec({0.4, -0.2}), {FunctionSpec::max_affine(mat({{1, 0}, {0, 1}, {-1, -1}}), vec({0, 0, 0.1}))},
                         {vec({0.3, -0.5})}, 0.8, FeasibleSetSpec::box(vec({-0.5, -0.5}), vec({0.5, 0.5})));
    const auto e = solve_epigraph(in);
    const auto s = solve_simplex_weight(in);
    EXPECT_EQ(s.weights, vec({1.0}));
    EXPECT_EQ(e.weights, vec({1.0}));
    EXPECT_LE((e.x_next - s.x_next).norm(), 1e-6);
    EXPECT_NEAR(e.objective_value, s.objective_value, 1e-9);
}

TEST(Subproblem, SymmetricWeights) {
    const auto in = make(vec({0.0}), {FunctionSpec::affine(vec({1})), FunctionSpec::affine(vec({-1}))}, {vec({0}), vec({0})},
                         0.6);
    for (const auto& r : {solve_epigraph(in), solve_simplex_weight(in)}) {
        EXPECT_NEAR(r.x_next(0), 0.0, 1e-9);
        EXPECT_NEAR(r.weights(0), 0.5, 1e-6);
        EXPECT_NEAR(r.weights(1), 0.5, 1e-6);
    }
    const auto in2 = make(vec({1.0, -1.0}),
                          {FunctionSpec::weighted_l1(vec({1, 0})), FunctionSpec::weighted_l1(vec({0, 1}))},
                          {vec({0, 0}), vec({0, 0})}, 0.3);
    for (const auto& r : {solve_epigraph(in2), solve_simplex_weight(in2)}) {
        EXPECT_NEAR(r.weights(0), 0.5, 1e-6);
        EXPECT_NEAR(r.weights(1), 0.5, 1e-6);
    }
}

TEST(Subproblem, RandomInstancesProperties) {
    std::mt19937_64 rng(61);
    const auto inputs = random_subproblems(40, 61);
    for (const auto& in : inputs) {
        const auto e = solve_epigraph(in);
        const auto s = solve_simplex_weight(in);
        for (const auto* r : {&e, &s}) {
            EXPECT_TRUE(contains(in.set, r->x_next, 1e-8));
            // Phi(x_next) <= Phi(xk) = 0.
            EXPECT_LE(r->objective_value, 0.0);
            EXPECT_NEAR(r->objective_value, step_objective(in, r->x_next), 1e-14);
            expect_valid_weights(*r, in);
            for (int t = 0; t < 100; ++t) {
                const Vector y = random_feasible(in.set, in.n(), rng, 1.0);
                EXPECT_GE(step_objective(in, y), r->objective_value - kInnerTol * (1.0 + (y - r->x_next).norm()));
            }
        }
        EXPECT_NEAR(e.objective_value, s.objective_value, 10 * kInnerTol);
    }
}

TEST(Subproblem, BruteForceAgreesOnGrid) {
    const auto inputs = random_subproblems(20, 71);
    for (const auto& in : inputs) {
        const auto g = solve_bruteforce(in, 1e-5);
        const auto e = solve_epigraph(in);
        EXPECT_LE((e.x_next - g.x_next).norm(), 1e-4);
        EXPECT_LE(e.objective_value, g.objective_value + 1e-8);
    }
}

TEST(Subproblem, BruteForceCapacity) {
    const auto in = make(vec({0, 0, 0}), {FunctionSpec::zero()}, {vec({1, 0, 0})}, 1.0);
    EXPECT_THROW(solve_bruteforce(in, 1e-3), CapacityError);
}

TEST(Subproblem, InputValidation) {
    auto in = example1_step();
    in.gamma = 0.0;
    EXPECT_THROW(solve_epigraph(in), InputError);
    in = example1_step();
    in.grads.pop_back();
    EXPECT_THROW(solve_simplex_weight(in), InputError);
    in = example1_step();
    in.grads[0] = vec({std::nan("")});
    EXPECT_THROW(solve_epigraph(in), InputError);
}

// A nonconvex f (user oracle) gets a point no worse than xk.
TEST(Subproblem, DescentGradeForNonconvexF) {
    UserFn f;
    f.dim = 1;
    f.value = [](const Vector& x) { return -std::abs(x(0)); };
    f.subgradient = [](const Vector& x) { return Vector(Vector::Constant(1, x(0) >= 0 ? -1.0 : 1.0)); };
    const auto in = make(vec({0.5}), {FunctionSpec::user(f)}, {vec({0.2})}, 0.5);
    for (const auto& r : {solve_epigraph(in), solve_simplex_weight(in)}) EXPECT_LE(r.objective_value, 0.0);
}
