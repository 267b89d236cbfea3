// modc: command-line front end (solve, check, pareto, validate).

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "modc/io.hpp"
#include "modc/pareto.hpp"
#include "modc/psg.hpp"
#include "modc/stationarity.hpp"

namespace {

// Exit codes.
constexpr int kOk = 0;
constexpr int kParseError = 1;
constexpr int kMaxOuter = 2;
constexpr int kInnerFailure = 3;
constexpr int kNotStationary = 4;
constexpr int kClassViolation = 5;
constexpr int kValidateFailed = 6;

struct Globals {
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
    std::optional<int> max_iter;
    std::string inner;
    bool quiet = false;
};

std::string vec(const modc::Vector& v) {
    std::ostringstream s;
    s << '(';
    for (Eigen::Index j = 0; j < v.size(); ++j) s << (j ? ", " : "") << modc::format_double(v(j));
    s << ')';
    return s.str();
}

void apply_globals(modc::ProblemFile& pf, const Globals& g) {
    if (g.tol) pf.solver.tol_step = *g.tol;
    if (g.max_iter) pf.solver.max_outer = *g.max_iter;
    if (g.inner == "epigraph") pf.solver.inner = modc::InnerStrategy::epigraph;
    else if (g.inner == "simplex") pf.solver.inner = modc::InnerStrategy::simplex_weight;
    pf.solver.validate();
    if (!g.quiet) pf.solver.warn = [](const std::string& m) { std::cerr << "warning: " << m << '\n'; };
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw modc::InputError("cannot write '" + path + "'");
    return f;
}

int cmd_solve(const std::string& file, const Globals& g) {
    modc::ProblemFile pf = modc::load_problem(file);
    apply_globals(pf, g);
    auto starts = modc::resolve_starts(pf, g.seed);
    modc::Vector x0 = starts.empty() ? modc::Vector(modc::Vector::Zero(pf.problem.n())) : starts.front();
    if (starts.empty() && !g.quiet) std::cerr << "note: no starts given; starting from the origin\n";

    const modc::SolveOutcome out = modc::run(pf.problem, x0, pf.solver);
    const std::string path = g.out.empty() ? "trace.csv" : g.out;
    {
        auto f = open_out(path);
        modc::write_trace_csv(f, out, pf.problem.m(), pf.problem.n());
    }
    std::cout << "status: " << modc::to_string(out.status) << '\n'
              << "iterations: " << out.trace.size() << '\n'
              << "final point: " << vec(out.final_point) << '\n'
              << "F values: " << vec(modc::evaluate_objectives(pf.problem, out.final_point)) << '\n'
              << "stationarity residual: " << modc::format_double(out.stationarity_residual) << '\n'
              << "min descent margin: " << modc::format_double(out.min_margin()) << '\n'
              << "descent violations: " << out.descent_violations << '\n'
              << "trace: " << path << '\n';
    if (!out.failure.empty()) std::cout << "inner failure: " << out.failure << '\n';
    switch (out.status) {
        case modc::SolveStatus::step_tol_met: return kOk;
        case modc::SolveStatus::max_outer: return kMaxOuter;
        case modc::SolveStatus::inner_failure: return kInnerFailure;
    }
    return kInnerFailure;
}

int cmd_check(const std::string& file, const std::vector<double>& point, bool strong, std::optional<double> brute,
              int lambda_grid, std::optional<double> check_tol, const Globals& g) {
    modc::ProblemFile pf = modc::load_problem(file);
    const auto& p = pf.problem;
    if (static_cast<Eigen::Index>(point.size()) != p.n())
        throw modc::InputError("--point has " + std::to_string(point.size()) + " coordinates, n = " + std::to_string(p.n()));
    const modc::Vector x = Eigen::Map<const modc::Vector>(point.data(), static_cast<Eigen::Index>(point.size()));
    const double tol = check_tol.value_or(modc::kMembershipTol);

    modc::StationarityVerdict v;
    try {
        v = strong ? modc::check_strong_stationary(p, x, tol, lambda_grid) : modc::check_stationary(p, x, tol);
    } catch (const modc::ContractError& e) {
        std::cerr << "class violation: " << e.what() << '\n';
        return kClassViolation;
    } catch (const modc::CapacityError& e) {
        std::cerr << "class violation: " << e.what() << '\n';
        return kClassViolation;
    } catch (const modc::PreconditionError& e) {
        std::cerr << "class violation: " << e.what() << '\n';
        return kClassViolation;
    }
    std::cout << "point: " << vec(x) << '\n' << modc::verdict_text(v);
    modc::Json record = modc::to_json(v);
    if (brute) {
        if (p.n() > 2) {
            std::cerr << "class violation: --brute needs n <= 2\n";
            return kClassViolation;
        }
        const double spacing = *brute / (p.n() == 1 ? 2000.0 : 200.0);
        const bool wp = modc::weak_pareto_bruteforce(p, x, *brute, spacing);
        std::cout << "local weak Pareto (grid, radius " << *brute << ", spacing " << spacing << "): " << (wp ? "yes" : "no")
                  << '\n';
        record["weak_pareto_grid"] = {{"radius", *brute}, {"spacing", spacing}, {"result", wp}};
    }
    if (!g.out.empty()) {
        auto f = open_out(g.out);
        f << record.dump(2) << '\n';
    }
    return v.stationary ? kOk : kNotStationary;
}

int cmd_pareto(const std::string& file, const Globals& g) {
    modc::ProblemFile pf = modc::load_problem(file);
    apply_globals(pf, g);
    const auto starts = modc::resolve_starts(pf, g.seed);
    if (starts.empty()) throw modc::InputError("pareto needs `starts` (a list or a sampler)");
    const auto res = modc::multi_start(pf.problem, starts, pf.solver);
    for (const auto& f : res.failures) std::cerr << "run " << f.run_id << " failed: " << f.message << '\n';
    const auto front = modc::dedupe(modc::nondominated_filter(res.points));
    const std::string path = g.out.empty() ? "front.csv" : g.out;
    {
        auto f = open_out(path);
        modc::write_front_csv(f, front, pf.problem.m(), pf.problem.n());
    }
    double max_res = 0.0;
    for (const auto& p : front) max_res = std::max(max_res, p.stationarity_residual);
    std::cout << "starts: " << starts.size() << '\n'
              << "completed runs: " << res.points.size() << '\n'
              << "retained points: " << front.size() << '\n'
              << "max residual: " << modc::format_double(max_res) << '\n'
              << "front: " << path << '\n';
    return res.points.empty() ? kInnerFailure : kOk;
}

int cmd_validate(const std::string& file) {
    const modc::ProblemFile pf = modc::load_problem(file);
    const auto& p = pf.problem;
    const auto rep = modc::validate_constants(p);
    std::cout << "n = " << p.n() << ", m = " << p.m() << ", ell = " << p.ell() << ", beta = " << p.beta()
              << (pf.constants_given ? "" : " (derived)") << '\n';
    for (std::size_t i = 0; i < rep.objectives.size(); ++i) {
        const auto& r = rep.objectives[i];
        std::cout << "objective " << i + 1 << ": ell " << modc::to_string(r.ell.status) << " (bound " << r.ell.bound
                  << ")" << (r.ell.note.empty() ? "" : "; " + r.ell.note) << ", beta " << modc::to_string(r.beta.status)
                  << " (bound " << r.beta.bound << ")" << (r.beta.note.empty() ? "" : "; " + r.beta.note) << '\n';
    }
    std::cout << (rep.ok() ? "constants: ok" : "constants: FAILED") << '\n';
    return rep.ok() ? kOk : kValidateFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"modc: multiobjective proximal subgradient solver"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--out", g.out, "Output path (trace CSV, front CSV, or JSON verdict for check)");
    app.add_option("--seed", g.seed, "Seed for sampled starts");
    app.add_option("--tol", g.tol, "Step tolerance (solve, pareto) or membership tolerance (check)");
    app.add_option("--max-iter", g.max_iter, "Maximum outer iterations");
    app.add_option("--inner", g.inner, "Inner solver")->check(CLI::IsMember({"epigraph", "simplex"}));
    app.add_flag("--quiet", g.quiet, "Suppress warnings");

    std::string file;
    auto* solve = app.add_subcommand("solve", "Run the solver from the first start");
    solve->add_option("file", file, "Problem JSON")->required();

    auto* check = app.add_subcommand("check", "Certify (strong) stationarity at a point");
    std::vector<double> point;
    bool strong = false;
    std::optional<double> brute;
    int lambda_grid = 0;
    check->add_option("file", file, "Problem JSON")->required();
    check->add_option("--point", point, "Point coordinates, comma separated")->required()->delimiter(',');
    check->add_flag("--strong", strong, "Also decide strong stationarity");
    check->add_option("--brute", brute, "Grid-check local weak Pareto optimality in this radius (n <= 2)");
    check->add_option("--lambda-grid", lambda_grid, "Lambda grid points per simplex edge for --strong");

    auto* pareto = app.add_subcommand("pareto", "Multi-start front approximation");
    pareto->add_option("file", file, "Problem JSON")->required();

    auto* validate = app.add_subcommand("validate", "Parse the file and certify ell and beta");
    validate->add_option("file", file, "Problem JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kParseError;
    }

    try {
        if (*solve) return cmd_solve(file, g);
        if (*check) return cmd_check(file, point, strong, brute, lambda_grid, g.tol, g);
        if (*pareto) return cmd_pareto(file, g);
        if (*validate) return cmd_validate(file);
    } catch (const modc::InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kParseError;
    } catch (const modc::EvaluationError& e) {
        std::cerr << "evaluation error: " << e.what() << '\n';
        return kInnerFailure;
    } catch (const modc::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kParseError;
    }
    return kParseError;
}
