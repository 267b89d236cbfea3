#pragma once

// JSON problem files: strict parsing (unknown keys are errors, reported with
// their path) and serialization back to JSON.
//
// Needs nlohmann/json on the include path.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "modc/errors.hpp"
#include "modc/funcs.hpp"
#include "modc/linalg.hpp"
#include "modc/model.hpp"
#include "modc/pareto.hpp"
#include "modc/psg.hpp"
#include "modc/sets.hpp"
#include "modc/stationarity.hpp"

namespace modc {

using Json = nlohmann::ordered_json;

struct StartSampler {
    std::size_t count = 0;
    std::uint64_t seed = 0;
    std::optional<std::pair<Vector, Vector>> box;
};

struct ProblemFile {
    ProblemInstance problem;
    SolverConfig solver;
    bool constants_given = false;
    std::vector<Vector> starts;          ///< explicit starts
    std::optional<StartSampler> sampler; ///< or a sampler
};

namespace io_detail {

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) {
    throw InputError((path.empty() ? std::string("(root)") : path) + ": " + msg);
}

inline std::string child(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
inline std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline void require_object(const Json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
}

inline void allow_keys(const Json& j, const std::string& path, std::initializer_list<const char*> keys) {
    require_object(j, path);
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : keys) ok = ok || it.key() == k;
        if (!ok) fail(child(path, it.key()), "unknown key");
    }
}

inline const Json& need(const Json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) fail(child(path, key), "missing required key");
    return j.at(key);
}

inline double number(const Json& j, const std::string& path) {
    if (j.is_number()) {
        const double v = j.get<double>();
        if (!std::isfinite(v)) fail(path, "number must be finite");
        return v;
    }
    fail(path, "expected a number");
}

/// Numbers, plus "inf" / "-inf" strings where unbounded values make sense.
inline double extended_number(const Json& j, const std::string& path) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        fail(path, "expected a number or \"inf\"/\"-inf\"");
    }
    return number(j, path);
}

inline long integer(const Json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<long>();
}

inline Vector vector(const Json& j, const std::string& path, bool extended = false) {
    if (!j.is_array()) fail(path, "expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = extended ? extended_number(j[i], index(path, i)) : number(j[i], index(path, i));
    return v;
}

inline Matrix matrix(const Json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a nonempty array of rows");
    const Json& first = j[0];
    if (!first.is_array()) fail(index(path, 0), "expected a row array");
    Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(first.size()));
    for (std::size_t r = 0; r < j.size(); ++r) {
        const Vector row = vector(j[r], index(path, r));
        if (row.size() != m.cols()) fail(index(path, r), "rows must all have the same length");
        m.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return m;
}

template <class F>
auto wrap(const std::string& path, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const InputError& e) {
        const std::string what = e.what();
        if (what.rfind(path, 0) == 0) throw;
        fail(path, what);
    }
}

inline FunctionSpec function(const Json& j, const std::string& path, int depth = 1) {
    allow_keys(j, path, {"type", "a", "b", "Q", "q", "c", "w", "A", "terms"});
    const Json& t = need(j, path, "type");
    if (!t.is_string()) fail(child(path, "type"), "expected a string");
    const std::string type = t.get<std::string>();
    return wrap(path, [&]() -> FunctionSpec {
        if (type == "zero") {
            allow_keys(j, path, {"type"});
            return FunctionSpec::zero();
        }
        if (type == "affine") {
            allow_keys(j, path, {"type", "a", "b"});
            const double b = j.contains("b") ? number(j["b"], child(path, "b")) : 0.0;
            return FunctionSpec::affine(vector(need(j, path, "a"), child(path, "a")), b);
        }
        if (type == "quadratic") {
            allow_keys(j, path, {"type", "Q", "q", "c"});
            Matrix q = matrix(need(j, path, "Q"), child(path, "Q"));
            Vector lin = j.contains("q") ? vector(j["q"], child(path, "q")) : Vector(Vector::Zero(q.rows()));
            const double c = j.contains("c") ? number(j["c"], child(path, "c")) : 0.0;
            return FunctionSpec::quadratic(std::move(q), std::move(lin), c);
        }
        if (type == "weighted_l1") {
            allow_keys(j, path, {"type", "w"});
            return FunctionSpec::weighted_l1(vector(need(j, path, "w"), child(path, "w")));
        }
        if (type == "max_affine") {
            allow_keys(j, path, {"type", "A", "b"});
            Matrix a = matrix(need(j, path, "A"), child(path, "A"));
            Vector b = j.contains("b") ? vector(j["b"], child(path, "b")) : Vector(Vector::Zero(a.rows()));
            return FunctionSpec::max_affine(std::move(a), std::move(b));
        }
        if (type == "sum") {
            allow_keys(j, path, {"type", "terms"});
            const Json& terms = need(j, path, "terms");
            if (!terms.is_array()) fail(child(path, "terms"), "expected an array");
            if (depth >= kMaxSumDepth) fail(path, "sum nesting deeper than " + std::to_string(kMaxSumDepth));
            std::vector<FunctionSpec> specs;
            for (std::size_t i = 0; i < terms.size(); ++i)
                specs.push_back(function(terms[i], index(child(path, "terms"), i), depth + 1));
            return FunctionSpec::sum(std::move(specs));
        }
        fail(child(path, "type"), "unknown function type \"" + type + "\"");
    });
}

inline FeasibleSetSpec set(const Json& j, const std::string& path) {
    allow_keys(j, path, {"type", "lo", "hi", "center", "radius", "scale", "A", "b"});
    const Json& t = need(j, path, "type");
    if (!t.is_string()) fail(child(path, "type"), "expected a string");
    const std::string type = t.get<std::string>();
    return wrap(path, [&]() -> FeasibleSetSpec {
        if (type == "whole_space") {
            allow_keys(j, path, {"type"});
            return FeasibleSetSpec::whole_space();
        }
        if (type == "box") {
            allow_keys(j, path, {"type", "lo", "hi"});
            return FeasibleSetSpec::box(vector(need(j, path, "lo"), child(path, "lo"), true),
                                        vector(need(j, path, "hi"), child(path, "hi"), true));
        }
        if (type == "ball") {
            allow_keys(j, path, {"type", "center", "radius"});
            return FeasibleSetSpec::ball(vector(need(j, path, "center"), child(path, "center")),
                                         number(need(j, path, "radius"), child(path, "radius")));
        }
        if (type == "simplex") {
            allow_keys(j, path, {"type", "scale"});
            return FeasibleSetSpec::simplex(j.contains("scale") ? number(j["scale"], child(path, "scale")) : 1.0);
        }
        if (type == "halfspaces") {
            allow_keys(j, path, {"type", "A", "b"});
            return FeasibleSetSpec::halfspaces(matrix(need(j, path, "A"), child(path, "A")),
                                               vector(need(j, path, "b"), child(path, "b")));
        }
        fail(child(path, "type"), "unknown set type \"" + type + "\"");
    });
}

inline SolverConfig solver(const Json& j, const std::string& path) {
    allow_keys(j, path, {"gamma_bar_fraction", "gamma_policy", "k0", "gamma_min_fraction", "gamma_cap", "tol_step",
                         "max_outer", "inner", "inner_tol", "inner_max_iter"});
    SolverConfig c;
    if (j.contains("gamma_bar_fraction")) c.gamma_bar_fraction = number(j["gamma_bar_fraction"], child(path, "gamma_bar_fraction"));
    if (j.contains("gamma_policy")) {
        const Json& g = j["gamma_policy"];
        const std::string s = g.is_string() ? g.get<std::string>() : "";
        if (s == "constant") c.gamma_policy = GammaPolicy::constant;
        else if (s == "decreasing") c.gamma_policy = GammaPolicy::decreasing;
        else fail(child(path, "gamma_policy"), "expected \"constant\" or \"decreasing\"");
    }
    if (j.contains("k0")) c.k0 = number(j["k0"], child(path, "k0"));
    if (j.contains("gamma_min_fraction")) c.gamma_min_fraction = number(j["gamma_min_fraction"], child(path, "gamma_min_fraction"));
    if (j.contains("gamma_cap")) c.gamma_cap = number(j["gamma_cap"], child(path, "gamma_cap"));
    if (j.contains("tol_step")) c.tol_step = number(j["tol_step"], child(path, "tol_step"));
    if (j.contains("max_outer")) c.max_outer = static_cast<int>(integer(j["max_outer"], child(path, "max_outer")));
    if (j.contains("inner")) {
        const Json& g = j["inner"];
        const std::string s = g.is_string() ? g.get<std::string>() : "";
        if (s == "epigraph") c.inner = InnerStrategy::epigraph;
        else if (s == "simplex" || s == "simplex_weight") c.inner = InnerStrategy::simplex_weight;
        else fail(child(path, "inner"), "expected \"epigraph\" or \"simplex\"");
    }
    if (j.contains("inner_tol")) c.inner_tol = number(j["inner_tol"], child(path, "inner_tol"));
    if (j.contains("inner_max_iter")) c.inner_max_iter = static_cast<int>(integer(j["inner_max_iter"], child(path, "inner_max_iter")));
    wrap(path, [&] {
        c.validate();
        return 0;
    });
    return c;
}

}  // namespace io_detail

/// Parses a problem document.
inline ProblemFile parse_problem(const Json& doc) {
    using namespace io_detail;
    allow_keys(doc, "", {"n", "objectives", "set", "constants", "solver", "starts"});
    const long n = integer(need(doc, "", "n"), "n");
    if (n <= 0) fail("n", "must be positive");

    const Json& objs = need(doc, "", "objectives");
    if (!objs.is_array()) fail("objectives", "expected an array");
    if (objs.empty()) fail("objectives", "at least one objective is required (m >= 1)");
    std::vector<ObjectiveTriple> triples;
    for (std::size_t i = 0; i < objs.size(); ++i) {
        const std::string p = index("objectives", i);
        allow_keys(objs[i], p, {"f", "g", "h"});
        ObjectiveTriple t;
        if (objs[i].contains("f")) t.f = function(objs[i]["f"], child(p, "f"));
        if (objs[i].contains("g")) t.g = function(objs[i]["g"], child(p, "g"));
        if (objs[i].contains("h")) t.h = function(objs[i]["h"], child(p, "h"));
        for (const char* k : {"f", "g", "h"}) {
            const FunctionSpec& s = k[0] == 'f' ? t.f : (k[0] == 'g' ? t.g : t.h);
            if (auto d = s.dimension(); d && *d != n)
                fail(child(p, k), "dimension " + std::to_string(*d) + " does not match n = " + std::to_string(n));
        }
        if (!t.g.is_smooth()) fail(child(p, "g"), "g must be smooth (zero, affine, quadratic, or a sum of these)");
        triples.push_back(std::move(t));
    }

    FeasibleSetSpec s = doc.contains("set") ? set(doc["set"], "set") : FeasibleSetSpec::whole_space();
    if (auto d = s.dimension(); d && *d != n) fail("set", "dimension does not match n");

    double ell = 0.0, beta = 0.0;
    bool given = false;
    if (doc.contains("constants")) {
        allow_keys(doc["constants"], "constants", {"ell", "beta"});
        ell = number(need(doc["constants"], "constants", "ell"), "constants.ell");
        beta = number(need(doc["constants"], "constants", "beta"), "constants.beta");
        if (ell < 0.0) fail("constants.ell", "must be nonnegative");
        if (beta < 0.0) fail("constants.beta", "must be nonnegative");
        given = true;
    } else {
        std::tie(ell, beta) = wrap("constants", [&] { return derive_constants(triples, n); });
    }

    ProblemFile pf{ProblemInstance(n, std::move(triples), std::move(s), ell, beta), SolverConfig{}, given, {}, std::nullopt};
    if (doc.contains("solver")) pf.solver = solver(doc["solver"], "solver");

    if (doc.contains("starts")) {
        const Json& st = doc["starts"];
        if (st.is_array()) {
            for (std::size_t i = 0; i < st.size(); ++i) {
                Vector x = vector(st[i], index("starts", i));
                if (x.size() != n) fail(index("starts", i), "start has the wrong dimension");
                pf.starts.push_back(std::move(x));
            }
            if (pf.starts.empty()) fail("starts", "empty start list");
        } else {
            allow_keys(st, "starts", {"count", "seed", "box"});
            StartSampler smp;
            const long count = integer(need(st, "starts", "count"), "starts.count");
            if (count < 1) fail("starts.count", "must be at least 1");
            smp.count = static_cast<std::size_t>(count);
            if (st.contains("seed")) {
                const long seed = integer(st["seed"], "starts.seed");
                if (seed < 0) fail("starts.seed", "must be nonnegative");
                smp.seed = static_cast<std::uint64_t>(seed);
            }
            if (st.contains("box")) {
                allow_keys(st["box"], "starts.box", {"lo", "hi"});
                Vector lo = vector(need(st["box"], "starts.box", "lo"), "starts.box.lo");
                Vector hi = vector(need(st["box"], "starts.box", "hi"), "starts.box.hi");
                if (lo.size() != n || hi.size() != n) fail("starts.box", "bounds have the wrong dimension");
                if ((lo.array() > hi.array()).any()) fail("starts.box", "lo must be <= hi");
                smp.box = std::make_pair(std::move(lo), std::move(hi));
            } else if (!bounding_box(pf.problem.set(), n)) {
                fail("starts.box", "required when the feasible set is unbounded");
            }
            pf.sampler = std::move(smp);
        }
    }
    return pf;
}

/// Parses JSON text; syntax errors carry the line and column.
inline ProblemFile parse_problem_text(const std::string& text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw InputError(std::string("JSON syntax error: ") + e.what());
    }
    return parse_problem(doc);
}

inline ProblemFile load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open problem file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_problem_text(ss.str());
    } catch (const InputError& e) {
        throw InputError(path + ": " + e.what());
    }
}

namespace io_detail {

inline Json to_json(const Vector& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double x = v(i);
        if (std::isinf(x)) a.push_back(x > 0 ? "inf" : "-inf");
        else a.push_back(x);
    }
    return a;
}

inline Json to_json(const Matrix& m) {
    Json a = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(to_json(Vector(m.row(r).transpose())));
    return a;
}

inline Json to_json(const FunctionSpec& f) {
    Json j;
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ZeroFn>) {
                j["type"] = "zero";
            } else if constexpr (std::is_same_v<T, AffineFn>) {
                j["type"] = "affine";
                j["a"] = to_json(v.a);
                j["b"] = v.b;
            } else if constexpr (std::is_same_v<T, QuadraticFn>) {
                j["type"] = "quadratic";
                j["Q"] = to_json(v.Q);
                j["q"] = to_json(v.q);
                j["c"] = v.c;
            } else if constexpr (std::is_same_v<T, WeightedL1Fn>) {
                j["type"] = "weighted_l1";
                j["w"] = to_json(v.w);
            } else if constexpr (std::is_same_v<T, MaxAffineFn>) {
                j["type"] = "max_affine";
                j["A"] = to_json(v.A);
                j["b"] = to_json(v.b);
            } else if constexpr (std::is_same_v<T, SumFn>) {
                j["type"] = "sum";
                j["terms"] = Json::array();
                for (const auto& t : v.terms) j["terms"].push_back(to_json(t));
            } else {
                throw InputError("user oracle '" + v.name + "' cannot be serialized");
            }
        },
        f.variant());
    return j;
}

inline Json to_json(const FeasibleSetSpec& s) {
    Json j;
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, WholeSpace>) {
                j["type"] = "whole_space";
            } else if constexpr (std::is_same_v<T, Box>) {
                j["type"] = "box";
                j["lo"] = to_json(v.lo);
                j["hi"] = to_json(v.hi);
            } else if constexpr (std::is_same_v<T, Ball>) {
                j["type"] = "ball";
                j["center"] = to_json(v.center);
                j["radius"] = v.radius;
            } else if constexpr (std::is_same_v<T, Simplex>) {
                j["type"] = "simplex";
                j["scale"] = v.scale;
            } else {
                j["type"] = "halfspaces";
                j["A"] = to_json(v.A);
                j["b"] = to_json(v.b);
            }
        },
        s.variant());
    return j;
}

inline Json to_json(const SolverConfig& c) {
    Json j;
    j["gamma_bar_fraction"] = c.gamma_bar_fraction;
    j["gamma_policy"] = to_string(c.gamma_policy);
    j["k0"] = c.k0;
    j["gamma_min_fraction"] = c.gamma_min_fraction;
    j["gamma_cap"] = c.gamma_cap;
    j["tol_step"] = c.tol_step;
    j["max_outer"] = c.max_outer;
    j["inner"] = to_string(c.inner);
    j["inner_tol"] = c.inner_tol;
    j["inner_max_iter"] = c.inner_max_iter;
    return j;
}

}  // namespace io_detail

/// Serializes a problem file. Constants are always written explicitly.
inline Json to_json(const ProblemFile& pf) {
    using io_detail::to_json;
    const ProblemInstance& p = pf.problem;
    Json j;
    j["n"] = p.n();
    j["objectives"] = Json::array();
    for (const auto& o : p.objectives()) {
        Json t;
        t["f"] = to_json(o.f);
        t["g"] = to_json(o.g);
        t["h"] = to_json(o.h);
        j["objectives"].push_back(std::move(t));
    }
    j["set"] = to_json(p.set());
    j["constants"] = {{"ell", p.ell()}, {"beta", p.beta()}};
    j["solver"] = to_json(pf.solver);
    if (!pf.starts.empty()) {
        j["starts"] = Json::array();
        for (const auto& s : pf.starts) j["starts"].push_back(to_json(s));
    } else if (pf.sampler) {
        Json s;
        s["count"] = pf.sampler->count;
        s["seed"] = pf.sampler->seed;
        if (pf.sampler->box) s["box"] = {{"lo", to_json(pf.sampler->box->first)}, {"hi", to_json(pf.sampler->box->second)}};
        j["starts"] = std::move(s);
    }
    return j;
}

/// Starts of a problem file: the explicit list, or the sampler's output.
inline std::vector<Vector> resolve_starts(const ProblemFile& pf, std::optional<std::uint64_t> seed_override = std::nullopt) {
    if (!pf.starts.empty()) return pf.starts;
    if (!pf.sampler) return {};
    const auto& s = *pf.sampler;
    auto box = s.box ? *s.box : sampling_box(pf.problem.set(), pf.problem.n());
    return sample_starts(pf.problem.set(), box.first, box.second, s.count, seed_override.value_or(s.seed));
}

/// Machine-readable record mirroring StationarityVerdict.
inline Json to_json(const StationarityVerdict& v) {
    using io_detail::to_json;
    Json j;
    j["stationary"] = v.stationary;
    j["multipliers"] = v.multipliers ? to_json(*v.multipliers) : Json(nullptr);
    j["witness_distance"] = v.witness_distance;
    j["witness_point"] = to_json(v.witness_point);
    j["tol"] = v.tol;
    j["strong"] = to_string(v.strong);
    j["strong_multipliers"] = v.strong_multipliers ? to_json(*v.strong_multipliers) : Json(nullptr);
    j["strong_counterexample"] = v.strong_counterexample ? to_json(*v.strong_counterexample) : Json(nullptr);
    j["strong_best_lambda"] = v.strong_best_lambda ? to_json(*v.strong_best_lambda) : Json(nullptr);
    j["strong_violation"] = v.strong_violation;
    j["lambda_grid"] = v.lambda_grid;
    Json sys = Json::array();
    for (const auto& c : v.strong_system) sys.push_back({{"alpha", c.alpha}, {"delta", c.delta}, {"text", c.text}});
    j["strong_system"] = std::move(sys);
    j["strong_interval"] = v.strong_interval ? Json::array({v.strong_interval->first, v.strong_interval->second})
                                             : Json(nullptr);
    return j;
}

}  // namespace modc
