#pragma once

// Multi-start front approximation with a weak (all-coordinates-strict)
// nondominated filter.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "modc/errors.hpp"
#include "modc/linalg.hpp"
#include "modc/model.hpp"
#include "modc/psg.hpp"
#include "modc/sets.hpp"

namespace modc {

struct FrontPoint {
    Vector x;
    Vector F_values;
    std::size_t run_id = 0;
    double stationarity_residual = 0.0;
    SolveStatus status = SolveStatus::step_tol_met;
};

struct RunFailure {
    std::size_t run_id = 0;
    std::string message;
};

struct MultiStartResult {
    std::vector<FrontPoint> points;  ///< ordered by run_id
    std::vector<RunFailure> failures;
};

/// Thread count from MODC_THREADS (default: hardware concurrency), capped by the job count.
inline unsigned thread_count(std::size_t jobs) {
    unsigned t = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("MODC_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1) t = static_cast<unsigned>(v);
    }
    return static_cast<unsigned>(std::min<std::size_t>(t, std::max<std::size_t>(1, jobs)));
}

/// Runs the solver from every start. Results do not depend on the thread count.
inline MultiStartResult multi_start(const ProblemInstance& p, const std::vector<Vector>& starts, const SolverConfig& cfg,
                                    unsigned threads = 0) {
    if (starts.empty()) throw InputError("multi_start: no starts given");
    if (threads == 0) threads = thread_count(starts.size());
    std::vector<std::optional<FrontPoint>> slots(starts.size());
    std::vector<std::string> errors(starts.size());
    std::atomic<std::size_t> next{0};
    std::mutex warn_mutex;
    SolverConfig local = cfg;
    if (cfg.warn) {
        local.warn = [&](const std::string& msg) {
            std::lock_guard<std::mutex> lock(warn_mutex);
            cfg.warn(msg);
        };
    }
    auto worker = [&] {
        for (std::size_t j = next++; j < starts.size(); j = next++) {
            try {
                const SolveOutcome out = run(p, starts[j], local);
                FrontPoint fp;
                fp.x = out.final_point;
                fp.F_values = evaluate_objectives(p, out.final_point);
                fp.run_id = j;
                fp.stationarity_residual = out.stationarity_residual;
                fp.status = out.status;
                slots[j] = std::move(fp);
            } catch (const std::exception& e) {
                errors[j] = e.what();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    MultiStartResult r;
    for (std::size_t j = 0; j < starts.size(); ++j) {
        if (slots[j]) r.points.push_back(std::move(*slots[j]));
        else r.failures.push_back({j, errors[j].empty() ? "run produced no result" : errors[j]});
    }
    return r;
}

/// True iff a is better than b by more than `margin` in every coordinate.
inline bool strictly_dominates(const Vector& a, const Vector& b, double margin = 1e-12) {
    return ((a.array() < b.array() - margin).all());
}

/// Keeps p unless some q is strictly better in all objectives. Order is preserved.
inline std::vector<FrontPoint> nondominated_filter(const std::vector<FrontPoint>& points) {
    std::vector<FrontPoint> out;
    for (std::size_t a = 0; a < points.size(); ++a) {
        bool dominated = false;
        for (std::size_t b = 0; b < points.size() && !dominated; ++b)
            dominated = b != a && strictly_dominates(points[b].F_values, points[a].F_values);
        if (!dominated) out.push_back(points[a]);
    }
    return out;
}

/// Drops later points whose coordinates equal an earlier point's to `tol`.
inline std::vector<FrontPoint> dedupe(const std::vector<FrontPoint>& points, double tol = 1e-12) {
    std::vector<FrontPoint> out;
    for (const auto& p : points) {
        const bool dup = std::any_of(out.begin(), out.end(), [&](const FrontPoint& q) {
            return (q.x - p.x).cwiseAbs().maxCoeff() <= tol;
        });
        if (!dup) out.push_back(p);
    }
    return out;
}

/// Seeded uniform starts over a box, projected onto the set.
inline std::vector<Vector> sample_starts(const FeasibleSetSpec& set, const Vector& lo, const Vector& hi,
                                         std::size_t count, std::uint64_t seed) {
    if (lo.size() != hi.size() || lo.size() == 0) throw InputError("sample_starts: box bounds must agree in size");
    if (!lo.allFinite() || !hi.allFinite() || (lo.array() > hi.array()).any())
        throw InputError("sample_starts: box must be finite with lo <= hi");
    std::mt19937_64 rng(seed);
    std::vector<Vector> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        Vector x(lo.size());
        for (Eigen::Index j = 0; j < lo.size(); ++j) {
            // Uniform in [lo, hi] from 53 random bits; independent of the
            // standard library's distribution implementation.
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            x(j) = lo(j) + u * (hi(j) - lo(j));
        }
        out.push_back(contains(set, x, 0.0) ? x : project(set, x));
    }
    return out;
}

/// Box for sampling: the given one, else the set's bounding box.
inline std::pair<Vector, Vector> sampling_box(const FeasibleSetSpec& set, Eigen::Index n) {
    if (auto bb = bounding_box(set, n)) return *bb;
    throw InputError("sampling: the feasible set is unbounded; give a sampling box");
}

inline void write_front_csv(std::ostream& os, const std::vector<FrontPoint>& front, std::size_t m, Eigen::Index n) {
    os << "run_id,residual";
    for (std::size_t i = 1; i <= m; ++i) os << ",F_" << i;
    for (Eigen::Index j = 1; j <= n; ++j) os << ",x_" << j;
    os << '\n';
    for (const auto& p : front) {
        os << p.run_id << ',' << format_double(p.stationarity_residual);
        for (Eigen::Index i = 0; i < p.F_values.size(); ++i) os << ',' << format_double(p.F_values(i));
        for (Eigen::Index j = 0; j < p.x.size(); ++j) os << ',' << format_double(p.x(j));
        os << '\n';
    }
}

}  // namespace modc
