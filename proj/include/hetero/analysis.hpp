#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dynamics.hpp"
#include "errors.hpp"
#include "geodesic.hpp"
#include "potential.hpp"

namespace hetero {

// Worker cap: HETERO_THREADS wins, otherwise hardware concurrency.
inline int thread_count() {
    if (const char* env = std::getenv("HETERO_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<int>(std::min(v, 64L));
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(std::min(hw, 16u)) : 4;
}

namespace detail {

// Run fn(0..n-1) on a small pool; each index writes its own slot, so results
// are identical for any worker count. First exception wins and is rethrown.
template <class Fn>
void parallel_indexed(int n, Fn&& fn) {
    const int workers = std::min(thread_count(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex err_mtx;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mtx);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace detail

struct SweepPoint {
    double param = 0;
    bool reached = false;
    double energy = 0; // |g(1) - g(-1)|, defined whether or not the pair connects
};

struct SweepReport {
    std::string family;
    double p = 2.0;
    std::vector<SweepPoint> points; // coarse grid, ascending
    double bracket_lo = 0, bracket_hi = 0;
    double threshold_estimate = 0;
};

// Scan the one-parameter family for the existence flip of the (-1, 1)
// connection, then bisect the flip down to width 1e-4.
inline SweepReport existence_sweep(const std::string& family, double lo, double hi,
                                   int n_coarse = 15, double p = 2.0,
                                   const TraceOptions& topt = {}) {
    if (n_coarse < 8) throw std::invalid_argument("existence_sweep: n_coarse must be >= 8");
    if (!(hi > lo)) throw std::invalid_argument("existence_sweep: empty parameter range");

    auto verdict = [&](double param, double& energy) -> bool {
        const PotentialSpec spec = make_catalog(family, param, p);
        try {
            energy = transition_energy(spec, -1.0, 1.0);
        } catch (const Error&) {
            energy = 0;
        }
        try {
            return trace(spec, -1.0, 1.0, BranchTag::none, topt).reached;
        } catch (const DegenerateSegment&) {
            return false; // zero-length segment: nothing to connect along
        } catch (const StartDegenerate&) {
            return false;
        }
    };

    SweepReport rep;
    rep.family = family;
    rep.p = p;
    rep.points.resize(n_coarse);
    detail::parallel_indexed(n_coarse, [&](int i) {
        SweepPoint pt;
        pt.param = lo + (hi - lo) * i / (n_coarse - 1);
        pt.reached = verdict(pt.param, pt.energy);
        rep.points[i] = pt;
    });

    int flip = -1;
    for (int i = 0; i + 1 < n_coarse; ++i)
        if (rep.points[i].reached != rep.points[i + 1].reached) {
            flip = i;
            break;
        }
    if (flip < 0) throw NoTransition("existence_sweep: all verdicts agree on this range");

    double a = rep.points[flip].param, b = rep.points[flip + 1].param;
    bool va = rep.points[flip].reached;
    for (int depth = 0; depth < 40 && (b - a) > 1e-4; ++depth) {
        const double mid = 0.5 * (a + b);
        double e = 0;
        if (verdict(mid, e) == va)
            a = mid;
        else
            b = mid;
    }
    rep.bracket_lo = a;
    rep.bracket_hi = b;
    rep.threshold_estimate = 0.5 * (a + b);
    return rep;
}

inline nlohmann::json sweep_to_json(const SweepReport& rep) {
    nlohmann::json j;
    j["family"] = rep.family;
    j["p"] = rep.p;
    j["points"] = nlohmann::json::array();
    for (const SweepPoint& pt : rep.points)
        j["points"].push_back({{"param", pt.param}, {"reached", pt.reached}, {"energy", pt.energy}});
    j["bracket"] = {rep.bracket_lo, rep.bracket_hi};
    j["threshold_estimate"] = rep.threshold_estimate;
    return j;
}

// The two connections of the pole family: one per log branch, mirror images
// across the real axis with equal energy.
inline std::vector<GeodesicCurve> enumerate_branches(double a, double p = 2.0,
                                                     const TraceOptions& topt = {}) {
    if (!(a > 0.0 && a < 1.0))
        throw std::invalid_argument("enumerate_branches: need 0 < a < 1");
    const PotentialSpec spec = make_catalog("rational-a", a, p);
    std::vector<GeodesicCurve> out;
    for (const BranchTag tag : {BranchTag::upper, BranchTag::lower}) {
        GeodesicCurve c = trace(spec, -a, 1.0, tag, topt);
        if (c.reached) out.push_back(std::move(c));
    }
    if (out.size() == 2) {
        std::vector<cplx> mirrored;
        mirrored.reserve(out[0].samples.size());
        for (const CurveSample& s : out[0].samples) mirrored.push_back(std::conj(s.z));
        const double mirror_dist = hausdorff_polyline(mirrored, curve_points(out[1]));
        if (mirror_dist > 1e-6)
            throw Error("enumerate_branches: branches are not conjugate mirrors");
        if (std::abs(out[0].L - out[1].L) > 1e-8)
            throw Error("enumerate_branches: branch energies differ");
    }
    return out;
}

struct PairwiseReport {
    std::vector<cplx> minima;
    std::vector<std::vector<bool>> reached;
    std::vector<std::vector<double>> energy; // |g(b) - g(a)|, symmetric, zero diagonal
};

// Trace every pair of minima. With expect_existence (the paper's claim for
// these families) a failed pair is an error, not a data point.
inline PairwiseReport pairwise_connections(const PotentialSpec& spec, bool expect_existence = true,
                                           const TraceOptions& topt = {}) {
    PairwiseReport rep;
    rep.minima = spec.minima;
    const int m = static_cast<int>(spec.minima.size());
    rep.reached.assign(m, std::vector<bool>(m, false));
    rep.energy.assign(m, std::vector<double>(m, 0.0));
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            const GeodesicCurve c = trace(spec, spec.minima[i], spec.minima[j],
                                          BranchTag::none, topt);
            if (!c.reached && expect_existence)
                throw UnexpectedNonexistence("pairwise_connections: pair (" + std::to_string(i) +
                                             "," + std::to_string(j) + ") did not connect");
            rep.reached[i][j] = rep.reached[j][i] = c.reached;
            rep.energy[i][j] = rep.energy[j][i] = c.L;
        }
    }
    return rep;
}

} // namespace hetero
