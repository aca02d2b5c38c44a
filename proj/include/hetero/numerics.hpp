#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace hetero {

using cplx = std::complex<double>;

namespace detail {

inline double state_norm(double v) { return std::abs(v); }
inline double state_norm(const cplx& v) { return std::abs(v); }

} // namespace detail

// One embedded Dormand-Prince 5(4) step. Returns the 5th order solution and
// the norm of the embedded error estimate. State is double or std::complex;
// Rhs is f(t, y) -> State.
template <class State, class Rhs>
State dopri5_step(Rhs&& f, double t, const State& y, double h, double& err_norm) {
    const State k1 = f(t, y);
    const State k2 = f(t + h / 5.0, y + h * (k1 / 5.0));
    const State k3 = f(t + 3.0 * h / 10.0, y + h * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2));
    const State k4 = f(t + 4.0 * h / 5.0,
                       y + h * (44.0 / 45.0 * k1 - 56.0 / 15.0 * k2 + 32.0 / 9.0 * k3));
    const State k5 = f(t + 8.0 * h / 9.0,
                       y + h * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * k2 +
                                64448.0 / 6561.0 * k3 - 212.0 / 729.0 * k4));
    const State k6 = f(t + h,
                       y + h * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * k2 +
                                46732.0 / 5247.0 * k3 + 49.0 / 176.0 * k4 -
                                5103.0 / 18656.0 * k5));
    const State y5 = y + h * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * k3 + 125.0 / 192.0 * k4 -
                              2187.0 / 6784.0 * k5 + 11.0 / 84.0 * k6);
    const State k7 = f(t + h, y5);
    const State y4 = y + h * (5179.0 / 57600.0 * k1 + 7571.0 / 16695.0 * k3 +
                              393.0 / 640.0 * k4 - 92097.0 / 339200.0 * k5 +
                              187.0 / 2100.0 * k6 + 1.0 / 40.0 * k7);
    err_norm = detail::state_norm(y5 - y4);
    return y5;
}

// Step-size update for the controller above: classic 0.9 * err^(-1/5) with
// growth clamped to [0.2, 5].
inline double dopri5_next_h(double h, double scaled_err) {
    double fac = 0.9 * std::pow(std::max(scaled_err, 1e-30), -0.2);
    return h * std::clamp(fac, 0.2, 5.0);
}

// Three-point first derivative at the middle node of {x-hm, x, x+hp}.
template <class State>
State fd_first(const State& ym, const State& y0, const State& yp, double hm, double hp) {
    const double denom = hm * hp * (hm + hp);
    return (hm * hm * yp - hp * hp * ym + (hp * hp - hm * hm) * y0) / denom;
}

// Three-point second derivative, first order accurate on nonuniform spacing,
// second order when hm == hp.
template <class State>
State fd_second(const State& ym, const State& y0, const State& yp, double hm, double hp) {
    return 2.0 * (hp * ym - (hm + hp) * y0 + hm * yp) / (hm * hp * (hm + hp));
}

inline double dist_point_segment(const cplx& pt, const cplx& a, const cplx& b) {
    const cplx ab = b - a;
    const double len2 = std::norm(ab);
    if (len2 == 0.0) return std::abs(pt - a);
    double t = ((pt.real() - a.real()) * ab.real() + (pt.imag() - a.imag()) * ab.imag()) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return std::abs(pt - (a + t * ab));
}

inline double directed_hausdorff(const std::vector<cplx>& from, const std::vector<cplx>& to) {
    if (to.empty() || from.empty()) return 0.0;
    double worst = 0.0;
    for (const cplx& p : from) {
        double best = std::abs(p - to.front());
        if (to.size() == 1) {
            worst = std::max(worst, best);
            continue;
        }
        for (std::size_t j = 0; j + 1 < to.size(); ++j) {
            // Cheap reject: segment endpoints bound the point-segment distance
            // from below by (min endpoint distance - segment length).
            best = std::min(best, dist_point_segment(p, to[j], to[j + 1]));
            if (best == 0.0) break;
        }
        worst = std::max(worst, best);
    }
    return worst;
}

// Symmetric Hausdorff distance between two polylines (sample points against
// the other curve's segments, both directions).
inline double hausdorff_polyline(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

// FNV-1a over bytes; used to fingerprint canonical spec serializations so
// manifests can cross-reference inputs without embedding them.
inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace hetero
