#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "errors.hpp"
#include "geodesic.hpp"
#include "numerics.hpp"
#include "potential.hpp"

namespace hetero {

struct Trajectory {
    double p = 2.0;
    BranchTag branch = BranchTag::none;
    cplx alpha, beta;
    double L = 0;
    double anchor_l = 0; // the l value mapped to x = 0 (always L/2)
    int anchor_index = -1;
    bool clamped_lo = false; // profile arrived exactly at alpha inside the window (p > 2)
    bool clamped_hi = false;
    std::vector<double> x; // uniform, strictly increasing, contains 0
    std::vector<cplx> u;
    std::vector<double> W; // W(u_k); series-accurate in the tails
    std::vector<double> l; // informational; saturates to L near the top end
};

struct ReparamOptions {
    int n_samples = 8001; // forced odd so x = 0 is a node
    double rk_tol = 1e-10; // relative, per substep; the projection noise floor sits near 1e-12
};

namespace detail {

// Maps the segment parameter back to the plane: z on the level line
// g(z) = g(alpha) + C l, plus W(z). Callers pass both l and eta = L - l and
// must keep exact whichever one is small; near the ends the projection runs on
// the cancellation-free root series, so the tails stay accurate long after
// L - l stops being representable.
struct LevelProjector {
    const PotentialSpec& spec;
    BranchTag branch;
    cplx alpha, beta, C;
    double L;
    cplx g_alpha, g_beta;
    std::vector<cplx> tay_a, tay_b;
    double l_sw_a, l_sw_b;  // switch to series when l (resp. eta) drops below
    cplx zeta_a0, zeta_b0;  // first/last offset samples: pick the arc's sqrt branch
    double delta_a, delta_b;
    const std::vector<CurveSample>& samples;

    LevelProjector(const PotentialSpec& s, const GeodesicCurve& curve)
        : spec(s), branch(curve.branch), alpha(curve.alpha), beta(curve.beta), C(curve.C),
          L(curve.L), samples(curve.samples) {
        if (!curve.reached || curve.samples.size() < 4)
            throw NotConnected("level projection needs a curve that reached beta");
        g_alpha = eval_g(spec, alpha, branch);
        g_beta = eval_g(spec, beta, branch);
        const int nterms = std::max<int>(static_cast<int>(spec.roots.size()) + 2, 12);
        tay_a = taylor_at(spec, alpha, nterms);
        tay_b = taylor_at(spec, beta, nterms);
        // switch radius: far enough out that the interior Newton (absolute
        // noise ~1e-16 in g) still meets the relative error control, well
        // inside the disc where the local series is clean
        const double w_sw = 0.01 * min_root_separation(spec);
        l_sw_a = 0.5 * std::abs(tay_a[1]) * w_sw * w_sw;
        l_sw_b = 0.5 * std::abs(tay_b[1]) * w_sw * w_sw;
        zeta_a0 = samples[1].z - alpha;
        delta_a = samples[1].l;
        zeta_b0 = samples[samples.size() - 2].z - beta;
        delta_b = L - samples[samples.size() - 2].l;
    }

    struct PW {
        cplx z;
        double W;
    };

    PW at(double l, double eta) const {
        const double q = spec.q();
        if (l <= 0.0) return {alpha, 0.0};
        if (eta <= 0.0) return {beta, 0.0};
        if (l < l_sw_a) {
            // same sqrt arc as the curve: zeta scales like sqrt(l) along it
            const cplx guess = zeta_a0 * std::sqrt(l / delta_a);
            const cplx zeta = newton_near(tay_a, guess, C * l);
            return {alpha + zeta, std::pow(std::abs(eval_f_near(tay_a, zeta)), q)};
        }
        if (eta < l_sw_b) {
            const cplx guess = zeta_b0 * std::sqrt(eta / delta_b);
            const cplx zeta = newton_near(tay_b, guess, -C * eta);
            return {beta + zeta, std::pow(std::abs(eval_f_near(tay_b, zeta)), q)};
        }
        // interior: warm start on the stored polyline, two or three Newton polishes
        auto it = std::lower_bound(samples.begin(), samples.end(), l,
                                   [](const CurveSample& s, double v) { return s.l < v; });
        cplx z;
        if (it == samples.begin()) {
            z = it->z;
        } else if (it == samples.end()) {
            z = samples.back().z;
        } else {
            const CurveSample& b = *it;
            const CurveSample& a = *(it - 1);
            const double t = (l - a.l) / std::max(b.l - a.l, 1e-300);
            z = a.z + t * (b.z - a.z);
        }
        const cplx target = (l <= eta) ? g_alpha + C * l : g_beta - C * eta;
        try {
            for (int k = 0; k < 6; ++k) {
                const cplx resid = eval_g(spec, z, branch) - target;
                if (std::abs(resid) < 2e-16 * (1.0 + std::abs(target))) break;
                z -= resid / eval_f(spec, z);
            }
        } catch (const Error&) {
            // keep the best iterate; the polyline start is already within chord sag
        }
        return {z, eval_W(spec, z)};
    }
};

// Advance dy/dx = f(y) from x0 to x1 (either direction) with relative error
// control; the state may span hundreds of orders of magnitude in the tails.
// |y| dropping under snap_floor snaps to exactly 0 (finite arrival for p > 2;
// the rhs is 0 there, so the rest of the gap is free).
template <class F>
double advance_gap(F&& f, double x0, double x1, double y, double rk_tol, double floor_scale,
                   double snap_floor) {
    const double dir = (x1 >= x0) ? 1.0 : -1.0;
    double x = x0;
    double h = x1 - x0;
    long guard = 0;
    while (dir * (x1 - x) > 0.0) {
        bool last = false;
        if (dir * h >= dir * (x1 - x)) {
            h = x1 - x;
            last = true;
        }
        double err = 0.0;
        const double ynew = dopri5_step(f, x, y, h, err);
        const double scale = rk_tol * std::max(std::abs(ynew), floor_scale);
        if (std::isfinite(ynew) && err <= scale) {
            if (!last && x + h == x) break; // sub-ulp step; treat as resolution wall
            x = last ? x1 : x + h;
            y = std::abs(ynew) < snap_floor ? 0.0 : ynew;
            const double hn = dopri5_next_h(h, err / std::max(scale, 1e-300));
            h = last ? h : hn;
        } else {
            h *= 0.5;
            if (std::abs(h) < 1e-14 * std::abs(x1 - x0) + 1e-300) break; // resolution wall; y holds
        }
        if (++guard > 200000) throw StepFailure("reparametrize: gap integration stalled");
    }
    return y;
}

} // namespace detail

// Equipartition parametrization of a traced connection. Solves dl/dx = W(z(l))
// with the midpoint anchor l(0) = L/2 and evaluates z on a uniform x grid over
// [-x_span, x_span]. The lower half integrates l itself and the upper half
// integrates eta = L - l, so both tails keep full precision. For p > 2 the
// profile meets the minima at finite x; samples beyond are the exact constants.
inline Trajectory reparametrize(const PotentialSpec& spec, const GeodesicCurve& curve,
                                double x_span, const ReparamOptions& opt = {}) {
    if (!curve.reached)
        throw NotConnected("reparametrize: curve never arrived at beta");
    if (!(x_span > 0.0))
        throw std::invalid_argument("reparametrize: x_span must be > 0");

    detail::LevelProjector proj(spec, curve);
    const double L = curve.L;
    const double arrive_eps = 1e-28 * L;
    const double snap_floor = 1e-32 * L;
    const bool can_arrive = spec.q() < 2.0; // integral of 1/W converges at the root

    int n = std::max(opt.n_samples, 5);
    if (n % 2 == 0) ++n;
    const int anchor = (n - 1) / 2;
    const double h = x_span / anchor;

    Trajectory traj;
    traj.p = spec.p;
    traj.branch = curve.branch;
    traj.alpha = curve.alpha;
    traj.beta = curve.beta;
    traj.L = L;
    traj.anchor_l = 0.5 * L;
    traj.anchor_index = anchor;
    traj.x.resize(n);
    traj.u.resize(n);
    traj.W.resize(n);
    traj.l.resize(n);
    for (int k = 0; k < n; ++k) traj.x[k] = (k - anchor) * h;

    auto store = [&](int k, double l, double eta) {
        const auto pw = proj.at(l, eta);
        traj.u[k] = pw.z;
        traj.W[k] = pw.W;
        traj.l[k] = (eta < 0.5 * L) ? L - eta : l;
    };
    store(anchor, 0.5 * L, 0.5 * L);

    // lower half: state l, dl/dx = W, integrated toward decreasing x
    auto rhs_l = [&](double, double l) {
        return (l <= 0.0 || l >= L) ? 0.0 : proj.at(l, L - l).W;
    };
    double l = 0.5 * L;
    for (int k = anchor - 1; k >= 0; --k) {
        l = detail::advance_gap(rhs_l, traj.x[k + 1], traj.x[k], l, opt.rk_tol, 1e-290 * L,
                                snap_floor);
        if (can_arrive && l < arrive_eps) {
            traj.clamped_lo = true;
            for (int j = k; j >= 0; --j) store(j, 0.0, L);
            break;
        }
        store(k, l, L - l);
    }

    // upper half: state eta = L - l, deta/dx = -W
    auto rhs_eta = [&](double, double eta) {
        return (eta <= 0.0 || eta >= L) ? 0.0 : -proj.at(L - eta, eta).W;
    };
    double eta = 0.5 * L;
    for (int k = anchor + 1; k < n; ++k) {
        eta = detail::advance_gap(rhs_eta, traj.x[k - 1], traj.x[k], eta, opt.rk_tol, 1e-290 * L,
                                  snap_floor);
        if (can_arrive && eta < arrive_eps) {
            traj.clamped_hi = true;
            for (int j = k; j < n; ++j) store(j, L, 0.0);
            break;
        }
        store(k, L - eta, eta);
    }
    return traj;
}

// Relative equipartition defect | |u_x|^p - W | / max(W, 1e-12) at interior
// nodes, NaN at the ends and within delta_zero of a minimum (where the profile
// sits on the constant plateau for p > 2 and finite differences say nothing).
inline std::vector<double> equip_profile(const PotentialSpec& spec, const Trajectory& traj) {
    const size_t n = traj.x.size();
    std::vector<double> out(n, std::numeric_limits<double>::quiet_NaN());
    if (n < 3) return out;
    const double guard = delta_zero(spec);
    for (size_t k = 1; k + 1 < n; ++k) {
        bool near_min = false;
        for (const cplx& m : spec.minima)
            if (std::abs(traj.u[k] - m) < guard) near_min = true;
        if (near_min) continue;
        const double hm = traj.x[k] - traj.x[k - 1];
        const double hp = traj.x[k + 1] - traj.x[k];
        const cplx ux = fd_first(traj.u[k - 1], traj.u[k], traj.u[k + 1], hm, hp);
        const double lhs = std::pow(std::abs(ux), traj.p);
        out[k] = std::abs(lhs - traj.W[k]) / std::max(traj.W[k], 1e-12);
    }
    return out;
}

// Pointwise residual of the planar Euler-Lagrange form
//   p |z_x|^2 z_xx + (p-2) z_x^2 conj(z_xx) - 2 |z_x|^(2(3-p)) f conj(f') = 0,
// normalized by 1 + |f conj(f')|. NaN at excluded nodes as in equip_profile.
inline std::vector<double> el_profile(const PotentialSpec& spec, const Trajectory& traj) {
    const size_t n = traj.x.size();
    std::vector<double> out(n, std::numeric_limits<double>::quiet_NaN());
    if (n < 3) return out;
    const double guard = delta_zero(spec);
    for (size_t k = 1; k + 1 < n; ++k) {
        bool near_min = false;
        for (const cplx& m : spec.minima)
            if (std::abs(traj.u[k] - m) < guard) near_min = true;
        if (near_min) continue;
        const double hm = traj.x[k] - traj.x[k - 1];
        const double hp = traj.x[k + 1] - traj.x[k];
        const cplx zx = fd_first(traj.u[k - 1], traj.u[k], traj.u[k + 1], hm, hp);
        const cplx zxx = fd_second(traj.u[k - 1], traj.u[k], traj.u[k + 1], hm, hp);
        cplx ffp;
        try {
            ffp = eval_f(spec, traj.u[k]) * std::conj(eval_fprime(spec, traj.u[k]));
        } catch (const PoleEvaluation&) {
            continue;
        }
        const cplx lhs = traj.p * std::norm(zx) * zxx + (traj.p - 2.0) * zx * zx * std::conj(zxx) -
                         2.0 * std::pow(std::abs(zx), 2.0 * (3.0 - traj.p)) * ffp;
        out[k] = std::abs(lhs) / (1.0 + std::abs(ffp));
    }
    return out;
}

inline double equip_residual(const PotentialSpec& spec, const Trajectory& traj) {
    double worst = 0.0;
    for (double v : equip_profile(spec, traj))
        if (v == v) worst = std::max(worst, v);
    return worst;
}

inline double el_residual(const PotentialSpec& spec, const Trajectory& traj) {
    if (traj.x.size() < 5)
        throw std::invalid_argument("el_residual: need at least 5 samples");
    double worst = 0.0;
    for (double v : el_profile(spec, traj))
        if (v == v) worst = std::max(worst, v);
    return worst;
}

inline double transition_energy(const PotentialSpec& spec, cplx alpha, cplx beta,
                                BranchTag branch = BranchTag::none) {
    return std::abs(eval_g(spec, beta, branch) - eval_g(spec, alpha, branch));
}

// |g(u(y)) - g(alpha)| with u(y) linearly interpolated; alpha is the minimum
// the left end of the window sits at.
inline double partial_energy(const PotentialSpec& spec, const Trajectory& traj, double y) {
    if (traj.x.empty() || y < traj.x.front() - 1e-12 || y > traj.x.back() + 1e-12)
        throw std::invalid_argument("partial_energy: y outside the trajectory window");
    const auto it = std::lower_bound(traj.x.begin(), traj.x.end(), y);
    cplx uy;
    if (it == traj.x.begin()) {
        uy = traj.u.front();
    } else if (it == traj.x.end()) {
        uy = traj.u.back();
    } else {
        const size_t k = static_cast<size_t>(it - traj.x.begin());
        const double t = (y - traj.x[k - 1]) / (traj.x[k] - traj.x[k - 1]);
        uy = traj.u[k - 1] + t * (traj.u[k] - traj.u[k - 1]);
    }
    cplx a = spec.minima.front();
    for (const cplx& m : spec.minima)
        if (std::abs(traj.u.front() - m) < std::abs(traj.u.front() - a)) a = m;
    return std::abs(eval_g(spec, uy, traj.branch) - eval_g(spec, a, traj.branch));
}

// Trapezoid quadrature of |u_x|^p / p + W / q over the sample window, with
// finite-difference u_x (centered inside, one-sided at the ends).
inline double window_action(const PotentialSpec& spec, const Trajectory& traj) {
    const size_t n = traj.x.size();
    if (n < 3) return 0.0;
    const double q = spec.q();
    std::vector<double> integrand(n);
    for (size_t k = 0; k < n; ++k) {
        cplx ux;
        if (k == 0)
            ux = (traj.u[1] - traj.u[0]) / (traj.x[1] - traj.x[0]);
        else if (k + 1 == n)
            ux = (traj.u[n - 1] - traj.u[n - 2]) / (traj.x[n - 1] - traj.x[n - 2]);
        else
            ux = fd_first(traj.u[k - 1], traj.u[k], traj.u[k + 1], traj.x[k] - traj.x[k - 1],
                          traj.x[k + 1] - traj.x[k]);
        integrand[k] = std::pow(std::abs(ux), traj.p) / traj.p + traj.W[k] / q;
    }
    double acc = 0.0;
    for (size_t k = 1; k < n; ++k)
        acc += 0.5 * (integrand[k] + integrand[k - 1]) * (traj.x[k] - traj.x[k - 1]);
    return acc;
}

} // namespace hetero
