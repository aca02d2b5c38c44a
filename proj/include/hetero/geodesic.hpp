#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "numerics.hpp"
#include "potential.hpp"

namespace hetero {

struct CurveSample {
    double l; // weighted arclength, the straight-segment parameter in the g-plane
    cplx z;
};

struct GeodesicCurve {
    cplx alpha;
    cplx beta;
    BranchTag branch = BranchTag::none;
    cplx C;       // unit phase of g(beta) - g(alpha)
    double L = 0; // |g(beta) - g(alpha)|, the transition energy
    bool reached = false;
    int mid_index = -1; // sample with l == L/2 exactly
    std::string diagnostic;
    std::vector<CurveSample> samples;
};

struct TraceOptions {
    double rk_tol = 1e-12;      // local error per step, scaled by (1 + |z|)
    double z_cap = 2.5e-4;      // max |dz| per step, scaled by (1 + |z|)
    double max_step_rel = 2e-3; // max dl per step, relative to L
    double delta_rel = 1e-6;    // start/end offset in l, relative to L
    double eps_reach = -1.0;    // <0: use 1e-5 * (1 + |beta|)
    long max_steps = 4000000;
};

// C = (g(beta) - g(alpha))/L and L = |g(beta) - g(alpha)|.
inline std::pair<cplx, double> phase_and_length(const PotentialSpec& spec, cplx alpha, cplx beta,
                                                BranchTag branch = BranchTag::none) {
    const cplx diff = eval_g(spec, beta, branch) - eval_g(spec, alpha, branch);
    const double L = std::abs(diff);
    if (L < 1e-12)
        throw DegenerateSegment("phase_and_length: g(beta) == g(alpha)");
    return {diff / L, L};
}

namespace detail {

struct ArmResult {
    std::vector<CurveSample> samples;
    int mid_index = -1;
    bool reached = false;
    bool captured = false;
    bool step_failed = false;
    double end_dist = std::numeric_limits<double>::infinity();
    std::string diag;
};

// Solve g(root + zeta) - g(root) = target for zeta, warm started at zeta0.
// Uses the cancellation-free near-root series for both g and f.
inline cplx newton_near(const std::vector<cplx>& taylor, cplx zeta0, cplx target) {
    cplx zeta = zeta0;
    for (int it = 0; it < 8; ++it) {
        const cplx resid = eval_g_near(taylor, zeta) - target;
        if (std::abs(resid) <= 1e-12 * std::abs(target) + 1e-30) break;
        const cplx fp = eval_f_near(taylor, zeta);
        if (std::abs(fp) == 0.0) break;
        const cplx step = resid / fp;
        if (std::abs(step) > 10.0 * std::abs(zeta0) + 1e-12) return zeta0; // give up, keep guess
        zeta -= step;
    }
    return zeta;
}

// One candidate arc: integrate dz/dl = C/f(z) from l = delta to l = L - delta.
// Two arcs leave alpha (the two square-root branches of the local inverse of g);
// at most one of them ends at beta, which is what `reached` records.
inline ArmResult trace_arm(const PotentialSpec& spec, cplx alpha, cplx beta, cplx C, double L,
                           const std::vector<cplx>& tay_a, const std::vector<cplx>& tay_b,
                           cplx w_start, const TraceOptions& opt, BranchTag branch) {
    ArmResult arm;
    const double delta = opt.delta_rel * L;
    const double l_end = L - delta;
    const double dz_guard = delta_zero(spec);
    const double scale = 1.0 + std::max(std::abs(alpha), std::abs(beta));
    const double eps_reach = opt.eps_reach > 0 ? opt.eps_reach : 1e-5 * (1.0 + std::abs(beta));

    std::vector<cplx> foreign;
    for (const cplx& r : spec.roots)
        if (std::abs(r - alpha) > 1e-9 && std::abs(r - beta) > 1e-9) foreign.push_back(r);

    const cplx zeta0 = newton_near(tay_a, w_start, C * delta);
    cplx z = alpha + zeta0;
    double l = delta;
    arm.samples.push_back({0.0, alpha});
    arm.samples.push_back({l, z});

    const cplx g_alpha_plus = eval_g(spec, z, branch) - C * delta; // consistent base for mid polish

    auto rhs = [&](double, const cplx& y) { return C / eval_f(spec, y); };

    double h = 0.5 * delta;
    long nsteps = 0;
    while (l < l_end) {
        double h_try = std::min(h, opt.max_step_rel * L);
        const double af = std::abs(eval_f(spec, z));
        h_try = std::min(h_try, opt.z_cap * (1.0 + std::abs(z)) * af);
        bool hit_mid = false, hit_end = false;
        const double half = 0.5 * L;
        if (l < half && l + h_try >= half) {
            h_try = half - l;
            hit_mid = true;
        } else if (l + h_try >= l_end) {
            h_try = l_end - l;
            hit_end = true;
        }
        double err = 0.0;
        cplx znew;
        try {
            znew = dopri5_step(rhs, l, z, h_try, err);
        } catch (const PoleEvaluation&) {
            arm.diag = "pole-hit";
            return arm;
        }
        const double scaled = err / (opt.rk_tol * (1.0 + std::abs(znew)));
        if (scaled <= 1.0) {
            l = hit_mid ? half : (hit_end ? l_end : l + h_try);
            z = znew;
            if (hit_mid) {
                // polish onto the level line with the full g before recording
                try {
                    for (int it = 0; it < 3; ++it) {
                        const cplx resid = eval_g(spec, z, branch) - (g_alpha_plus + C * l);
                        if (std::abs(resid) < 1e-14 * (1.0 + std::abs(g_alpha_plus))) break;
                        z -= resid / eval_f(spec, z);
                    }
                } catch (const Error&) {
                }
                arm.mid_index = static_cast<int>(arm.samples.size());
            }
            arm.samples.push_back({l, z});
            for (const cplx& r : foreign) {
                if (std::abs(z - r) < dz_guard) {
                    arm.captured = true;
                    arm.diag = "captured by a foreign zero";
                    return arm;
                }
            }
            if (std::abs(z) > 1e6 * scale) {
                arm.diag = "diverged";
                return arm;
            }
            const double h_next = dopri5_next_h(h_try, scaled);
            h = (hit_mid || hit_end) ? std::max(h, h_next) : h_next;
        } else {
            h = dopri5_next_h(h_try, scaled);
            if (h < 1e-15 * L) {
                arm.step_failed = true;
                arm.diag = "step underflow";
                return arm;
            }
        }
        if (++nsteps > opt.max_steps) {
            arm.diag = "step budget exhausted";
            return arm;
        }
    }

    arm.end_dist = std::abs(z - beta);
    const double w_end = std::sqrt(2.0 * delta / std::abs(tay_b[1]));
    if (arm.end_dist <= std::max(eps_reach, 4.0 * w_end)) {
        arm.reached = true;
        // polish the last integrated point against the local series at beta,
        // then close the curve with its limit point
        const cplx zeta_end = newton_near(tay_b, z - beta, -C * delta);
        arm.samples.back().z = beta + zeta_end;
        arm.samples.push_back({L, beta});
        arm.end_dist = 0.0;
    } else {
        arm.diag = "did not arrive at beta";
    }
    return arm;
}

} // namespace detail

// Trace the connection candidate from alpha to beta: the preimage of the
// straight segment [g(alpha), g(beta)] under g, integrated as dz/dl = C/f(z).
// Both local arcs at alpha are traced; the one arriving at beta wins.
inline GeodesicCurve trace(const PotentialSpec& spec, cplx alpha, cplx beta,
                           BranchTag branch = BranchTag::none,
                           const TraceOptions& opt = {}) {
    auto member = [&](cplx v) {
        for (const cplx& m : spec.minima)
            if (std::abs(v - m) < 1e-9) return true;
        return false;
    };
    if (!member(alpha) || !member(beta))
        throw std::invalid_argument("trace: alpha and beta must be listed minima");
    if (std::abs(alpha - beta) < 1e-9)
        throw std::invalid_argument("trace: alpha == beta");

    auto [C, L] = phase_and_length(spec, alpha, beta, branch);

    const int nterms = std::max<int>(static_cast<int>(spec.roots.size()) + 2, 12);
    const std::vector<cplx> tay_a = taylor_at(spec, alpha, nterms);
    const std::vector<cplx> tay_b = taylor_at(spec, beta, nterms);
    const double scale = 1.0 + std::max(std::abs(alpha), std::abs(beta));
    if (std::abs(tay_a[1]) < 1e-12 * scale)
        throw StartDegenerate("trace: f'(alpha) vanishes");
    if (std::abs(tay_b[1]) < 1e-12 * scale)
        throw StartDegenerate("trace: f'(beta) vanishes");

    const double delta = opt.delta_rel * L;
    const cplx w_plus = std::sqrt(2.0 * C * delta / tay_a[1]);

    detail::ArmResult arms[2];
    arms[0] = detail::trace_arm(spec, alpha, beta, C, L, tay_a, tay_b, w_plus, opt, branch);
    arms[1] = detail::trace_arm(spec, alpha, beta, C, L, tay_a, tay_b, -w_plus, opt, branch);

    if (arms[0].step_failed && arms[1].step_failed)
        throw StepFailure("trace: adaptive step underflow on both arcs");

    int pick;
    if (arms[0].reached != arms[1].reached) {
        pick = arms[0].reached ? 0 : 1;
    } else if (arms[0].reached) {
        pick = arms[0].end_dist <= arms[1].end_dist ? 0 : 1; // both claim arrival; keep closer
    } else if (arms[0].captured != arms[1].captured) {
        pick = arms[0].captured ? 0 : 1; // capture is the more telling failure
    } else {
        pick = arms[0].end_dist <= arms[1].end_dist ? 0 : 1;
    }

    GeodesicCurve curve;
    curve.alpha = alpha;
    curve.beta = beta;
    curve.branch = branch;
    curve.C = C;
    curve.L = L;
    curve.reached = arms[pick].reached;
    curve.mid_index = arms[pick].mid_index;
    curve.diagnostic = arms[pick].diag;
    curve.samples = std::move(arms[pick].samples);
    return curve;
}

// Retrace with every discretization knob tightened by `factor` (tolerance by
// factor^5 to match the stepper's order). The connection itself is unchanged;
// this exists to demonstrate that.
inline GeodesicCurve refine(const PotentialSpec& spec, const GeodesicCurve& curve, int factor,
                            const TraceOptions& base = {}) {
    if (factor < 2)
        throw std::invalid_argument("refine: factor must be an integer >= 2");
    TraceOptions opt = base;
    opt.z_cap = base.z_cap / factor;
    opt.max_step_rel = base.max_step_rel / factor;
    opt.rk_tol = std::max(base.rk_tol / std::pow(double(factor), 5.0), 1e-14);
    return trace(spec, curve.alpha, curve.beta, curve.branch, opt);
}

// max_k |Im((g(z_k) - g(alpha)) / (g(beta) - g(alpha)))|
inline double levelset_residual(const PotentialSpec& spec, const GeodesicCurve& curve) {
    const cplx g_alpha = eval_g(spec, curve.alpha, curve.branch);
    const cplx denom = curve.C * curve.L;
    double worst = 0.0;
    for (const CurveSample& s : curve.samples) {
        const cplx val = (eval_g(spec, s.z, curve.branch) - g_alpha) / denom;
        worst = std::max(worst, std::abs(val.imag()));
    }
    return worst;
}

inline std::vector<cplx> curve_points(const GeodesicCurve& curve) {
    std::vector<cplx> pts;
    pts.reserve(curve.samples.size());
    for (const CurveSample& s : curve.samples) pts.push_back(s.z);
    return pts;
}

inline double curve_hausdorff(const GeodesicCurve& a, const GeodesicCurve& b) {
    return hausdorff_polyline(curve_points(a), curve_points(b));
}

} // namespace hetero
