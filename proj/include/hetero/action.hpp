#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "errors.hpp"
#include "numerics.hpp"
#include "potential.hpp"

namespace hetero {

// Multi-well potential on R^N with the two distinguished minima the connection
// runs between and the radius R of the balls where W grows radially.
struct WellPotential {
    int N = 1;
    std::function<double(std::span<const double>)> W;
    std::function<void(std::span<const double>, std::span<double>)> grad;
    std::vector<double> a_minus, a_plus;
    double R = 0;
};

inline double well_separation(const WellPotential& pot) {
    double s = 0;
    for (int k = 0; k < pot.N; ++k) {
        const double d = pot.a_plus[k] - pot.a_minus[k];
        s += d * d;
    }
    return std::sqrt(s);
}

inline void validate_well(const WellPotential& pot) {
    if (pot.N < 1) throw std::invalid_argument("well: dimension must be >= 1");
    if (static_cast<int>(pot.a_minus.size()) != pot.N ||
        static_cast<int>(pot.a_plus.size()) != pot.N)
        throw std::invalid_argument("well: minima must have length N");
    if (!pot.W || !pot.grad) throw std::invalid_argument("well: missing W or gradient");
    const double sep = well_separation(pot);
    if (!(pot.R > 0) || pot.R >= sep)
        throw std::invalid_argument("well: need 0 < R < |a+ - a-|");
    if (pot.W(pot.a_minus) > 1e-10 || pot.W(pot.a_plus) > 1e-10)
        throw std::invalid_argument("well: W must vanish at both minima");
}

// Scalar double well (1 - u^2)^2.
inline WellPotential make_two_well_scalar() {
    WellPotential pot;
    pot.N = 1;
    pot.a_minus = {-1.0};
    pot.a_plus = {1.0};
    pot.R = 0.9;
    pot.W = [](std::span<const double> u) {
        const double w = 1.0 - u[0] * u[0];
        return w * w;
    };
    pot.grad = [](std::span<const double> u, std::span<double> g) {
        g[0] = -4.0 * u[0] * (1.0 - u[0] * u[0]);
    };
    validate_well(pot);
    return pot;
}

// Planar well |f|^q seen as a potential on R^2, between two chosen minima of
// the spec. Uses the limit form of the gradient so q < 2 stays finite at the
// zeros themselves.
inline WellPotential make_well_from_spec(const PotentialSpec& spec, cplx alpha, cplx beta,
                                         double radius_factor = 0.45) {
    WellPotential pot;
    pot.N = 2;
    pot.a_minus = {alpha.real(), alpha.imag()};
    pot.a_plus = {beta.real(), beta.imag()};
    pot.R = radius_factor * std::abs(beta - alpha);
    pot.W = [spec](std::span<const double> u) { return eval_W(spec, cplx(u[0], u[1])); };
    pot.grad = [spec](std::span<const double> u, std::span<double> g) {
        const cplx gw = grad_W_unguarded(spec, cplx(u[0], u[1]));
        g[0] = gw.real();
        g[1] = gw.imag();
    };
    validate_well(pot);
    return pot;
}

struct GridParams {
    double x_lo = -8.0;
    double x_hi = 8.0;
    int M = 1600; // segments; M+1 nodes
};

// Discrete path u_0..u_M on a uniform grid, flattened row-major. Outside the
// window [i_lo, i_hi] the nodes are constrained to the R/2 balls around the
// two minima.
struct ActionPath {
    double p = 2.0;
    int N = 1;
    double x_lo = -8.0;
    double dx = 0.01;
    int M = 1600;
    int i_lo = 240, i_hi = 1360;
    std::vector<double> u; // (M+1) * N

    double x(int i) const { return x_lo + i * dx; }
    std::span<double> node(int i) { return {u.data() + static_cast<size_t>(i) * N, size_t(N)}; }
    std::span<const double> node(int i) const {
        return {u.data() + static_cast<size_t>(i) * N, size_t(N)};
    }
};

// Straight segment from a- to a+, endpoints clamped; window at 15% / 85%.
inline ActionPath linear_init(const WellPotential& pot, double p, const GridParams& grid = {}) {
    if (!(p > 1.0)) throw std::invalid_argument("linear_init: p must be > 1");
    if (grid.M < 8 || !(grid.x_hi > grid.x_lo))
        throw std::invalid_argument("linear_init: bad grid");
    ActionPath path;
    path.p = p;
    path.N = pot.N;
    path.x_lo = grid.x_lo;
    path.M = grid.M;
    path.dx = (grid.x_hi - grid.x_lo) / grid.M;
    path.i_lo = static_cast<int>(std::lround(0.15 * grid.M));
    path.i_hi = static_cast<int>(std::lround(0.85 * grid.M));
    path.u.resize(static_cast<size_t>(grid.M + 1) * pot.N);
    for (int i = 0; i <= grid.M; ++i) {
        const double t = static_cast<double>(i) / grid.M;
        for (int k = 0; k < pot.N; ++k)
            path.node(i)[k] = pot.a_minus[k] + t * (pot.a_plus[k] - pot.a_minus[k]);
    }
    return path;
}

namespace detail {

inline double seg_norm(const double* a, const double* b, int N, double inv_dx) {
    double s = 0;
    for (int k = 0; k < N; ++k) {
        const double v = (b[k] - a[k]) * inv_dx;
        s += v * v;
    }
    return std::sqrt(s);
}

// Shared body for the raw (mu = 0) and smoothed velocity terms. Extended
// precision in the sum lets the line search resolve decreases near the
// double-precision floor of the total.
inline long double action_eval_mu_ld(const ActionPath& path, const WellPotential& pot, double mu) {
    const int M = path.M, N = path.N;
    const double q = path.p / (path.p - 1.0);
    const double inv_dx = 1.0 / path.dx;
    std::vector<double> Wv(M + 1);
    for (int i = 0; i <= M; ++i) Wv[i] = pot.W(path.node(i));
    long double acc = 0;
    for (int i = 0; i < M; ++i) {
        const double s = seg_norm(path.u.data() + size_t(i) * N,
                                  path.u.data() + size_t(i + 1) * N, N, inv_dx);
        const double sp = std::pow(s * s + mu * mu, 0.5 * path.p);
        acc += static_cast<long double>((sp / path.p + 0.5 * (Wv[i] + Wv[i + 1]) / q) * path.dx);
    }
    return acc;
}

inline double action_eval_mu(const ActionPath& path, const WellPotential& pot, double mu) {
    return static_cast<double>(action_eval_mu_ld(path, pot, mu));
}

inline void action_grad_mu(const ActionPath& path, const WellPotential& pot, double mu,
                           std::vector<double>& out) {
    const int M = path.M, N = path.N;
    const double q = path.p / (path.p - 1.0);
    const double inv_dx = 1.0 / path.dx;
    out.assign(static_cast<size_t>(M + 1) * N, 0.0);
    std::vector<double> gw(N);
    for (int i = 1; i < M; ++i) { // endpoints stay clamped: zero rows
        pot.grad(path.node(i), gw);
        for (int k = 0; k < N; ++k) out[size_t(i) * N + k] += path.dx * gw[k] / q;
    }
    for (int i = 0; i < M; ++i) {
        const double* a = path.u.data() + size_t(i) * N;
        const double* b = path.u.data() + size_t(i + 1) * N;
        const double s = seg_norm(a, b, N, inv_dx);
        const double s2 = s * s + mu * mu;
        if (s2 <= 0) continue;
        const double coef = std::pow(s2, 0.5 * path.p - 1.0); // |v|^(p-2), smoothed
        for (int k = 0; k < N; ++k) {
            const double v = (b[k] - a[k]) * inv_dx;
            const double gv = coef * v;
            if (i > 0) out[size_t(i) * N + k] -= gv;
            if (i + 1 < M) out[size_t(i + 1) * N + k] += gv;
        }
    }
}

// Pull the constrained nodes back onto their balls.
inline void project_path(ActionPath& path, const WellPotential& pot) {
    const double r = 0.5 * pot.R;
    auto pull = [&](int i, const std::vector<double>& center) {
        auto nd = path.node(i);
        double d2 = 0;
        for (int k = 0; k < path.N; ++k) {
            const double v = nd[k] - center[k];
            d2 += v * v;
        }
        const double d = std::sqrt(d2);
        if (d > r) {
            const double f = r / d;
            for (int k = 0; k < path.N; ++k) nd[k] = center[k] + f * (nd[k] - center[k]);
        }
    };
    for (int i = 1; i <= path.i_lo; ++i) pull(i, pot.a_minus);
    for (int i = path.i_hi; i < path.M; ++i) pull(i, pot.a_plus);
}

// Gradient with the outward radial component dropped at nodes sitting on an
// active ball boundary; its max node norm is the stationarity measure.
inline double projected_grad_max(const ActionPath& path, const WellPotential& pot,
                                 const std::vector<double>& g) {
    const double r = 0.5 * pot.R;
    const int N = path.N;
    double worst = 0;
    std::vector<double> gi(N);
    for (int i = 1; i < path.M; ++i) {
        for (int k = 0; k < N; ++k) gi[k] = g[size_t(i) * N + k];
        const std::vector<double>* center = nullptr;
        if (i <= path.i_lo) center = &pot.a_minus;
        else if (i >= path.i_hi) center = &pot.a_plus;
        if (center) {
            double d2 = 0;
            for (int k = 0; k < N; ++k) {
                const double v = path.node(i)[k] - (*center)[k];
                d2 += v * v;
            }
            const double d = std::sqrt(d2);
            if (d >= r - 1e-12 && d > 0) {
                double radial = 0; // descent direction is -g: outward means g radial < 0
                for (int k = 0; k < N; ++k)
                    radial += gi[k] * (path.node(i)[k] - (*center)[k]) / d;
                if (radial < 0)
                    for (int k = 0; k < N; ++k)
                        gi[k] -= radial * (path.node(i)[k] - (*center)[k]) / d;
            }
        }
        double n2 = 0;
        for (int k = 0; k < N; ++k) n2 += gi[k] * gi[k];
        worst = std::max(worst, std::sqrt(n2));
    }
    return worst;
}

} // namespace detail

// Discrete action: forward difference in the velocity, trapezoid in W.
inline double action_eval(const ActionPath& path, const WellPotential& pot) {
    return detail::action_eval_mu(path, pot, 0.0);
}

// Exact gradient of action_eval with respect to the interior nodes (endpoint
// rows are zero: they are clamped data, not variables).
inline std::vector<double> action_grad(const ActionPath& path, const WellPotential& pot) {
    std::vector<double> g;
    detail::action_grad_mu(path, pot, 0.0, g);
    return g;
}

struct HypothesisReport {
    bool passed = false;
    int violations = 0;          // nonpositive radial forward differences
    double min_forward_diff = 0; // most negative W increment seen along rays
    double far_min = 0;          // min W on the circle |u| = 10 |a+ - a-|
};

// Samples r -> W(a +/- + r xi) on random rays inside B_R and W far away;
// Hypothesis 1 wants strict radial growth near the minima and a positive
// liminf at infinity. Report-only.
inline HypothesisReport validate_hypothesis(const WellPotential& pot, int samples_per_ray = 64,
                                            int rays = 32, unsigned seed = 20240801u) {
    validate_well(pot);
    HypothesisReport rep;
    rep.min_forward_diff = std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> xi(pot.N), pt(pot.N);
    auto random_unit = [&] {
        double n2 = 0;
        do {
            n2 = 0;
            for (int k = 0; k < pot.N; ++k) {
                xi[k] = gauss(rng);
                n2 += xi[k] * xi[k];
            }
        } while (n2 < 1e-12);
        const double inv = 1.0 / std::sqrt(n2);
        for (int k = 0; k < pot.N; ++k) xi[k] *= inv;
    };
    for (const std::vector<double>* center : {&pot.a_minus, &pot.a_plus}) {
        for (int rr = 0; rr < rays; ++rr) {
            random_unit();
            double prev = 0; // W at the center itself
            for (int s = 1; s <= samples_per_ray; ++s) {
                const double r = pot.R * s / (samples_per_ray + 1); // stay inside (0, R)
                for (int k = 0; k < pot.N; ++k) pt[k] = (*center)[k] + r * xi[k];
                const double w = pot.W(pt);
                const double diff = w - prev;
                if (diff <= 0) ++rep.violations;
                rep.min_forward_diff = std::min(rep.min_forward_diff, diff);
                prev = w;
            }
        }
    }
    const double far = 10.0 * well_separation(pot);
    rep.far_min = std::numeric_limits<double>::infinity();
    const int far_samples = std::max(8, 64 * pot.N);
    for (int s = 0; s < far_samples; ++s) {
        random_unit();
        for (int k = 0; k < pot.N; ++k) pt[k] = far * xi[k];
        rep.far_min = std::min(rep.far_min, pot.W(pt));
    }
    rep.passed = rep.violations == 0 && rep.far_min > 0;
    return rep;
}

struct MinimizeOptions {
    double gtol = 1e-7;   // max node norm of the projected gradient
    long max_iter = 100000;
    int memory = 10;      // L-BFGS pairs
    double mu = 1e-8;     // velocity smoothing, applied only when p < 2
    bool validate = true; // run validate_hypothesis first
    std::function<void(long iter, double action, double grad_max)> callback;
};

struct MinimizeResult {
    ActionPath path;
    bool converged = false;
    long iterations = 0;
    double action = 0;   // raw (unsmoothed) value at the final path
    double grad_max = 0; // projected gradient measure at exit
};

// Projected L-BFGS with Armijo backtracking on the discrete action. Descent is
// monotone by construction; constrained nodes are pulled back onto their balls
// after every trial step.
inline MinimizeResult minimize(const WellPotential& pot, double p, const GridParams& grid = {},
                               const MinimizeOptions& opt = {},
                               std::optional<ActionPath> init = {}) {
    validate_well(pot);
    if (opt.validate) {
        const HypothesisReport rep = validate_hypothesis(pot);
        if (!rep.passed)
            throw HypothesisViolated("minimize: radial growth check failed for this well");
    }
    MinimizeResult res;
    res.path = init ? std::move(*init) : linear_init(pot, p, grid);
    ActionPath& path = res.path;
    if (path.N != pot.N) throw std::invalid_argument("minimize: path/well dimension mismatch");
    const double mu = p < 2.0 ? opt.mu : 0.0;
    detail::project_path(path, pot);

    const size_t dim = path.u.size();
    std::vector<double> g, g_new, trial, d(dim);
    std::vector<std::vector<double>> s_hist, y_hist;
    std::vector<double> rho_hist;
    long double F = detail::action_eval_mu_ld(path, pot, mu);
    detail::action_grad_mu(path, pot, mu, g);

    auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
        double acc = 0;
        for (size_t j = 0; j < a.size(); ++j) acc += a[j] * b[j];
        return acc;
    };

    for (res.iterations = 0; res.iterations < opt.max_iter; ++res.iterations) {
        res.grad_max = detail::projected_grad_max(path, pot, g);
        if (opt.callback) opt.callback(res.iterations, detail::action_eval_mu(path, pot, 0.0),
                                       res.grad_max);
        if (res.grad_max < opt.gtol) {
            res.converged = true;
            break;
        }

        // two-loop recursion
        for (size_t j = 0; j < dim; ++j) d[j] = -g[j];
        const int hist = static_cast<int>(s_hist.size());
        std::vector<double> alpha_hist(hist);
        for (int j = hist - 1; j >= 0; --j) {
            alpha_hist[j] = rho_hist[j] * dot(s_hist[j], d);
            for (size_t t = 0; t < dim; ++t) d[t] -= alpha_hist[j] * y_hist[j][t];
        }
        if (hist > 0) {
            const double gamma = dot(s_hist[hist - 1], y_hist[hist - 1]) /
                                 std::max(dot(y_hist[hist - 1], y_hist[hist - 1]), 1e-300);
            for (size_t t = 0; t < dim; ++t) d[t] *= gamma;
        }
        for (int j = 0; j < hist; ++j) {
            const double beta = rho_hist[j] * dot(y_hist[j], d);
            for (size_t t = 0; t < dim; ++t) d[t] += (alpha_hist[j] - beta) * s_hist[j][t];
        }
        if (dot(g, d) >= 0) { // not a descent direction; drop memory
            for (size_t j = 0; j < dim; ++j) d[j] = -g[j];
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
        }

        // Armijo backtracking on the projected trial point; one retry with the
        // memory dropped before giving up, since stale curvature pairs can
        // poison the direction near the minimum
        bool accepted = false;
        long double F_new = F;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            if (attempt == 1) {
                if (s_hist.empty()) break;
                for (size_t j = 0; j < dim; ++j) d[j] = -g[j];
                s_hist.clear();
                y_hist.clear();
                rho_hist.clear();
            }
            double t_step = 1.0;
            for (int bt = 0; bt < 60; ++bt) {
                trial = path.u;
                for (size_t j = 0; j < dim; ++j) trial[j] += t_step * d[j];
                std::swap(path.u, trial);
                detail::project_path(path, pot);
                long double decrease = 0;
                for (size_t j = 0; j < dim; ++j)
                    decrease += static_cast<long double>(g[j]) * (path.u[j] - trial[j]);
                F_new = detail::action_eval_mu_ld(path, pot, mu);
                if (F_new <= F + 1e-4L * decrease && decrease < 0) {
                    accepted = true;
                    break;
                }
                std::swap(path.u, trial); // rollback
                t_step *= 0.5;
            }
        }
        if (!accepted) break; // no resolvable decrease left; flag decides below

        detail::action_grad_mu(path, pot, mu, g_new);
        // curvature pair from the realized (projected) step
        std::vector<double> s_vec(dim), y_vec(dim);
        for (size_t j = 0; j < dim; ++j) {
            s_vec[j] = path.u[j] - trial[j];
            y_vec[j] = g_new[j] - g[j];
        }
        const double sy = dot(s_vec, y_vec);
        if (sy > 1e-12 * std::sqrt(dot(s_vec, s_vec)) * std::sqrt(dot(y_vec, y_vec))) {
            s_hist.push_back(std::move(s_vec));
            y_hist.push_back(std::move(y_vec));
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > opt.memory) {
                s_hist.erase(s_hist.begin());
                y_hist.erase(y_hist.begin());
                rho_hist.erase(rho_hist.begin());
            }
        }
        F = F_new;
        std::swap(g, g_new);
    }
    if (!res.converged) {
        detail::action_grad_mu(path, pot, mu, g);
        res.grad_max = detail::projected_grad_max(path, pot, g);
        res.converged = res.grad_max < opt.gtol;
    }
    res.action = action_eval(path, pot);
    return res;
}

// Planar paths as complex polylines, for cross-checks against traced curves.
inline std::vector<cplx> path_points(const ActionPath& path) {
    if (path.N != 2) throw std::invalid_argument("path_points: needs N == 2");
    std::vector<cplx> pts;
    pts.reserve(path.M + 1);
    for (int i = 0; i <= path.M; ++i) pts.emplace_back(path.node(i)[0], path.node(i)[1]);
    return pts;
}

} // namespace hetero
