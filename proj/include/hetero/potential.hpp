#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "numerics.hpp"

namespace hetero {

// Which log branch g uses when f has the 1/z term. The cut is placed on the
// imaginary ray of the *other* half-plane, so a curve confined to the named
// half-plane never meets it.
enum class BranchTag { none, upper, lower };

inline const char* to_string(BranchTag b) {
    switch (b) {
        case BranchTag::upper: return "upper";
        case BranchTag::lower: return "lower";
        default: return "none";
    }
}

// W(z) = |f(z)|^q with f(z) = leading_coeff * prod (z - roots[i]) / z^e,
// e = 1 when pole_at_zero. q is the Holder conjugate of p.
struct PotentialSpec {
    std::vector<cplx> roots;
    bool pole_at_zero = false;
    cplx leading_coeff = 1.0;
    double p = 2.0;
    std::vector<cplx> minima; // subset of the simple roots; connection endpoints

    double q() const { return p / (p - 1.0); }
};

constexpr double kSingularGradGuard = 1e-8; // |f| floor for grad_W when q < 2

inline double min_root_separation(const PotentialSpec& spec) {
    double best = 1.0;
    bool any = false;
    for (std::size_t i = 0; i < spec.roots.size(); ++i)
        for (std::size_t j = i + 1; j < spec.roots.size(); ++j) {
            double d = std::abs(spec.roots[i] - spec.roots[j]);
            best = any ? std::min(best, d) : d;
            any = true;
        }
    return any ? best : 1.0;
}

// Guard radius around foreign zeros: a trace that comes this close to a zero
// other than its endpoints is treated as captured.
inline double delta_zero(const PotentialSpec& spec) {
    return 1e-3 * min_root_separation(spec);
}

inline void validate_spec(const PotentialSpec& spec) {
    if (!(spec.p > 1.0) || !std::isfinite(spec.p))
        throw std::invalid_argument("potential: p must be finite and > 1");
    if (spec.roots.empty())
        throw std::invalid_argument("potential: at least one root required");
    if (!(std::abs(spec.leading_coeff) > 0.0))
        throw std::invalid_argument("potential: leading_coeff must be nonzero");
    if (spec.pole_at_zero) {
        for (const cplx& r : spec.roots)
            if (std::abs(r) < 1e-12)
                throw std::invalid_argument("potential: root at the pole location z=0");
    }
    for (std::size_t i = 0; i < spec.minima.size(); ++i) {
        const cplx m = spec.minima[i];
        for (std::size_t j = i + 1; j < spec.minima.size(); ++j)
            if (std::abs(m - spec.minima[j]) < 1e-9)
                throw std::invalid_argument("potential: repeated minimum");
        int hits = 0;
        for (const cplx& r : spec.roots)
            if (std::abs(m - r) < 1e-9) ++hits;
        if (hits == 0)
            throw std::invalid_argument("potential: minimum is not a root of f");
        if (hits > 1)
            throw std::invalid_argument("potential: minimum is a multiple root");
        if (spec.pole_at_zero && std::abs(m) < 1e-12)
            throw std::invalid_argument("potential: minimum at the pole");
    }
}

inline cplx eval_f(const PotentialSpec& spec, cplx z) {
    if (spec.pole_at_zero && std::abs(z) == 0.0)
        throw PoleEvaluation("eval_f: z = 0 is a pole of f");
    cplx prod = spec.leading_coeff;
    for (const cplx& r : spec.roots) prod *= (z - r);
    if (spec.pole_at_zero) prod /= z;
    return prod;
}

inline cplx eval_fprime(const PotentialSpec& spec, cplx z) {
    if (spec.pole_at_zero && std::abs(z) == 0.0)
        throw PoleEvaluation("eval_fprime: z = 0 is a pole of f");
    // P' by the product rule; exact at the roots, unlike the log-derivative form.
    cplx psum = 0.0;
    for (std::size_t j = 0; j < spec.roots.size(); ++j) {
        cplx term = spec.leading_coeff;
        for (std::size_t i = 0; i < spec.roots.size(); ++i)
            if (i != j) term *= (z - spec.roots[i]);
        psum += term;
    }
    if (!spec.pole_at_zero) return psum;
    cplx prod = spec.leading_coeff;
    for (const cplx& r : spec.roots) prod *= (z - r);
    return (z * psum - prod) / (z * z);
}

namespace detail {

inline double branch_arg(cplx z, BranchTag b) {
    switch (b) {
        case BranchTag::upper:
            // range (-pi/2, 3pi/2], cut on the non-positive imaginary axis
            return std::arg(cplx(0.0, -1.0) * z) + std::acos(-1.0) / 2.0;
        case BranchTag::lower:
            // range (-3pi/2, pi/2], cut on the non-negative imaginary axis
            return std::arg(cplx(0.0, 1.0) * z) - std::acos(-1.0) / 2.0;
        default:
            return std::arg(z); // principal, cut on the negative real axis
    }
}

inline void check_cut(cplx z, BranchTag b) {
    const double tol = 1e-12 * (1.0 + std::abs(z));
    switch (b) {
        case BranchTag::upper:
            if (std::abs(z.real()) <= tol && z.imag() <= tol)
                throw BranchCut("eval_g: z on the lower imaginary-axis cut");
            break;
        case BranchTag::lower:
            if (std::abs(z.real()) <= tol && z.imag() >= -tol)
                throw BranchCut("eval_g: z on the upper imaginary-axis cut");
            break;
        default:
            if (std::abs(z.imag()) <= tol && z.real() <= tol)
                throw BranchCut("eval_g: z on the negative real-axis cut");
            break;
    }
}

} // namespace detail

// Antiderivative of f with g' = f. Pure polynomials are normalized by g(0) = 0.
// With a pole the constant term of the numerator becomes a log whose branch is
// selected by `branch`; evaluation on the corresponding cut throws.
inline cplx eval_g(const PotentialSpec& spec, cplx z, BranchTag branch = BranchTag::none) {
    std::vector<cplx> c{spec.leading_coeff};
    for (const cplx& r : spec.roots) {
        c.push_back(0.0);
        for (std::size_t k = c.size() - 1; k > 0; --k) c[k] = c[k - 1] - r * c[k];
        c[0] *= -r;
    }
    if (!spec.pole_at_zero) {
        cplx acc = 0.0;
        for (std::size_t k = c.size(); k > 0; --k)
            acc = acc * z + c[k - 1] / static_cast<double>(k);
        return acc * z;
    }
    if (std::abs(z) == 0.0)
        throw PoleEvaluation("eval_g: z = 0 is a log singularity of g");
    detail::check_cut(z, branch);
    // f = sum c_k z^(k-1) -> g = c_0 log z + sum_{k>=1} c_k z^k / k
    cplx acc = 0.0;
    for (std::size_t k = c.size(); k > 1; --k)
        acc = acc * z + c[k - 1] / static_cast<double>(k - 1);
    acc *= z;
    const cplx logz(std::log(std::abs(z)), detail::branch_arg(z, branch));
    return acc + c[0] * logz;
}

// Taylor coefficients t_m = f^(m)(center)/m!, m = 0..nterms-1. Exact for
// polynomial f (terms beyond the degree are zero); for the pole case the 1/z
// factor is expanded about center, which must stay away from 0.
inline std::vector<cplx> taylor_at(const PotentialSpec& spec, cplx center, int nterms) {
    std::vector<cplx> c{spec.leading_coeff}; // numerator about `center`, ascending in (z-center)
    for (const cplx& r : spec.roots) {
        const cplx s = center - r;
        c.push_back(0.0);
        for (std::size_t k = c.size() - 1; k > 0; --k) c[k] = c[k - 1] + s * c[k];
        c[0] *= s;
    }
    if (!spec.pole_at_zero) {
        // keep every polynomial coefficient; pad so callers can rely on nterms
        if (static_cast<int>(c.size()) < nterms) c.resize(nterms, 0.0);
        return c;
    }
    if (std::abs(center) < 1e-12)
        throw PoleEvaluation("taylor_at: expansion centered on the pole");
    // multiply by 1/(center + w) = (1/center) sum (-w/center)^k
    std::vector<cplx> out(nterms, 0.0);
    const cplx inv = 1.0 / center;
    std::vector<cplx> geo(nterms);
    geo[0] = inv;
    for (int k = 1; k < nterms; ++k) geo[k] = geo[k - 1] * (-inv);
    for (int m = 0; m < nterms; ++m) {
        cplx acc = 0.0;
        for (int j = 0; j <= m && j < static_cast<int>(c.size()); ++j)
            acc += c[j] * geo[m - j];
        out[m] = acc;
    }
    return out;
}

// f(center + zeta) evaluated from the Taylor coefficients. When center is a
// root this avoids the cancellation of forming (center + zeta) - center.
inline cplx eval_f_near(const std::vector<cplx>& taylor, cplx zeta) {
    cplx acc = 0.0;
    for (std::size_t m = taylor.size(); m > 0; --m) acc = acc * zeta + taylor[m - 1];
    return acc;
}

// g(center + zeta) - g(center) = sum t_m zeta^(m+1)/(m+1); branch independent
// for small zeta because the increment never loops the pole.
inline cplx eval_g_near(const std::vector<cplx>& taylor, cplx zeta) {
    cplx acc = 0.0;
    for (std::size_t m = taylor.size(); m > 0; --m)
        acc = acc * zeta + taylor[m - 1] / static_cast<double>(m);
    return acc * zeta;
}

inline double eval_W(const PotentialSpec& spec, cplx z) {
    return std::pow(std::abs(eval_f(spec, z)), spec.q());
}

// grad W as a complex number gx + i*gy:
//   dW/du1 + i dW/du2 = q (f conj(f))^((q-2)/2) f conj(f').
// For q < 2 the |f|^(q-2) factor blows up at the roots; the guard keeps the
// evaluation away from that region.
inline cplx grad_W(const PotentialSpec& spec, cplx z) {
    const double q = spec.q();
    const cplx f = eval_f(spec, z);
    const double af = std::abs(f);
    if (q < 2.0 && af < kSingularGradGuard)
        throw SingularGradient("grad_W: |f| below guard with q < 2");
    if (af == 0.0) return 0.0; // q >= 2: the q-2 power dominates the zero of f
    const cplx fp = eval_fprime(spec, z);
    return q * std::pow(af, q - 2.0) * f * std::conj(fp);
}

// Same formula continued to the roots by its limit (zero for every q > 1).
// |f|^(q-1) -> 0 as z approaches a root, so the product is evaluated in the
// magnitude/direction split that never forms an infinite intermediate.
inline cplx grad_W_unguarded(const PotentialSpec& spec, cplx z) {
    const double q = spec.q();
    const cplx f = eval_f(spec, z);
    const double af = std::abs(f);
    if (af == 0.0) return 0.0;
    const cplx fp = eval_fprime(spec, z);
    return q * std::pow(af, q - 1.0) * (f / af) * std::conj(fp);
}

// ---- built-in catalog ----

struct CatalogEntry {
    std::string name;
    std::string param_name;
    double param_default;
    std::string form;
};

inline std::vector<CatalogEntry> catalog_entries() {
    return {
        {"triple-well-n", "n", 3.0, "z^n - 1"},
        {"quartic-eps", "eps", 1.0, "(1 - z^2)(z^2 + eps^2)"},
        {"cubic-ieps", "eps", 0.3, "(1 - z^2)(z - i*eps)"},
        {"rational-a", "a", 0.5, "(z - 1)(z + a)/z"},
    };
}

// Accepts the family names above plus the "triple-well-<k>" spelling with the
// parameter folded into the name.
inline PotentialSpec make_catalog(const std::string& name, std::optional<double> param = {},
                                  double p = 2.0) {
    std::string base = name;
    std::optional<double> par = param;
    if (name.rfind("triple-well-", 0) == 0 && name != "triple-well-n") {
        const std::string suffix = name.substr(12);
        char* end = nullptr;
        const double n = std::strtod(suffix.c_str(), &end);
        if (end && *end == '\0' && n >= 2.0) {
            base = "triple-well-n";
            if (!par) par = n;
        }
    }
    PotentialSpec spec;
    spec.p = p;
    const double pi = std::acos(-1.0);
    if (base == "triple-well-n") {
        const int n = static_cast<int>(par.value_or(3.0));
        if (n < 2 || std::abs(par.value_or(3.0) - n) > 0.0)
            throw std::invalid_argument("triple-well-n: n must be an integer >= 2");
        for (int k = 0; k < n; ++k) {
            const cplx r = std::polar(1.0, 2.0 * pi * k / n);
            spec.roots.push_back(r);
            spec.minima.push_back(r);
        }
    } else if (base == "quartic-eps") {
        const double e = par.value_or(1.0);
        if (!(e > 0.0)) throw std::invalid_argument("quartic-eps: eps must be > 0");
        spec.leading_coeff = -1.0;
        spec.roots = {1.0, -1.0, cplx(0.0, e), cplx(0.0, -e)};
        spec.minima = {-1.0, 1.0, cplx(0.0, e), cplx(0.0, -e)};
    } else if (base == "cubic-ieps") {
        const double e = par.value_or(0.3);
        spec.leading_coeff = -1.0;
        spec.roots = {1.0, -1.0, cplx(0.0, e)};
        spec.minima = {-1.0, 1.0};
        if (std::abs(e) < 1e-12) {
            // the third zero collides with the segment; keep it as a root so the
            // degenerate geometry is visible to callers, but it cannot be a minimum
            spec.roots[2] = 0.0;
        }
    } else if (base == "rational-a") {
        const double a = par.value_or(0.5);
        if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("rational-a: need 0 < a < 1");
        spec.pole_at_zero = true;
        spec.roots = {-a, 1.0};
        spec.minima = {-a, 1.0};
    } else {
        throw std::invalid_argument("unknown catalog family: " + name);
    }
    validate_spec(spec);
    return spec;
}

// ---- JSON (de)serialization ----

inline nlohmann::json to_json(const PotentialSpec& spec) {
    nlohmann::json j;
    auto pair = [](const cplx& z) { return nlohmann::json::array({z.real(), z.imag()}); };
    j["roots"] = nlohmann::json::array();
    for (const cplx& r : spec.roots) j["roots"].push_back(pair(r));
    j["pole_at_zero"] = spec.pole_at_zero;
    j["leading_coeff"] = pair(spec.leading_coeff);
    j["p"] = spec.p;
    j["minima"] = nlohmann::json::array();
    for (const cplx& m : spec.minima) j["minima"].push_back(pair(m));
    return j;
}

inline PotentialSpec spec_from_json(const nlohmann::json& j) {
    PotentialSpec spec;
    auto get_pair = [](const nlohmann::json& v, const char* what) -> cplx {
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            throw std::invalid_argument(std::string("potential json: ") + what +
                                        " must be [re, im]");
        return {v[0].get<double>(), v[1].get<double>()};
    };
    if (!j.contains("roots") || !j["roots"].is_array())
        throw std::invalid_argument("potential json: missing roots array");
    for (const auto& v : j["roots"]) spec.roots.push_back(get_pair(v, "root"));
    spec.pole_at_zero = j.value("pole_at_zero", false);
    if (j.contains("leading_coeff")) spec.leading_coeff = get_pair(j["leading_coeff"], "leading_coeff");
    if (!j.contains("p") || !j["p"].is_number())
        throw std::invalid_argument("potential json: missing p");
    spec.p = j["p"].get<double>();
    if (j.contains("minima"))
        for (const auto& v : j["minima"]) spec.minima.push_back(get_pair(v, "minimum"));
    validate_spec(spec);
    return spec;
}

inline std::string canonical_json(const PotentialSpec& spec) {
    auto num = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    std::string s = "{roots:[";
    for (const cplx& r : spec.roots) s += "(" + num(r.real()) + "," + num(r.imag()) + ")";
    s += "],pole:" + std::string(spec.pole_at_zero ? "1" : "0");
    s += ",lc:(" + num(spec.leading_coeff.real()) + "," + num(spec.leading_coeff.imag()) + ")";
    s += ",p:" + num(spec.p) + ",minima:[";
    for (const cplx& m : spec.minima) s += "(" + num(m.real()) + "," + num(m.imag()) + ")";
    s += "]}";
    return s;
}

inline std::string spec_hash(const PotentialSpec& spec) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical_json(spec))));
    return buf;
}

} // namespace hetero
