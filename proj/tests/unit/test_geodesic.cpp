#include <catch2/catch_amalgamated.hpp>

#include "hetero/geodesic.hpp"

using namespace hetero;
using Catch::Matchers::WithinAbs;

namespace {
const double kPi = std::acos(-1.0);
}

TEST_CASE("phase and length of the triple-well segments") {
    auto spec = make_catalog("triple-well-3", {}, 2.0);
    auto [C01, L01] = phase_and_length(spec, spec.minima[0], spec.minima[1], BranchTag::none);
    REQUIRE_THAT(L01, WithinAbs(0.75 * std::sqrt(3.0), 1e-14));
    REQUIRE_THAT(C01.real(), WithinAbs(std::cos(-kPi / 6.0), 1e-14));
    REQUIRE_THAT(C01.imag(), WithinAbs(std::sin(-kPi / 6.0), 1e-14));
    auto [C12, L12] = phase_and_length(spec, spec.minima[1], spec.minima[2], BranchTag::none);
    REQUIRE_THAT(L12, WithinAbs(L01, 1e-14));
    REQUIRE_THAT(C12.real(), WithinAbs(0.0, 1e-14));
    REQUIRE_THAT(C12.imag(), WithinAbs(1.0, 1e-14));

    auto two = make_catalog("triple-well-2", {}, 2.0);
    auto [C, L] = phase_and_length(two, two.minima[0], two.minima[1], BranchTag::none);
    REQUIRE_THAT(L, WithinAbs(4.0 / 3.0, 1e-14));
    REQUIRE_THAT(C.imag(), WithinAbs(0.0, 1e-14));
}

TEST_CASE("degenerate image segment is rejected") {
    auto spec = make_catalog("cubic-ieps", 0.0, 2.0);
    REQUIRE_THROWS_AS(phase_and_length(spec, spec.minima[0], spec.minima[1], BranchTag::none),
                      DegenerateSegment);
}

TEST_CASE("tracer arrives on the catalog connections") {
    auto tw = make_catalog("triple-well-3", {}, 2.0);
    auto c = trace(tw, tw.minima[0], tw.minima[1], BranchTag::none);
    REQUIRE(c.reached);
    REQUIRE(c.samples.size() > 100);
    REQUIRE_THAT(std::abs(c.samples.front().z - tw.minima[0]), WithinAbs(0.0, 1e-12));
    REQUIRE_THAT(std::abs(c.samples.back().z - tw.minima[1]), WithinAbs(0.0, 1e-12));

    auto quart = make_catalog("quartic-eps", 1.0, 2.0);
    for (size_t i = 0; i < quart.minima.size(); ++i)
        for (size_t j = 0; j < quart.minima.size(); ++j) {
            if (i == j) continue;
            auto cq = trace(quart, quart.minima[i], quart.minima[j], BranchTag::none);
            REQUIRE(cq.reached);
        }

    auto cub = make_catalog("cubic-ieps", 0.8, 2.0);
    REQUIRE(trace(cub, cub.minima[0], cub.minima[1], BranchTag::none).reached);
}

TEST_CASE("below the cubic threshold no arm arrives") {
    auto cub = make_catalog("cubic-ieps", 0.3, 2.0);
    auto c = trace(cub, cub.minima[0], cub.minima[1], BranchTag::none);
    REQUIRE_FALSE(c.reached);
    REQUIRE_FALSE(c.diagnostic.empty());
}

TEST_CASE("samples stay on the level set with monotone arc length") {
    for (const char* fam : {"triple-well-3", "quartic-eps"}) {
        auto spec = make_catalog(fam, {}, 2.0);
        auto c = trace(spec, spec.minima[0], spec.minima[1], BranchTag::none);
        REQUIRE(c.reached);
        REQUIRE_THAT(levelset_residual(spec, c), WithinAbs(0.0, 1e-9));
        const cplx ga = eval_g(spec, c.alpha, c.branch);
        for (size_t k = 1; k < c.samples.size(); ++k) {
            REQUIRE(c.samples[k].l > c.samples[k - 1].l);
            // the real part of (g - g(alpha))/C is the arc-length coordinate
            if (k + 1 < c.samples.size()) {
                const cplx w = (eval_g(spec, c.samples[k].z, c.branch) - ga) / c.C;
                REQUIRE_THAT(w.real(), WithinAbs(c.samples[k].l, 1e-9 * (1.0 + c.L)));
            }
        }
    }
}

TEST_CASE("trace geometry does not depend on p") {
    auto a = make_catalog("triple-well-3", {}, 1.5);
    auto b = make_catalog("triple-well-3", {}, 3.0);
    auto ca = trace(a, a.minima[0], a.minima[1], BranchTag::none);
    auto cb = trace(b, b.minima[0], b.minima[1], BranchTag::none);
    REQUIRE(ca.samples.size() == cb.samples.size());
    double worst = 0;
    for (size_t k = 0; k < ca.samples.size(); ++k)
        worst = std::max(worst, std::abs(ca.samples[k].z - cb.samples[k].z));
    REQUIRE_THAT(worst, WithinAbs(0.0, 1e-15));
}

TEST_CASE("polar identity holds along the first triple-well connection") {
    auto spec = make_catalog("triple-well-3", {}, 2.0);
    auto c = trace(spec, spec.minima[0], spec.minima[1], BranchTag::none);
    REQUIRE(c.reached);
    double worst = 0;
    for (const CurveSample& s : c.samples) {
        const double r = std::abs(s.z);
        const double th = std::arg(s.z);
        const double lhs = 4.0 * r * std::cos(th - kPi / 3.0);
        const double rhs = std::pow(r, 4.0) * std::cos(4.0 * th - kPi / 3.0) + 1.5;
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    REQUIRE_THAT(worst, WithinAbs(0.0, 1e-6));
}

TEST_CASE("polar radii at reference angles") {
    auto spec = make_catalog("triple-well-3", {}, 2.0);
    auto c = trace(spec, spec.minima[0], spec.minima[1], BranchTag::none);
    auto radius_at = [&](double theta) {
        for (size_t k = 1; k < c.samples.size(); ++k) {
            const double a0 = std::arg(c.samples[k - 1].z);
            const double a1 = std::arg(c.samples[k].z);
            if ((a0 - theta) * (a1 - theta) <= 0.0 && std::abs(a1 - a0) < 0.1) {
                const double t = (theta - a0) / (a1 - a0);
                return (1 - t) * std::abs(c.samples[k - 1].z) + t * std::abs(c.samples[k].z);
            }
        }
        return -1.0;
    };
    REQUIRE_THAT(radius_at(kPi / 6.0), WithinAbs(0.4383415060961522, 1e-5));
    REQUIRE_THAT(radius_at(kPi / 3.0), WithinAbs(0.3702994129182804, 1e-5));
}

TEST_CASE("rotating a connection by a cube root of unity gives the next one") {
    auto spec = make_catalog("triple-well-3", {}, 2.0);
    auto c01 = trace(spec, spec.minima[0], spec.minima[1], BranchTag::none);
    auto c12 = trace(spec, spec.minima[1], spec.minima[2], BranchTag::none);
    const cplx w = std::polar(1.0, 2.0 * kPi / 3.0);
    std::vector<cplx> rotated;
    for (const CurveSample& s : c01.samples) rotated.push_back(w * s.z);
    REQUIRE_THAT(hausdorff_polyline(rotated, curve_points(c12)), WithinAbs(0.0, 1e-7));
}

TEST_CASE("step refinement leaves the curve fixed") {
    auto spec = make_catalog("triple-well-3", {}, 2.0);
    auto base = trace(spec, spec.minima[0], spec.minima[1], BranchTag::none);
    auto fine2 = refine(spec, base, 2);
    auto fine4 = refine(spec, base, 4);
    REQUIRE(fine2.reached);
    REQUIRE(fine4.reached);
    REQUIRE_THAT(curve_hausdorff(base, fine2), WithinAbs(0.0, 1e-7));
    REQUIRE_THAT(curve_hausdorff(base, fine4), WithinAbs(0.0, 1e-7));
}

TEST_CASE("degenerate start is reported") {
    PotentialSpec s; // a near-double root at 1 annihilates f' there
    s.p = 2.0;
    s.roots = {cplx(1, 0), cplx(1 + 1e-13, 0), cplx(-1, 0)};
    s.minima = {cplx(1, 0), cplx(-1, 0)};
    REQUIRE_THROWS_AS(trace(s, s.minima[0], s.minima[1], BranchTag::none), StartDegenerate);
}

TEST_CASE("trace rejects endpoints that are not listed minima") {
    auto spec = make_catalog("triple-well-3", {}, 2.0);
    REQUIRE_THROWS_AS(trace(spec, spec.minima[0], spec.minima[0], BranchTag::none),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(trace(spec, cplx(0.5, 0), spec.minima[0], BranchTag::none),
                      std::invalid_argument);
}
