#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "action.hpp"
#include "dynamics.hpp"
#include "geodesic.hpp"
#include "potential.hpp"

namespace hetero {

// %.17g round-trips doubles exactly and never depends on locale state.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline void open_or_throw(std::ofstream& out, const std::string& path) {
    out.open(path, std::ios::binary); // binary: no newline translation surprises
    if (!out) throw Error("cannot open for writing: " + path);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

inline double parse_field_double(const std::string& s, const std::string& file, int lineno,
                                 const char* what) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw Error(file + ":" + std::to_string(lineno) + ": bad " + what + " value '" + s + "'");
    }
}

} // namespace detail

// Curve CSV: l, re_z, im_z, W, levelset_residual.
inline void write_curve_csv(const std::string& path, const PotentialSpec& spec,
                            const GeodesicCurve& curve) {
    std::ofstream out;
    detail::open_or_throw(out, path);
    out << "l,re_z,im_z,W,levelset_residual\n";
    const cplx g_alpha = eval_g(spec, curve.alpha, curve.branch);
    const cplx denom = curve.C * curve.L;
    for (const CurveSample& s : curve.samples) {
        double lr = 0;
        try {
            lr = std::abs(((eval_g(spec, s.z, curve.branch) - g_alpha) / denom).imag());
        } catch (const Error&) {
            lr = std::nan("");
        }
        out << fmt_double(s.l) << ',' << fmt_double(s.z.real()) << ',' << fmt_double(s.z.imag())
            << ',' << fmt_double(eval_W(spec, s.z)) << ',' << fmt_double(lr) << '\n';
    }
}

// Trajectory CSV: x, re_u, im_u, W, equip_residual, el_residual; the residual
// fields are empty at nodes the verifiers exclude.
inline void write_trajectory_csv(const std::string& path, const PotentialSpec& spec,
                                 const Trajectory& traj) {
    std::ofstream out;
    detail::open_or_throw(out, path);
    out << "x,re_u,im_u,W,equip_residual,el_residual\n";
    const std::vector<double> eq = equip_profile(spec, traj);
    const std::vector<double> el = el_profile(spec, traj);
    for (size_t k = 0; k < traj.x.size(); ++k) {
        out << fmt_double(traj.x[k]) << ',' << fmt_double(traj.u[k].real()) << ','
            << fmt_double(traj.u[k].imag()) << ',' << fmt_double(traj.W[k]) << ',';
        if (eq[k] == eq[k]) out << fmt_double(eq[k]);
        out << ',';
        if (el[k] == el[k]) out << fmt_double(el[k]);
        out << '\n';
    }
}

// Reads x, re_u, im_u back; W is recomputed from the potential rather than
// trusted, since verify exists to re-derive everything it checks.
inline Trajectory read_trajectory_csv(const std::string& path, const PotentialSpec& spec,
                                      double p, BranchTag branch = BranchTag::none) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open: " + path);
    Trajectory traj;
    traj.p = p;
    traj.branch = branch;
    std::string line;
    int lineno = 0;
    if (!std::getline(in, line)) throw Error(path + ":1: empty file");
    ++lineno;
    {
        const auto head = detail::split_csv_line(line);
        if (head.size() < 4 || head[0] != "x" || head[1] != "re_u" || head[2] != "im_u")
            throw Error(path + ":1: expected header starting 'x,re_u,im_u,W'");
    }
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() < 4)
            throw Error(path + ":" + std::to_string(lineno) + ": expected >= 4 fields, got " +
                        std::to_string(f.size()));
        const double x = detail::parse_field_double(f[0], path, lineno, "x");
        const double re = detail::parse_field_double(f[1], path, lineno, "re_u");
        const double im = detail::parse_field_double(f[2], path, lineno, "im_u");
        if (!traj.x.empty() && x <= traj.x.back())
            throw Error(path + ":" + std::to_string(lineno) + ": x must be strictly increasing");
        traj.x.push_back(x);
        traj.u.emplace_back(re, im);
        traj.W.push_back(eval_W(spec, {re, im}));
        traj.l.push_back(0.0);
    }
    if (traj.x.size() < 5) throw Error(path + ": fewer than 5 samples");
    traj.L = 0;
    for (size_t k = 0; k < traj.x.size(); ++k)
        if (traj.x[k] == 0.0) traj.anchor_index = static_cast<int>(k);
    return traj;
}

// Minimizer path CSV: x, u_1..u_N, W.
inline void write_path_csv(const std::string& path, const ActionPath& ap,
                           const WellPotential& pot) {
    std::ofstream out;
    detail::open_or_throw(out, path);
    out << "x";
    for (int k = 1; k <= ap.N; ++k) out << ",u_" << k;
    out << ",W\n";
    for (int i = 0; i <= ap.M; ++i) {
        out << fmt_double(ap.x(i));
        for (int k = 0; k < ap.N; ++k) out << ',' << fmt_double(ap.node(i)[k]);
        out << ',' << fmt_double(pot.W(ap.node(i))) << '\n';
    }
}

// Static figure: the traced curve with minima marked, other zeros hollow, and
// an inset showing the straight image segment in the g plane.
inline void write_curve_svg(const std::string& path, const PotentialSpec& spec,
                            const GeodesicCurve& curve) {
    std::ofstream out;
    detail::open_or_throw(out, path);
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    auto grow = [&](cplx z) {
        xmin = std::min(xmin, z.real());
        xmax = std::max(xmax, z.real());
        ymin = std::min(ymin, z.imag());
        ymax = std::max(ymax, z.imag());
    };
    for (const CurveSample& s : curve.samples) grow(s.z);
    for (const cplx& r : spec.roots) grow(r);
    const double span = std::max(xmax - xmin, ymax - ymin);
    const double pad = 0.12 * (span > 0 ? span : 1.0);
    xmin -= pad;
    xmax += pad;
    ymin -= pad;
    ymax += pad;
    const double w = 640.0;
    const double scale = w / (xmax - xmin);
    const double hgt = (ymax - ymin) * scale;
    auto px = [&](double x) { return (x - xmin) * scale; };
    auto py = [&](double y) { return hgt - (y - ymin) * scale; }; // svg y grows downward
    char buf[160];
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << int(w) << "\" height=\""
        << int(hgt) << "\" viewBox=\"0 0 " << int(w) << ' ' << int(hgt) << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<polyline fill=\"none\" stroke=\"#0a5fd0\" stroke-width=\"1.8\" points=\"";
    const size_t stride = std::max<size_t>(1, curve.samples.size() / 1500);
    for (size_t k = 0; k < curve.samples.size(); k += stride) {
        std::snprintf(buf, sizeof buf, "%.3f,%.3f ", px(curve.samples[k].z.real()),
                      py(curve.samples[k].z.imag()));
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "%.3f,%.3f", px(curve.samples.back().z.real()),
                  py(curve.samples.back().z.imag()));
    out << buf << "\"/>\n";
    for (const cplx& r : spec.roots) {
        bool is_min = false;
        for (const cplx& m : spec.minima)
            if (std::abs(m - r) < 1e-12) is_min = true;
        std::snprintf(buf, sizeof buf,
                      "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"5\" fill=\"%s\" stroke=\"#222\"/>\n",
                      px(r.real()), py(r.imag()), is_min ? "#d03a0a" : "none");
        out << buf;
    }
    if (spec.pole_at_zero) {
        std::snprintf(buf, sizeof buf,
                      "<path d=\"M %.3f %.3f l 8 8 m -8 0 l 8 -8\" stroke=\"#222\" fill=\"none\"/>\n",
                      px(0.0) - 4.0, py(0.0) - 4.0);
        out << buf;
    }
    // g-plane inset, lower left: the image of the whole curve is one segment
    {
        const double bx = 12, by = hgt - 104, bw = 150, bh = 92;
        std::snprintf(buf, sizeof buf,
                      "<rect x=\"%.0f\" y=\"%.0f\" width=\"%.0f\" height=\"%.0f\" fill=\"#f6f6f6\" "
                      "stroke=\"#888\"/>\n",
                      bx, by, bw, bh);
        out << buf;
        const cplx ga = eval_g(spec, curve.alpha, curve.branch);
        const cplx gb = ga + curve.C * curve.L;
        const double gxmin = std::min(ga.real(), gb.real()), gxmax = std::max(ga.real(), gb.real());
        const double gymin = std::min(ga.imag(), gb.imag()), gymax = std::max(ga.imag(), gb.imag());
        const double gspan = std::max({gxmax - gxmin, gymax - gymin, 1e-9});
        const double gs = (bw - 24) / gspan;
        auto gx = [&](double x) { return bx + 12 + (x - gxmin) * gs; };
        auto gy = [&](double y) { return by + bh - 12 - (y - gymin) * gs; };
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%.3f\" y1=\"%.3f\" x2=\"%.3f\" y2=\"%.3f\" stroke=\"#0a5fd0\" "
                      "stroke-width=\"1.5\"/>\n",
                      gx(ga.real()), gy(ga.imag()), gx(gb.real()), gy(gb.imag()));
        out << buf;
        std::snprintf(buf, sizeof buf, "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"3\" fill=\"#d03a0a\"/>\n",
                      gx(ga.real()), gy(ga.imag()));
        out << buf;
        std::snprintf(buf, sizeof buf, "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"3\" fill=\"#d03a0a\"/>\n",
                      gx(gb.real()), gy(gb.imag()));
        out << buf;
        std::snprintf(buf, sizeof buf, "<text x=\"%.0f\" y=\"%.0f\" font-size=\"11\" "
                      "font-family=\"sans-serif\" fill=\"#444\">g plane</text>\n",
                      bx + 6, by + 14);
        out << buf;
    }
    out << "</svg>\n";
}

inline void append_manifest(const std::string& path, const nlohmann::json& entry) {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw Error("cannot open manifest: " + path);
    out << entry.dump() << '\n';
}

inline void write_minimize_log(const std::string& path,
                               const std::vector<std::array<double, 3>>& rows) {
    std::ofstream out;
    detail::open_or_throw(out, path);
    for (const auto& r : rows) {
        nlohmann::json j;
        j["iteration"] = static_cast<long>(r[0]);
        j["action"] = r[1];
        j["grad_max"] = r[2];
        out << j.dump() << '\n';
    }
}

} // namespace hetero
