#include <chrono>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hetero/hetero.hpp"

namespace {

using namespace hetero;
using nlohmann::json;

std::string fmt3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

struct Stopwatch {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

// Shared flags for picking the planar potential.
struct SpecArgs {
    std::string catalog;
    std::string spec_json_file;
    double param = 0;
    bool has_param = false;
    double p = 2.0;
    bool has_p = false;
    std::string branch = "auto";
};

void add_spec_options(CLI::App* cmd, SpecArgs& sa, bool require_spec = true) {
    auto* cat = cmd->add_option("--catalog", sa.catalog, "built-in family name");
    auto* js = cmd->add_option("--spec-json", sa.spec_json_file, "potential JSON file");
    cat->excludes(js);
    if (require_spec) {
        // one of the two has to be present; checked in make_spec
    }
    cmd->add_option("--param", sa.param, "family parameter")->each([&sa](const std::string&) {
        sa.has_param = true;
    });
    cmd->add_option("--p", sa.p, "exponent p > 1 (default 2)")->each([&sa](const std::string&) {
        sa.has_p = true;
    });
    cmd->add_option("--branch", sa.branch, "square-root branch: auto, none, upper, lower")
        ->check(CLI::IsMember({"auto", "none", "upper", "lower"}));
}

PotentialSpec make_spec(const SpecArgs& sa) {
    if (!sa.spec_json_file.empty()) {
        std::ifstream in(sa.spec_json_file, std::ios::binary);
        if (!in) throw Error("cannot open: " + sa.spec_json_file);
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw Error(sa.spec_json_file + ": " + e.what());
        }
        PotentialSpec spec = spec_from_json(j);
        if (sa.has_p) {
            spec.p = sa.p;
            validate_spec(spec);
        }
        return spec;
    }
    if (sa.catalog.empty())
        throw std::invalid_argument("need --catalog or --spec-json");
    std::optional<double> param;
    if (sa.has_param) param = sa.param;
    return make_catalog(sa.catalog, param, sa.p);
}

BranchTag branch_of(const SpecArgs& sa, const PotentialSpec& spec) {
    if (sa.branch == "upper") return BranchTag::upper;
    if (sa.branch == "lower") return BranchTag::lower;
    if (sa.branch == "none") return BranchTag::none;
    // auto: potentials with the pole factor need a determination; pick upper
    return spec.pole_at_zero ? BranchTag::upper : BranchTag::none;
}

cplx minimum_at(const PotentialSpec& spec, int idx, const char* which) {
    if (idx < 0 || idx >= static_cast<int>(spec.minima.size()))
        throw std::invalid_argument(std::string(which) + " index out of range (have " +
                                    std::to_string(spec.minima.size()) + " minima)");
    return spec.minima[static_cast<size_t>(idx)];
}

json spec_params_json(const SpecArgs& sa, const PotentialSpec& spec) {
    json j;
    if (!sa.catalog.empty()) j["catalog"] = sa.catalog;
    if (!sa.spec_json_file.empty()) j["spec_json"] = sa.spec_json_file;
    if (sa.has_param) j["param"] = sa.param;
    j["p"] = spec.p;
    return j;
}

void emit_manifest(const std::string& path, json entry, const Stopwatch& sw,
                   const std::vector<std::string>& outputs, json verdicts) {
    entry["outputs"] = outputs;
    entry["verdicts"] = std::move(verdicts);
    entry["wall_time_s"] = sw.seconds();
    append_manifest(path, entry);
}

// ---- trace ----

struct TraceArgs {
    SpecArgs sa;
    int from = 0, to = 1;
    std::string out = "trace_out";
    double x_span = 10.0;
    int samples = 8001;
    bool has_samples = false;
    double residual_tol = 1e-4;
    double rk_tol = 1e-12;
    double eps_reach = -1.0;
};

int run_trace(const TraceArgs& ta) {
    Stopwatch sw;
    const PotentialSpec spec = make_spec(ta.sa);
    const BranchTag branch = branch_of(ta.sa, spec);
    const cplx alpha = minimum_at(spec, ta.from, "--from");
    const cplx beta = minimum_at(spec, ta.to, "--to");
    TraceOptions topt;
    topt.rk_tol = ta.rk_tol;
    topt.eps_reach = ta.eps_reach;
    const GeodesicCurve curve = trace(spec, alpha, beta, branch, topt);

    const std::string f_curve = ta.out + "_curve.csv";
    const std::string f_svg = ta.out + "_curve.svg";
    const std::string f_traj = ta.out + "_traj.csv";
    const std::string f_manifest = ta.out + "_manifest.jsonl";
    write_curve_csv(f_curve, spec, curve);
    write_curve_svg(f_svg, spec, curve);

    json entry;
    entry["command"] = "trace";
    entry["spec_hash"] = spec_hash(spec);
    json params = spec_params_json(ta.sa, spec);
    params["from"] = ta.from;
    params["to"] = ta.to;
    params["branch"] = static_cast<int>(branch);
    params["x_span"] = ta.x_span;
    params["samples"] = ta.samples;
    params["residual_tol"] = ta.residual_tol;
    entry["parameters"] = params;

    if (!curve.reached) {
        const double end_dist = std::abs(curve.samples.back().z - beta);
        std::printf("connection %d -> %d  not reached (%s)\n", ta.from, ta.to,
                    curve.diagnostic.empty() ? "no arm arrived" : curve.diagnostic.c_str());
        std::printf("closest approach %s\n", fmt3(end_dist).c_str());
        std::printf("wrote %s %s\n", f_curve.c_str(), f_svg.c_str());
        json verdicts;
        verdicts["reached"] = false;
        verdicts["closest_approach"] = end_dist;
        emit_manifest(f_manifest, entry, sw, {f_curve, f_svg}, verdicts);
        return 2;
    }

    ReparamOptions ropt;
    // pole families move fast past the origin; the 3-point residual stencils
    // need a denser grid there to stay below the default tolerance
    ropt.n_samples = (!ta.has_samples && spec.pole_at_zero) ? 64001 : ta.samples;
    const Trajectory traj = reparametrize(spec, curve, ta.x_span, ropt);
    write_trajectory_csv(f_traj, spec, traj);

    const double energy = transition_energy(spec, alpha, beta, branch);
    const double eq = equip_residual(spec, traj);
    const double el = el_residual(spec, traj);
    const double lvl = levelset_residual(spec, curve);
    const bool ok = eq < ta.residual_tol && el < ta.residual_tol;

    std::printf("connection %d -> %d  reached\n", ta.from, ta.to);
    std::printf("energy %s\n", fmt_double(energy).c_str());
    std::printf("equip_residual %s  el_residual %s  levelset_residual %s\n", fmt3(eq).c_str(),
                fmt3(el).c_str(), fmt3(lvl).c_str());
    std::printf("wrote %s %s %s\n", f_curve.c_str(), f_traj.c_str(), f_svg.c_str());

    json verdicts;
    verdicts["reached"] = true;
    verdicts["energy"] = energy;
    verdicts["equip_residual"] = eq;
    verdicts["el_residual"] = el;
    verdicts["levelset_residual"] = lvl;
    verdicts["residuals_ok"] = ok;
    emit_manifest(f_manifest, entry, sw, {f_curve, f_traj, f_svg}, verdicts);
    return ok ? 0 : 2;
}

// ---- minimize ----

struct MinArgs {
    SpecArgs sa;
    bool scalar = false;
    int from = 0, to = 1;
    double x_lo = -8.0, x_hi = 8.0;
    int nodes = 1600;
    double gtol = 1e-7;
    long max_iter = 100000;
    bool no_validate = false;
    std::string out = "minimize_out";
    long log_every = 50;
};

int run_minimize(const MinArgs& ma) {
    Stopwatch sw;
    WellPotential pot;
    PotentialSpec spec;
    double p = ma.sa.p;
    json params;
    std::string hash;
    if (ma.scalar) {
        pot = make_two_well_scalar();
        params["scalar_two_well"] = true;
    } else {
        spec = make_spec(ma.sa);
        p = spec.p;
        pot = make_well_from_spec(spec, minimum_at(spec, ma.from, "--from"),
                                  minimum_at(spec, ma.to, "--to"));
        hash = spec_hash(spec);
        params = spec_params_json(ma.sa, spec);
        params["from"] = ma.from;
        params["to"] = ma.to;
    }
    params["p"] = p;
    params["x_lo"] = ma.x_lo;
    params["x_hi"] = ma.x_hi;
    params["nodes"] = ma.nodes;
    params["gtol"] = ma.gtol;
    params["max_iter"] = ma.max_iter;

    GridParams grid{ma.x_lo, ma.x_hi, ma.nodes};
    MinimizeOptions opt;
    opt.gtol = ma.gtol;
    opt.max_iter = ma.max_iter;
    opt.validate = !ma.no_validate;
    std::vector<std::array<double, 3>> log_rows;
    opt.callback = [&](long iter, double action, double grad_max) {
        if (iter % ma.log_every == 0) log_rows.push_back({double(iter), action, grad_max});
    };
    const MinimizeResult res = minimize(pot, p, grid, opt);
    log_rows.push_back({double(res.iterations), res.action, res.grad_max});

    const std::string f_path = ma.out + "_path.csv";
    const std::string f_log = ma.out + "_log.jsonl";
    const std::string f_manifest = ma.out + "_manifest.jsonl";
    write_path_csv(f_path, res.path, pot);
    write_minimize_log(f_log, log_rows);

    std::printf("action %s\n", fmt_double(res.action).c_str());
    std::printf("converged %s  iterations %ld  grad_max %s\n", res.converged ? "yes" : "no",
                res.iterations, fmt3(res.grad_max).c_str());
    std::printf("wrote %s %s\n", f_path.c_str(), f_log.c_str());

    json entry;
    entry["command"] = "minimize";
    if (!hash.empty()) entry["spec_hash"] = hash;
    entry["parameters"] = params;
    json verdicts;
    verdicts["action"] = res.action;
    verdicts["converged"] = res.converged;
    verdicts["iterations"] = res.iterations;
    verdicts["grad_max"] = res.grad_max;
    emit_manifest(f_manifest, entry, sw, {f_path, f_log}, verdicts);
    return 0;
}

// ---- verify ----

struct VerifyArgs {
    SpecArgs sa;
    std::string in;
    double tol = 1e-4;
    double action_tol = 1e-3; // relative to max(1, energy)
    double endpoint_tol = 0.05;
};

int run_verify(const VerifyArgs& va) {
    Stopwatch sw;
    const PotentialSpec spec = make_spec(va.sa);
    const BranchTag branch = branch_of(va.sa, spec);
    const Trajectory traj = read_trajectory_csv(va.in, spec, spec.p, branch);

    auto nearest_min = [&](cplx z) {
        cplx best = spec.minima.front();
        for (const cplx& m : spec.minima)
            if (std::abs(z - m) < std::abs(z - best)) best = m;
        return best;
    };
    const cplx alpha = nearest_min(traj.u.front());
    const cplx beta = nearest_min(traj.u.back());
    const double d_front = std::abs(traj.u.front() - alpha);
    const double d_back = std::abs(traj.u.back() - beta);
    const double energy = transition_energy(spec, alpha, beta, branch);
    const double eq = equip_residual(spec, traj);
    const double el = el_residual(spec, traj);
    const double act = window_action(spec, traj);
    const double act_err = std::abs(act - energy) / std::max(1.0, energy);

    int fails = 0;
    auto row = [&](const char* label, double measured, double tol, bool pass) {
        std::printf("[%s] %-18s measured %s  tol %s\n", pass ? "PASS" : "FAIL", label,
                    fmt3(measured).c_str(), fmt3(tol).c_str());
        if (!pass) ++fails;
    };
    const double end_tol = va.endpoint_tol * (1.0 + std::abs(beta));
    row("endpoint_front", d_front, end_tol, d_front <= end_tol);
    row("endpoint_back", d_back, end_tol, d_back <= end_tol && std::abs(alpha - beta) > 1e-12);
    row("equip_residual", eq, va.tol, eq < va.tol);
    row("el_residual", el, va.tol, el < va.tol);
    row("action_vs_energy", act_err, va.action_tol, act_err < va.action_tol);
    std::printf("energy %s  window_action %s\n", fmt_double(energy).c_str(),
                fmt_double(act).c_str());

    json entry;
    entry["command"] = "verify";
    entry["spec_hash"] = spec_hash(spec);
    json params = spec_params_json(va.sa, spec);
    params["in"] = va.in;
    params["tol"] = va.tol;
    entry["parameters"] = params;
    json verdicts;
    verdicts["equip_residual"] = eq;
    verdicts["el_residual"] = el;
    verdicts["action_vs_energy"] = act_err;
    verdicts["failures"] = fails;
    emit_manifest(va.in + ".verify.jsonl", entry, sw, {}, verdicts);
    return fails == 0 ? 0 : 2;
}

// ---- sweep ----

struct SweepArgs {
    std::string family = "cubic-ieps";
    std::vector<double> range;
    int n_coarse = 15;
    double p = 2.0;
    std::string out = "sweep_report.json";
};

int run_sweep(const SweepArgs& wa) {
    Stopwatch sw;
    const SweepReport rep = existence_sweep(wa.family, wa.range.at(0), wa.range.at(1),
                                            wa.n_coarse, wa.p);
    {
        std::ofstream out(wa.out, std::ios::binary);
        if (!out) throw Error("cannot open for writing: " + wa.out);
        out << sweep_to_json(rep).dump(2) << '\n';
    }
    std::printf("coarse points %zu, flip bracket [%s, %s]\n", rep.points.size(),
                fmt_double(rep.bracket_lo).c_str(), fmt_double(rep.bracket_hi).c_str());
    std::printf("threshold %s\n", fmt_double(rep.threshold_estimate).c_str());
    std::printf("wrote %s\n", wa.out.c_str());

    json entry;
    entry["command"] = "sweep";
    json params;
    params["family"] = wa.family;
    params["range"] = wa.range;
    params["n_coarse"] = wa.n_coarse;
    params["p"] = wa.p;
    entry["parameters"] = params;
    json verdicts;
    verdicts["threshold"] = rep.threshold_estimate;
    verdicts["bracket"] = {rep.bracket_lo, rep.bracket_hi};
    emit_manifest(wa.out + ".manifest.jsonl", entry, sw, {wa.out}, verdicts);
    return 0;
}

// ---- energy ----

struct EnergyArgs {
    SpecArgs sa;
    int from = 0, to = 1;
};

int run_energy(const EnergyArgs& ea) {
    const PotentialSpec spec = make_spec(ea.sa);
    const BranchTag branch = branch_of(ea.sa, spec);
    const double e = transition_energy(spec, minimum_at(spec, ea.from, "--from"),
                                       minimum_at(spec, ea.to, "--to"), branch);
    std::printf("%s\n", fmt_double(e).c_str());
    return 0;
}

// ---- catalog ----

struct CatalogArgs {
    std::string family;
    SpecArgs sa;
    bool as_json = false;
};

int run_catalog(const CatalogArgs& ca) {
    if (ca.family.empty()) {
        std::printf("%-14s %-6s %-8s %s\n", "family", "param", "default", "form");
        for (const CatalogEntry& e : catalog_entries())
            std::printf("%-14s %-6s %-8g %s\n", e.name.c_str(), e.param_name.c_str(),
                        e.param_default, e.form.c_str());
        std::printf("\nuse --family NAME [--param X] for details; triple-well-<k> selects n=k\n");
        return 0;
    }
    SpecArgs sa = ca.sa;
    sa.catalog = ca.family;
    const PotentialSpec spec = make_spec(sa);
    if (ca.as_json) {
        json j = to_json(spec);
        j["hash"] = spec_hash(spec);
        std::printf("%s\n", j.dump(2).c_str());
        return 0;
    }
    std::printf("family %s  hash %s\n", ca.family.c_str(), spec_hash(spec).c_str());
    std::printf("p %s  pole_at_zero %s\n", fmt_double(spec.p).c_str(),
                spec.pole_at_zero ? "yes" : "no");
    std::printf("minima (%zu):\n", spec.minima.size());
    for (size_t k = 0; k < spec.minima.size(); ++k)
        std::printf("  [%zu] %s + %s i\n", k, fmt_double(spec.minima[k].real()).c_str(),
                    fmt_double(spec.minima[k].imag()).c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"heteroclinic connections for p-Laplacian multi-well systems"};
    app.require_subcommand(1);

    TraceArgs ta;
    auto* trace_cmd = app.add_subcommand("trace", "trace a connection and reparametrize it");
    add_spec_options(trace_cmd, ta.sa);
    trace_cmd->add_option("--from", ta.from, "source minimum index")->required();
    trace_cmd->add_option("--to", ta.to, "target minimum index")->required();
    trace_cmd->add_option("--out", ta.out, "output file prefix");
    trace_cmd->add_option("--x-span", ta.x_span, "trajectory half-window in x");
    trace_cmd->add_option("--samples", ta.samples, "trajectory sample count (made odd)")
        ->each([&ta](const std::string&) { ta.has_samples = true; });
    trace_cmd->add_option("--residual-tol", ta.residual_tol, "pass threshold for residuals");
    trace_cmd->add_option("--rk-tol", ta.rk_tol, "tracer local error tolerance");
    trace_cmd->add_option("--eps-reach", ta.eps_reach, "arrival radius override");

    MinArgs ma;
    auto* min_cmd = app.add_subcommand("minimize", "direct action minimization");
    add_spec_options(min_cmd, ma.sa, false);
    min_cmd->add_flag("--scalar-two-well", ma.scalar, "built-in scalar (1-u^2)^2 well");
    min_cmd->add_option("--from", ma.from, "source minimum index");
    min_cmd->add_option("--to", ma.to, "target minimum index");
    min_cmd->add_option("--x-lo", ma.x_lo, "grid left endpoint");
    min_cmd->add_option("--x-hi", ma.x_hi, "grid right endpoint");
    min_cmd->add_option("--nodes", ma.nodes, "grid segment count");
    min_cmd->add_option("--gtol", ma.gtol, "projected gradient stop threshold");
    min_cmd->add_option("--max-iter", ma.max_iter, "iteration cap");
    min_cmd->add_flag("--no-validate", ma.no_validate, "skip the well hypothesis scan");
    min_cmd->add_option("--out", ma.out, "output file prefix");
    min_cmd->add_option("--log-every", ma.log_every, "log stride in iterations");

    VerifyArgs va;
    auto* ver_cmd = app.add_subcommand("verify", "recheck residuals of a trajectory CSV");
    add_spec_options(ver_cmd, va.sa);
    ver_cmd->add_option("--in", va.in, "trajectory CSV to verify")->required();
    ver_cmd->add_option("--tol", va.tol, "residual pass threshold");
    ver_cmd->add_option("--action-tol", va.action_tol, "relative action/energy mismatch bound");
    ver_cmd->add_option("--endpoint-tol", va.endpoint_tol, "endpoint proximity bound");

    SweepArgs wa;
    auto* sweep_cmd = app.add_subcommand("sweep", "bisect an existence threshold in a family");
    sweep_cmd->add_option("--family", wa.family, "catalog family to sweep");
    sweep_cmd->add_option("--range", wa.range, "parameter range LO HI")->expected(2)->required();
    sweep_cmd->add_option("--n-coarse", wa.n_coarse, "coarse grid size");
    sweep_cmd->add_option("--p", wa.p, "exponent p");
    sweep_cmd->add_option("--out", wa.out, "report JSON path");

    EnergyArgs ea;
    auto* en_cmd = app.add_subcommand("energy", "print the transition energy |g(b) - g(a)|");
    add_spec_options(en_cmd, ea.sa);
    en_cmd->add_option("--from", ea.from, "source minimum index")->required();
    en_cmd->add_option("--to", ea.to, "target minimum index")->required();

    CatalogArgs ca;
    auto* cat_cmd = app.add_subcommand("catalog", "list built-in families");
    cat_cmd->add_option("--family", ca.family, "family to describe");
    cat_cmd->add_option("--param", ca.sa.param, "family parameter")
        ->each([&ca](const std::string&) { ca.sa.has_param = true; });
    cat_cmd->add_option("--p", ca.sa.p, "exponent p");
    cat_cmd->add_flag("--json", ca.as_json, "print the potential as JSON");

    try {
        app.parse(argc, argv);
        if (trace_cmd->parsed()) return run_trace(ta);
        if (min_cmd->parsed()) return run_minimize(ma);
        if (ver_cmd->parsed()) return run_verify(va);
        if (sweep_cmd->parsed()) return run_sweep(wa);
        if (en_cmd->parsed()) return run_energy(ea);
        if (cat_cmd->parsed()) return run_catalog(ca);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const NoTransition& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const HypothesisViolated& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const UnexpectedNonexistence& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const NotConnected& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const StepFailure& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const PoleEvaluation& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
