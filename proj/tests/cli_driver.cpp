// End-to-end checks of the command-line binary: spawns the real executable,
// inspects exit codes, stdout, and the files it writes. Prints one line per
// check; exit code is the number of failures.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int g_failures = 0;
std::string g_bin;

void check(const char* label, bool pass, const std::string& detail = "") {
    std::printf("[%s] %s%s%s\n", pass ? "PASS" : "FAIL", label, detail.empty() ? "" : ": ",
                detail.c_str());
    if (!pass) ++g_failures;
}

struct RunResult {
    int exit_code = -1;
    std::string out, err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run(const std::string& args, const std::string& env_prefix = "") {
    const std::string cmd = env_prefix + g_bin + " " + args + " >cli_out.txt 2>cli_err.txt";
    const int rc = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    r.out = slurp("cli_out.txt");
    r.err = slurp("cli_err.txt");
    return r;
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

double value_after(const std::string& text, const std::string& key) {
    const size_t at = text.find(key);
    if (at == std::string::npos) return std::nan("");
    return std::strtod(text.c_str() + at + key.size(), nullptr);
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: cli_driver <path-to-binary>\n");
        return 99;
    }
    g_bin = fs::absolute(argv[1]).string();
    const fs::path work = fs::temp_directory_path() / ("hetero_cli_" + std::to_string(::getpid()));
    fs::create_directories(work);
    const std::string wd = work.string();
    if (::chdir(wd.c_str()) != 0) {
        std::fprintf(stderr, "cannot enter %s\n", wd.c_str());
        return 99;
    }

    // --- trace: the good path ---
    {
        auto r = run("trace --catalog triple-well-3 --from 0 --to 1 --p 2 --out tw");
        check("trace exits 0 on a reached connection", r.exit_code == 0, "exit " + std::to_string(r.exit_code));
        check("trace prints the exact energy", contains(r.out, "energy 1.2990381056766578"));
        check("trace writes curve, trajectory, figure",
              fs::exists("tw_curve.csv") && fs::exists("tw_traj.csv") && fs::exists("tw_curve.svg"));
        std::ifstream head("tw_curve.csv");
        std::string first;
        std::getline(head, first);
        check("curve CSV header", first == "l,re_z,im_z,W,levelset_residual");
    }

    // --- determinism: identical invocation, identical bytes ---
    {
        auto r = run("trace --catalog triple-well-3 --from 0 --to 1 --p 2 --out tw_again");
        const bool same = r.exit_code == 0 && slurp("tw_curve.csv") == slurp("tw_again_curve.csv") &&
                          slurp("tw_traj.csv") == slurp("tw_again_traj.csv") &&
                          slurp("tw_curve.svg") == slurp("tw_again_curve.svg");
        check("identical reruns are byte-identical", same);
    }

    // --- manifest shape ---
    {
        std::ifstream in("tw_manifest.jsonl");
        std::string line;
        std::getline(in, line);
        bool ok = false;
        std::string missing = "unparsed";
        try {
            auto j = json::parse(line);
            ok = j.contains("command") && j.contains("spec_hash") && j.contains("parameters") &&
                 j.contains("outputs") && j.contains("verdicts") && j.contains("wall_time_s");
            if (ok)
                for (const auto& f : j["outputs"]) ok = ok && fs::exists(f.get<std::string>());
            missing = ok ? "" : "key or output file missing";
        } catch (...) {
        }
        check("manifest line is complete JSON", ok, missing);
    }

    // --- trace: failure exit codes ---
    {
        auto r = run("trace --catalog cubic-ieps --param 0.3 --from 0 --to 1 --out cub");
        check("trace exits 2 when no connection exists", r.exit_code == 2,
              "exit " + std::to_string(r.exit_code));
        check("unreached trace still writes the curve", fs::exists("cub_curve.csv"));
    }
    {
        auto r = run("trace --catalog triple-well-3 --from 0 --to 0 --out deg");
        check("degenerate endpoints exit 1", r.exit_code == 1, "exit " + std::to_string(r.exit_code));
    }
    {
        auto r = run("trace --catalog no-such-family --from 0 --to 1");
        check("unknown family exits 1", r.exit_code == 1, "exit " + std::to_string(r.exit_code));
    }
    {
        auto r = run("trace --catalog triple-well-3 --from 0 --to 7 --out oor");
        check("out-of-range minimum index exits 1", r.exit_code == 1,
              "exit " + std::to_string(r.exit_code));
    }

    // --- verify: round trip of everything trace emitted with exit 0 ---
    {
        auto r = run("verify --in tw_traj.csv --catalog triple-well-3 --p 2");
        check("verify passes on trace output", r.exit_code == 0, "exit " + std::to_string(r.exit_code));
        check("verify prints its residual table", contains(r.out, "equip_residual") &&
                                                      contains(r.out, "el_residual") &&
                                                      !contains(r.out, "[FAIL]"));
    }
    {
        // same samples, wrong exponent: the residual table must notice
        auto r = run("verify --in tw_traj.csv --catalog triple-well-3 --p 3");
        check("verify fails under the wrong p", r.exit_code == 2 && contains(r.out, "[FAIL]"),
              "exit " + std::to_string(r.exit_code));
    }
    {
        std::ifstream in("tw_traj.csv");
        std::ofstream out("corrupt.csv", std::ios::binary);
        std::string line;
        for (int n = 1; std::getline(in, line); ++n)
            out << (n == 5 ? "0.25,broken" : line) << '\n';
        out.close();
        auto r = run("verify --in corrupt.csv --catalog triple-well-3 --p 2");
        check("corrupted file exits 1 and names the line",
              r.exit_code == 1 && contains(r.err, "corrupt.csv:5:"),
              "exit " + std::to_string(r.exit_code) + ", stderr: " + r.err.substr(0, 120));
    }

    // --- minimize ---
    {
        auto r = run("minimize --scalar-two-well --p 2 --out sc");
        const double action = value_after(r.out, "action ");
        check("scalar minimize exits 0", r.exit_code == 0, "exit " + std::to_string(r.exit_code));
        check("scalar action near 4/3", std::abs(action - 4.0 / 3.0) < 1e-3,
              "action " + std::to_string(action));
        check("minimize writes path and log", fs::exists("sc_path.csv") && fs::exists("sc_log.jsonl"));
        std::ifstream log("sc_log.jsonl");
        std::string line, last;
        while (std::getline(log, line))
            if (!line.empty()) last = line;
        bool ok = false;
        try {
            auto j = json::parse(last);
            ok = j.contains("iteration") && j.contains("action") && j.contains("grad_max");
        } catch (...) {
        }
        check("minimizer log lines are JSON", ok);
    }

    // --- sweep ---
    {
        auto r = run("sweep --family cubic-ieps --range 0.5 0.9 --out rep.json");
        check("sweep exits 0 when a flip is found", r.exit_code == 0,
              "exit " + std::to_string(r.exit_code));
        bool ok = false;
        double th = 0;
        try {
            auto j = json::parse(slurp("rep.json"));
            th = j["threshold_estimate"].get<double>();
            ok = j["points"].size() == 15;
        } catch (...) {
        }
        check("sweep report parses with 15 points", ok);
        check("sweep threshold lands near 0.68125", std::abs(th - 0.68125) < 1e-3,
              "estimate " + std::to_string(th));
    }
    {
        auto r = run("sweep --family cubic-ieps --range 0.8 1.0 --out rep_none.json");
        check("sweep exits 2 without a transition", r.exit_code == 2,
              "exit " + std::to_string(r.exit_code));
    }
    {
        auto base = run("sweep --family cubic-ieps --range 0.5 0.9 --out rep_a.json");
        auto capped = run("sweep --family cubic-ieps --range 0.5 0.9 --out rep_b.json",
                          "HETERO_THREADS=5 ");
        check("worker cap does not change the report",
              base.exit_code == 0 && capped.exit_code == 0 &&
                  slurp("rep_a.json") == slurp("rep_b.json"));
    }

    // --- energy and catalog ---
    {
        auto r = run("energy --catalog triple-well-2 --from 0 --to 1");
        // |g(1) - g(-1)| is computed in floating point; allow a couple of ulp around 4/3
        double v = r.out.empty() ? 0.0 : std::strtod(r.out.c_str(), nullptr);
        check("energy prints the closed form", std::abs(v - 4.0 / 3.0) < 1e-15,
              r.out.substr(0, 40));
    }
    {
        auto r = run("catalog");
        check("catalog lists the families", r.exit_code == 0 && contains(r.out, "triple-well-n") &&
                                                contains(r.out, "rational-a"));
        auto rj = run("catalog --family triple-well-3 --json");
        bool ok = false;
        try {
            auto j = json::parse(rj.out);
            ok = j.contains("roots") && j.contains("hash") && j["minima"].size() == 3;
        } catch (...) {
        }
        check("catalog --json emits the spec", ok);
    }

    // --- spec round trip through a JSON file ---
    {
        auto rj = run("catalog --family quartic-eps --param 0.9 --json");
        {
            std::ofstream out("quartic.json", std::ios::binary);
            out << rj.out;
        }
        auto r = run("trace --spec-json quartic.json --from 0 --to 1 --out qj");
        check("trace accepts a spec JSON file", r.exit_code == 0, "exit " + std::to_string(r.exit_code));
        std::ofstream bad("bad.json", std::ios::binary);
        bad << "{ not json";
        bad.close();
        auto rb = run("trace --spec-json bad.json --from 0 --to 1");
        check("malformed spec JSON exits 1", rb.exit_code == 1, "exit " + std::to_string(rb.exit_code));
    }

    if (g_failures == 0) std::printf("all cli checks passed\n");
    std::error_code ec;
    fs::remove_all(work, ec);
    return g_failures;
}
