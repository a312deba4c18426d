// Acceptance suite: one pass/fail line per criterion, exit nonzero on any
// failure. Full scale takes ~15-20 minutes on two cores; set
// PTFPRG_ACCEPT_FAST=1 for a reduced smoke run during development (the fast
// run prints a loud notice and is not the normative result).

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ptfprg/approx_gaussian.hpp"
#include "ptfprg/generator.hpp"
#include "ptfprg/gf2.hpp"
#include "ptfprg/harness.hpp"
#include "ptfprg/nisan_robp.hpp"
#include "ptfprg/rng.hpp"
#include "ptfprg/stats.hpp"

using namespace ptfprg;

namespace {

int g_failures = 0;
bool g_fast = false;

long long scaled(long long full) { return g_fast ? std::max(full / 100, 2000ll) : full; }

void report(int idx, bool pass, const char* what, const std::string& detail) {
    std::printf("[%s] C%02d %s: %s\n", pass ? "PASS" : "FAIL", idx, what, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

GeneratorConfig desk_config() {
    // n=16 empirical mode: delta=0.25, ell=64, M=24 bits, delta1=delta2=2^-20
    return empirical_params(16, 0.25, 64, 0x1.0p-20, 0x1.0p-20, 24);
}

Quadratic random_dense(int n, uint64_t key, uint64_t stream) {
    CounterRng rng(key, stream);
    Quadratic q = Quadratic::zero(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) q.set_a(i, j, rng.gaussian());
    for (int i = 0; i < n; ++i) q.linear[i] = rng.gaussian();
    q.constant = rng.gaussian();
    return q;
}

// --------------------------------------------------------------------------

void c1_coupling() {
    auto t0 = std::chrono::steady_clock::now();
    ApproxGaussianSpec spec = ApproxGaussianSpec::from_delta(0.01);
    const long long trials = scaled(1000000);
    CounterRng rng(0xc11ull, 0);
    long long violations = 0;
    bool bounded = true;
    for (long long t = 0; t < trials; ++t) {
        CoupledPair p = coupled_pair(spec, rng.uniform01(), rng.uniform01());
        if (std::fabs(p.x - p.y) > spec.delta) ++violations;
        bounded = bounded && std::fabs(p.y) <= spec.bound();
    }
    double frac = static_cast<double>(violations) / trials;
    double secs = elapsed_s(t0);
    bool pass = frac < 0.01 && bounded && secs < 10.0;
    report(1, pass, "approximate-Gaussian coupling",
           fmt("violation fraction %.2e < 0.01 over %lld pairs, bounded, %.1f s", frac, trials,
               secs));
}

void c2_distribution() {
    ApproxGaussianSpec spec = ApproxGaussianSpec::from_delta(0.01);
    const long long trials = scaled(1000000);
    CounterRng rng(0xc22ull, 0);
    std::vector<double> sample_vec(trials);
    for (long long t = 0; t < trials; ++t)
        sample_vec[t] = sample(spec, rng.below(spec.N), rng.below(spec.N));
    double ks = ks_statistic_normal(std::move(sample_vec));
    double bound = g_fast ? 0.02 : 0.005;
    report(2, ks <= bound, "approximate-Gaussian distribution",
           fmt("KS statistic %.5f <= %.3f at %lld samples", ks, bound, trials));
}

void c3_nisan_fooling() {
    auto t0 = std::chrono::steady_clock::now();
    const int n_steps = 32, D = 2, W = 8, M = 3;
    NisanShape shape = derive_nisan(n_steps, D, M, 0x1.0p-20);
    const long long seeds = scaled(100000);
    double worst = 0.0;
    for (uint64_t prog_id = 0; prog_id < 20; ++prog_id) {
        CounterRng rng(0x20b5ull, prog_id);
        Robp prog;
        prog.n_steps = n_steps;
        prog.block_bits = D;
        prog.n_states = W;
        prog.start = 0;
        prog.transition.resize(static_cast<size_t>(n_steps) * W * 4);
        for (auto& t : prog.transition) t = static_cast<uint16_t>(rng.below(W));
        prog.accept.resize(W);
        for (auto& a : prog.accept) a = static_cast<uint8_t>(rng.below(2));

        double exact = exact_expectation_uniform(prog);
        long long accepted = 0;
        std::vector<uint32_t> syms(n_steps);
        std::vector<uint64_t> blocks(n_steps);
        for (long long s = 0; s < seeds; ++s) {
            RngBitSource src(0x21b5ull + prog_id, static_cast<uint64_t>(s));
            NisanParams params = NisanParams::parse(shape.m, shape.k, src);
            expand_prefix(params, n_steps, blocks.data());
            for (int i = 0; i < n_steps; ++i)
                syms[i] = static_cast<uint32_t>(blocks[i] >> (shape.m - D));
            accepted += run(prog, syms);
        }
        worst = std::max(worst, std::fabs(static_cast<double>(accepted) / seeds - exact));
    }
    double secs = elapsed_s(t0);
    double bound = 0.02 * (g_fast ? std::sqrt(100000.0 / static_cast<double>(seeds)) : 1.0);
    bool pass = worst <= bound && secs < 60.0;
    report(3, pass, "Nisan fooling of random ROBPs",
           fmt("max |exact - empirical| %.4f <= %.3f over 20 programs x %lld seeds, %.1f s", worst,
               bound, seeds, secs));
}

void c4_pairwise_independence() {
    bool ok = true;
    for (int m = 1; m <= 4 && ok; ++m) {
        const uint64_t size = 1ull << m;
        for (uint64_t x1 = 0; x1 < size && ok; ++x1) {
            for (uint64_t x2 = x1 + 1; x2 < size && ok; ++x2) {
                std::vector<int> hits(size * size, 0);
                for (uint64_t a = 0; a < size; ++a) {
                    Gf2Mul mul(a, m);
                    for (uint64_t b = 0; b < size; ++b)
                        ++hits[(mul.mul(x1) ^ b) * size + (mul.mul(x2) ^ b)];
                }
                for (int h : hits) ok = ok && h == 1;
            }
        }
    }
    report(4, ok, "hash pairwise independence",
           "every output pair hit exactly once, exhaustive for m <= 4");
}

void c5_moment_fooling() {
    GeneratorConfig config = desk_config();
    const long long trials = scaled(1000000);
    auto rows = moment_fooling_report(config, 4, trials, 0xc55ull, 0);
    int bad = 0;
    double worst_ratio = 0.0;
    for (const auto& r : rows) {
        double ratio = r.stderr_ > 0 ? std::fabs(r.estimate) / r.stderr_ : 0.0;
        worst_ratio = std::max(worst_ratio, ratio);
        if (std::fabs(r.estimate) > 5.0 * r.stderr_) ++bad;
    }
    report(5, bad == 0, "Hermite moment fooling",
           fmt("%zu moments of degree <= 4, worst |estimate|/stderr %.2f (need <= 5) at %lld "
               "samples",
               rows.size(), worst_ratio, trials));
}

void c6_discrepancy() {
    auto t0 = std::chrono::steady_clock::now();
    GeneratorConfig config = desk_config();
    auto suite = standard_suite(16);
    const long long trials = scaled(1000000);
    auto rows = discrepancy_report(config, suite, trials, 0xc66ull, 0);
    bool pass = true;
    double worst_margin = 1e9;
    for (const auto& r : rows) {
        pass = pass && r.pass;
        worst_margin = std::min(worst_margin, r.tol - r.gap);
    }
    double secs = elapsed_s(t0);
    pass = pass && secs < 1800.0;
    report(6, pass, "PTF discrepancy (standard suite)",
           fmt("10 cases at %lld trials/side, worst tol-gap margin %.4f, %.0f s", trials,
               worst_margin, secs));
    for (const auto& r : rows)
        std::printf("        %-18s gap %.5f tol %.5f %s\n", r.name.c_str(), r.gap, r.tol,
                    r.pass ? "ok" : "FAIL");
}

void c7_one_step() {
    auto suite = standard_suite(16);
    const long long trials = scaled(1000000);
    bool pass = true;
    std::string detail;
    for (double delta : {0.4, 0.2, 0.1}) {
        GeneratorConfig config = empirical_params(16, delta, 1, 0x1.0p-20, 0x1.0p-20, 24);
        auto rows = one_step_report(config, suite, trials, 0xc77ull, 0);
        double worst = 1e9;
        for (const auto& r : rows) {
            pass = pass && r.pass;
            worst = std::min(worst, r.tol - r.gap);
        }
        detail += fmt("d=%.1f margin %.4f  ", delta, worst);
    }
    report(7, pass, "one-step replacement", detail + fmt("(%lld trials)", trials));
}

void c8_decomposition() {
    const long long trials = scaled(10000);
    bool pass = true;
    std::string detail;
    for (uint64_t inst = 0; inst < 3; ++inst) {
        Quadratic p = random_dense(64, 0xdecull, inst);
        DecompositionResult r5 = test_decomposition(p, 0.1, 5, 0.25, trials, 10.0, 0xc88ull, 0);
        DecompositionResult r10 = test_decomposition(p, 0.1, 10, 0.25, trials, 10.0, 0xc88ull, 0);
        DecompositionResult r20 = test_decomposition(p, 0.1, 20, 0.25, trials, 10.0, 0xc88ull, 0);
        bool below = r20.failure_fraction <= 0.05;
        auto se2 = [](const DecompositionResult& a, const DecompositionResult& b) {
            return 2.0 * std::sqrt(a.stderr_ * a.stderr_ + b.stderr_ * b.stderr_);
        };
        bool trend = r10.failure_fraction <= r5.failure_fraction + se2(r10, r5) &&
                     r20.failure_fraction <= r10.failure_fraction + se2(r20, r10);
        pass = pass && below && trend;
        detail += fmt("q%llu: f(5)=%.4f f(10)=%.4f f(20)=%.4f  ", (unsigned long long)inst,
                      r5.failure_fraction, r10.failure_fraction, r20.failure_fraction);
    }
    report(8, pass, "approximate-linearity decomposition",
           detail + fmt("(%lld restrictions, bound 0.05)", trials));
}

void c9_indicator_fooling() {
    GeneratorConfig config = desk_config();
    auto triples = standard_indicator_suite(16);
    const long long trials = scaled(1000000);
    auto rows = indicator_fooling_report(config, triples, trials, 0xc99ull, 0);
    bool pass = true;
    double worst = 1e9;
    for (const auto& r : rows) {
        pass = pass && r.pass;
        worst = std::min(worst, r.tol - r.gap);
    }
    report(9, pass, "indicator x polynomial fooling",
           fmt("%zu triples (r <= 2, deg q <= 4), worst tol-gap margin %.4f at %lld trials",
               rows.size(), worst, trials));
}

void c10_bounds() {
    const long long trials = scaled(1000000);
    std::vector<double> eps{1e-4, 1e-3, 1e-2, 1e-1};
    std::vector<double> ns{2.0, 4.0, 6.0};
    bool pass = true;
    double worst_anti = 0.0, worst_conc = 0.0;  // empirical / bound
    for (uint64_t inst = 0; inst < 20; ++inst) {
        Quadratic p = random_dense(8, 0xb0cull, inst);
        for (const BoundRow& r : test_anticoncentration(p, eps, trials, 0xcaaull, 0)) {
            pass = pass && r.pass;
            worst_anti = std::max(worst_anti, r.empirical / r.bound);
        }
        for (const BoundRow& r : test_concentration(p, ns, trials, 0xcbbull, 0)) {
            pass = pass && r.pass;
            worst_conc = std::max(worst_conc, r.empirical / r.bound);
        }
    }
    report(10, pass, "anticoncentration and concentration",
           fmt("20 quadratics, worst empirical/bound: small-ball %.3f, tail %.3f (need <= 1)",
               worst_anti, worst_conc));
}

void c11_seed_accounting() {
    // exact equality between the accounting and actual consumption
    bool exact = true;
    for (const GeneratorConfig& c :
         {desk_config(), empirical_params(5, 0.5, 3, 0.02, 0.05, 8),
          empirical_params(1, 0.3, 1, 0.1, 0.1, 4)}) {
        RngBitSource src(0xcccull, 1);
        gen_sample(c, src);
        exact = exact && static_cast<long long>(src.bits_read()) == c.seed_length();
    }

    GeneratorConfig small = derive_params(1ull << 10, 0.1, 1.0);
    GeneratorConfig big = derive_params(1ull << 20, 0.1, 1.0);
    double ratio = static_cast<double>(big.seed_length()) / static_cast<double>(small.seed_length());
    bool ratio_ok = ratio >= 1.8 && ratio <= 2.6;

    // the params command must emit the asymptotic comparison table
    bool table_ok = false;
    const char* cli = std::getenv("PTFPRG_CLI");
    if (cli != nullptr) {
        std::string out = "/tmp/ptfprg_accept_params.txt";
        std::string cmd = std::string(cli) + " params --n 1024 --epsilon 0.1 --C 1 > " + out + " 2>&1";
        if (std::system(cmd.c_str()) == 0) {
            std::ifstream f(out);
            std::stringstream ss;
            ss << f.rdbuf();
            std::string text = ss.str();
            table_ok = text.find("asymptotic formula") != std::string::npos &&
                       text.find("1048576") != std::string::npos;
        }
        std::remove(out.c_str());
    }
    report(11, exact && ratio_ok && table_ok, "seed accounting",
           fmt("consumption exact; growth ratio n=2^10 -> 2^20 is %.3f in [1.8, 2.6]; params "
               "table %s",
               ratio, table_ok ? "emitted" : "MISSING"));
}

void c12_determinism() {
    const char* cli = std::getenv("PTFPRG_CLI");
    if (cli == nullptr) {
        report(12, false, "CLI determinism", "PTFPRG_CLI not set");
        return;
    }
    auto slurp = [](const std::string& p) {
        std::ifstream f(p, std::ios::binary);
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    };
    auto run_cmd = [&](const std::string& args) {
        return std::system((std::string(cli) + " " + args).c_str());
    };
    const std::string flags = "--n 8 --delta 0.4 --ell 4 --delta1 0.0009765625 --M 16";

    bool ok = true;
    ok = ok && run_cmd("gen " + flags + " --count 4 --seed 3 --format csv --out /tmp/pa_g1.csv") == 0;
    ok = ok && run_cmd("gen " + flags + " --count 4 --seed 3 --format csv --out /tmp/pa_g2.csv") == 0;
    ok = ok && run_cmd("gen " + flags + " --count 4 --seed 3 --format binary --out /tmp/pa_b1.bin") == 0;
    ok = ok && run_cmd("gen " + flags + " --count 4 --seed 3 --format binary --out /tmp/pa_b2.bin") == 0;
    bool gen_same = slurp("/tmp/pa_g1.csv") == slurp("/tmp/pa_g2.csv") &&
                    !slurp("/tmp/pa_g1.csv").empty() &&
                    slurp("/tmp/pa_b1.bin") == slurp("/tmp/pa_b2.bin") &&
                    slurp("/tmp/pa_b1.bin").size() == 4 * 8 * 8;

    long long rep_trials = scaled(20000);
    std::string rep = "report " + flags + " --suite standard --trials " +
                      std::to_string(rep_trials) + " --seed 5 --threads 2 --out ";
    int rc1 = run_cmd(rep + "/tmp/pa_r1 > /dev/null");
    int rc2 = run_cmd(rep + "/tmp/pa_r2 > /dev/null");
    bool rep_same = rc1 == rc2 && slurp("/tmp/pa_r1.csv") == slurp("/tmp/pa_r2.csv") &&
                    !slurp("/tmp/pa_r1.csv").empty() &&
                    slurp("/tmp/pa_r1.json") == slurp("/tmp/pa_r2.json");

    for (const char* p : {"/tmp/pa_g1.csv", "/tmp/pa_g2.csv", "/tmp/pa_b1.bin", "/tmp/pa_b2.bin",
                          "/tmp/pa_b1.bin.meta.json", "/tmp/pa_b2.bin.meta.json", "/tmp/pa_r1.csv",
                          "/tmp/pa_r2.csv", "/tmp/pa_r1.json", "/tmp/pa_r2.json"})
        std::remove(p);

    report(12, ok && gen_same && rep_same, "CLI determinism",
           fmt("gen csv/binary and report csv/json byte-identical across repeat runs%s",
               g_fast ? " (fast scale)" : ""));
}

}  // namespace

int main() {
    g_fast = std::getenv("PTFPRG_ACCEPT_FAST") != nullptr;
    if (g_fast)
        std::printf("NOTE: PTFPRG_ACCEPT_FAST is set; trial counts reduced, NOT the normative "
                    "acceptance run\n");
    auto t0 = std::chrono::steady_clock::now();

    c1_coupling();
    c2_distribution();
    c3_nisan_fooling();
    c4_pairwise_independence();
    c5_moment_fooling();
    c6_discrepancy();
    c7_one_step();
    c8_decomposition();
    c9_indicator_fooling();
    c10_bounds();
    c11_seed_accounting();
    c12_determinism();

    std::printf("%s: %d of 12 criteria failed (%.0f s total)\n", g_failures ? "FAIL" : "OK",
                g_failures, elapsed_s(t0));
    return g_failures ? 1 : 0;
}
