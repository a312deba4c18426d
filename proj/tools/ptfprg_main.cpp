// Command-line front end: derive generator parameters, emit sample streams,
// and run the verification suites.
//
// Exit codes: 0 on success / all verdicts pass, 1 on a verdict failure,
// 2 on usage or input errors.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ptfprg/bits.hpp"
#include "ptfprg/generator.hpp"
#include "ptfprg/harness.hpp"
#include "ptfprg/rng.hpp"
#include "ptfprg/sha1.hpp"
#include "ptfprg/version.hpp"

using namespace ptfprg;

namespace {

struct ModeFlags {
    uint64_t n = 16;
    double epsilon = 0.0;
    double C = 1.0;
    bool has_epsilon = false;
    // empirical overrides
    double delta = 0.0;
    uint64_t ell = 0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    int M = -1;
};

void add_mode_flags(CLI::App* cmd, ModeFlags& f) {
    cmd->add_option("--n", f.n, "dimension")->check(CLI::PositiveNumber);
    auto* eps = cmd->add_option("--epsilon", f.epsilon, "target fooling error (theory mode)");
    cmd->add_option("--C", f.C, "scaling constant C (theory mode)");
    cmd->add_option("--delta", f.delta, "empirical mode: delta");
    cmd->add_option("--ell", f.ell, "empirical mode: number of families");
    cmd->add_option("--delta1", f.delta1, "empirical mode: approximate-Gaussian precision");
    cmd->add_option("--delta2", f.delta2, "empirical mode: ROBP fooling error");
    cmd->add_option("--M", f.M, "empirical mode: ROBP memory bits");
    cmd->callback([eps, &f] { f.has_epsilon = eps->count() > 0; });
}

GeneratorConfig config_from_flags(const ModeFlags& f) {
    const bool empirical = f.delta > 0.0 || f.ell > 0 || f.delta1 > 0.0 || f.M >= 0;
    if (empirical) {
        if (!(f.delta > 0.0) || f.ell == 0 || !(f.delta1 > 0.0) || f.M < 0)
            throw CLI::ValidationError(
                "empirical mode needs all of --delta --ell --delta1 --M (and optional --delta2)");
        double d2 = f.delta2 > 0.0 ? f.delta2 : f.delta1;
        return empirical_params(f.n, f.delta, f.ell, f.delta1, d2, f.M);
    }
    if (!f.has_epsilon)
        throw CLI::ValidationError("either --epsilon (theory mode) or the empirical flags are required");
    return derive_params(f.n, f.epsilon, f.C);
}

void warn_if_biased_grid(const GeneratorConfig& config) {
    if (config.grid_N && (config.grid_N & (config.grid_N - 1)) != 0)
        std::cerr << "warning: grid size " << config.grid_N
                  << " is not a power of two; the fixed-width modular reduction skews the\n"
                     "         index distribution. Prefer a dyadic --delta1 (2^-k).\n";
}

nlohmann::json experiment_meta(const GeneratorConfig& config, long long trials, uint64_t seed,
                               const std::string& suite_name) {
    nlohmann::json meta;
    meta["config"] = config;
    meta["config_sha1"] = config_sha1(config);
    meta["suite"] = suite_name;
    meta["trials"] = trials;
    meta["seed"] = seed;
    return meta;
}

int cmd_params(const ModeFlags& flags, const std::vector<uint64_t>& sweep) {
    GeneratorConfig config = config_from_flags(flags);
    warn_if_biased_grid(config);
    nlohmann::json j = config;
    std::cout << j.dump(2) << "\n\n";
    std::printf("seed length: %lld bits (%.1f KiB)\n", config.seed_length(),
                static_cast<double>(config.seed_length()) / 8192.0);
    std::printf("family seed: %lld bits = m(2k+1), m=%d, k=%d, ell=%" PRIu64 "\n",
                config.family_seed_bits(), config.m, config.k, config.ell);
    if (!config.runnable)
        std::printf("note: not desk-runnable (block width above 64 bits); use empirical mode\n");

    if (!config.empirical) {
        std::printf("\n%-12s %-16s %-20s %-12s\n", "n", "exact bits", "asymptotic formula",
                    "bits/formula");
        for (uint64_t n : sweep) {
            GeneratorConfig c = derive_params(n, flags.epsilon, flags.C);
            double a = c.asymptotic_seed_formula();
            std::printf("%-12" PRIu64 " %-16lld %-20.1f %-12.3f\n", n, c.seed_length(), a,
                        static_cast<double>(c.seed_length()) / a);
        }
    }
    return 0;
}

int cmd_gen(const ModeFlags& flags, long long count, uint64_t seed, const std::string& master_hex,
            const std::string& format, const std::string& out_path) {
    GeneratorConfig config = config_from_flags(flags);
    warn_if_biased_grid(config);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty() && out_path != "-") {
        file.open(out_path, std::ios::binary);
        if (!file) throw CLI::ValidationError("cannot open output file: " + out_path);
        out = &file;
    }

    std::vector<std::vector<double>> samples;
    if (!master_hex.empty()) {
        std::vector<uint8_t> bytes = hex_to_bytes(master_hex);
        BitReader reader(bytes);
        samples.push_back(gen_sample(config, reader));
    } else {
        for (long long t = 0; t < count; ++t) {
            RngBitSource src(seed ^ 0x3c79ac492ba7b653ull, static_cast<uint64_t>(t));
            samples.push_back(gen_sample(config, src));
        }
    }

    if (format == "csv") {
        *out << "# ptfprg " << kVersion << "\n";
        *out << "# config_sha1 " << config_sha1(config) << "\n";
        for (uint64_t c = 0; c < config.n; ++c) *out << (c ? "," : "") << "y" << (c + 1);
        *out << "\n";
        char buf[40];
        for (const auto& s : samples) {
            for (uint64_t c = 0; c < config.n; ++c) {
                std::snprintf(buf, sizeof buf, "%.17g", s[c]);
                *out << (c ? "," : "") << buf;
            }
            *out << "\n";
        }
    } else if (format == "binary") {
        // raw little-endian doubles, n per record; provenance goes to the
        // sidecar meta file when writing to a path
        for (const auto& s : samples)
            out->write(reinterpret_cast<const char*>(s.data()),
                       static_cast<std::streamsize>(s.size() * sizeof(double)));
        if (out != &std::cout) {
            nlohmann::json meta;
            meta["tool"] = "ptfprg";
            meta["version"] = kVersion;
            meta["config"] = config;
            meta["config_sha1"] = config_sha1(config);
            meta["count"] = samples.size();
            std::ofstream mf(out_path + ".meta.json", std::ios::binary);
            mf << meta.dump(2) << "\n";
        }
    } else {
        throw CLI::ValidationError("unknown --format (csv|binary)");
    }
    return 0;
}

void print_rows(const std::vector<DiscrepancyRow>& rows) {
    for (const auto& r : rows)
        std::printf("[%s] %-28s oracle %+0.5f  estimate %+0.5f  gap %.5f  tol %.5f%s\n",
                    r.pass ? "PASS" : "FAIL", r.name.c_str(), r.oracle, r.estimate, r.gap, r.tol,
                    r.boundary_sensitive ? "  (boundary-sensitive)" : "");
}

int cmd_report(const ModeFlags& flags, const std::string& suite_name, long long trials,
               uint64_t seed, int threads, const std::string& out_prefix) {
    GeneratorConfig config = config_from_flags(flags);
    warn_if_biased_grid(config);
    std::vector<DiscrepancyRow> rows;
    bool pass = true;

    if (suite_name == "standard") {
        auto suite = standard_suite(static_cast<int>(config.n));
        rows = discrepancy_report(config, suite, trials, seed, threads);
    } else if (suite_name == "onestep") {
        auto suite = standard_suite(static_cast<int>(config.n));
        rows = one_step_report(config, suite, trials, seed, threads);
    } else if (suite_name == "fooling") {
        auto triples = standard_indicator_suite(static_cast<int>(config.n));
        rows = indicator_fooling_report(config, triples, trials, seed, threads);
    } else if (suite_name == "decomposition") {
        // fixed dense instance, failure fractions over r in {5, 10, 20}
        CounterRng rng(0x5eedca5eull, 100);
        Quadratic p = Quadratic::zero(64);
        for (int i = 0; i < 64; ++i)
            for (int j = i; j < 64; ++j) p.set_a(i, j, rng.gaussian());
        for (int i = 0; i < 64; ++i) p.linear[i] = rng.gaussian();
        for (int r : {5, 10, 20}) {
            DecompositionResult res =
                test_decomposition(p, 0.1, r, 0.25, trials, 10.0, seed, threads);
            DiscrepancyRow row;
            row.name = "decomposition_r" + std::to_string(r);
            row.estimate = res.failure_fraction;
            row.estimate_stderr = res.stderr_;
            row.oracle = 0.0;
            row.gap = res.failure_fraction;
            row.tol = 0.05;
            row.pass = res.failure_fraction <= row.tol;
            rows.push_back(row);
        }
    } else if (suite_name == "bounds") {
        std::vector<double> eps{1e-4, 1e-3, 1e-2, 1e-1};
        std::vector<double> ns{2.0, 4.0, 6.0};
        for (int inst = 0; inst < 5; ++inst) {
            CounterRng rng(0xbadc0deull, static_cast<uint64_t>(inst));
            Quadratic p = Quadratic::zero(8);
            for (int i = 0; i < 8; ++i)
                for (int j = i; j < 8; ++j) p.set_a(i, j, rng.gaussian());
            for (int i = 0; i < 8; ++i) p.linear[i] = rng.gaussian();
            for (const BoundRow& b : test_anticoncentration(p, eps, trials, seed, threads)) {
                DiscrepancyRow row;
                row.name = "anticonc_q" + std::to_string(inst) + "_eps" + std::to_string(b.parameter);
                row.estimate = b.empirical;
                row.tol = b.bound;
                row.gap = b.empirical;
                row.pass = b.pass;
                rows.push_back(row);
            }
            for (const BoundRow& b : test_concentration(p, ns, trials, seed, threads)) {
                DiscrepancyRow row;
                row.name = "conc_q" + std::to_string(inst) + "_N" + std::to_string(b.parameter);
                row.estimate = b.empirical;
                row.tol = b.bound;
                row.gap = b.empirical;
                row.pass = b.pass;
                rows.push_back(row);
            }
        }
    } else {
        throw CLI::ValidationError("unknown --suite (standard|onestep|decomposition|fooling|bounds)");
    }

    for (const auto& r : rows) pass = pass && r.pass;
    print_rows(rows);

    if (!out_prefix.empty()) {
        nlohmann::json meta = experiment_meta(config, trials, seed, suite_name);
        write_report_csv(out_prefix + ".csv", meta, rows);
        write_report_json(out_prefix + ".json", meta, rows);
    }
    return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pseudorandom generator for degree-2 Gaussian polynomial threshold functions"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    ModeFlags params_flags, gen_flags, report_flags;

    auto* params = app.add_subcommand("params", "derive parameters and seed-length accounting");
    add_mode_flags(params, params_flags);
    std::vector<uint64_t> sweep{1ull << 10, 1ull << 12, 1ull << 14, 1ull << 16, 1ull << 18,
                                1ull << 20};
    params->add_option("--sweep", sweep, "n values for the seed-length table");

    auto* gen = app.add_subcommand("gen", "emit generator samples");
    add_mode_flags(gen, gen_flags);
    long long count = 1;
    uint64_t gen_seed = 0;
    std::string master_hex, format = "csv", out_path;
    gen->add_option("--count", count, "number of samples");
    gen->add_option("--seed", gen_seed, "experiment seed (one master seed per sample index)");
    gen->add_option("--master-seed", master_hex, "explicit master seed (hex); emits one sample");
    gen->add_option("--format", format, "csv|binary");
    gen->add_option("--out", out_path, "output path (default stdout)");

    auto* report = app.add_subcommand("report", "run a verification suite");
    add_mode_flags(report, report_flags);
    std::string suite_name = "standard", out_prefix;
    long long trials = 100000;
    uint64_t rep_seed = 0;
    int threads = 0;
    report->add_option("--suite", suite_name, "standard|onestep|decomposition|fooling|bounds");
    report->add_option("--trials", trials, "trials per side");
    report->add_option("--seed", rep_seed, "experiment seed");
    report->add_option("--threads", threads, "worker threads (0 = auto, capped by PTFPRG_THREADS)");
    report->add_option("--out", out_prefix, "output path prefix for .csv/.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (params->parsed()) return cmd_params(params_flags, sweep);
        if (gen->parsed()) return cmd_gen(gen_flags, count, gen_seed, master_hex, format, out_path);
        if (report->parsed())
            return cmd_report(report_flags, suite_name, trials, rep_seed, threads, out_prefix);
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const seed_underflow_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
