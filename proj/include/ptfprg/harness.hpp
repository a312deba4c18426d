#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "ptfprg/generator.hpp"
#include "ptfprg/quadratic.hpp"

namespace ptfprg {

// Thread count for trial-parallel estimation: requested value, 0 = auto, then
// capped by the PTFPRG_THREADS environment variable (0 or unset = no cap).
// Results never depend on the thread count: trials are accumulated in fixed
// chunks that are reduced in chunk order.
int resolve_threads(int requested);

// ---------------------------------------------------------------------------
// PTF cases and oracles.

struct PtfCase {
    std::string name;
    Quadratic poly;
    enum class Oracle { closed_form, monte_carlo } oracle = Oracle::closed_form;
    std::string derivation;  // how the oracle value arises; closed forms are
                             // cross-checked against the Monte-Carlo reference
};

// The fixed verification suite: pure linear, shifted linear, cross term,
// ellipsoid, saddle, near-linear, three dense random instances (fixed RNG
// seed), and a constant sign. Requires n >= 4.
std::vector<PtfCase> standard_suite(int n);

struct not_closed_form : std::runtime_error {
    explicit not_closed_form(const std::string& what) : std::runtime_error(what) {}
};

// E[sgn(q(X))] for X standard Gaussian, to absolute error ~1e-5. Supported
// shapes: constant sign, linear, equal-eigenvalue spherical (chi-squared), and
// diagonalizable cases with at most 8 distinct quadratic eigen-directions
// (per-component exact binning composed on a convolution grid). Throws
// not_closed_form otherwise.
double closed_form_expectation(const Quadratic& q);

// P(|q(X)| <= eps0 * |q|_2) through the same machinery; used to flag
// boundary-sensitive cases. Same support set as closed_form_expectation.
double closed_form_small_ball(const Quadratic& q, double eps0);

// ---------------------------------------------------------------------------
// Monte-Carlo estimation.

struct McResult {
    double estimate = 0.0;
    double stderr_ = 0.0;
    long long trials = 0;
};

// Mean of sgn(poly(X)) over `trials` reference-Gaussian samples. Requires
// trials >= 1000. Deterministic in (seed); thread count does not affect the
// result.
McResult mc_expectation(const Quadratic& poly, long long trials, uint64_t seed, int threads);

// Shared-sample suite estimates: one X stream, every polynomial evaluated on
// each sample. Column i of the result corresponds to polys[i].
std::vector<McResult> mc_suite_gaussian(const std::vector<Quadratic>& polys, long long trials,
                                        uint64_t seed, int threads);

// Same, with the composed generator as the sampler (one master seed stream per
// trial, derived from (seed, trial index)).
std::vector<McResult> mc_suite_generator(const std::vector<Quadratic>& polys,
                                         const GeneratorConfig& config, long long trials,
                                         uint64_t seed, int threads);

// ---------------------------------------------------------------------------
// Reports.

struct DiscrepancyRow {
    std::string name;
    double oracle = 0.0;
    double oracle_stderr = 0.0;  // 0 for closed-form oracles
    double estimate = 0.0;
    double estimate_stderr = 0.0;
    double gap = 0.0;
    double tol = 0.0;
    bool boundary_sensitive = false;
    bool pass = false;
};

// One row per case: oracle expectation vs generator estimate at `trials`
// samples per side. Verdict: |gap| <= sys_tol + 3 * combined stderr.
std::vector<DiscrepancyRow> discrepancy_report(const GeneratorConfig& config,
                                               const std::vector<PtfCase>& suite, long long trials,
                                               uint64_t seed, int threads, double sys_tol = 0.02);

// One-step replacement: oracle E[f(X)] vs f(sqrt(1-delta^3) X + delta^(3/2) Y1)
// with a fresh Gaussian X per trial and Y1 from family 1 of `config`.
std::vector<DiscrepancyRow> one_step_report(const GeneratorConfig& config,
                                            const std::vector<PtfCase>& suite, long long trials,
                                            uint64_t seed, int threads, double sys_tol = 0.02);

// ---------------------------------------------------------------------------
// Approximate-linearity decomposition statistics.

struct DecompositionResult {
    int r = 0;
    long long trials = 0;
    long long failures = 0;        // restrictions with ratio > bound_mult * delta
    double failure_fraction = 0.0;
    double stderr_ = 0.0;          // binomial
};

// Over `trials` Gaussian restrictions X of p at scale delta, the fraction where
// decompose_approx_linear(restrict(p, X, delta), r, delta, kappa).ratio exceeds
// bound_mult * delta. Requires p to have a nonzero quadratic part.
DecompositionResult test_decomposition(const Quadratic& p, double delta, int r, double kappa,
                                       long long trials, double bound_mult, uint64_t seed,
                                       int threads);

// ---------------------------------------------------------------------------
// Indicator x polynomial fooling.

// Test functional g(x) q(x) with g the indicator of s(x) in [lo, hi] and q a
// degree-<=4 polynomial given in the product-Hermite basis: q(x) =
// sum_t coeff_t * prod_i h_{deg_t[i]}(x_i).
struct IndicatorTriple {
    std::string name;
    Quadratic s;
    double lo = 0.0, hi = 0.0;
    std::vector<std::pair<double, std::vector<int>>> q_terms;
};

// Five fixed triples with s depending on at most two coordinates and deg q <= 4.
std::vector<IndicatorTriple> standard_indicator_suite(int n);

// |E[g(X)q(X)] - E[g(Y)q(Y)]|, both sides estimated at `trials`.
std::vector<DiscrepancyRow> indicator_fooling_report(const GeneratorConfig& config,
                                                     const std::vector<IndicatorTriple>& triples,
                                                     long long trials, uint64_t seed, int threads,
                                                     double sys_tol = 0.02);

// ---------------------------------------------------------------------------
// Hermite moment fooling.

struct MomentRow {
    std::vector<std::pair<int, int>> index;  // sparse (variable, degree), degree sum <= 4
    double estimate = 0.0;
    double stderr_ = 0.0;
};

// Empirical E[h_a(Y)] for every multi-index a with 1 <= total degree <=
// max_degree, lexicographic order. Gaussian value is 0 for all of them.
std::vector<MomentRow> moment_fooling_report(const GeneratorConfig& config, int max_degree,
                                             long long trials, uint64_t seed, int threads);

// ---------------------------------------------------------------------------
// Distribution-shape sanity bounds (true-Gaussian sampling).

struct BoundRow {
    std::string name;
    double parameter = 0.0;  // eps or N
    double empirical = 0.0;
    double bound = 0.0;
    bool pass = false;
};

// Pr(|p(X)| <= eps |p|_2) against 3 sqrt(eps), for each eps.
std::vector<BoundRow> test_anticoncentration(const Quadratic& p, std::span<const double> eps_list,
                                             long long trials, uint64_t seed, int threads);

// Pr(|p(X)| > N |p|_2) against 4 * 2^(-N/2), for each N.
std::vector<BoundRow> test_concentration(const Quadratic& p, std::span<const double> n_list,
                                         long long trials, uint64_t seed, int threads);

// ---------------------------------------------------------------------------
// Report files.

std::string suite_sha1(const std::vector<PtfCase>& suite);
std::string config_sha1(const GeneratorConfig& config);

// CSV: `# ptfprg <version>` / `# config_sha1 ...` / `# suite_sha1 ...` header
// lines, then one row per case. Stable formatting (%.17g) so identical inputs
// give identical bytes.
void write_report_csv(const std::string& path, const nlohmann::json& meta,
                      const std::vector<DiscrepancyRow>& rows);

// JSON: full metadata (config, trials, seed, tolerances, hashes) plus rows.
void write_report_json(const std::string& path, const nlohmann::json& meta,
                       const std::vector<DiscrepancyRow>& rows);

nlohmann::json row_to_json(const DiscrepancyRow& row);

}  // namespace ptfprg
