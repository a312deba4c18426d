#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"

#include "ptfprg/approx_gaussian.hpp"
#include "ptfprg/bits.hpp"

namespace ptfprg {

// Composed generator: ell families of n approximate Gaussians, each family
// seeded by its own Nisan instance, combined with geometric weights
// w_i = (1-delta^3)^((i-1)/2) and normalized to unit per-coordinate variance.
//
// Every derived number is stored explicitly so a serialized config fully
// reproduces an experiment. Theory-scale precision parameters underflow any
// machine word; they are kept in log2 space and capped ("practicality caps")
// at machine-word scale, with both the theoretical value and the applied cap
// recorded. Configs whose Nisan block width cannot fit 64 bits are still valid
// for seed accounting but cannot be sampled (runnable = false); desk-scale
// experiments use empirical mode, which sets the precision knobs directly.
struct GeneratorConfig {
    // identity
    uint64_t n = 0;
    double epsilon = 0.0;  // 0 in empirical mode
    double C = 0.0;        // 0 in empirical mode
    bool empirical = false;

    // core parameters
    double delta = 0.0;
    uint64_t ell = 0;

    // theory-side values (log2 space where underflow-prone)
    double M_theory = 0.0;                // delta^-2 ln(n/delta)
    double log2_inv_delta1_theory = 0.0;  // delta^-1 ln(n/delta) / ln 2
    double log2_inv_delta2_theory = 0.0;

    // applied values after practicality caps
    int M = 0;                     // ROBP memory bits, capped at 64
    double delta1 = 0.0;           // approximate-Gaussian precision actually used
    double delta2 = 0.0;           // ROBP fooling error actually used
    uint64_t grid_N = 0;           // floor(delta1^-3), capped so it fits a 64-bit word
    int bits_per_uniform = 0;      // <= 62
    int bits_total = 0;
    bool capped_M = false;
    bool capped_delta1 = false;    // hit the word-size floor or the 1/4 ceiling
    bool capped_delta2 = false;

    // frozen Nisan layout: one family = one Nisan instance of 2^k blocks of m
    // bits; each block contributes its top payload_bits bits to the family bit
    // stream; variable j consumes bits [j*bits_total, (j+1)*bits_total).
    int payload_bits = 0;   // D, the per-block payload
    uint64_t n_blocks = 0;  // blocks actually consumed per family
    int m = 0;
    int k = 0;
    bool runnable = false;

    // combination weights
    std::vector<double> weights;  // size ell
    double normalizer = 0.0;      // sqrt(sum of squared weights)

    long long family_seed_bits() const { return static_cast<long long>(m) * (2 * k + 1); }
    long long seed_length() const { return static_cast<long long>(ell) * family_seed_bits(); }

    ApproxGaussianSpec approx_spec() const;

    // The headline asymptotic seed formula, log2(1/eps)^6 log2(n) log2(log2(n/eps)),
    // evaluated for comparison tables. Meaningful in theory mode only.
    double asymptotic_seed_formula() const;
};

void to_json(nlohmann::json& j, const GeneratorConfig& c);
void from_json(const nlohmann::json& j, GeneratorConfig& c);

// Theory-mode parameters: delta = 1/(C ln(1/epsilon)), ell = ceil(delta^-3 ln(1/epsilon)),
// delta1 = delta2 = exp(-delta^-1 ln(n/delta)), M = delta^-2 ln(n/delta), then caps.
// Requires n >= 1, 0 < epsilon < 1/2, C >= 1.
GeneratorConfig derive_params(uint64_t n, double epsilon, double C);

// Desk-scale mode: the precision knobs are set directly.
// Requires delta in (0,1), ell >= 1, delta1 in (0, 1/2), delta2 in (0, 1], M in [0, 64].
GeneratorConfig empirical_params(uint64_t n, double delta, uint64_t ell, double delta1,
                                 double delta2, int M);

// One output vector from a master seed stream. Consumes exactly seed_length()
// bits. Kahan-compensated summation in ascending family order; pure function
// of (config, seed bits). Throws seed_underflow_error (with the family index)
// when the stream is short, std::invalid_argument when !runnable.
std::vector<double> gen_sample(const GeneratorConfig& config, BitSource& seed);

// The i-th hybrid of the replacement induction:
//   (1-delta^3)^(i/2) X + delta^(3/2) sum_{j<=i} w_j Y_j.
// i = 0 returns X; i = ell is the pre-normalization composed generator.
// Consumes i * family_seed_bits() bits.
std::vector<double> hybrid_sample(const GeneratorConfig& config, BitSource& seed,
                                  std::span<const double> X, uint64_t i);

}  // namespace ptfprg
