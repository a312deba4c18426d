#pragma once

#include <cstdint>
#include <utility>

#include "ptfprg/bits.hpp"

namespace ptfprg {

// Discretized single-variable Gaussian: Box-Muller evaluated on the half-integer
// grid z' = (j+0.5)/N, theta' = (k+0.5)/N. A sample differs from the exact
// transform of the same uniforms by more than delta only near the z=0 edge,
// giving the coupling property Pr(|X-Y| > delta) < delta.
struct ApproxGaussianSpec {
    double delta = 0.0;
    uint64_t N = 0;            // floor(delta^-3)
    int bits_per_uniform = 0;  // ceil(log2 N)
    int bits_total = 0;        // two uniforms per sample

    // Standard construction, N = floor(delta^-3). Requires 0 < delta < 1/2
    // (so N >= 8); the floor is evaluated in long double.
    static ApproxGaussianSpec from_delta(double delta);

    // Explicit grid size, N >= 8; delta is implied as N^(-1/3).
    static ApproxGaussianSpec from_N(uint64_t N);

    // Hard bound on |sample|: sqrt(2 ln(2N)), attained at the z-grid edge.
    double bound() const;
};

// sqrt(-2 ln z') cos(2 pi theta') at grid point (j, k). Pure function;
// throws std::invalid_argument when j or k is outside [0, N).
double sample(const ApproxGaussianSpec& spec, uint64_t j, uint64_t k);

struct CoupledPair {
    double x;  // exact Box-Muller transform of (u, v); marginal is exactly N(0,1)
    double y;  // the discretized sample at the rounded grid point
    bool z_edge;  // u below the first half-grid point, the coupling failure region
};

// Couples the exact transform with the grid sample through shared uniforms
// u, v in (0,1).
CoupledPair coupled_pair(const ApproxGaussianSpec& spec, double u, double v);

// Parses (j, k) from the next 2*bits_per_uniform bits of the stream, big-endian
// j block then k block, each reduced mod N. Throws seed_underflow_error when
// the stream runs out.
std::pair<uint64_t, uint64_t> consume_bits(const ApproxGaussianSpec& spec, BitSource& bits);

}  // namespace ptfprg
