#include "ptfprg/approx_gaussian.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace ptfprg {

static int bits_for(uint64_t n) {  // ceil(log2 n), n >= 2
    return std::bit_width(n - 1);
}

ApproxGaussianSpec ApproxGaussianSpec::from_delta(double delta) {
    if (!(delta > 0.0 && delta < 0.5))
        throw std::invalid_argument("ApproxGaussianSpec: delta must lie in (0, 1/2)");
    long double inv = 1.0L / (static_cast<long double>(delta) * delta * delta);
    if (inv >= 0x1.0p62L)
        throw std::invalid_argument("ApproxGaussianSpec: delta too small, grid exceeds 2^62");
    ApproxGaussianSpec s;
    s.delta = delta;
    s.N = static_cast<uint64_t>(floorl(inv));
    s.bits_per_uniform = bits_for(s.N);
    s.bits_total = 2 * s.bits_per_uniform;
    return s;
}

ApproxGaussianSpec ApproxGaussianSpec::from_N(uint64_t N) {
    if (N < 8) throw std::invalid_argument("ApproxGaussianSpec: N must be at least 8");
    ApproxGaussianSpec s;
    s.N = N;
    s.delta = std::pow(static_cast<double>(N), -1.0 / 3.0);
    s.bits_per_uniform = bits_for(N);
    s.bits_total = 2 * s.bits_per_uniform;
    return s;
}

double ApproxGaussianSpec::bound() const {
    return std::sqrt(2.0 * std::log(2.0 * static_cast<double>(N)));
}

double sample(const ApproxGaussianSpec& spec, uint64_t j, uint64_t k) {
    if (j >= spec.N || k >= spec.N)
        throw std::invalid_argument("approx_gaussian sample: grid index out of range");
    const double n = static_cast<double>(spec.N);
    double z = (static_cast<double>(j) + 0.5) / n;
    double theta = (static_cast<double>(k) + 0.5) / n;
    return std::sqrt(-2.0 * std::log(z)) * std::cos(2.0 * M_PI * theta);
}

CoupledPair coupled_pair(const ApproxGaussianSpec& spec, double u, double v) {
    if (!(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0))
        throw std::invalid_argument("coupled_pair: uniforms must lie in (0,1)");
    const double n = static_cast<double>(spec.N);

    CoupledPair out;
    out.x = std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);

    auto grid_index = [&](double t) {
        long long i = std::llround(t * n - 0.5);
        if (i < 0) i = 0;
        if (i >= static_cast<long long>(spec.N)) i = static_cast<long long>(spec.N) - 1;
        return static_cast<uint64_t>(i);
    };
    out.y = sample(spec, grid_index(u), grid_index(v));
    out.z_edge = u < 0.5 / n;
    return out;
}

std::pair<uint64_t, uint64_t> consume_bits(const ApproxGaussianSpec& spec, BitSource& bits) {
    uint64_t j = bits.read(spec.bits_per_uniform) % spec.N;
    uint64_t k = bits.read(spec.bits_per_uniform) % spec.N;
    return {j, k};
}

}  // namespace ptfprg
