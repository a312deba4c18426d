#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"

#include "ptfprg/bits.hpp"

namespace ptfprg {

// Affine hash over GF(2^m): h(x) = a (x) x XOR b, with (x) the carryless product
// reduced by the frozen degree-m irreducible polynomial. The full family over
// (a, b) is pairwise independent.
struct HashFunc {
    uint64_t a = 0;
    uint64_t b = 0;
};

// State of one Nisan generator instance: base word x0 and one hash per
// recursion level. Output is 2^k blocks of m bits,
//   G_0(x) = (x),  G_j(x) = G_{j-1}(x) || G_{j-1}(h_j(x)),
// with h_j = hashes[j-1]. Seed bits consumed: m * (2k + 1).
struct NisanParams {
    int m = 0;
    int k = 0;
    uint64_t x0 = 0;
    std::vector<HashFunc> hashes;  // size k; hashes[0] is the innermost level

    long long seed_bits() const { return static_cast<long long>(m) * (2 * k + 1); }

    // Frozen seed order: x0, h1.a, h1.b, ..., hk.a, hk.b, each m bits big-endian.
    static NisanParams parse(int m, int k, BitSource& bits);
};

// All 2^k output blocks.
std::vector<uint64_t> expand(const NisanParams& params);

// First `count` blocks only (same values as the full expansion).
void expand_prefix(const NisanParams& params, size_t count, uint64_t* out);

struct NisanShape {
    int m = 0;
    int k = 0;
    long long seed_bits = 0;
};

// Parameter rule for fooling (M-memory, D-bit-block, n_blocks-step) programs to
// error eps: m = ceil(c1 * (M + D + log2(n_blocks / eps))), k = ceil(log2 n_blocks).
NisanShape derive_nisan(uint64_t n_blocks, int D, int M, double eps, double c1 = 1.0);

// ---------------------------------------------------------------------------

// Explicit read-once branching program: n_steps blocks of block_bits bits, a
// step-indexed transition table, and an accepting-state predicate.
struct Robp {
    int n_steps = 0;
    int block_bits = 0;  // D
    int n_states = 0;    // W
    int start = 0;
    std::vector<uint16_t> transition;  // [step][state][symbol]
    std::vector<uint8_t> accept;       // [state]

    int next(int step, int state, uint32_t symbol) const {
        size_t sym_count = 1ull << block_bits;
        return transition[(static_cast<size_t>(step) * n_states + state) * sym_count + symbol];
    }
};

void to_json(nlohmann::json& j, const Robp& p);
void from_json(const nlohmann::json& j, Robp& p);

// Acceptance bit (0/1) on an explicit block sequence. Throws on length mismatch.
int run(const Robp& prog, std::span<const uint32_t> blocks);

// Exact acceptance probability under uniform blocks, by forward dynamic
// programming over state distributions. Requires W * 2^D * n within the test
// budget (2^24); throws std::invalid_argument beyond it.
double exact_expectation_uniform(const Robp& prog);

}  // namespace ptfprg
