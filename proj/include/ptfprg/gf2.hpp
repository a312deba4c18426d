#pragma once

#include <array>
#include <cstdint>

namespace ptfprg {

// Low coefficient mask of the lexicographically-first irreducible polynomial of
// degree m over GF(2): f_m = x^m + poly(mask). Index by m in [1, 64]; entry 0
// is unused. The full table is reproduced in docs/gf2_irreducible.md and
// verified by the test suite.
extern const std::array<uint64_t, 65> kIrreducibleLowMask;

// Reference carryless multiply-and-reduce in GF(2^m): (a*b) mod f_m.
// Bit-serial; used for cross-checking and table verification, not hot paths.
uint64_t gf2_mul_ref(uint64_t a, uint64_t b, int m);

// True iff x^m + poly(low_mask) is irreducible over GF(2).
bool gf2_is_irreducible(uint64_t low_mask, int m);

// Smallest odd low mask giving an irreducible polynomial of degree m.
uint64_t gf2_first_irreducible(int m);

// Multiplication by a fixed element a in GF(2^m), precomputed as 4-bit window
// tables tab[p][v] = a * (v << 4p) mod f_m so a product is an XOR fold over the
// operand's nibbles. No widening arithmetic anywhere.
class Gf2Mul {
public:
    Gf2Mul(uint64_t a, int m);

    uint64_t mul(uint64_t x) const {
        uint64_t r = 0;
        int p = 0;
        while (x) {
            r ^= tab_[p][x & 15];
            x >>= 4;
            ++p;
        }
        return r;
    }

private:
    uint64_t tab_[16][16] = {};
};

}  // namespace ptfprg
