#include "ptfprg/gf2.hpp"

#include <stdexcept>

namespace ptfprg {

// Lexicographically-first irreducible polynomial per degree, m = 1..64.
const std::array<uint64_t, 65> kIrreducibleLowMask = {
    0x0ull,  // unused
    0x1ull,  0x3ull,  0x3ull,  0x3ull,  0x5ull,  0x3ull,  0x3ull,  0x1bull,
    0x3ull,  0x9ull,  0x5ull,  0x9ull,  0x1bull, 0x21ull, 0x3ull,  0x2bull,
    0x9ull,  0x9ull,  0x27ull, 0x9ull,  0x5ull,  0x3ull,  0x21ull, 0x1bull,
    0x9ull,  0x1bull, 0x27ull, 0x3ull,  0x5ull,  0x3ull,  0x9ull,  0x8dull,
    0x4bull, 0x1bull, 0x5ull,  0x35ull, 0x3full, 0x63ull, 0x11ull, 0x39ull,
    0x9ull,  0x27ull, 0x59ull, 0x21ull, 0x1bull, 0x3ull,  0x21ull, 0x2dull,
    0x71ull, 0x1dull, 0x4bull, 0x9ull,  0x47ull, 0x7dull, 0x47ull, 0x95ull,
    0x11ull, 0x63ull, 0x7bull, 0x3ull,  0x27ull, 0x69ull, 0x3ull,  0x1bull,
};

static void check_m(int m) {
    if (m < 1 || m > 64) throw std::invalid_argument("GF(2^m): m must lie in [1, 64]");
}

static uint64_t field_mask(int m) { return m == 64 ? ~0ull : ((1ull << m) - 1); }

uint64_t gf2_mul_ref(uint64_t a, uint64_t b, int m) {
    check_m(m);
    const uint64_t low = kIrreducibleLowMask[m];
    const uint64_t mask = field_mask(m);
    a &= mask;
    uint64_t r = 0;
    while (b) {
        if (b & 1) r ^= a;
        b >>= 1;
        uint64_t carry = (a >> (m - 1)) & 1;
        a = ((a << 1) & mask) ^ (carry ? low : 0);
    }
    return r;
}

namespace {

// Polynomial arithmetic over GF(2) with an explicit degree-m modulus; 128-bit
// scratch so degree-64 moduli are representable. Only used by the
// irreducibility checker.
using u128 = __uint128_t;

int pdeg(u128 p) {
    int d = -1;
    while (p) { ++d; p >>= 1; }
    return d;
}

u128 pmulmod(u128 a, u128 b, u128 f, int m) {
    u128 r = 0;
    while (b) {
        if (b & 1) r ^= a;
        b >>= 1;
        a <<= 1;
        if ((a >> m) & 1) a ^= f;
    }
    return r;
}

u128 pgcd(u128 a, u128 b) {
    while (b) {
        while (a && pdeg(a) >= pdeg(b)) a ^= b << (pdeg(a) - pdeg(b));
        u128 t = a;
        a = b;
        b = t;
    }
    return a;
}

u128 x_mod(u128 f, int m) {
    u128 r = 2;
    if (pdeg(r) >= m) r ^= f;
    return r;
}

u128 pow_x_2e(int e, u128 f, int m) {
    u128 r = x_mod(f, m);
    for (int i = 0; i < e; ++i) r = pmulmod(r, r, f, m);
    return r;
}

}  // namespace

// f irreducible over GF(2) iff x^(2^m) == x (mod f) and, for every prime p | m,
// gcd(x^(2^(m/p)) - x, f) = 1.
bool gf2_is_irreducible(uint64_t low_mask, int m) {
    check_m(m);
    if ((low_mask & 1) == 0) return false;  // divisible by x
    const u128 f = (static_cast<u128>(1) << m) | low_mask;
    const u128 xm = x_mod(f, m);
    if (pow_x_2e(m, f, m) != xm) return false;
    int n = m;
    for (int p = 2; p * p <= n; ++p) {
        if (n % p == 0) {
            while (n % p == 0) n /= p;
            if (pgcd(f, pow_x_2e(m / p, f, m) ^ xm) != 1) return false;
        }
    }
    if (n > 1 && pgcd(f, pow_x_2e(m / n, f, m) ^ xm) != 1) return false;
    return true;
}

uint64_t gf2_first_irreducible(int m) {
    check_m(m);
    for (uint64_t mask = 1;; mask += 2) {
        if (gf2_is_irreducible(mask, m)) return mask;
    }
}

Gf2Mul::Gf2Mul(uint64_t a, int m) {
    check_m(m);
    const uint64_t low = kIrreducibleLowMask[m];
    const uint64_t mask = field_mask(m);
    uint64_t base[64];
    uint64_t cur = a & mask;
    for (int j = 0; j < m; ++j) {
        base[j] = cur;
        uint64_t carry = (cur >> (m - 1)) & 1;
        cur = ((cur << 1) & mask) ^ (carry ? low : 0);
    }
    for (int j = m; j < 64; ++j) base[j] = 0;
    for (int p = 0; p < 16; ++p) {
        for (int v = 1; v < 16; ++v) {
            int bit = __builtin_ctz(static_cast<unsigned>(v));
            tab_[p][v] = tab_[p][v & (v - 1)] ^ base[4 * p + bit];
        }
    }
}

}  // namespace ptfprg
