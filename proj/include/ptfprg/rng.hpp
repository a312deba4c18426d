#pragma once

#include <cstdint>

#include "ptfprg/bits.hpp"

namespace ptfprg {

// SplitMix64 output mixer (Steele/Lea/Flood). Used both as the word function of
// the counter RNG below and as a cheap key-derivation hash.
constexpr uint64_t mix64(uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
}

// Counter-based reference RNG: word i of stream s under key k is
//   mix64(derive(k, s) + i * GAMMA)
// which is the SplitMix64 sequence evaluated at an arbitrary position. Every
// word is a pure function of (key, stream, i), so Monte-Carlo trials indexed by
// stream are reproducible regardless of evaluation order or thread schedule.
class CounterRng {
public:
    explicit CounterRng(uint64_t key, uint64_t stream = 0)
        : base_(mix64(key ^ mix64(stream + 0x632be59bd9b4e019ull))) {}

    uint64_t next() { return mix64(base_ + (counter_++) * 0x9e3779b97f4a7c15ull); }

    // Uniform on the open interval (0,1), 53-bit resolution, never 0 or 1.
    double uniform01() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

    // Uniform integer in [0, n). Modular reduction; bias n/2^64 is far below
    // every statistical tolerance in this project.
    uint64_t below(uint64_t n) { return next() % n; }

    // Standard normal via exact Box-Muller; the reference distribution for all
    // harness oracles. Pairs are cached, the stream stays deterministic.
    double gaussian();

private:
    uint64_t base_;
    uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// BitSource producing an unbounded deterministic bit stream from a CounterRng,
// most significant bit of each word first. Used to make master seeds for the
// composed generator out of a (key, stream) pair.
class RngBitSource final : public BitSource {
public:
    explicit RngBitSource(uint64_t key, uint64_t stream = 0) : rng_(key, stream) {}

    uint64_t read(int nbits) override;
    uint64_t bits_read() const override { return total_; }

private:
    CounterRng rng_;
    uint64_t buf_ = 0;
    int avail_ = 0;
    uint64_t total_ = 0;
};

}  // namespace ptfprg
