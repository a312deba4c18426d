#include "ptfprg/nisan_robp.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "ptfprg/gf2.hpp"

namespace ptfprg {

NisanParams NisanParams::parse(int m, int k, BitSource& bits) {
    if (m < 1 || m > 64) throw std::invalid_argument("NisanParams: m must lie in [1, 64]");
    if (k < 0) throw std::invalid_argument("NisanParams: k must be nonnegative");
    NisanParams p;
    p.m = m;
    p.k = k;
    p.x0 = bits.read(m);
    p.hashes.resize(k);
    for (int j = 0; j < k; ++j) {
        p.hashes[j].a = bits.read(m);
        p.hashes[j].b = bits.read(m);
    }
    return p;
}

namespace {

struct Expander {
    const NisanParams& params;
    std::vector<Gf2Mul> mul;  // one per level
    uint64_t* out;
    size_t count;
    size_t emitted = 0;

    Expander(const NisanParams& p, uint64_t* o, size_t c) : params(p), out(o), count(c) {
        mul.reserve(p.hashes.size());
        for (const HashFunc& h : p.hashes) mul.emplace_back(h.a, p.m);
    }

    void rec(int level, uint64_t x) {
        if (emitted == count) return;
        if (level == 0) {
            out[emitted++] = x;
            return;
        }
        rec(level - 1, x);
        if (emitted == count) return;
        rec(level - 1, mul[level - 1].mul(x) ^ params.hashes[level - 1].b);
    }
};

}  // namespace

std::vector<uint64_t> expand(const NisanParams& params) {
    std::vector<uint64_t> out(1ull << params.k);
    expand_prefix(params, out.size(), out.data());
    return out;
}

void expand_prefix(const NisanParams& params, size_t count, uint64_t* out) {
    if (count > (1ull << params.k))
        throw std::invalid_argument("expand_prefix: count exceeds 2^k blocks");
    Expander e(params, out, count);
    e.rec(params.k, params.x0);
}

NisanShape derive_nisan(uint64_t n_blocks, int D, int M, double eps, double c1) {
    if (n_blocks < 1 || D < 1 || M < 0 || !(eps > 0.0) || !(c1 > 0.0))
        throw std::invalid_argument("derive_nisan: all parameters must be positive");
    NisanShape s;
    double bits = static_cast<double>(M) + D + std::log2(static_cast<double>(n_blocks)) +
                  std::log2(1.0 / eps);
    s.m = static_cast<int>(std::ceil(c1 * bits - 1e-9));
    s.k = n_blocks == 1 ? 0 : std::bit_width(n_blocks - 1);
    s.seed_bits = static_cast<long long>(s.m) * (2 * s.k + 1);
    return s;
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const Robp& p) {
    std::vector<int> accept_states;
    for (int s = 0; s < p.n_states; ++s)
        if (p.accept[s]) accept_states.push_back(s);
    // transitions: [step][state][symbol] nested arrays
    nlohmann::json trans = nlohmann::json::array();
    size_t sym_count = 1ull << p.block_bits;
    for (int step = 0; step < p.n_steps; ++step) {
        nlohmann::json per_state = nlohmann::json::array();
        for (int s = 0; s < p.n_states; ++s) {
            nlohmann::json row = nlohmann::json::array();
            for (size_t sym = 0; sym < sym_count; ++sym)
                row.push_back(p.transition[(static_cast<size_t>(step) * p.n_states + s) * sym_count + sym]);
            per_state.push_back(std::move(row));
        }
        trans.push_back(std::move(per_state));
    }
    j = nlohmann::json{{"n", p.n_steps},     {"D", p.block_bits}, {"states", p.n_states},
                       {"start", p.start},   {"accept", accept_states},
                       {"transitions", trans}};
}

void from_json(const nlohmann::json& j, Robp& p) {
    p.n_steps = j.at("n").get<int>();
    p.block_bits = j.at("D").get<int>();
    p.n_states = j.at("states").get<int>();
    p.start = j.at("start").get<int>();
    if (p.n_steps < 1 || p.block_bits < 1 || p.block_bits > 16 || p.n_states < 1 ||
        p.start < 0 || p.start >= p.n_states)
        throw std::invalid_argument("Robp json: invalid shape");
    p.accept.assign(p.n_states, 0);
    for (int s : j.at("accept").get<std::vector<int>>()) {
        if (s < 0 || s >= p.n_states) throw std::invalid_argument("Robp json: bad accept state");
        p.accept[s] = 1;
    }
    size_t sym_count = 1ull << p.block_bits;
    p.transition.assign(static_cast<size_t>(p.n_steps) * p.n_states * sym_count, 0);
    const auto& trans = j.at("transitions");
    if (trans.size() != static_cast<size_t>(p.n_steps))
        throw std::invalid_argument("Robp json: transition step count mismatch");
    for (int step = 0; step < p.n_steps; ++step) {
        const auto& per_state = trans.at(step);
        if (per_state.size() != static_cast<size_t>(p.n_states))
            throw std::invalid_argument("Robp json: transition state count mismatch");
        for (int s = 0; s < p.n_states; ++s) {
            const auto& row = per_state.at(s);
            if (row.size() != sym_count)
                throw std::invalid_argument("Robp json: transition symbol count mismatch");
            for (size_t sym = 0; sym < sym_count; ++sym) {
                int t = row.at(sym).get<int>();
                if (t < 0 || t >= p.n_states)
                    throw std::invalid_argument("Robp json: bad transition target");
                p.transition[(static_cast<size_t>(step) * p.n_states + s) * sym_count + sym] =
                    static_cast<uint16_t>(t);
            }
        }
    }
}

int run(const Robp& prog, std::span<const uint32_t> blocks) {
    if (static_cast<int>(blocks.size()) != prog.n_steps)
        throw std::invalid_argument("Robp run: block count mismatch");
    const uint32_t sym_mask = (1u << prog.block_bits) - 1;
    int state = prog.start;
    for (int step = 0; step < prog.n_steps; ++step)
        state = prog.next(step, state, blocks[step] & sym_mask);
    return prog.accept[state] ? 1 : 0;
}

double exact_expectation_uniform(const Robp& prog) {
    const size_t sym_count = 1ull << prog.block_bits;
    const double budget = 1ull << 24;
    if (static_cast<double>(prog.n_states) * static_cast<double>(sym_count) * prog.n_steps > budget)
        throw std::invalid_argument("exact_expectation_uniform: state space exceeds budget");

    std::vector<double> dist(prog.n_states, 0.0), next(prog.n_states);
    dist[prog.start] = 1.0;
    const double p_sym = 1.0 / static_cast<double>(sym_count);
    for (int step = 0; step < prog.n_steps; ++step) {
        std::fill(next.begin(), next.end(), 0.0);
        for (int s = 0; s < prog.n_states; ++s) {
            if (dist[s] == 0.0) continue;
            double w = dist[s] * p_sym;
            for (size_t sym = 0; sym < sym_count; ++sym)
                next[prog.next(step, s, static_cast<uint32_t>(sym))] += w;
        }
        dist.swap(next);
    }
    double acc = 0.0;
    for (int s = 0; s < prog.n_states; ++s)
        if (prog.accept[s]) acc += dist[s];
    return acc;
}

}  // namespace ptfprg
