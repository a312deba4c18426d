#include "ptfprg/generator.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "ptfprg/nisan_robp.hpp"

namespace ptfprg {

namespace {

constexpr int kMemoryCapBits = 64;    // ROBP memory practicality cap
constexpr int kUniformCapBits = 62;   // grid index must fit a 64-bit word
constexpr double kDelta2FloorLog2 = 64.0;  // delta2 floored at 2^-64
constexpr double kDelta1Ceiling = 0.25;    // keeps N >= 64 in degenerate regimes
constexpr uint64_t kEllCap = 1ull << 24;

// Shared tail of config construction once the precision fields are set:
// the payload search, the weight vector, and the runnable flag.
void finish_config(GeneratorConfig& c) {
    c.bits_total = 2 * c.bits_per_uniform;

    // Frozen payload rule: the widest per-block payload D whose Nisan block
    // width fits a 64-bit word. If none fits, the config keeps the untruncated
    // per-variable layout (D = bits_total over n blocks) for seed accounting
    // and is not runnable.
    const uint64_t payload_needed = c.n * static_cast<uint64_t>(c.bits_total);
    c.runnable = false;
    for (int D = std::min(c.bits_total, 64); D >= 1; --D) {
        uint64_t nb = (payload_needed + D - 1) / D;
        NisanShape shape = derive_nisan(nb, D, c.M, c.delta2);
        if (shape.m <= 64) {
            c.payload_bits = D;
            c.n_blocks = nb;
            c.m = shape.m;
            c.k = shape.k;
            c.runnable = true;
            break;
        }
    }
    if (!c.runnable) {
        c.payload_bits = c.bits_total;
        c.n_blocks = c.n;
        NisanShape shape = derive_nisan(c.n, c.bits_total, c.M, c.delta2);
        c.m = shape.m;
        c.k = shape.k;
    }

    c.weights.resize(c.ell);
    const double decay = 1.0 - c.delta * c.delta * c.delta;
    double sum2 = 0.0, comp = 0.0;
    for (uint64_t i = 0; i < c.ell; ++i) {
        double w = std::pow(decay, static_cast<double>(i) / 2.0);  // 0-based family index
        c.weights[i] = w;
        double term = w * w - comp;
        double t = sum2 + term;
        comp = (t - sum2) - term;
        sum2 = t;
    }
    c.normalizer = std::sqrt(sum2);
}

}  // namespace

ApproxGaussianSpec GeneratorConfig::approx_spec() const {
    return ApproxGaussianSpec::from_N(grid_N);
}

double GeneratorConfig::asymptotic_seed_formula() const {
    if (empirical || epsilon <= 0.0) return 0.0;
    double le = std::log2(1.0 / epsilon);
    double ln_ = std::log2(static_cast<double>(n));
    double llne = std::log2(std::log2(static_cast<double>(n) / epsilon));
    return std::pow(le, 6.0) * ln_ * llne;
}

GeneratorConfig derive_params(uint64_t n, double epsilon, double C) {
    if (n < 1) throw std::invalid_argument("derive_params: n must be positive");
    if (!(epsilon > 0.0 && epsilon < 0.5))
        throw std::invalid_argument("derive_params: epsilon must lie in (0, 1/2)");
    if (!(C >= 1.0)) throw std::invalid_argument("derive_params: C must be at least 1");

    GeneratorConfig c;
    c.n = n;
    c.epsilon = epsilon;
    c.C = C;
    c.empirical = false;

    const double log_inv_eps = std::log(1.0 / epsilon);
    c.delta = 1.0 / (C * log_inv_eps);
    if (c.delta >= 1.0)
        throw std::invalid_argument(
            "derive_params: delta = 1/(C ln(1/epsilon)) must be below 1; increase C");
    double ell_real = std::ceil(std::pow(c.delta, -3.0) * log_inv_eps - 1e-9);
    if (ell_real > static_cast<double>(kEllCap))
        throw std::invalid_argument("derive_params: ell exceeds practical cap 2^24");
    c.ell = static_cast<uint64_t>(ell_real);

    const double ln_nd = std::log(static_cast<double>(n) / c.delta);
    c.M_theory = ln_nd / (c.delta * c.delta);
    c.log2_inv_delta1_theory = ln_nd / (c.delta * std::numbers::ln2);
    c.log2_inv_delta2_theory = c.log2_inv_delta1_theory;

    c.M = static_cast<int>(std::ceil(c.M_theory - 1e-9));
    c.capped_M = c.M > kMemoryCapBits;
    if (c.capped_M) c.M = kMemoryCapBits;
    if (c.M < 0) c.M = 0;

    // delta1: word-size floor (grid must fit 64 bits) and a 1/4 ceiling so the
    // grid stays meaningful when delta is large.
    double delta1_theory = std::exp2(-c.log2_inv_delta1_theory);
    ApproxGaussianSpec spec;
    if (3.0 * c.log2_inv_delta1_theory > kUniformCapBits) {
        spec = ApproxGaussianSpec::from_N((1ull << kUniformCapBits) - 1);
        c.capped_delta1 = true;
    } else if (delta1_theory > kDelta1Ceiling) {
        spec = ApproxGaussianSpec::from_delta(kDelta1Ceiling);
        c.capped_delta1 = true;
    } else {
        spec = ApproxGaussianSpec::from_delta(delta1_theory);
        c.capped_delta1 = false;
    }
    c.delta1 = spec.delta;
    c.grid_N = spec.N;
    c.bits_per_uniform = spec.bits_per_uniform;

    c.capped_delta2 = c.log2_inv_delta2_theory > kDelta2FloorLog2;
    double log2_inv_delta2 = c.capped_delta2 ? kDelta2FloorLog2 : c.log2_inv_delta2_theory;
    c.delta2 = std::exp2(-log2_inv_delta2);

    finish_config(c);
    return c;
}

GeneratorConfig empirical_params(uint64_t n, double delta, uint64_t ell, double delta1,
                                 double delta2, int M) {
    if (n < 1) throw std::invalid_argument("empirical_params: n must be positive");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("empirical_params: delta must lie in (0,1)");
    if (ell < 1 || ell > kEllCap)
        throw std::invalid_argument("empirical_params: ell out of range");
    if (!(delta2 > 0.0 && delta2 <= 1.0))
        throw std::invalid_argument("empirical_params: delta2 must lie in (0,1]");
    if (M < 0 || M > kMemoryCapBits)
        throw std::invalid_argument("empirical_params: M must lie in [0,64]");

    GeneratorConfig c;
    c.n = n;
    c.empirical = true;
    c.delta = delta;
    c.ell = ell;

    ApproxGaussianSpec spec = ApproxGaussianSpec::from_delta(delta1);  // validates delta1
    c.delta1 = delta1;
    c.grid_N = spec.N;
    c.bits_per_uniform = spec.bits_per_uniform;
    c.delta2 = delta2;
    c.M = M;
    c.M_theory = M;
    c.log2_inv_delta1_theory = std::log2(1.0 / delta1);
    c.log2_inv_delta2_theory = std::log2(1.0 / delta2);

    finish_config(c);
    return c;
}

namespace {

// Serves the top payload_bits of each expanded block, in block order,
// most-significant bit first.
class BlockPayloadSource final : public BitSource {
public:
    BlockPayloadSource(const uint64_t* blocks, size_t count, int m, int payload)
        : blocks_(blocks), count_(count), m_(m), payload_(payload) {}

    uint64_t read(int nbits) override {
        uint64_t out = 0;
        int need = nbits;
        while (need > 0) {
            if (avail_ == 0) {
                if (next_ == count_)
                    throw seed_underflow_error("family payload stream exhausted");
                uint64_t payload = blocks_[next_++] >> (m_ - payload_);
                buf_ = payload_ == 64 ? payload : (payload << (64 - payload_));
                avail_ = payload_;
            }
            int take = need < avail_ ? need : avail_;
            uint64_t chunk = buf_ >> (64 - take);
            out = (take == 64) ? chunk : ((out << take) | chunk);
            buf_ = (take == 64) ? 0 : (buf_ << take);
            avail_ -= take;
            need -= take;
        }
        total_ += nbits;
        return out;
    }

    uint64_t bits_read() const override { return total_; }

private:
    const uint64_t* blocks_;
    size_t count_, next_ = 0;
    int m_, payload_, avail_ = 0;
    uint64_t buf_ = 0, total_ = 0;
};

void require_runnable(const GeneratorConfig& config) {
    if (!config.runnable)
        throw std::invalid_argument(
            "generator config is not runnable at machine scale (Nisan block width " +
            std::to_string(config.m) + " > 64); use empirical mode");
}

// One family's n approximate Gaussians, accumulated into acc with weight w.
void accumulate_family(const GeneratorConfig& config, const ApproxGaussianSpec& spec,
                       BitSource& seed, uint64_t family, double w,
                       std::vector<uint64_t>& blocks, std::vector<double>& acc,
                       std::vector<double>& comp) {
    NisanParams params;
    try {
        params = NisanParams::parse(config.m, config.k, seed);
    } catch (const seed_underflow_error& e) {
        throw seed_underflow_error("family " + std::to_string(family) + ": " + e.what());
    }
    expand_prefix(params, config.n_blocks, blocks.data());
    BlockPayloadSource payload(blocks.data(), blocks.size(), config.m, config.payload_bits);
    for (uint64_t c = 0; c < config.n; ++c) {
        auto [j, k] = consume_bits(spec, payload);
        double y = w * sample(spec, j, k);
        double term = y - comp[c];
        double t = acc[c] + term;
        comp[c] = (t - acc[c]) - term;
        acc[c] = t;
    }
}

}  // namespace

std::vector<double> gen_sample(const GeneratorConfig& config, BitSource& seed) {
    require_runnable(config);
    ApproxGaussianSpec spec = config.approx_spec();
    std::vector<uint64_t> blocks(config.n_blocks);
    std::vector<double> acc(config.n, 0.0), comp(config.n, 0.0);
    for (uint64_t i = 0; i < config.ell; ++i)
        accumulate_family(config, spec, seed, i, config.weights[i], blocks, acc, comp);
    for (uint64_t c = 0; c < config.n; ++c) acc[c] /= config.normalizer;
    return acc;
}

std::vector<double> hybrid_sample(const GeneratorConfig& config, BitSource& seed,
                                  std::span<const double> X, uint64_t i) {
    if (i > config.ell) throw std::invalid_argument("hybrid_sample: index exceeds ell");
    if (X.size() != config.n) throw std::invalid_argument("hybrid_sample: X dimension mismatch");
    if (i > 0) require_runnable(config);

    const double decay = 1.0 - config.delta * config.delta * config.delta;
    const double x_scale = std::pow(decay, static_cast<double>(i) / 2.0);
    const double y_scale = std::pow(config.delta, 1.5);

    ApproxGaussianSpec spec = config.grid_N ? config.approx_spec() : ApproxGaussianSpec{};
    std::vector<uint64_t> blocks(config.n_blocks);
    std::vector<double> acc(config.n, 0.0), comp(config.n, 0.0);
    for (uint64_t j = 0; j < i; ++j)
        accumulate_family(config, spec, seed, j, config.weights[j], blocks, acc, comp);

    std::vector<double> out(config.n);
    for (uint64_t c = 0; c < config.n; ++c) out[c] = x_scale * X[c] + y_scale * acc[c];
    return out;
}

void to_json(nlohmann::json& j, const GeneratorConfig& c) {
    j = nlohmann::json{{"n", c.n},
                       {"epsilon", c.epsilon},
                       {"C", c.C},
                       {"mode", c.empirical ? "empirical" : "theory"},
                       {"delta", c.delta},
                       {"ell", c.ell},
                       {"M_theory", c.M_theory},
                       {"log2_inv_delta1_theory", c.log2_inv_delta1_theory},
                       {"log2_inv_delta2_theory", c.log2_inv_delta2_theory},
                       {"M", c.M},
                       {"delta1", c.delta1},
                       {"delta2", c.delta2},
                       {"grid_N", c.grid_N},
                       {"bits_per_uniform", c.bits_per_uniform},
                       {"bits_total", c.bits_total},
                       {"capped_M", c.capped_M},
                       {"capped_delta1", c.capped_delta1},
                       {"capped_delta2", c.capped_delta2},
                       {"payload_bits", c.payload_bits},
                       {"n_blocks", c.n_blocks},
                       {"m", c.m},
                       {"k", c.k},
                       {"runnable", c.runnable},
                       {"normalizer", c.normalizer},
                       {"weights", c.weights},
                       {"seed_length_bits", c.seed_length()}};
}

void from_json(const nlohmann::json& j, GeneratorConfig& c) {
    c.n = j.at("n").get<uint64_t>();
    c.epsilon = j.at("epsilon").get<double>();
    c.C = j.at("C").get<double>();
    c.empirical = j.at("mode").get<std::string>() == "empirical";
    c.delta = j.at("delta").get<double>();
    c.ell = j.at("ell").get<uint64_t>();
    c.M_theory = j.at("M_theory").get<double>();
    c.log2_inv_delta1_theory = j.at("log2_inv_delta1_theory").get<double>();
    c.log2_inv_delta2_theory = j.at("log2_inv_delta2_theory").get<double>();
    c.M = j.at("M").get<int>();
    c.delta1 = j.at("delta1").get<double>();
    c.delta2 = j.at("delta2").get<double>();
    c.grid_N = j.at("grid_N").get<uint64_t>();
    c.bits_per_uniform = j.at("bits_per_uniform").get<int>();
    c.bits_total = j.at("bits_total").get<int>();
    c.capped_M = j.at("capped_M").get<bool>();
    c.capped_delta1 = j.at("capped_delta1").get<bool>();
    c.capped_delta2 = j.at("capped_delta2").get<bool>();
    c.payload_bits = j.at("payload_bits").get<int>();
    c.n_blocks = j.at("n_blocks").get<uint64_t>();
    c.m = j.at("m").get<int>();
    c.k = j.at("k").get<int>();
    c.runnable = j.at("runnable").get<bool>();
    c.normalizer = j.at("normalizer").get<double>();
    c.weights = j.at("weights").get<std::vector<double>>();
}

}  // namespace ptfprg
