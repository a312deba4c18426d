#include "ptfprg/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <thread>

#include "ptfprg/rng.hpp"
#include "ptfprg/sha1.hpp"
#include "ptfprg/stats.hpp"
#include "ptfprg/version.hpp"

namespace ptfprg {

int resolve_threads(int requested) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    int t = requested > 0 ? requested : static_cast<int>(hw);
    if (const char* env = std::getenv("PTFPRG_THREADS")) {
        long cap = std::atol(env);
        if (cap > 0 && cap < t) t = static_cast<int>(cap);
    }
    return t < 1 ? 1 : t;
}

namespace {

constexpr long long kChunk = 4096;

// Salts separating the independent random streams of an experiment.
constexpr uint64_t kSaltGaussian = 0x9af88cd04c195d15ull;
constexpr uint64_t kSaltGenerator = 0x3c79ac492ba7b653ull;
constexpr uint64_t kSaltHybridX = 0xd1b54a32d192ed03ull;

// Runs fn(chunk_index, begin_trial, end_trial) over fixed-size chunks on a
// small thread pool. fn must write only into per-chunk slots; reductions happen
// afterwards in chunk order, so results are schedule-independent.
template <typename Fn>
void run_chunked(long long trials, int threads, Fn&& fn) {
    const long long n_chunks = (trials + kChunk - 1) / kChunk;
    std::atomic<long long> next{0};
    auto worker = [&] {
        for (;;) {
            long long c = next.fetch_add(1);
            if (c >= n_chunks) return;
            long long begin = c * kChunk;
            long long end = std::min(trials, begin + kChunk);
            fn(c, begin, end);
        }
    };
    int t = resolve_threads(threads);
    std::vector<std::thread> pool;
    for (int i = 1; i < t; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

}  // namespace

// ---------------------------------------------------------------------------
// Standard suite.

std::vector<PtfCase> standard_suite(int n) {
    if (n < 4) throw std::invalid_argument("standard_suite: n must be at least 4");
    std::vector<PtfCase> suite;

    {
        PtfCase c{"linear_pure", Quadratic::zero(n), PtfCase::Oracle::closed_form,
                  "normal projection: 2 Phi(c/|b|) - 1 = 0"};
        c.poly.linear[0] = 1.0;
        suite.push_back(std::move(c));
    }
    {
        PtfCase c{"linear_shift1", Quadratic::zero(n), PtfCase::Oracle::closed_form,
                  "normal projection: 2 Phi(-1) - 1"};
        c.poly.linear[0] = 1.0;
        c.poly.constant = -1.0;
        suite.push_back(std::move(c));
    }
    {
        // x1 x2 + 1/4
        PtfCase c{"rank1_cross", Quadratic::zero(n), PtfCase::Oracle::closed_form,
                  "grid convolution of +-1/2 eigendirections"};
        c.poly.set_a(0, 1, 0.5);
        c.poly.constant = 0.25;
        suite.push_back(std::move(c));
    }
    {
        // sum x_i^2 - n
        PtfCase c{"ellipsoid_n", Quadratic::zero(n), PtfCase::Oracle::closed_form,
                  "chi-squared tail: 2 P(chi2_n > n) - 1"};
        for (int i = 0; i < n; ++i) c.poly.set_a(i, i, 1.0);
        c.poly.constant = -static_cast<double>(n);
        suite.push_back(std::move(c));
    }
    {
        // x1^2 - x2^2 + 1/2
        PtfCase c{"saddle_two_eig", Quadratic::zero(n), PtfCase::Oracle::closed_form,
                  "grid convolution of opposite-sign eigendirections"};
        c.poly.set_a(0, 0, 1.0);
        c.poly.set_a(1, 1, -1.0);
        c.poly.constant = 0.5;
        suite.push_back(std::move(c));
    }
    {
        // quadratic part scaled to a tenth of the linear part
        PtfCase c{"near_linear", Quadratic::zero(n), PtfCase::Oracle::closed_form,
                  "grid convolution, one eigendirection + Gaussian remainder"};
        c.poly.set_a(0, 0, 0.1);
        c.poly.linear[1] = 1.0;
        c.poly.constant = 0.0;
        suite.push_back(std::move(c));
    }
    for (int inst = 0; inst < 3; ++inst) {
        PtfCase c{"random_dense_" + std::to_string(inst + 1), Quadratic::zero(n),
                  PtfCase::Oracle::monte_carlo, "reference-Gaussian estimate at report trials"};
        CounterRng rng(0x5eedca5eull, static_cast<uint64_t>(inst));
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) c.poly.set_a(i, j, rng.gaussian());
        for (int i = 0; i < n; ++i) c.poly.linear[i] = rng.gaussian();
        c.poly.constant = rng.gaussian() * static_cast<double>(n) / 2.0;
        suite.push_back(std::move(c));
    }
    {
        PtfCase c{"constant_positive", Quadratic::zero(n), PtfCase::Oracle::closed_form,
                  "constant sign, sgn(0) = +1 convention"};
        c.poly.constant = 1.0;
        suite.push_back(std::move(c));
    }
    return suite;
}

// ---------------------------------------------------------------------------
// Closed-form oracle.

namespace {

struct DiagonalForm {
    std::vector<double> quad_a;  // nonzero eigenvalues
    std::vector<double> quad_b;  // linear coefficient along each
    double lin_var = 0.0;        // total variance of the leftover linear part
    double constant = 0.0;
};

DiagonalForm diagonalize_for_oracle(const Quadratic& q) {
    DiagonalForm d;
    d.constant = q.constant;
    bool any_quad = false;
    for (double v : q.upper)
        if (v != 0.0) any_quad = true;
    if (!any_quad) {
        for (double v : q.linear) d.lin_var += v * v;
        return d;
    }
    Spectrum s = eigendecompose(q);
    double amax = 0.0;
    for (double a : s.eigenvalues) amax = std::max(amax, std::fabs(a));
    const int n = q.dim;
    for (int k = 0; k < n; ++k) {
        double bk = 0.0;
        for (int i = 0; i < n; ++i) bk += s.basis_at(i, k) * q.linear[i];
        if (std::fabs(s.eigenvalues[k]) > 1e-12 * amax) {
            d.quad_a.push_back(s.eigenvalues[k]);
            d.quad_b.push_back(bk);
        } else {
            d.lin_var += bk * bk;
        }
    }
    return d;
}

constexpr int kGridSize = 1 << 14;
constexpr int kMaxGridComponents = 8;

struct GridDist {
    double step = 0.0;
    std::vector<double> mass;  // value at index i is (i - G/2) * step
    int lo_idx = 0, hi_idx = 0;

    void trim() {
        lo_idx = 0;
        while (lo_idx < kGridSize - 1 && mass[lo_idx] == 0.0) ++lo_idx;
        hi_idx = kGridSize - 1;
        while (hi_idx > 0 && mass[hi_idx] == 0.0) --hi_idx;
    }
};

// Mass and first moment of v = a y^2 + b y (a > 0, y standard normal) over
// v-intervals, through u = y + b/(2a) ~ N(h, 1) with h = b/(2a):
// v in [lo, hi) corresponds to |u| in [sqrt((lo-c0)/a), sqrt((hi-c0)/a)).
struct PosQuadComponent {
    double a, h, c0;

    PosQuadComponent(double a_, double b_) : a(a_), h(b_ / (2.0 * a_)), c0(-b_ * b_ / (4.0 * a_)) {}

    // mass and E[u^2; .] over u in [alpha, beta], u ~ N(h, 1)
    void u_interval(double alpha, double beta, double& mass, double& eu2) const {
        double ap = alpha - h, bp = beta - h;
        double pa = norm_cdf(ap), pb = norm_cdf(bp);
        double fa = norm_pdf(ap), fb = norm_pdf(bp);
        double p = pb - pa;
        mass = p;
        eu2 = (h * h + 1.0) * p + 2.0 * h * (fa - fb) + ap * fa - bp * fb;
    }

    // mass and E[v; .] for v in [vlo, vhi)
    void v_interval(double vlo, double vhi, double& mass, double& ev) const {
        double qlo = std::max(0.0, (vlo - c0) / a);
        double qhi = std::max(0.0, (vhi - c0) / a);
        if (qhi <= qlo) { mass = 0.0; ev = 0.0; return; }
        double slo = std::sqrt(qlo), shi = std::sqrt(qhi);
        double m1, e1, m2, e2;
        u_interval(slo, shi, m1, e1);
        u_interval(-shi, -slo, m2, e2);
        mass = m1 + m2;
        ev = a * (e1 + e2) + c0 * mass;
    }
};

// Mean-preserving placement of (mass, mean) onto the regular grid.
void place_on_grid(GridDist& g, double mass, double mean) {
    if (mass <= 0.0) return;
    double f = mean / g.step + kGridSize / 2;
    if (f < 0.0) f = 0.0;
    if (f > kGridSize - 1) f = kGridSize - 1;
    int i0 = static_cast<int>(f);
    if (i0 >= kGridSize - 1) i0 = kGridSize - 2;
    double w = f - i0;
    g.mass[i0] += (1.0 - w) * mass;
    g.mass[i0 + 1] += w * mass;
}

// Distribution of a y^2 + b y on the grid. Handles a < 0 by binning the
// negated component and mirroring.
GridDist bin_component(double a, double b, double step) {
    GridDist g;
    g.step = step;
    g.mass.assign(kGridSize, 0.0);
    const bool neg = a < 0.0;
    PosQuadComponent comp(neg ? -a : a, neg ? -b : b);

    // Bins cover [c0, inf); start at the bin containing c0 and stop once the
    // accumulated mass is complete. Tail mass lands in the edge bin.
    int start = static_cast<int>(std::floor(comp.c0 / step + kGridSize / 2 + 0.5));
    start = std::clamp(start, 0, kGridSize - 1);
    double total = 0.0;
    for (int i = start; i < kGridSize; ++i) {
        double center = (i - kGridSize / 2) * step;
        double vlo = center - step / 2, vhi = center + step / 2;
        double mass, ev;
        if (i == kGridSize - 1) {  // absorb the tail
            comp.v_interval(vlo, std::numeric_limits<double>::infinity(), mass, ev);
            ev = mass * center;  // clamp the absorbed tail at the edge
        } else {
            comp.v_interval(vlo, vhi, mass, ev);
        }
        if (mass > 0.0) {
            place_on_grid(g, mass, mass > 1e-300 ? ev / mass : center);
            total += mass;
        }
        if (total > 1.0 - 1e-15 && i > start + 2) break;
    }

    if (neg) {
        GridDist m;
        m.step = step;
        m.mass.assign(kGridSize, 0.0);
        for (int i = 0; i < kGridSize; ++i) {
            if (g.mass[i] == 0.0) continue;
            int j = kGridSize - i;  // index of the negated grid value
            j = std::clamp(j, 0, kGridSize - 1);
            m.mass[j] += g.mass[i];
        }
        g = std::move(m);
    }
    g.trim();
    return g;
}

GridDist convolve(const GridDist& x, const GridDist& y) {
    GridDist out;
    out.step = x.step;
    out.mass.assign(kGridSize, 0.0);
    for (int i = x.lo_idx; i <= x.hi_idx; ++i) {
        double mi = x.mass[i];
        if (mi == 0.0) continue;
        for (int j = y.lo_idx; j <= y.hi_idx; ++j) {
            double mj = y.mass[j];
            if (mj == 0.0) continue;
            int k = std::clamp(i + j - kGridSize / 2, 0, kGridSize - 1);
            out.mass[k] += mi * mj;
        }
    }
    out.trim();
    return out;
}

// Final distribution: grid for the quadratic eigendirections, an independent
// N(0, lin_var) remainder, plus the constant. CDF at t.
struct OracleDist {
    GridDist grid;
    double lin_sigma = 0.0;
    double shift = 0.0;
    bool has_grid = false;

    double cdf(double t) const {
        if (!has_grid) {
            if (lin_sigma == 0.0) return shift <= t ? 1.0 : 0.0;
            return norm_cdf((t - shift) / lin_sigma);
        }
        if (lin_sigma > 0.0) {
            double acc = 0.0;
            for (int i = grid.lo_idx; i <= grid.hi_idx; ++i) {
                if (grid.mass[i] == 0.0) continue;
                double g = (i - kGridSize / 2) * grid.step + shift;
                acc += grid.mass[i] * norm_cdf((t - g) / lin_sigma);
            }
            return acc;
        }
        // Pure grid: cumulative mass through cell i is the CDF at the cell's
        // upper boundary g_i + step/2; interpolate between boundary knots.
        double u = (t - shift) / grid.step + kGridSize / 2 - 0.5;
        if (u <= 0.0) return 0.0;
        if (u >= kGridSize - 1) return 1.0;
        int i0 = static_cast<int>(u);
        double cum = 0.0;
        for (int i = 0; i <= i0; ++i) cum += grid.mass[i];
        return cum + (u - i0) * grid.mass[i0 + 1];
    }
};

OracleDist build_oracle_dist(const DiagonalForm& d) {
    OracleDist out;
    out.lin_sigma = std::sqrt(d.lin_var);
    out.shift = d.constant;
    if (d.quad_a.empty()) return out;

    if (static_cast<int>(d.quad_a.size()) > kMaxGridComponents)
        throw not_closed_form("too many quadratic eigendirections for the grid oracle");

    double sigma2 = 0.0;
    for (size_t i = 0; i < d.quad_a.size(); ++i)
        sigma2 += 2.0 * d.quad_a[i] * d.quad_a[i] + d.quad_b[i] * d.quad_b[i];
    double step = 2.0 * 50.0 * std::sqrt(sigma2) / kGridSize;

    GridDist acc = bin_component(d.quad_a[0], d.quad_b[0], step);
    for (size_t i = 1; i < d.quad_a.size(); ++i)
        acc = convolve(acc, bin_component(d.quad_a[i], d.quad_b[i], step));
    out.grid = std::move(acc);
    out.has_grid = true;
    return out;
}

bool is_spherical(const DiagonalForm& d) {
    if (d.quad_a.empty() || d.lin_var != 0.0) return false;
    double a0 = d.quad_a[0];
    for (double a : d.quad_a)
        if (std::fabs(a - a0) > 1e-9 * std::fabs(a0)) return false;
    for (double b : d.quad_b)
        if (b != 0.0) return false;
    return true;
}

}  // namespace

double closed_form_expectation(const Quadratic& q) {
    DiagonalForm d = diagonalize_for_oracle(q);

    if (d.quad_a.empty()) {
        double sigma = std::sqrt(d.lin_var);
        if (sigma == 0.0) return d.constant >= 0.0 ? 1.0 : -1.0;
        return 2.0 * norm_cdf(d.constant / sigma) - 1.0;
    }
    if (is_spherical(d)) {
        double a = d.quad_a[0];
        double kdf = static_cast<double>(d.quad_a.size());
        double t = -d.constant / a;
        double F = chi2_cdf(kdf, t);  // P(S <= t), 0 when t <= 0
        return a > 0.0 ? 1.0 - 2.0 * F : 2.0 * F - 1.0;
    }
    OracleDist dist = build_oracle_dist(d);
    return 1.0 - 2.0 * dist.cdf(0.0);
}

double closed_form_small_ball(const Quadratic& q, double eps0) {
    double t = eps0 * l2_norm(q);
    DiagonalForm d = diagonalize_for_oracle(q);

    if (d.quad_a.empty()) {
        double sigma = std::sqrt(d.lin_var);
        if (sigma == 0.0) return std::fabs(d.constant) <= t ? 1.0 : 0.0;
        return norm_cdf((t - d.constant) / sigma) - norm_cdf((-t - d.constant) / sigma);
    }
    if (is_spherical(d)) {
        double a = d.quad_a[0];
        double kdf = static_cast<double>(d.quad_a.size());
        double hi = (t - d.constant) / a, lo = (-t - d.constant) / a;
        if (a < 0.0) std::swap(hi, lo);
        return chi2_cdf(kdf, hi) - chi2_cdf(kdf, lo);
    }
    OracleDist dist = build_oracle_dist(d);
    return dist.cdf(t) - dist.cdf(-t);
}

// ---------------------------------------------------------------------------
// Monte-Carlo engines.

namespace {

constexpr double kBoundaryEps = 1e-4;      // small-ball radius, fraction of |q|_2
constexpr double kBoundaryFlag = 5e-3;     // flag threshold on P(|q| <= eps |q|_2)

struct SuiteCounts {
    std::vector<long long> positive;  // sgn(q) = +1 counts per case
    std::vector<long long> near;      // |q| <= eps |q|_2 counts per case
};

template <typename SampleFn>
SuiteCounts count_signs(const std::vector<Quadratic>& polys, long long trials, int threads,
                        SampleFn&& make_sample) {
    const size_t cases = polys.size();
    std::vector<double> near_radius(cases);
    for (size_t i = 0; i < cases; ++i) near_radius[i] = kBoundaryEps * l2_norm(polys[i]);

    const long long n_chunks = (trials + kChunk - 1) / kChunk;
    std::vector<long long> pos(n_chunks * cases, 0), near(n_chunks * cases, 0);
    run_chunked(trials, threads, [&](long long c, long long begin, long long end) {
        std::vector<double> y;
        for (long long t = begin; t < end; ++t) {
            make_sample(static_cast<uint64_t>(t), y);
            for (size_t i = 0; i < cases; ++i) {
                double v = evaluate(polys[i], y);
                if (v >= 0.0) ++pos[c * cases + i];
                if (std::fabs(v) <= near_radius[i]) ++near[c * cases + i];
            }
        }
    });

    SuiteCounts out;
    out.positive.assign(cases, 0);
    out.near.assign(cases, 0);
    for (long long c = 0; c < n_chunks; ++c)
        for (size_t i = 0; i < cases; ++i) {
            out.positive[i] += pos[c * cases + i];
            out.near[i] += near[c * cases + i];
        }
    return out;
}

McResult counts_to_result(long long positive, long long trials) {
    double p = static_cast<double>(positive) / static_cast<double>(trials);
    McResult r;
    r.trials = trials;
    r.estimate = 2.0 * p - 1.0;
    r.stderr_ = sign_mean_stderr(p, trials);
    return r;
}

void check_trials(long long trials) {
    if (trials < 1000) throw std::invalid_argument("mc estimation requires at least 1000 trials");
}

std::vector<double>& gaussian_vector(CounterRng& rng, size_t n, std::vector<double>& out) {
    out.resize(n);
    for (size_t i = 0; i < n; ++i) out[i] = rng.gaussian();
    return out;
}

}  // namespace

McResult mc_expectation(const Quadratic& poly, long long trials, uint64_t seed, int threads) {
    check_trials(trials);
    std::vector<Quadratic> polys{poly};
    auto counts = count_signs(polys, trials, threads, [&](uint64_t t, std::vector<double>& y) {
        CounterRng rng(seed ^ kSaltGaussian, t);
        gaussian_vector(rng, poly.dim, y);
    });
    return counts_to_result(counts.positive[0], trials);
}

std::vector<McResult> mc_suite_gaussian(const std::vector<Quadratic>& polys, long long trials,
                                        uint64_t seed, int threads) {
    check_trials(trials);
    const size_t n = polys.empty() ? 0 : polys[0].dim;
    auto counts = count_signs(polys, trials, threads, [&](uint64_t t, std::vector<double>& y) {
        CounterRng rng(seed ^ kSaltGaussian, t);
        gaussian_vector(rng, n, y);
    });
    std::vector<McResult> out;
    for (size_t i = 0; i < polys.size(); ++i) out.push_back(counts_to_result(counts.positive[i], trials));
    return out;
}

std::vector<McResult> mc_suite_generator(const std::vector<Quadratic>& polys,
                                         const GeneratorConfig& config, long long trials,
                                         uint64_t seed, int threads) {
    check_trials(trials);
    auto counts = count_signs(polys, trials, threads, [&](uint64_t t, std::vector<double>& y) {
        RngBitSource src(seed ^ kSaltGenerator, t);
        y = gen_sample(config, src);
    });
    std::vector<McResult> out;
    for (size_t i = 0; i < polys.size(); ++i) out.push_back(counts_to_result(counts.positive[i], trials));
    return out;
}

// ---------------------------------------------------------------------------
// Reports.

namespace {

struct OracleSide {
    std::vector<double> value;
    std::vector<double> stderr_;
    std::vector<bool> boundary;
};

// Oracle expectations for a suite: closed form where declared, otherwise a
// shared-sample reference-Gaussian run at the same trial count.
OracleSide oracle_side(const std::vector<PtfCase>& suite, long long trials, uint64_t seed,
                       int threads) {
    OracleSide out;
    out.value.resize(suite.size());
    out.stderr_.assign(suite.size(), 0.0);
    out.boundary.assign(suite.size(), false);

    std::vector<Quadratic> mc_polys;
    std::vector<size_t> mc_slots;
    for (size_t i = 0; i < suite.size(); ++i) {
        if (suite[i].oracle == PtfCase::Oracle::closed_form) {
            out.value[i] = closed_form_expectation(suite[i].poly);
            out.boundary[i] = closed_form_small_ball(suite[i].poly, kBoundaryEps) > kBoundaryFlag;
        } else {
            mc_polys.push_back(suite[i].poly);
            mc_slots.push_back(i);
        }
    }
    if (!mc_polys.empty()) {
        const size_t n = mc_polys[0].dim;
        auto counts = count_signs(mc_polys, trials, threads, [&](uint64_t t, std::vector<double>& y) {
            CounterRng rng(seed ^ kSaltGaussian, t);
            gaussian_vector(rng, n, y);
        });
        for (size_t j = 0; j < mc_slots.size(); ++j) {
            McResult r = counts_to_result(counts.positive[j], trials);
            out.value[mc_slots[j]] = r.estimate;
            out.stderr_[mc_slots[j]] = r.stderr_;
            out.boundary[mc_slots[j]] =
                static_cast<double>(counts.near[j]) / static_cast<double>(trials) > kBoundaryFlag;
        }
    }
    return out;
}

std::vector<DiscrepancyRow> assemble_rows(const std::vector<PtfCase>& suite,
                                          const OracleSide& oracle,
                                          const std::vector<McResult>& estimates, double sys_tol) {
    std::vector<DiscrepancyRow> rows;
    for (size_t i = 0; i < suite.size(); ++i) {
        DiscrepancyRow r;
        r.name = suite[i].name;
        r.oracle = oracle.value[i];
        r.oracle_stderr = oracle.stderr_[i];
        r.estimate = estimates[i].estimate;
        r.estimate_stderr = estimates[i].stderr_;
        r.gap = std::fabs(r.estimate - r.oracle);
        double combined = std::sqrt(r.oracle_stderr * r.oracle_stderr +
                                    r.estimate_stderr * r.estimate_stderr);
        r.tol = sys_tol + 3.0 * combined;
        r.boundary_sensitive = oracle.boundary[i];
        r.pass = r.gap <= r.tol;
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace

std::vector<DiscrepancyRow> discrepancy_report(const GeneratorConfig& config,
                                               const std::vector<PtfCase>& suite, long long trials,
                                               uint64_t seed, int threads, double sys_tol) {
    if (suite.empty()) throw std::invalid_argument("discrepancy_report: suite must be nonempty");
    OracleSide oracle = oracle_side(suite, trials, seed, threads);
    std::vector<Quadratic> polys;
    for (const PtfCase& c : suite) polys.push_back(c.poly);
    std::vector<McResult> est = mc_suite_generator(polys, config, trials, seed, threads);
    return assemble_rows(suite, oracle, est, sys_tol);
}

std::vector<DiscrepancyRow> one_step_report(const GeneratorConfig& config,
                                            const std::vector<PtfCase>& suite, long long trials,
                                            uint64_t seed, int threads, double sys_tol) {
    if (suite.empty()) throw std::invalid_argument("one_step_report: suite must be nonempty");
    check_trials(trials);
    OracleSide oracle = oracle_side(suite, trials, seed, threads);

    std::vector<Quadratic> polys;
    for (const PtfCase& c : suite) polys.push_back(c.poly);
    auto counts = count_signs(polys, trials, threads, [&](uint64_t t, std::vector<double>& y) {
        CounterRng xrng(seed ^ kSaltHybridX, t);
        std::vector<double> x;
        gaussian_vector(xrng, config.n, x);
        RngBitSource src(seed ^ kSaltGenerator, t);
        y = hybrid_sample(config, src, x, 1);
    });
    std::vector<McResult> est;
    for (size_t i = 0; i < polys.size(); ++i) est.push_back(counts_to_result(counts.positive[i], trials));
    return assemble_rows(suite, oracle, est, sys_tol);
}

// ---------------------------------------------------------------------------

DecompositionResult test_decomposition(const Quadratic& p, double delta, int r, double kappa,
                                       long long trials, double bound_mult, uint64_t seed,
                                       int threads) {
    bool any_quad = false;
    for (double v : p.upper)
        if (v != 0.0) any_quad = true;
    if (!any_quad)
        throw std::invalid_argument("test_decomposition: polynomial has zero quadratic part");
    if (trials < 1) throw std::invalid_argument("test_decomposition: trials must be positive");

    // The restriction shares the eigenbasis of p, so rotate once and apply
    // restrictions to the diagonal form; the decomposition then sees a
    // quadratic that is already diagonal.
    Spectrum s = eigendecompose(p);
    const int n = p.dim;
    std::vector<double> b_rot(n, 0.0);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i) b_rot[k] += s.basis_at(i, k) * p.linear[i];

    const double root = std::sqrt(1.0 - delta * delta);
    const double threshold = bound_mult * delta;

    const long long n_chunks = (trials + kChunk - 1) / kChunk;
    std::vector<long long> fails(n_chunks, 0);
    run_chunked(trials, threads, [&](long long c, long long begin, long long end) {
        for (long long t = begin; t < end; ++t) {
            CounterRng rng(seed ^ 0x7ab33c5ed1f0a9b2ull, static_cast<uint64_t>(t));
            Quadratic q = Quadratic::zero(n);
            for (int i = 0; i < n; ++i) {
                double xi = rng.gaussian();
                q.set_a(i, i, delta * delta * s.eigenvalues[i]);
                q.linear[i] = 2.0 * delta * root * s.eigenvalues[i] * xi + delta * b_rot[i];
            }
            ApproxLinearDecomposition d = decompose_approx_linear(q, r, delta, kappa);
            if (!(d.ratio <= threshold)) ++fails[c];
        }
    });

    DecompositionResult out;
    out.r = r;
    out.trials = trials;
    for (long long c = 0; c < n_chunks; ++c) out.failures += fails[c];
    out.failure_fraction = static_cast<double>(out.failures) / static_cast<double>(trials);
    out.stderr_ = std::sqrt(std::max(out.failure_fraction * (1.0 - out.failure_fraction) /
                                     static_cast<double>(trials), 0.0));
    return out;
}

// ---------------------------------------------------------------------------

std::vector<IndicatorTriple> standard_indicator_suite(int n) {
    if (n < 4) throw std::invalid_argument("standard_indicator_suite: n must be at least 4");
    std::vector<IndicatorTriple> out;

    auto deg = [n](std::initializer_list<std::pair<int, int>> entries) {
        std::vector<int> d(n, 0);
        for (auto [var, dg] : entries) d[var] = dg;
        return d;
    };

    {
        // trivial indicator, pure moment
        IndicatorTriple t;
        t.name = "whole_line_h2";
        t.s = Quadratic::zero(n);  // s == 0 always inside I
        t.lo = -1.0, t.hi = 1.0;
        t.q_terms = {{1.0, deg({{0, 2}})}};
        out.push_back(std::move(t));
    }
    {
        // halfline of x1 against independent coordinate
        IndicatorTriple t;
        t.name = "halfline_x1_times_x2";
        t.s = Quadratic::zero(n);
        t.s.linear[0] = 1.0;
        t.lo = 0.0, t.hi = 1e30;
        t.q_terms = {{1.0, deg({{1, 1}})}};
        out.push_back(std::move(t));
    }
    {
        // r = 2 quadratic band times an outside h2
        IndicatorTriple t;
        t.name = "band_x1sq_plus_x2_h2x3";
        t.s = Quadratic::zero(n);
        t.s.set_a(0, 0, 1.0);
        t.s.linear[1] = 1.0;
        t.lo = -1.0, t.hi = 1.0;
        t.q_terms = {{1.0, deg({{2, 2}})}};
        out.push_back(std::move(t));
    }
    {
        // diagonal band times a degree-2 cross term
        IndicatorTriple t;
        t.name = "band_sum12_h1h1";
        t.s = Quadratic::zero(n);
        t.s.linear[0] = 1.0;
        t.s.linear[1] = 1.0;
        t.lo = 0.5, t.hi = 2.0;
        t.q_terms = {{1.0, deg({{0, 1}, {1, 1}})}};
        out.push_back(std::move(t));
    }
    {
        // one-sided parabola region times a degree-4 Hermite
        IndicatorTriple t;
        t.name = "parabola_x1sq_h4x2";
        t.s = Quadratic::zero(n);
        t.s.set_a(0, 0, 1.0);
        t.lo = 0.0, t.hi = 1.0;
        t.q_terms = {{1.0, deg({{1, 4}})}};
        out.push_back(std::move(t));
    }
    return out;
}

namespace {

struct SparseTerm {
    double coeff;
    std::vector<std::pair<int, int>> factors;  // (variable, degree)
};

double eval_terms(const std::vector<SparseTerm>& terms, const std::vector<double>& x) {
    double acc = 0.0;
    for (const SparseTerm& t : terms) {
        double prod = t.coeff;
        for (auto [var, dg] : t.factors) prod *= hermite1(dg, x[var]);
        acc += prod;
    }
    return acc;
}

std::vector<SparseTerm> sparsify(const std::vector<std::pair<double, std::vector<int>>>& q_terms) {
    std::vector<SparseTerm> out;
    for (const auto& [coeff, dense] : q_terms) {
        SparseTerm t;
        t.coeff = coeff;
        for (size_t i = 0; i < dense.size(); ++i)
            if (dense[i] != 0) t.factors.emplace_back(static_cast<int>(i), dense[i]);
        out.push_back(std::move(t));
    }
    return out;
}

struct MeanVar {
    double mean = 0.0, stderr_ = 0.0;
};

// Shared-sample mean/stderr of a vector-valued trial functional.
template <typename Fn>
std::vector<MeanVar> mc_moments(size_t width, long long trials, int threads, Fn&& eval_trial) {
    const long long n_chunks = (trials + kChunk - 1) / kChunk;
    std::vector<double> sums(n_chunks * width, 0.0), sqs(n_chunks * width, 0.0);
    run_chunked(trials, threads, [&](long long c, long long begin, long long end) {
        std::vector<double> vals(width);
        for (long long t = begin; t < end; ++t) {
            eval_trial(static_cast<uint64_t>(t), vals);
            for (size_t i = 0; i < width; ++i) {
                sums[c * width + i] += vals[i];
                sqs[c * width + i] += vals[i] * vals[i];
            }
        }
    });
    std::vector<MeanVar> out(width);
    for (size_t i = 0; i < width; ++i) {
        double s = 0.0, s2 = 0.0;
        for (long long c = 0; c < n_chunks; ++c) {
            s += sums[c * width + i];
            s2 += sqs[c * width + i];
        }
        double mean = s / static_cast<double>(trials);
        double var = std::max(s2 / static_cast<double>(trials) - mean * mean, 0.0);
        out[i].mean = mean;
        out[i].stderr_ = std::sqrt(var / static_cast<double>(trials));
    }
    return out;
}

}  // namespace

std::vector<DiscrepancyRow> indicator_fooling_report(const GeneratorConfig& config,
                                                     const std::vector<IndicatorTriple>& triples,
                                                     long long trials, uint64_t seed, int threads,
                                                     double sys_tol) {
    check_trials(trials);
    const size_t width = triples.size();
    std::vector<std::vector<SparseTerm>> sparse;
    for (const auto& t : triples) sparse.push_back(sparsify(t.q_terms));

    auto eval_gq = [&](const std::vector<double>& x, std::vector<double>& vals) {
        for (size_t i = 0; i < width; ++i) {
            double sv = evaluate(triples[i].s, x);
            double g = (sv >= triples[i].lo && sv <= triples[i].hi) ? 1.0 : 0.0;
            vals[i] = g == 0.0 ? 0.0 : eval_terms(sparse[i], x);
        }
    };

    std::vector<MeanVar> xs = mc_moments(width, trials, threads,
                                         [&](uint64_t t, std::vector<double>& vals) {
                                             CounterRng rng(seed ^ kSaltGaussian, t);
                                             std::vector<double> x;
                                             gaussian_vector(rng, config.n, x);
                                             eval_gq(x, vals);
                                         });
    std::vector<MeanVar> ys = mc_moments(width, trials, threads,
                                         [&](uint64_t t, std::vector<double>& vals) {
                                             RngBitSource src(seed ^ kSaltGenerator, t);
                                             std::vector<double> y = gen_sample(config, src);
                                             eval_gq(y, vals);
                                         });

    std::vector<DiscrepancyRow> rows;
    for (size_t i = 0; i < width; ++i) {
        DiscrepancyRow r;
        r.name = triples[i].name;
        r.oracle = xs[i].mean;
        r.oracle_stderr = xs[i].stderr_;
        r.estimate = ys[i].mean;
        r.estimate_stderr = ys[i].stderr_;
        r.gap = std::fabs(r.estimate - r.oracle);
        r.tol = sys_tol + 3.0 * std::sqrt(r.oracle_stderr * r.oracle_stderr +
                                          r.estimate_stderr * r.estimate_stderr);
        r.pass = r.gap <= r.tol;
        rows.push_back(std::move(r));
    }
    return rows;
}

// ---------------------------------------------------------------------------

namespace {

void enumerate_indices(int n, int max_degree, std::vector<std::vector<std::pair<int, int>>>& out) {
    std::vector<std::pair<int, int>> cur;
    // lexicographic by (variable, degree) tuples, total degree 1..max_degree
    auto rec = [&](auto&& self, int next_var, int remaining) -> void {
        if (!cur.empty()) out.push_back(cur);
        if (remaining == 0) return;
        for (int v = next_var; v < n; ++v) {
            for (int d = 1; d <= remaining; ++d) {
                cur.emplace_back(v, d);
                self(self, v + 1, remaining - d);
                cur.pop_back();
            }
        }
    };
    rec(rec, 0, max_degree);
}

}  // namespace

std::vector<MomentRow> moment_fooling_report(const GeneratorConfig& config, int max_degree,
                                             long long trials, uint64_t seed, int threads) {
    if (max_degree < 1 || max_degree > 4)
        throw std::invalid_argument("moment_fooling_report: max_degree must lie in [1,4]");
    check_trials(trials);

    std::vector<std::vector<std::pair<int, int>>> indices;
    enumerate_indices(static_cast<int>(config.n), max_degree, indices);
    const size_t width = indices.size();
    const size_t n = config.n;

    std::vector<MeanVar> stats = mc_moments(
        width, trials, threads, [&](uint64_t t, std::vector<double>& vals) {
            RngBitSource src(seed ^ kSaltGenerator, t);
            std::vector<double> y = gen_sample(config, src);
            // per-variable Hermite table h_1..h_4
            std::vector<double> h(4 * n);
            for (size_t c = 0; c < n; ++c)
                for (int d = 1; d <= 4; ++d) h[(d - 1) * n + c] = hermite1(d, y[c]);
            for (size_t i = 0; i < width; ++i) {
                double prod = 1.0;
                for (auto [var, dg] : indices[i]) prod *= h[(dg - 1) * n + var];
                vals[i] = prod;
            }
        });

    std::vector<MomentRow> rows(width);
    for (size_t i = 0; i < width; ++i) {
        rows[i].index = indices[i];
        rows[i].estimate = stats[i].mean;
        rows[i].stderr_ = stats[i].stderr_;
    }
    return rows;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<long long> tail_counts(const Quadratic& p, std::span<const double> thresholds,
                                   bool below, long long trials, uint64_t seed, int threads) {
    const long long n_chunks = (trials + kChunk - 1) / kChunk;
    const size_t width = thresholds.size();
    std::vector<long long> counts(n_chunks * width, 0);
    run_chunked(trials, threads, [&](long long c, long long begin, long long end) {
        std::vector<double> x;
        for (long long t = begin; t < end; ++t) {
            CounterRng rng(seed ^ kSaltGaussian, t);
            gaussian_vector(rng, p.dim, x);
            double v = std::fabs(evaluate(p, x));
            for (size_t i = 0; i < width; ++i) {
                bool hit = below ? (v <= thresholds[i]) : (v > thresholds[i]);
                if (hit) ++counts[c * width + i];
            }
        }
    });
    std::vector<long long> out(width, 0);
    for (long long c = 0; c < n_chunks; ++c)
        for (size_t i = 0; i < width; ++i) out[i] += counts[c * width + i];
    return out;
}

}  // namespace

std::vector<BoundRow> test_anticoncentration(const Quadratic& p, std::span<const double> eps_list,
                                             long long trials, uint64_t seed, int threads) {
    double norm = l2_norm(p);
    if (!(norm > 0.0)) throw std::invalid_argument("test_anticoncentration: |p|_2 must be positive");
    check_trials(trials);
    std::vector<double> thresholds;
    for (double e : eps_list) thresholds.push_back(e * norm);
    auto counts = tail_counts(p, thresholds, /*below=*/true, trials, seed, threads);
    std::vector<BoundRow> rows;
    for (size_t i = 0; i < thresholds.size(); ++i) {
        BoundRow r;
        r.name = "anticoncentration";
        r.parameter = eps_list[i];
        r.empirical = static_cast<double>(counts[i]) / static_cast<double>(trials);
        r.bound = 3.0 * std::sqrt(eps_list[i]);
        r.pass = r.empirical <= r.bound;
        rows.push_back(r);
    }
    return rows;
}

std::vector<BoundRow> test_concentration(const Quadratic& p, std::span<const double> n_list,
                                         long long trials, uint64_t seed, int threads) {
    double norm = l2_norm(p);
    if (!(norm > 0.0)) throw std::invalid_argument("test_concentration: |p|_2 must be positive");
    check_trials(trials);
    std::vector<double> thresholds;
    for (double N : n_list) thresholds.push_back(N * norm);
    auto counts = tail_counts(p, thresholds, /*below=*/false, trials, seed, threads);
    std::vector<BoundRow> rows;
    for (size_t i = 0; i < thresholds.size(); ++i) {
        BoundRow r;
        r.name = "concentration";
        r.parameter = n_list[i];
        r.empirical = static_cast<double>(counts[i]) / static_cast<double>(trials);
        r.bound = 4.0 * std::exp2(-n_list[i] / 2.0);
        r.pass = r.empirical <= r.bound;
        rows.push_back(r);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Report files.

std::string config_sha1(const GeneratorConfig& config) {
    return sha1_hex(nlohmann::json(config).dump());
}

std::string suite_sha1(const std::vector<PtfCase>& suite) {
    nlohmann::json j = nlohmann::json::array();
    for (const PtfCase& c : suite) {
        nlohmann::json item;
        item["name"] = c.name;
        item["oracle"] = c.oracle == PtfCase::Oracle::closed_form ? "closed_form" : "monte_carlo";
        item["derivation"] = c.derivation;
        item["poly"] = c.poly;
        j.push_back(std::move(item));
    }
    return sha1_hex(j.dump());
}

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

nlohmann::json row_to_json(const DiscrepancyRow& row) {
    return nlohmann::json{{"name", row.name},
                          {"oracle", row.oracle},
                          {"oracle_stderr", row.oracle_stderr},
                          {"estimate", row.estimate},
                          {"estimate_stderr", row.estimate_stderr},
                          {"gap", row.gap},
                          {"tol", row.tol},
                          {"boundary_sensitive", row.boundary_sensitive},
                          {"verdict", row.pass ? "pass" : "fail"}};
}

void write_report_csv(const std::string& path, const nlohmann::json& meta,
                      const std::vector<DiscrepancyRow>& rows) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open report file: " + path);
    f << "# ptfprg " << kVersion << "\n";
    for (auto it = meta.begin(); it != meta.end(); ++it)
        if (it.value().is_string() || it.value().is_number())
            f << "# " << it.key() << " " << (it.value().is_string() ? it.value().get<std::string>()
                                                                    : it.value().dump())
              << "\n";
    f << "name,oracle,oracle_stderr,estimate,estimate_stderr,gap,tol,boundary_sensitive,verdict\n";
    for (const DiscrepancyRow& r : rows) {
        f << r.name << ',' << fmt17(r.oracle) << ',' << fmt17(r.oracle_stderr) << ','
          << fmt17(r.estimate) << ',' << fmt17(r.estimate_stderr) << ',' << fmt17(r.gap) << ','
          << fmt17(r.tol) << ',' << (r.boundary_sensitive ? 1 : 0) << ','
          << (r.pass ? "pass" : "fail") << "\n";
    }
}

void write_report_json(const std::string& path, const nlohmann::json& meta,
                       const std::vector<DiscrepancyRow>& rows) {
    nlohmann::json j;
    j["tool"] = "ptfprg";
    j["version"] = kVersion;
    j["meta"] = meta;
    j["rows"] = nlohmann::json::array();
    for (const DiscrepancyRow& r : rows) j["rows"].push_back(row_to_json(r));
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open report file: " + path);
    f << j.dump(2) << "\n";
}

}  // namespace ptfprg
