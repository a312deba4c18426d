#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace ptfprg {

// Degree-2 polynomial x^T A x + b.x + c with A symmetric. The matrix is stored
// as its packed upper triangle (row-major), so A == A^T holds exactly by
// construction. Immutable by convention once built; all operations are pure.
struct Quadratic {
    int dim = 0;
    std::vector<double> upper;   // packed upper triangle, size dim*(dim+1)/2
    std::vector<double> linear;  // b, size dim
    double constant = 0.0;       // c

    static Quadratic zero(int n);

    size_t idx(int i, int j) const {  // requires i <= j
        return static_cast<size_t>(i) * dim - static_cast<size_t>(i) * (i + 1) / 2 + j;
    }
    double a(int i, int j) const { return i <= j ? upper[idx(i, j)] : upper[idx(j, i)]; }
    void set_a(int i, int j, double v) {
        if (i <= j) upper[idx(i, j)] = v; else upper[idx(j, i)] = v;
    }
    void add_a(int i, int j, double v) {
        if (i <= j) upper[idx(i, j)] += v; else upper[idx(j, i)] += v;
    }

    bool finite() const;
};

void to_json(nlohmann::json& j, const Quadratic& q);
void from_json(const nlohmann::json& j, Quadratic& q);

// x^T A x + b.x + c. Throws std::invalid_argument on dimension mismatch.
double evaluate(const Quadratic& q, std::span<const double> x);

// y = A x.
std::vector<double> mat_vec(const Quadratic& q, std::span<const double> x);

// E[q(X)] for X standard Gaussian: tr A + c.
double gaussian_mean(const Quadratic& q);

// L2 norm under the Gaussian measure: sqrt((tr A + c)^2 + 2|A|_F^2 + |b|^2),
// equal to the root sum of squared Hermite coefficients.
double l2_norm(const Quadratic& q);

// ---------------------------------------------------------------------------
// Hermite expansion (normalized probabilists' convention, h2 = (x^2-1)/sqrt 2).

// Multi-index with at most two active variables, total degree <= 2.
// Single-factor terms have var_b == -1.
struct HermiteTerm {
    int var_a = -1, deg_a = 0;
    int var_b = -1, deg_b = 0;
    auto operator<=>(const HermiteTerm&) const = default;
};

struct HermiteExpansion {
    int dim = 0;
    double constant = 0.0;       // coefficient of 1
    std::vector<double> h1;      // coefficient of h1(x_i)
    std::vector<double> h2;      // coefficient of h2(x_i)
    std::vector<double> h11;     // packed strict upper triangle (i < j): coeff of h1(x_i)h1(x_j)

    size_t pair_idx(int i, int j) const {  // requires i < j
        return static_cast<size_t>(i) * dim - static_cast<size_t>(i) * (i + 3) / 2 + j - 1;
    }

    double sum_squares() const;

    // Nonzero coefficients keyed by multi-index.
    std::map<HermiteTerm, double> coefficients() const;
};

HermiteExpansion hermite_expand(const Quadratic& q);
Quadratic hermite_reconstruct(const HermiteExpansion& e);

// Product of normalized one-variable Hermite values, prod_i h_{degrees[i]}(x[i]).
// Supports per-variable degree <= 4 and total degree <= 4.
double hermite_value(std::span<const int> degrees, std::span<const double> x);

// Single-variable normalized Hermite value, deg in [0,4].
double hermite1(int deg, double x);

// ---------------------------------------------------------------------------
// Spectral decomposition.

struct Spectrum {
    int dim = 0;
    std::vector<double> eigenvalues;  // |.| descending; ties keep diagonal order
    std::vector<double> basis;        // column-major; column c is the eigenvector
                                      // paired with eigenvalues[c]

    double basis_at(int row, int col) const { return basis[static_cast<size_t>(col) * dim + row]; }
};

// Cyclic Jacobi sweeps. Converges when the off-diagonal Frobenius mass drops
// below 1e-12 * |A|_F of the input; throws std::runtime_error after 100 sweeps
// without convergence.
Spectrum eigendecompose(const Quadratic& q);

// ---------------------------------------------------------------------------
// Random restriction and approximate-linearity decomposition.

// q restricted near X at scale delta: returns q' with
// q'(x) = q(sqrt(1-delta^2) X + delta x), i.e.
//   A' = delta^2 A,  b' = 2 delta sqrt(1-delta^2) A X + delta b,
//   c' = q(sqrt(1-delta^2) X).
// Requires 0 < delta < 1.
Quadratic restrict_poly(const Quadratic& q, std::span<const double> X, double delta);

struct ApproxLinearDecomposition {
    int dim = 0;
    std::vector<int> absorbed;     // S: eigen-order indices absorbed into p0, |S| <= r
    std::vector<double> v;         // linear part off S, original coordinates
    double residual_norm = 0.0;    // |q|_2 of the quadratic remainder off S
    double ratio = 0.0;            // residual_norm / |v|_2 (0 when both vanish)
    std::vector<std::vector<double>> p0_forms;  // the |S| retained linear forms

    // Pieces for reassembly, all in the eigenbasis of the input.
    Spectrum spectrum;
    std::vector<double> eigen_linear;  // rotated b
    double constant = 0.0;

    // p0 + x.v + residual, rotated back to the original coordinates.
    Quadratic reassemble() const;
};

// Rotates q to its eigenbasis and splits coordinates: a coordinate is "bad"
// when its linear coefficient is below kappa * delta * |eigenvalue|; the first
// at-most-r bad coordinates (in |eigenvalue| descending order) form S.
// Requires r >= 0, kappa > 0.
ApproxLinearDecomposition decompose_approx_linear(const Quadratic& q, int r, double delta,
                                                  double kappa);

}  // namespace ptfprg
