#include "ptfprg/quadratic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ptfprg {

Quadratic Quadratic::zero(int n) {
    if (n <= 0) throw std::invalid_argument("Quadratic: dim must be positive");
    Quadratic q;
    q.dim = n;
    q.upper.assign(static_cast<size_t>(n) * (n + 1) / 2, 0.0);
    q.linear.assign(n, 0.0);
    q.constant = 0.0;
    return q;
}

bool Quadratic::finite() const {
    for (double v : upper)
        if (!std::isfinite(v)) return false;
    for (double v : linear)
        if (!std::isfinite(v)) return false;
    return std::isfinite(constant);
}

void to_json(nlohmann::json& j, const Quadratic& q) {
    j = nlohmann::json{{"dim", q.dim},
                       {"A_upper_triangle", q.upper},
                       {"b", q.linear},
                       {"c", q.constant}};
}

void from_json(const nlohmann::json& j, Quadratic& q) {
    q.dim = j.at("dim").get<int>();
    if (q.dim <= 0) throw std::invalid_argument("Quadratic json: dim must be positive");
    q.upper = j.at("A_upper_triangle").get<std::vector<double>>();
    q.linear = j.at("b").get<std::vector<double>>();
    q.constant = j.at("c").get<double>();
    if (q.upper.size() != static_cast<size_t>(q.dim) * (q.dim + 1) / 2 ||
        q.linear.size() != static_cast<size_t>(q.dim)) {
        throw std::invalid_argument("Quadratic json: inconsistent field sizes");
    }
}

double evaluate(const Quadratic& q, std::span<const double> x) {
    if (static_cast<int>(x.size()) != q.dim)
        throw std::invalid_argument("evaluate: dimension mismatch");
    const int n = q.dim;
    double acc = q.constant;
    const double* u = q.upper.data();
    for (int i = 0; i < n; ++i) {
        double xi = x[i];
        double row = u[q.idx(i, i)] * xi;  // diagonal
        for (int j = i + 1; j < n; ++j) row += 2.0 * u[q.idx(i, j)] * x[j];
        acc += xi * row + q.linear[i] * xi;
    }
    return acc;
}

std::vector<double> mat_vec(const Quadratic& q, std::span<const double> x) {
    if (static_cast<int>(x.size()) != q.dim)
        throw std::invalid_argument("mat_vec: dimension mismatch");
    const int n = q.dim;
    std::vector<double> y(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = q.upper[q.idx(i, i)] * x[i];
        for (int j = i + 1; j < n; ++j) {
            double a = q.upper[q.idx(i, j)];
            acc += a * x[j];
            y[j] += a * x[i];
        }
        y[i] += acc;
    }
    return y;
}

double gaussian_mean(const Quadratic& q) {
    double tr = 0.0;
    for (int i = 0; i < q.dim; ++i) tr += q.upper[q.idx(i, i)];
    return tr + q.constant;
}

double l2_norm(const Quadratic& q) {
    double fro2 = 0.0;
    for (int i = 0; i < q.dim; ++i) {
        fro2 += q.upper[q.idx(i, i)] * q.upper[q.idx(i, i)];
        for (int j = i + 1; j < q.dim; ++j) fro2 += 2.0 * q.upper[q.idx(i, j)] * q.upper[q.idx(i, j)];
    }
    double mean = gaussian_mean(q);
    double b2 = 0.0;
    for (double v : q.linear) b2 += v * v;
    return std::sqrt(mean * mean + 2.0 * fro2 + b2);
}

// ---------------------------------------------------------------------------

double HermiteExpansion::sum_squares() const {
    double s = constant * constant;
    for (double v : h1) s += v * v;
    for (double v : h2) s += v * v;
    for (double v : h11) s += v * v;
    return s;
}

std::map<HermiteTerm, double> HermiteExpansion::coefficients() const {
    std::map<HermiteTerm, double> out;
    if (constant != 0.0) out[HermiteTerm{}] = constant;
    for (int i = 0; i < dim; ++i) {
        if (h1[i] != 0.0) out[HermiteTerm{i, 1, -1, 0}] = h1[i];
        if (h2[i] != 0.0) out[HermiteTerm{i, 2, -1, 0}] = h2[i];
        for (int j = i + 1; j < dim; ++j) {
            double v = h11[pair_idx(i, j)];
            if (v != 0.0) out[HermiteTerm{i, 1, j, 1}] = v;
        }
    }
    return out;
}

// x_i^2 = sqrt(2) h2(x_i) + 1 and x_i x_j = h1 h1 give the expansion directly:
//   coeff(1)          = tr A + c
//   coeff(h1(x_i))    = b_i
//   coeff(h2(x_i))    = sqrt(2) A_ii
//   coeff(h1 h1, i<j) = 2 A_ij
HermiteExpansion hermite_expand(const Quadratic& q) {
    HermiteExpansion e;
    e.dim = q.dim;
    e.constant = gaussian_mean(q);
    e.h1 = q.linear;
    e.h2.resize(q.dim);
    e.h11.resize(static_cast<size_t>(q.dim) * (q.dim - 1) / 2);
    for (int i = 0; i < q.dim; ++i) {
        e.h2[i] = std::sqrt(2.0) * q.upper[q.idx(i, i)];
        for (int j = i + 1; j < q.dim; ++j) e.h11[e.pair_idx(i, j)] = 2.0 * q.upper[q.idx(i, j)];
    }
    return e;
}

Quadratic hermite_reconstruct(const HermiteExpansion& e) {
    Quadratic q = Quadratic::zero(e.dim);
    double tr = 0.0;
    for (int i = 0; i < e.dim; ++i) {
        double aii = e.h2[i] / std::sqrt(2.0);
        q.upper[q.idx(i, i)] = aii;
        tr += aii;
        for (int j = i + 1; j < e.dim; ++j) q.upper[q.idx(i, j)] = e.h11[e.pair_idx(i, j)] / 2.0;
    }
    q.linear = e.h1;
    q.constant = e.constant - tr;
    return q;
}

double hermite1(int deg, double x) {
    switch (deg) {
        case 0: return 1.0;
        case 1: return x;
        case 2: return (x * x - 1.0) / std::sqrt(2.0);
        case 3: return (x * x * x - 3.0 * x) / std::sqrt(6.0);
        case 4: return (x * x * x * x - 6.0 * x * x + 3.0) / std::sqrt(24.0);
        default: throw std::invalid_argument("hermite1: degree must be in [0,4]");
    }
}

double hermite_value(std::span<const int> degrees, std::span<const double> x) {
    if (degrees.size() != x.size())
        throw std::invalid_argument("hermite_value: multi-index and point dimensions differ");
    int total = 0;
    for (int d : degrees) {
        if (d < 0 || d > 4) throw std::invalid_argument("hermite_value: degree out of range");
        total += d;
    }
    if (total > 4) throw std::invalid_argument("hermite_value: total degree exceeds 4");
    double prod = 1.0;
    for (size_t i = 0; i < x.size(); ++i) {
        if (degrees[i] != 0) prod *= hermite1(degrees[i], x[i]);
    }
    return prod;
}

// ---------------------------------------------------------------------------

Spectrum eigendecompose(const Quadratic& q) {
    const int n = q.dim;
    std::vector<double> a(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a[static_cast<size_t>(i) * n + j] = q.a(i, j);
    std::vector<double> v(static_cast<size_t>(n) * n, 0.0);  // row-major rotation product
    for (int i = 0; i < n; ++i) v[static_cast<size_t>(i) * n + i] = 1.0;

    double fro2 = 0.0;
    for (double x : a) fro2 += x * x;
    const double off_tol = 1e-12 * std::sqrt(fro2);

    auto off_mass = [&]() {
        double s = 0.0;
        for (int p = 0; p < n; ++p)
            for (int r = p + 1; r < n; ++r) s += a[static_cast<size_t>(p) * n + r] * a[static_cast<size_t>(p) * n + r];
        return std::sqrt(2.0 * s);
    };

    const int max_sweeps = 100;
    int sweep = 0;
    while (off_mass() > off_tol) {
        if (++sweep > max_sweeps)
            throw std::runtime_error("eigendecompose: Jacobi did not converge in 100 sweeps");
        for (int p = 0; p < n; ++p) {
            for (int r = p + 1; r < n; ++r) {
                double apr = a[static_cast<size_t>(p) * n + r];
                if (apr == 0.0) continue;
                double app = a[static_cast<size_t>(p) * n + p];
                double arr = a[static_cast<size_t>(r) * n + r];
                double theta = (arr - app) / (2.0 * apr);
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                double tau = s / (1.0 + c);

                a[static_cast<size_t>(p) * n + p] = app - t * apr;
                a[static_cast<size_t>(r) * n + r] = arr + t * apr;
                a[static_cast<size_t>(p) * n + r] = 0.0;
                a[static_cast<size_t>(r) * n + p] = 0.0;
                for (int i = 0; i < n; ++i) {
                    if (i != p && i != r) {
                        double aip = a[static_cast<size_t>(i) * n + p];
                        double air = a[static_cast<size_t>(i) * n + r];
                        a[static_cast<size_t>(i) * n + p] = aip - s * (air + tau * aip);
                        a[static_cast<size_t>(i) * n + r] = air + s * (aip - tau * air);
                        a[static_cast<size_t>(p) * n + i] = a[static_cast<size_t>(i) * n + p];
                        a[static_cast<size_t>(r) * n + i] = a[static_cast<size_t>(i) * n + r];
                    }
                    double vip = v[static_cast<size_t>(i) * n + p];
                    double vir = v[static_cast<size_t>(i) * n + r];
                    v[static_cast<size_t>(i) * n + p] = vip - s * (vir + tau * vip);
                    v[static_cast<size_t>(i) * n + r] = vir + s * (vip - tau * vir);
                }
            }
        }
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
        return std::fabs(a[static_cast<size_t>(x) * n + x]) > std::fabs(a[static_cast<size_t>(y) * n + y]);
    });

    Spectrum out;
    out.dim = n;
    out.eigenvalues.resize(n);
    out.basis.resize(static_cast<size_t>(n) * n);
    for (int c = 0; c < n; ++c) {
        int src = order[c];
        out.eigenvalues[c] = a[static_cast<size_t>(src) * n + src];
        for (int r = 0; r < n; ++r)
            out.basis[static_cast<size_t>(c) * n + r] = v[static_cast<size_t>(r) * n + src];
    }
    return out;
}

Quadratic restrict_poly(const Quadratic& q, std::span<const double> X, double delta) {
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("restrict_poly: delta must lie in (0,1)");
    if (static_cast<int>(X.size()) != q.dim)
        throw std::invalid_argument("restrict_poly: dimension mismatch");
    const double root = std::sqrt(1.0 - delta * delta);

    Quadratic out = Quadratic::zero(q.dim);
    for (size_t i = 0; i < q.upper.size(); ++i) out.upper[i] = delta * delta * q.upper[i];
    std::vector<double> ax = mat_vec(q, X);
    for (int i = 0; i < q.dim; ++i)
        out.linear[i] = 2.0 * delta * root * ax[i] + delta * q.linear[i];

    std::vector<double> shifted(q.dim);
    for (int i = 0; i < q.dim; ++i) shifted[i] = root * X[i];
    out.constant = evaluate(q, shifted);
    return out;
}

Quadratic ApproxLinearDecomposition::reassemble() const {
    const int n = dim;
    // Diagonal quadratic in the eigenbasis, then rotate back: A = V diag V^T.
    Quadratic out = Quadratic::zero(n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k)
                s += spectrum.basis_at(i, k) * spectrum.eigenvalues[k] * spectrum.basis_at(j, k);
            out.upper[out.idx(i, j)] = s;
        }
    }
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += spectrum.basis_at(i, k) * eigen_linear[k];
        out.linear[i] = s;
    }
    out.constant = constant;
    return out;
}

ApproxLinearDecomposition decompose_approx_linear(const Quadratic& q, int r, double delta,
                                                  double kappa) {
    if (r < 0) throw std::invalid_argument("decompose_approx_linear: r must be nonnegative");
    if (!(kappa > 0.0)) throw std::invalid_argument("decompose_approx_linear: kappa must be positive");

    ApproxLinearDecomposition out;
    out.dim = q.dim;
    out.spectrum = eigendecompose(q);
    out.constant = q.constant;

    const int n = q.dim;
    out.eigen_linear.assign(n, 0.0);
    for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += out.spectrum.basis_at(i, k) * q.linear[i];
        out.eigen_linear[k] = s;
    }

    // Coordinates are already sorted by |eigenvalue| descending; the first
    // at-most-r "bad" ones (linear coefficient below kappa*delta*|a_i|) are
    // absorbed into p0.
    std::vector<bool> in_s(n, false);
    for (int i = 0; i < n && static_cast<int>(out.absorbed.size()) < r; ++i) {
        if (std::fabs(out.eigen_linear[i]) < kappa * delta * std::fabs(out.spectrum.eigenvalues[i])) {
            out.absorbed.push_back(i);
            in_s[i] = true;
        }
    }

    double res2 = 0.0, v2 = 0.0;
    std::vector<double> v_eigen(n, 0.0);
    for (int i = 0; i < n; ++i) {
        if (in_s[i]) continue;
        res2 += 2.0 * out.spectrum.eigenvalues[i] * out.spectrum.eigenvalues[i];
        v_eigen[i] = out.eigen_linear[i];
        v2 += v_eigen[i] * v_eigen[i];
    }
    out.residual_norm = std::sqrt(res2);
    double vnorm = std::sqrt(v2);
    if (vnorm > 0.0) {
        out.ratio = out.residual_norm / vnorm;
    } else {
        out.ratio = out.residual_norm > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }

    out.v.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += out.spectrum.basis_at(i, k) * v_eigen[k];
        out.v[i] = s;
    }
    for (int idx : out.absorbed) {
        std::vector<double> form(n);
        for (int i = 0; i < n; ++i) form[i] = out.spectrum.basis_at(i, idx);
        out.p0_forms.push_back(std::move(form));
    }
    return out;
}

}  // namespace ptfprg
