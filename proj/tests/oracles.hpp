#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>


#include "sabon/dynamics.hpp"
#include "sabon/function_space.hpp"
#include "sabon/sabon_net.hpp"

namespace oracle {

using namespace sabon;

using LComplex = std::complex<long double>;

// Characteristic polynomial coefficients c_0..c_n (monic, c_n = 1) by the
// Faddeev-LeVerrier recursion in extended precision.
inline std::vector<long double> characteristic_polynomial(const Eigen::MatrixXd& a) {
    const int n = static_cast<int>(a.rows());
    using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    const LMat al = a.cast<long double>();
    std::vector<long double> c(static_cast<std::size_t>(n + 1));
    c[static_cast<std::size_t>(n)] = 1;
    LMat m = LMat::Zero(n, n);
    for (int k = 1; k <= n; ++k) {
        m = al * m + c[static_cast<std::size_t>(n - k + 1)] * LMat::Identity(n, n);
        c[static_cast<std::size_t>(n - k)] = -(al * m).trace() / k;
    }
    return c;
}

// All roots by Durand-Kerner iteration, in extended precision.
inline std::vector<LComplex> polynomial_roots(const std::vector<long double>& c) {
    const std::size_t n = c.size() - 1;
    auto eval = [&](LComplex z) {
        LComplex v = 0;
        for (std::size_t k = c.size(); k-- > 0;) v = v * z + c[k];
        return v;
    };
    std::vector<LComplex> z(n);
    const LComplex seed(0.4L, 0.9L);
    for (std::size_t k = 0; k < n; ++k) z[k] = std::pow(seed, static_cast<long double>(k)) * 2.0L;
    for (int it = 0; it < 2000; ++it) {
        long double change = 0;
        for (std::size_t i = 0; i < n; ++i) {
            LComplex den = 1;
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) den *= z[i] - z[j];
            }
            const LComplex step = eval(z[i]) / den;
            z[i] -= step;
            change = std::max(change, std::abs(step));
        }
        if (change < 1e-30L) break;
    }
    return z;
}

// Direct O(n^2) DFT evaluation of the H^-1 norm on a torus grid.
inline double naive_h_minus_one(const Eigen::VectorXd& u, int m) {
    double s = 0.0;
    const double n = static_cast<double>(m) * m;
    for (int k1 = -m / 2; k1 < m - m / 2; ++k1) {
        for (int k2 = -m / 2; k2 < m - m / 2; ++k2) {
            std::complex<double> c = 0;
            for (int i = 0; i < m; ++i) {
                for (int j = 0; j < m; ++j) {
                    const double phase = -2 * std::numbers::pi * (k1 * i + k2 * j) / m;
                    c += u[i * m + j] * std::polar(1.0, phase);
                }
            }
            c /= n;
            s += std::norm(c) / (1.0 + k1 * k1 + k2 * k2);
        }
    }
    return std::sqrt(s);
}

// Signed difference of two torus coordinates folded into [-0.5, 0.5).
inline double torus_delta(double a, double b) {
    double d = a - b;
    return d - std::floor(d + 0.5);
}

// Extended-precision reference for the perturbed cat map.
inline std::pair<long double, long double> cat_reference(long double x, long double y, long double delta) {
    const long double pi = 3.141592653589793238462643383279502884L;
    long double u = 2 * x + y + 2 * delta * std::cos(2 * pi * x);
    long double v = x + y + delta * std::sin(4 * pi * y + 1);
    u -= std::floor(u);
    v -= std::floor(v);
    return {u, v};
}

// Central-difference |det D(T^k)| at x, with wrapped coordinate differences.
inline double fd_det(const MapDescriptor& map, const StatePoint& x, int k, double h) {
    auto iterate = [&](double px, double py) {
        StatePoint p = StatePoint::torus(px, py);
        for (int i = 0; i < k; ++i) p = forward_map(map, p);
        return p;
    };
    const StatePoint xp = iterate(x[0] + h, x[1]);
    const StatePoint xm = iterate(x[0] - h, x[1]);
    const StatePoint yp = iterate(x[0], x[1] + h);
    const StatePoint ym = iterate(x[0], x[1] - h);
    const double a = torus_delta(xp[0], xm[0]) / (2 * h);
    const double c = torus_delta(xp[1], xm[1]) / (2 * h);
    const double b = torus_delta(yp[0], ym[0]) / (2 * h);
    const double d = torus_delta(yp[1], ym[1]) / (2 * h);
    return std::abs(a * d - b * c);
}

inline std::vector<StatePoint> random_torus_points(std::size_t count, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<StatePoint> pts;
    for (std::size_t i = 0; i < count; ++i) pts.push_back(StatePoint::torus(u(rng), u(rng)));
    return pts;
}

// Random circle training triples (g, L g, L^k g) of order-3 polynomials.
inline Batch<double> random_batch(const Grid& grid, int count, int k_step, unsigned seed) {
    SeedStream rng(seed);
    const MapDescriptor map = CircleRotation{};
    Batch<double> b;
    const auto n = static_cast<Eigen::Index>(grid.size());
    b.inputs.resize(n, count);
    b.targets.resize(n, count);
    if (k_step > 0) b.kstep_targets.resize(n, count);
    for (int j = 0; j < count; ++j) {
        const TrigPoly p = sample_trig_poly(rng, 1, 3);
        b.inputs.col(j) = sample_field(p, grid).values;
        b.targets.col(j) = transfer_apply(map, p, grid, 1).values;
        if (k_step > 0) b.kstep_targets.col(j) = transfer_apply(map, p, grid, k_step).values;
    }
    return b;
}

// Visits every scalar parameter of a model together with its gradient entry.
inline void for_each_parameter(SabonModel<double>& m, const Gradients<double>& g,
                               const std::function<void(double&, double)>& fn) {
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        for (Eigen::Index i = 0; i < m.weights[l].size(); ++i) fn(m.weights[l].data()[i], g.weights[l].data()[i]);
        for (Eigen::Index i = 0; i < m.biases[l].size(); ++i) fn(m.biases[l].data()[i], g.biases[l].data()[i]);
    }
    for (Eigen::Index i = 0; i < m.latent.size(); ++i) fn(m.latent.data()[i], g.latent.data()[i]);
}

// Largest relative deviation between the analytic gradient of J and central
// differences over all parameters of a tiny double-precision model.
inline double max_gradient_error(const LossWeights& loss, int k_step, unsigned seed) {
    SeedStream rng(seed);
    SabonModel<double> model = init_model<double>({2, {8}, 3}, loss, k_step, rng);
    std::srand(seed);
    model.latent += 0.3 * Eigen::MatrixXd::Random(3, 3); // move off the identity
    const Grid grid = build_grid(1, 16);
    const Batch<double> batch = random_batch(grid, 4, k_step, seed + 1);
    const LossAndGradients<double> an = backward(model, grid.embedded, batch);
    const double h = 1e-6;
    double worst = 0.0;
    for_each_parameter(model, an.grads, [&](double& p, double g) {
        const double saved = p;
        p = saved + h;
        const double up = compute_loss(model, grid.embedded, batch).total;
        p = saved - h;
        const double down = compute_loss(model, grid.embedded, batch).total;
        p = saved;
        const double fd = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(fd - g) / std::max({std::abs(fd), std::abs(g), 1e-4}));
    });
    return worst;
}

} // namespace oracle
