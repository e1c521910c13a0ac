#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <Eigen/Dense>

#include "sabon/errors.hpp"
#include "sabon/galerkin.hpp"
#include "sabon/spectral.hpp"

using namespace sabon;

namespace {

using Spectrum = std::map<std::pair<int, int>, Complex>;

// Exponential expansion of one sqrt(2)-scaled real mode: frequency -> coefficient.
std::vector<std::pair<int, Complex>> mode_expansion(const FourierMode& m) {
    const double h = std::sqrt(2.0) / 2;
    switch (m.kind) {
    case FourierMode::Kind::Constant: return {{0, 1.0}};
    case FourierMode::Kind::Cos: return {{m.order, h}, {-m.order, h}};
    case FourierMode::Kind::Sin: return {{m.order, Complex(0, -h)}, {-m.order, Complex(0, h)}};
    }
    return {};
}

Spectrum tensor_expansion(const FourierMode& a, const FourierMode& b) {
    Spectrum s;
    for (const auto& [ka, ca] : mode_expansion(a)) {
        for (const auto& [kb, cb] : mode_expansion(b)) s[{ka, kb}] += ca * cb;
    }
    return s;
}

// f o A^{-1} for A = [[2,1],[1,1]]: the coefficient at k moves to A^{-T} k.
Spectrum linear_cat_pushforward(const Spectrum& s) {
    Spectrum out;
    for (const auto& [k, c] : s) out[{k.first - k.second, -k.first + 2 * k.second}] += c;
    return out;
}

double spectral_inner(const Spectrum& u, const Spectrum& v) {
    Complex sum = 0;
    for (const auto& [k, c] : u) {
        const auto it = v.find(k);
        if (it != v.end()) sum += c * std::conj(it->second);
    }
    return sum.real();
}

BasisSet circle_fourier_set(int order) {
    return {"circle-fourier", 2 * order + 1, [order](std::span<const StatePoint> pts) {
                Eigen::MatrixXd out(static_cast<Eigen::Index>(pts.size()), 2 * order + 1);
                for (std::size_t i = 0; i < pts.size(); ++i) {
                    const auto r = static_cast<Eigen::Index>(i);
                    out(r, 0) = 1.0;
                    for (int k = 1; k <= order; ++k) {
                        out(r, 2 * k - 1) = std::sqrt(2.0) * std::cos(k * pts[i][0]);
                        out(r, 2 * k) = std::sqrt(2.0) * std::sin(k * pts[i][0]);
                    }
                }
                return out;
            }};
}

double rel_l2(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm() / b.norm(); }

const SRBGroundTruth& perturbed_cat_truth() {
    static const SRBGroundTruth truth = ground_truth_srb(PerturbedCat{});
    return truth;
}

} // namespace

TEST_SUITE("galerkin") {
    TEST_CASE("Fourier basis sizes and orthonormality") {
        const Grid g = build_grid(2, 100);
        const FourierBasis f18 = build_fourier_basis(18, g);
        const FourierBasis f26 = build_fourier_basis(26, g);
        CHECK(f18.size() == 324);
        CHECK(f26.size() == 676);
        CHECK(f26.sampled.values.cols() == 676);
        CHECK((gram_matrix(f18.sampled) - Eigen::MatrixXd::Identity(324, 324)).cwiseAbs().maxCoeff() <= 1e-12);
        const auto modes = fourier_modes_1d(4);
        REQUIRE(modes.size() == 4);
        CHECK(modes[3].kind == FourierMode::Kind::Cos);
        CHECK(modes[3].order == 2);
    }

    TEST_CASE("circle rotation has eigenvalues exp(-ik alpha)") {
        const double alpha = -1.0;
        const Grid quad = build_grid(1, 64);
        const PreimageTable table = build_preimage_table(CircleRotation{alpha}, quad, 1);
        const GalerkinOperator op = galerkin_operator(table, quad, circle_fourier_set(5));
        const auto pairs = solve_eigenpairs(op.matrix, Eigen::MatrixXd::Identity(11, 11));
        for (int k = -5; k <= 5; ++k) {
            const Complex expect = std::polar(1.0, -k * alpha);
            double best = 1e9;
            for (const EigenPair& p : pairs) best = std::min(best, std::abs(p.value - expect));
            CHECK(best <= 1e-12);
        }
    }

    TEST_CASE("linear cat map matches the frequency index map") {
        const int per_dim = 5;
        const Grid quad = build_grid(2, 64);
        const FourierBasis basis = build_fourier_basis(per_dim, quad);
        const PreimageTable table = build_preimage_table(PerturbedCat{0.0}, quad, 1);
        const GalerkinOperator op = galerkin_operator(table, quad, fourier_basis_set(basis));
        const int p = per_dim;
        Eigen::MatrixXd expect(p * p, p * p);
        for (int j = 0; j < p * p; ++j) {
            const Spectrum image = linear_cat_pushforward(tensor_expansion(basis.modes[j / p], basis.modes[j % p]));
            for (int k = 0; k < p * p; ++k) {
                expect(k, j) = spectral_inner(image, tensor_expansion(basis.modes[k / p], basis.modes[k % p]));
            }
        }
        CHECK((op.transfer - expect).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((op.matrix - expect).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(op.gram_condition == doctest::Approx(1.0));
    }

    TEST_CASE("ill-conditioned Gram matrices are rejected") {
        const Grid quad = build_grid(1, 32);
        const PreimageTable table = build_preimage_table(CircleRotation{}, quad, 1);
        BasisSet dup{"dup", 2, [](std::span<const StatePoint> pts) {
                         return Eigen::MatrixXd(Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(pts.size()), 2));
                     }};
        CHECK_THROWS_AS(galerkin_operator(table, quad, dup), IllConditionedGram);
    }

    TEST_CASE("linear cat map has the constant SRB density") {
        SRBOptions opt;
        opt.modes = 32;
        opt.quad_side = 128;
        opt.analysis_side = 64;
        const SRBGroundTruth truth = ground_truth_srb(PerturbedCat{0.0}, opt);
        CHECK(std::abs(truth.eigenvalue - Complex(1.0)) <= 1e-10);
        const double dev = std::sqrt((truth.density.values.array() - 1.0).square().mean());
        CHECK(dev <= 1e-8);
    }

    TEST_CASE("perturbed cat ground truth") {
        const SRBGroundTruth& truth = perturbed_cat_truth();
        CHECK(std::abs(truth.eigenvalue - Complex(1.0)) <= 1e-3);
        CHECK(truth.density.values.cwiseAbs().mean() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(truth.density.values.mean() > 0.0);
        CHECK(truth.density.grid == GridKey{2, 100});

        // One matrix-free application keeps the mean (mode 0 coefficient).
        const FourierTransferOperator op(PerturbedCat{}, truth.modes, 400);
        const std::vector<Complex> image = op.apply(truth.coefficients);
        CHECK(std::abs(image[0] - truth.coefficients[0]) <= 1e-8 * std::abs(truth.coefficients[0]));
    }

    TEST_CASE("ground truth is stable under a finer quadrature grid") {
        SRBOptions fine;
        fine.quad_side = 800;
        const SRBGroundTruth refined = ground_truth_srb(PerturbedCat{}, fine);
        CHECK(rel_l2(refined.density.values, perturbed_cat_truth().density.values) <= 1e-3);
    }

    TEST_CASE("projection errors") {
        const FieldSample& mu = perturbed_cat_truth().density;
        const Grid g = build_grid(2, 100);

        BasisMatrix constant{g.key, Eigen::MatrixXd::Ones(10000, 1)};
        const ErrorPair ec = projection_errors(mu, constant);
        const Eigen::VectorXd centred = mu.values.array() - mu.values.mean();
        CHECK(ec.l2 == doctest::Approx(centred.norm() / mu.values.norm()).epsilon(1e-10));

        const FourierBasis f = build_fourier_basis(6, g);
        BasisMatrix with_mu = f.sampled;
        with_mu.values.conservativeResize(Eigen::NoChange, 37);
        with_mu.values.col(36) = mu.values;
        const ErrorPair zero = projection_errors(mu, with_mu);
        CHECK(zero.l2 <= 1e-10);
        CHECK(zero.h_minus_one <= 1e-10);

        // The least-squares coefficients are a minimiser in each norm.
        const ErrorPair best = projection_errors(mu, f.sampled);
        CHECK(best.l2 > 0.0);
        const Eigen::VectorXd coef = f.sampled.values.colPivHouseholderQr().solve(mu.values);
        CHECK(rel_l2(f.sampled.values * coef, mu.values) == doctest::Approx(best.l2).epsilon(1e-10));
        std::srand(5);
        for (int trial = 0; trial < 10; ++trial) {
            const Eigen::VectorXd perturbed = coef + 1e-3 * Eigen::VectorXd::Random(36);
            CHECK(rel_l2(f.sampled.values * perturbed, mu.values) > best.l2);
            FieldSample residual{g.key, mu.values - f.sampled.values * perturbed};
            CHECK(h_minus_one_norm(residual) / h_minus_one_norm(mu) > best.h_minus_one);
        }
    }

    TEST_CASE("an invariant basis containing the density approximates it exactly") {
        // Linear cat map: the constant is invariant and is the SRB density.
        const Grid quad = build_grid(2, 32);
        const Grid analysis = build_grid(2, 32);
        const FourierBasis f = build_fourier_basis(3, quad);
        const PreimageTable table = build_preimage_table(PerturbedCat{0.0}, quad, 1);
        const GalerkinOperator op = galerkin_operator(table, quad, fourier_basis_set(f));
        const FieldSample mu{analysis.key, Eigen::VectorXd::Ones(1024)};
        const ApproximationResult r = approximation_errors(mu, build_fourier_basis(3, analysis).sampled, op);
        CHECK(std::abs(r.eigenvalue - Complex(1.0)) <= 1e-12);
        CHECK(r.errors.l2 <= 1e-10);
        CHECK(r.errors.h_minus_one <= 1e-10);
    }
}
