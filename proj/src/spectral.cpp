#include "sabon/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "sabon/errors.hpp"

namespace sabon {

Eigen::MatrixXd gram_matrix(const BasisMatrix& basis) {
    const double n = static_cast<double>(basis.values.rows());
    Eigen::MatrixXd m = basis.values.transpose() * basis.values / n;
    // Symmetrise away rounding so downstream factorisations see an exact mirror.
    return 0.5 * (m + m.transpose());
}

NormalizedBasis normalize_basis(const BasisMatrix& basis) {
    const double n = static_cast<double>(basis.values.rows());
    NormalizedBasis out{basis, Eigen::VectorXd(basis.values.cols())};
    for (Eigen::Index j = 0; j < basis.values.cols(); ++j) {
        const double norm = std::sqrt(basis.values.col(j).squaredNorm() / n);
        if (!(norm >= 1e-10)) {
            throw DegenerateBasis("normalize_basis: column " + std::to_string(j) + " has norm " +
                                  std::to_string(norm));
        }
        out.scales[j] = norm;
        out.basis.values.col(j) /= norm;
    }
    return out;
}

std::vector<EigenPair> solve_eigenpairs(const Eigen::MatrixXd& latent, const Eigen::MatrixXd& gram) {
    if (latent.rows() != latent.cols() || gram.rows() != gram.cols() || latent.cols() != gram.rows()) {
        throw std::invalid_argument("solve_eigenpairs: shapes do not agree");
    }
    const Eigen::MatrixXd operator_matrix = latent * gram;
    if (!operator_matrix.allFinite()) throw SolverFailure("solve_eigenpairs: non-finite G M");
    Eigen::EigenSolver<Eigen::MatrixXd> solver(operator_matrix, true);
    if (solver.info() != Eigen::Success) {
        throw SolverFailure("solve_eigenpairs: real Schur iteration did not converge (||GM||_F = " +
                            std::to_string(operator_matrix.norm()) + ")");
    }
    const Eigen::VectorXcd values = solver.eigenvalues();
    const Eigen::MatrixXcd vectors = solver.eigenvectors();

    std::vector<EigenPair> pairs;
    pairs.reserve(static_cast<std::size_t>(values.size()));
    for (Eigen::Index k = 0; k < values.size(); ++k) {
        Eigen::VectorXcd v = vectors.col(k);
        v /= v.norm();
        Eigen::Index largest = 0;
        v.cwiseAbs().maxCoeff(&largest);
        const Complex phase = std::abs(v[largest]) > 0 ? std::conj(v[largest]) / std::abs(v[largest])
                                                       : Complex(1.0);
        v *= phase;
        v[largest] = std::abs(v[largest]);
        pairs.push_back({values[k], std::move(v)});
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const EigenPair& a, const EigenPair& b) {
        const double ma = std::abs(a.value);
        const double mb = std::abs(b.value);
        if (std::abs(ma - mb) > 1e-12 * std::max(1.0, std::max(ma, mb))) return ma > mb;
        if (a.value.real() != b.value.real()) return a.value.real() > b.value.real();
        return a.value.imag() > b.value.imag();
    });
    return pairs;
}

ComplexField reconstruct_eigenfunction(const BasisMatrix& basis, const Eigen::VectorXcd& xi) {
    if (basis.values.cols() != xi.size()) {
        throw std::invalid_argument("reconstruct_eigenfunction: size mismatch");
    }
    const Eigen::VectorXd re = basis.values * xi.real();
    const Eigen::VectorXd im = basis.values * xi.imag();
    ComplexField out{basis.grid, Eigen::VectorXcd(re.size())};
    for (Eigen::Index i = 0; i < re.size(); ++i) out.values[i] = Complex(re[i], im[i]);
    return out;
}

namespace {

double weighted_norm(std::span<const Complex> values, GridKey grid) {
    const std::vector<Complex> coeffs = fourier_coefficients(values, grid);
    const std::vector<double> weights = h_minus_one_weights(grid);
    double s = 0.0;
    for (std::size_t k = 0; k < coeffs.size(); ++k) s += weights[k] * std::norm(coeffs[k]);
    return std::sqrt(s);
}

} // namespace

double h_minus_one_norm(const FieldSample& u) {
    if (u.grid.size() != static_cast<std::size_t>(u.values.size()) || u.grid.side < 2) {
        throw NonUniformGrid("h_minus_one_norm: field is not sampled on a uniform grid");
    }
    std::vector<Complex> values(u.values.data(), u.values.data() + u.values.size());
    return weighted_norm(values, u.grid);
}

double h_minus_one_norm(const ComplexField& u) {
    if (u.grid.size() != static_cast<std::size_t>(u.values.size()) || u.grid.side < 2) {
        throw NonUniformGrid("h_minus_one_norm: field is not sampled on a uniform grid");
    }
    return weighted_norm(std::span<const Complex>(u.values.data(), static_cast<std::size_t>(u.values.size())),
                         u.grid);
}

double l2_norm(const ComplexField& u) {
    return std::sqrt(u.values.squaredNorm() / static_cast<double>(u.values.size()));
}

Complex interpolate_periodic(const ComplexField& field, const StatePoint& x) {
    const int m = field.grid.side;
    auto locate = [m](double coord, double period, int& lo, int& hi, double& t) {
        const double s = coord / period * m;
        double base = std::floor(s);
        t = s - base;
        lo = static_cast<int>(base) % m;
        if (lo < 0) lo += m;
        hi = (lo + 1) % m;
    };
    if (field.grid.dim == 1) {
        int i0, i1;
        double t;
        locate(x[0], kTwoPi, i0, i1, t);
        return (1.0 - t) * field.values[i0] + t * field.values[i1];
    }
    int i0, i1, j0, j1;
    double tx, ty;
    locate(x[0], 1.0, i0, i1, tx);
    locate(x[1], 1.0, j0, j1, ty);
    auto at = [&](int i, int j) { return field.values[static_cast<Eigen::Index>(i) * m + j]; };
    return (1.0 - tx) * ((1.0 - ty) * at(i0, j0) + ty * at(i0, j1)) +
           tx * ((1.0 - ty) * at(i1, j0) + ty * at(i1, j1));
}

double transfer_residual(const PreimageTable& table, const ComplexField& psi, Complex lambda) {
    if (!(table.grid == psi.grid)) throw GridMismatch("transfer_residual: grid mismatch");
    double num = 0.0;
    for (std::size_t i = 0; i < table.points.size(); ++i) {
        const auto idx = static_cast<Eigen::Index>(i);
        const Complex image = interpolate_periodic(psi, table.points[i]) / table.weights[idx];
        num += std::norm(image - lambda * psi.values[idx]);
    }
    const double den = psi.values.squaredNorm();
    if (!(den > 0.0)) throw ZeroDenominator("transfer_residual: zero eigenfunction");
    return std::sqrt(num / den);
}

SpectralReport eigen_diagnostics(const MapDescriptor& map, const Grid& grid, const BasisMatrix& basis,
                                 std::vector<EigenPair> pairs, int threads) {
    if (!(basis.grid == grid.key)) throw GridMismatch("eigen_diagnostics: basis not on grid");
    const PreimageTable table = build_preimage_table(map, grid, 1, threads);
    SpectralReport report;
    report.pairs = std::move(pairs);
    for (const EigenPair& pair : report.pairs) {
        ComplexField psi = reconstruct_eigenfunction(basis, pair.coefficients);
        EigenDiagnostics d;
        d.l2 = l2_norm(psi);
        d.h_minus_one = h_minus_one_norm(psi);
        d.ratio = d.l2 > 0.0 ? d.h_minus_one / d.l2 : 0.0;
        d.residual = d.l2 > 0.0 ? transfer_residual(table, psi, pair.value) : 0.0;
        report.diagnostics.push_back(d);
        report.eigenfunctions.push_back(std::move(psi));
    }
    return report;
}

} // namespace sabon
