#include "sabon/galerkin.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "sabon/errors.hpp"
#include "sabon/parallel.hpp"
#include "sabon/spectral.hpp"

namespace sabon {

namespace {

constexpr Eigen::Index kChunk = 4096;

double mode_value(const FourierMode& mode, double angle) {
    switch (mode.kind) {
    case FourierMode::Kind::Constant:
        return 1.0;
    case FourierMode::Kind::Cos:
        return std::sqrt(2.0) * std::cos(mode.order * angle);
    case FourierMode::Kind::Sin:
        return std::sqrt(2.0) * std::sin(mode.order * angle);
    }
    return 0.0;
}

double coordinate_angle(const StatePoint& x, int axis) {
    return x.dim() == 1 ? x[0] : kTwoPi * x[axis];
}

// Symmetric positive definite condition number via eigenvalues.
double spd_condition(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw SolverFailure("Gram eigenvalue solve failed");
    const double lo = solver.eigenvalues().minCoeff();
    const double hi = solver.eigenvalues().maxCoeff();
    if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

// Frequency of bin `a` of the truncated mode block: [-m/2, m/2).
int mode_frequency(int a, int modes) { return a < modes / 2 ? a : a - modes; }

int wrap_index(int k, int side) { return (k % side + side) % side; }

// e^{2 pi i k s} for every bin of the mode block.
void exponential_row(double s, int modes, Complex* out) {
    const Complex w = std::polar(1.0, kTwoPi * s);
    Complex p(1.0, 0.0);
    for (int k = 0; k <= modes / 2; ++k) {
        if (k < modes / 2) out[k] = p;
        if (k > 0) out[modes - k] = std::conj(p);
        p *= w;
    }
}

} // namespace

std::vector<FourierMode> fourier_modes_1d(int per_dim) {
    if (per_dim < 1) throw std::invalid_argument("fourier_modes_1d: per_dim must be positive");
    std::vector<FourierMode> modes{{FourierMode::Kind::Constant, 0}};
    int order = 1;
    while (static_cast<int>(modes.size()) < per_dim) {
        modes.push_back({FourierMode::Kind::Cos, order});
        if (static_cast<int>(modes.size()) < per_dim) modes.push_back({FourierMode::Kind::Sin, order});
        ++order;
    }
    return modes;
}

int FourierBasis::size() const {
    const int p = static_cast<int>(modes.size());
    return dim == 1 ? p : p * p;
}

Eigen::MatrixXd FourierBasis::evaluate(std::span<const StatePoint> points) const {
    const int p = static_cast<int>(modes.size());
    Eigen::MatrixXd out(static_cast<Eigen::Index>(points.size()), size());
    std::vector<double> fx(static_cast<std::size_t>(p));
    std::vector<double> fy(static_cast<std::size_t>(p));
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        const double ax = coordinate_angle(points[i], 0);
        for (int a = 0; a < p; ++a) fx[static_cast<std::size_t>(a)] = mode_value(modes[static_cast<std::size_t>(a)], ax);
        if (dim == 1) {
            for (int a = 0; a < p; ++a) out(row, a) = fx[static_cast<std::size_t>(a)];
            continue;
        }
        const double ay = coordinate_angle(points[i], 1);
        for (int b = 0; b < p; ++b) fy[static_cast<std::size_t>(b)] = mode_value(modes[static_cast<std::size_t>(b)], ay);
        for (int a = 0; a < p; ++a) {
            for (int b = 0; b < p; ++b) {
                out(row, a * p + b) = fx[static_cast<std::size_t>(a)] * fy[static_cast<std::size_t>(b)];
            }
        }
    }
    return out;
}

FourierBasis build_fourier_basis(int per_dim, const Grid& grid) {
    FourierBasis basis;
    basis.dim = grid.dim();
    basis.per_dim = per_dim;
    basis.modes = fourier_modes_1d(per_dim);
    basis.sampled = {grid.key, basis.evaluate(grid.points)};
    return basis;
}

BasisSet fourier_basis_set(const FourierBasis& basis) {
    return {"fourier", basis.size(),
            [basis](std::span<const StatePoint> points) { return basis.evaluate(points); }};
}

BasisSet learned_basis_set(const SabonModel<double>& model) {
    return {"sabon", model.architecture().basis_size, [model](std::span<const StatePoint> points) {
                Eigen::MatrixXd embedded(static_cast<Eigen::Index>(points.size()),
                                         model.architecture().input_dim);
                for (std::size_t i = 0; i < points.size(); ++i) {
                    embedded.row(static_cast<Eigen::Index>(i)) = embed_state(points[i]).transpose();
                }
                return encode_basis(model, embedded);
            }};
}

GalerkinOperator galerkin_operator(const PreimageTable& table, const Grid& quad_grid,
                                   const BasisSet& basis, double max_condition, int threads) {
    if (!(table.grid == quad_grid.key)) throw GridMismatch("galerkin_operator: table not on quadrature grid");
    if (table.steps != 1) throw std::invalid_argument("galerkin_operator: preimage table must be one step");
    const auto n = static_cast<Eigen::Index>(quad_grid.size());
    const Eigen::Index nb = basis.size;
    const Eigen::Index chunks = (n + kChunk - 1) / kChunk;

    // Per-chunk partial sums, reduced in chunk order so the result does not
    // depend on the thread count.
    std::vector<Eigen::MatrixXd> gram_parts(static_cast<std::size_t>(chunks));
    std::vector<Eigen::MatrixXd> transfer_parts(static_cast<std::size_t>(chunks));
    parallel_for(static_cast<std::size_t>(chunks), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c) {
            const Eigen::Index lo = static_cast<Eigen::Index>(c) * kChunk;
            const Eigen::Index len = std::min(kChunk, n - lo);
            const auto first = static_cast<std::size_t>(lo);
            const Eigen::MatrixXd at_x =
                basis.evaluate(std::span<const StatePoint>(quad_grid.points).subspan(first, static_cast<std::size_t>(len)));
            Eigen::MatrixXd at_pre =
                basis.evaluate(std::span<const StatePoint>(table.points).subspan(first, static_cast<std::size_t>(len)));
            at_pre.array().colwise() /= table.weights.segment(lo, len).array();
            gram_parts[c] = at_x.transpose() * at_x;
            transfer_parts[c] = at_x.transpose() * at_pre;
        }
    });
    GalerkinOperator out;
    out.gram = Eigen::MatrixXd::Zero(nb, nb);
    out.transfer = Eigen::MatrixXd::Zero(nb, nb);
    for (Eigen::Index c = 0; c < chunks; ++c) {
        out.gram += gram_parts[static_cast<std::size_t>(c)];
        out.transfer += transfer_parts[static_cast<std::size_t>(c)];
    }
    out.gram /= static_cast<double>(n);
    out.transfer /= static_cast<double>(n);
    out.gram = 0.5 * (out.gram + out.gram.transpose());
    out.gram_condition = spd_condition(out.gram);
    if (!(out.gram_condition <= max_condition)) throw IllConditionedGram("galerkin_operator: Gram matrix ill-conditioned", out.gram_condition);
    out.matrix = out.gram.ldlt().solve(out.transfer);
    if (!out.matrix.allFinite()) throw NonFinite("galerkin_operator: non-finite Galerkin matrix");
    return out;
}

FourierTransferOperator::FourierTransferOperator(const MapDescriptor& map, int modes, int quad_side,
                                                 int threads)
    : modes_(modes), quad_side_(quad_side), threads_(threads) {
    if (intrinsic_dim(map) != 2) throw std::invalid_argument("FourierTransferOperator: torus maps only");
    if (modes < 2 || quad_side < modes) throw std::invalid_argument("FourierTransferOperator: bad sizes");
    table_ = build_preimage_table(map, build_grid(2, quad_side), 1, threads);
}

std::vector<Complex> evaluate_fourier_series(std::span<const Complex> coefficients, int modes,
                                             std::span<const StatePoint> points) {
    const Eigen::Index m = modes;
    if (coefficients.size() != static_cast<std::size_t>(m * m)) {
        throw std::invalid_argument("evaluate_fourier_series: coefficient block has wrong size");
    }
    // Row-major block: c(a, b) with a the first-coordinate frequency.
    Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> c(
        coefficients.data(), m, m);
    std::vector<Complex> out(points.size());
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXcd ex(std::min(kChunk, n), m);
    Eigen::MatrixXcd ey(std::min(kChunk, n), m);
    for (Eigen::Index lo = 0; lo < n; lo += kChunk) {
        const Eigen::Index len = std::min(kChunk, n - lo);
        ex.resize(len, m);
        ey.resize(len, m);
        Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rx(len, m), ry(len, m);
        for (Eigen::Index i = 0; i < len; ++i) {
            const StatePoint& p = points[static_cast<std::size_t>(lo + i)];
            exponential_row(p[0], modes, rx.row(i).data());
            exponential_row(p[1], modes, ry.row(i).data());
        }
        // f_i = sum_a ex(i,a) sum_b c(a,b) ey(i,b)
        const Eigen::MatrixXcd t = ry * c.transpose();
        for (Eigen::Index i = 0; i < len; ++i) {
            out[static_cast<std::size_t>(lo + i)] = (rx.row(i).array() * t.row(i).array()).sum();
        }
    }
    return out;
}

std::vector<Complex> FourierTransferOperator::apply(std::span<const Complex> coefficients) const {
    const std::size_t nq = table_.points.size();
    std::vector<Complex> values(nq);
    const std::size_t chunks = (nq + kChunk - 1) / kChunk;
    parallel_for(chunks, threads_, [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c) {
            const std::size_t lo = c * static_cast<std::size_t>(kChunk);
            const std::size_t len = std::min<std::size_t>(kChunk, nq - lo);
            const std::vector<Complex> part = evaluate_fourier_series(
                coefficients, modes_, std::span<const StatePoint>(table_.points).subspan(lo, len));
            for (std::size_t i = 0; i < len; ++i) {
                values[lo + i] = part[i] / table_.weights[static_cast<Eigen::Index>(lo + i)];
            }
        }
    });
    const GridKey quad{2, quad_side_};
    const std::vector<Complex> hat = fourier_coefficients(values, quad);
    std::vector<Complex> out(static_cast<std::size_t>(modes_) * modes_);
    for (int a = 0; a < modes_; ++a) {
        const int qa = wrap_index(mode_frequency(a, modes_), quad_side_);
        for (int b = 0; b < modes_; ++b) {
            const int qb = wrap_index(mode_frequency(b, modes_), quad_side_);
            out[static_cast<std::size_t>(a) * modes_ + b] = hat[static_cast<std::size_t>(qa) * quad_side_ + qb];
        }
    }
    return out;
}

FieldSample normalize_density(FieldSample density) {
    const double l1 = density.values.cwiseAbs().mean();
    if (!(l1 > 0.0)) throw ZeroDenominator("normalize_density: zero density");
    density.values /= l1;
    if (density.values.mean() < 0.0) density.values = -density.values;
    return density;
}

SRBGroundTruth ground_truth_srb(const MapDescriptor& map, const SRBOptions& options) {
    if (options.modes % 2 != 0) throw std::invalid_argument("ground_truth_srb: modes must be even");
    if (options.analysis_side < options.modes) {
        throw std::invalid_argument("ground_truth_srb: analysis grid coarser than the mode block");
    }
    const FourierTransferOperator op(map, options.modes, options.quad_side, options.threads);
    const int m = options.modes;
    const std::size_t size = static_cast<std::size_t>(m) * m;
    auto norm = [](const std::vector<Complex>& v) {
        double s = 0.0;
        for (const Complex& z : v) s += std::norm(z);
        return std::sqrt(s);
    };

    // Start from the constant density.
    std::vector<Complex> c(size, Complex(0.0));
    c[0] = 1.0;
    Complex lambda(0.0);
    bool converged = false;
    int iteration = 0;
    for (; iteration < options.max_iterations; ++iteration) {
        const std::vector<Complex> next = op.apply(c);
        Complex num(0.0);
        double den = 0.0;
        for (std::size_t i = 0; i < size; ++i) {
            num += std::conj(c[i]) * next[i];
            den += std::norm(c[i]);
        }
        const Complex estimate = num / den;
        double residual = 0.0;
        for (std::size_t i = 0; i < size; ++i) residual += std::norm(next[i] - estimate * c[i]);
        residual = std::sqrt(residual / den);
        const double change = std::abs(estimate - lambda);
        lambda = estimate;
        const double scale = norm(next);
        if (!(scale > 0.0) || !std::isfinite(scale)) throw NonFinite("ground_truth_srb: iterate vanished");
        for (std::size_t i = 0; i < size; ++i) c[i] = next[i] / scale;
        if (iteration > 0 && change <= options.tolerance * std::abs(lambda) &&
            residual <= options.residual_tolerance) {
            converged = true;
            ++iteration;
            break;
        }
    }
    if (!converged) {
        throw PowerIterationStall("ground_truth_srb: no convergence after " +
                                  std::to_string(options.max_iterations) + " iterations");
    }

    // Synthesise on the analysis grid by zero-padding the mode block.
    const int side = options.analysis_side;
    const GridKey analysis{2, side};
    std::vector<Complex> padded(analysis.size(), Complex(0.0));
    for (int a = 0; a < m; ++a) {
        const int pa = wrap_index(mode_frequency(a, m), side);
        for (int b = 0; b < m; ++b) {
            const int pb = wrap_index(mode_frequency(b, m), side);
            padded[static_cast<std::size_t>(pa) * side + pb] = c[static_cast<std::size_t>(a) * m + b];
        }
    }
    const std::vector<Complex> values = fft_inverse(padded, analysis);
    FieldSample density{analysis, Eigen::VectorXd(static_cast<Eigen::Index>(analysis.size()))};
    for (std::size_t i = 0; i < values.size(); ++i) density.values[static_cast<Eigen::Index>(i)] = values[i].real();

    // Same scaling for the field and its coefficients: unit L1, positive mean.
    const double l1 = density.values.cwiseAbs().mean();
    if (!(l1 > 0.0)) throw ZeroDenominator("ground_truth_srb: zero density");
    const double factor = (density.values.mean() >= 0.0 ? 1.0 : -1.0) / l1;
    density.values *= factor;
    for (Complex& z : c) z *= factor;

    SRBGroundTruth out;
    out.density = std::move(density);
    out.coefficients = c;
    out.modes = m;
    out.eigenvalue = lambda;
    out.iterations = iteration;
    return out;
}

namespace {

double discrete_l2(const Eigen::VectorXd& v) { return std::sqrt(v.squaredNorm() / static_cast<double>(v.size())); }

// sqrt(w_k) u_hat_k for every FFT bin of a real field.
Eigen::VectorXcd weighted_spectrum(const Eigen::VectorXd& values, GridKey grid, const std::vector<double>& root_w) {
    std::vector<Complex> z(static_cast<std::size_t>(values.size()));
    for (Eigen::Index i = 0; i < values.size(); ++i) z[static_cast<std::size_t>(i)] = values[i];
    const std::vector<Complex> hat = fourier_coefficients(z, grid);
    Eigen::VectorXcd out(values.size());
    for (Eigen::Index i = 0; i < values.size(); ++i) out[i] = root_w[static_cast<std::size_t>(i)] * hat[static_cast<std::size_t>(i)];
    return out;
}

} // namespace

ErrorPair projection_errors(const FieldSample& mu, const BasisMatrix& basis, double max_condition) {
    if (!(mu.grid == basis.grid)) throw GridMismatch("projection_errors: basis and density grids differ");
    const double n = static_cast<double>(mu.values.size());
    ErrorPair out;

    const Eigen::MatrixXd gram = gram_matrix(basis);
    const double cond = spd_condition(gram);
    if (!(cond <= max_condition)) throw IllConditionedGram("projection_errors: Gram matrix ill-conditioned", cond);
    const Eigen::VectorXd rhs = basis.values.transpose() * mu.values / n;
    const Eigen::VectorXd c = gram.ldlt().solve(rhs);
    const double mu_l2 = discrete_l2(mu.values);
    if (!(mu_l2 > 0.0)) throw ZeroDenominator("projection_errors: zero density");
    out.l2 = discrete_l2(mu.values - basis.values * c) / mu_l2;

    // H^-1 projection: least squares in the weighted Fourier coordinates.
    std::vector<double> root_w = h_minus_one_weights(mu.grid);
    for (double& w : root_w) w = std::sqrt(w);
    const Eigen::Index nb = basis.values.cols();
    Eigen::MatrixXcd a(mu.values.size(), nb);
    for (Eigen::Index j = 0; j < nb; ++j) a.col(j) = weighted_spectrum(basis.values.col(j), mu.grid, root_w);
    const Eigen::VectorXcd b = weighted_spectrum(mu.values, mu.grid, root_w);
    Eigen::MatrixXd h_gram = (a.adjoint() * a).real();
    h_gram = 0.5 * (h_gram + h_gram.transpose());
    const Eigen::VectorXd h_rhs = (a.adjoint() * b).real();
    const Eigen::VectorXd h_c = h_gram.ldlt().solve(h_rhs);
    const double b_norm = b.norm();
    if (!(b_norm > 0.0)) throw ZeroDenominator("projection_errors: zero H^-1 norm");
    out.h_minus_one = (b - a * h_c.cast<Complex>()).norm() / b_norm;
    if (!std::isfinite(out.l2) || !std::isfinite(out.h_minus_one)) throw NonFinite("projection_errors");
    return out;
}

ApproximationResult approximation_errors(const FieldSample& mu, const BasisMatrix& analysis_basis,
                                         const GalerkinOperator& galerkin) {
    if (!(mu.grid == analysis_basis.grid)) throw GridMismatch("approximation_errors: grids differ");
    const Eigen::Index nb = galerkin.matrix.rows();
    if (analysis_basis.values.cols() != nb) throw std::invalid_argument("approximation_errors: size mismatch");
    const std::vector<EigenPair> pairs = solve_eigenpairs(galerkin.matrix, Eigen::MatrixXd::Identity(nb, nb));
    const EigenPair& lead = pairs.front();
    ApproximationResult out;
    out.eigenvalue = lead.value;
    FieldSample candidate{mu.grid, analysis_basis.values * lead.coefficients.real()};
    out.density = normalize_density(std::move(candidate));
    const FieldSample diff{mu.grid, mu.values - out.density.values};
    out.errors.l2 = discrete_l2(diff.values) / discrete_l2(mu.values);
    out.errors.h_minus_one = h_minus_one_norm(diff) / h_minus_one_norm(mu);
    return out;
}

FieldSample conjugation_pullback(const SRBGroundTruth& cat_srb, const ConjugatedCat& map, const Grid& grid) {
    if (grid.dim() != 2) throw std::invalid_argument("conjugation_pullback: torus grid required");
    std::vector<StatePoint> images(grid.points.size());
    for (std::size_t i = 0; i < grid.points.size(); ++i) images[i] = conjugacy(map, grid.points[i]);
    const std::vector<Complex> h = evaluate_fourier_series(cat_srb.coefficients, cat_srb.modes, images);
    FieldSample out{grid.key, Eigen::VectorXd(static_cast<Eigen::Index>(grid.points.size()))};
    for (std::size_t i = 0; i < grid.points.size(); ++i) {
        out.values[static_cast<Eigen::Index>(i)] = h[i].real() * std::abs(conjugacy_det(map, grid.points[i]));
    }
    return normalize_density(std::move(out));
}

} // namespace sabon
