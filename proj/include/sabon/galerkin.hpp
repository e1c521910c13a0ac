#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sabon/dynamics.hpp"
#include "sabon/fft.hpp"
#include "sabon/function_space.hpp"
#include "sabon/sabon_net.hpp"

namespace sabon {

// One factor of a real tensor-product Fourier function.
struct FourierMode {
    enum class Kind { Constant, Cos, Sin };
    Kind kind = Kind::Constant;
    int order = 0;
};

// Per-dimension recipe: one constant, sine/cosine pairs of increasing order,
// and a single trailing cosine when the count leaves one slot (18 -> pairs up
// to 8 plus cos 9; 26 -> pairs up to 12 plus cos 13). Functions carry the
// sqrt(2) factor that makes them L2-orthonormal.
struct FourierBasis {
    int dim = 2;
    int per_dim = 18;
    std::vector<FourierMode> modes; // per-dimension list
    BasisMatrix sampled;            // on the grid passed to build_fourier_basis

    int size() const;
    // Rows are points, columns are tensor functions (first coordinate's mode
    // index varies slowest).
    Eigen::MatrixXd evaluate(std::span<const StatePoint> points) const;
};

std::vector<FourierMode> fourier_modes_1d(int per_dim);
FourierBasis build_fourier_basis(int per_dim, const Grid& grid);

// A basis that can be evaluated at arbitrary state points.
struct BasisSet {
    std::string name;
    int size = 0;
    std::function<Eigen::MatrixXd(std::span<const StatePoint>)> evaluate;
};

BasisSet fourier_basis_set(const FourierBasis& basis);
BasisSet learned_basis_set(const SabonModel<double>& model);

struct GalerkinOperator {
    Eigen::MatrixXd matrix;     // L_B = M^{-1} B
    Eigen::MatrixXd gram;       // M on the quadrature grid
    Eigen::MatrixXd transfer;   // B_kj = <L phi_j, phi_k>
    double gram_condition = 1;
};

// Quadrature of <L phi_j, phi_k> on the grid of `table` (a k=1 preimage
// table), evaluating phi_j exactly at the cached T^{-1} points. Throws
// IllConditionedGram when cond(M) > max_condition.
GalerkinOperator galerkin_operator(const PreimageTable& table, const Grid& quad_grid,
                                   const BasisSet& basis, double max_condition = 1e8,
                                   int threads = 1);

// Matrix-free Galerkin transfer operator on complex Fourier modes
// k in [-modes/2, modes/2) per coordinate, with quadrature on a fine grid.
// Coefficients use FFT ordering on a modes x modes block.
class FourierTransferOperator {
public:
    FourierTransferOperator(const MapDescriptor& map, int modes, int quad_side, int threads = 1);

    int modes() const { return modes_; }
    int quad_side() const { return quad_side_; }
    std::vector<Complex> apply(std::span<const Complex> coefficients) const;

private:
    int modes_;
    int quad_side_;
    int threads_;
    PreimageTable table_;
};

// sum_k c_k e^{2 pi i k.x} at arbitrary torus points.
std::vector<Complex> evaluate_fourier_series(std::span<const Complex> coefficients, int modes,
                                             std::span<const StatePoint> points);

struct SRBOptions {
    int modes = 100;
    int quad_side = 400;
    int analysis_side = 100;
    double tolerance = 1e-10;
    double residual_tolerance = 1e-8;
    int max_iterations = 5000;
    int threads = 1;
};

struct SRBGroundTruth {
    FieldSample density;               // unit discrete L1 norm, positive mean
    std::vector<Complex> coefficients; // same scaling as density
    int modes = 0;
    Complex eigenvalue;
    int iterations = 0;
};

// Leading eigenvector of the Fourier Galerkin transfer operator by power
// iteration, synthesised on the analysis grid. Throws PowerIterationStall.
SRBGroundTruth ground_truth_srb(const MapDescriptor& map, const SRBOptions& options = {});

// L1-normalise with a positive mean.
FieldSample normalize_density(FieldSample density);

struct ErrorPair {
    double l2 = 0;
    double h_minus_one = 0;
};

// Relative errors of the L2- and H^-1-orthogonal projections of mu onto the
// span of the basis columns (same grid as mu).
ErrorPair projection_errors(const FieldSample& mu, const BasisMatrix& basis,
                            double max_condition = 1e8);

struct ApproximationResult {
    ErrorPair errors;
    FieldSample density;
    Complex eigenvalue;
};

// mu_B = leading eigenvector of the Galerkin matrix, expanded in the analysis
// basis, L1-normalised; errors relative to mu.
ApproximationResult approximation_errors(const FieldSample& mu, const BasisMatrix& analysis_basis,
                                         const GalerkinOperator& galerkin);

// (h o F) |det DF| for the unperturbed-cat density h: the density the
// conjugated map's SRB measure must equal. L1-normalised on the grid.
FieldSample conjugation_pullback(const SRBGroundTruth& cat_srb, const ConjugatedCat& map, const Grid& grid);

struct ErrorTableRow {
    std::string basis;
    int size = 0;
    ErrorPair projection;
    ErrorPair approximation;
};

} // namespace sabon
