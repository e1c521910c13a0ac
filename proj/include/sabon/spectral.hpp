#pragma once

#include <complex>
#include <vector>

#include <Eigen/Core>

#include "sabon/dynamics.hpp"
#include "sabon/fft.hpp"
#include "sabon/function_space.hpp"
#include "sabon/sabon_net.hpp"

namespace sabon {

// M = (1/n) B^T B.
Eigen::MatrixXd gram_matrix(const BasisMatrix& basis);

struct NormalizedBasis {
    BasisMatrix basis;
    Eigen::VectorXd scales; // original discrete L2 norm of each column
};

// Divides every column by its discrete L2 norm. Throws DegenerateBasis when a
// column norm is below 1e-10.
NormalizedBasis normalize_basis(const BasisMatrix& basis);

struct EigenPair {
    Complex value;
    Eigen::VectorXcd coefficients; // unit 2-norm, largest entry real positive
};

// All eigenpairs of G M, sorted by |lambda| descending, then Re descending,
// then Im descending. Throws SolverFailure.
std::vector<EigenPair> solve_eigenpairs(const Eigen::MatrixXd& latent, const Eigen::MatrixXd& gram);

struct ComplexField {
    GridKey grid;
    Eigen::VectorXcd values;
};

// sum_j xi_j phi_j, real and imaginary parts reconstructed separately.
ComplexField reconstruct_eigenfunction(const BasisMatrix& basis, const Eigen::VectorXcd& xi);

// ||u||^2 = sum_k (1+|k|^2)^{-1} |u_hat_k|^2 over the grid's FFT lattice.
double h_minus_one_norm(const FieldSample& u);
double h_minus_one_norm(const ComplexField& u);
double l2_norm(const ComplexField& u);

// Periodic linear (circle) or bilinear (torus) interpolation of grid values.
Complex interpolate_periodic(const ComplexField& field, const StatePoint& x);

struct EigenDiagnostics {
    double h_minus_one = 0;
    double l2 = 0;
    double ratio = 0;    // ||psi||_{H^-1} / ||psi||_{L2}
    double residual = 0; // ||L psi - lambda psi|| / ||psi|| with the true dynamics
};

struct SpectralReport {
    std::vector<EigenPair> pairs;
    std::vector<ComplexField> eigenfunctions;
    std::vector<EigenDiagnostics> diagnostics;
};

// Reconstructs every eigenfunction on the basis grid and evaluates the H^-1
// ratio and the residual of the true transfer operator, whose action on the
// grid field is taken by interpolating psi at T^{-1}(x_i).
SpectralReport eigen_diagnostics(const MapDescriptor& map, const Grid& grid, const BasisMatrix& basis,
                                 std::vector<EigenPair> pairs, int threads = 1);

// Residual of a single candidate eigenpair given as a grid field.
double transfer_residual(const PreimageTable& table, const ComplexField& psi, Complex lambda);

} // namespace sabon
