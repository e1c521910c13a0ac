#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sabon/function_space.hpp"

namespace sabon {

// Encoder widths: input_dim -> hidden... -> basis_size, ReLU between hidden
// layers and an affine output layer.
struct ArchitectureSpec {
    int input_dim = 2;
    std::vector<int> hidden{512, 512, 512, 512, 512};
    int basis_size = 19;

    // Encoder weights and biases plus the N x N latent map.
    std::size_t parameter_count() const;
    bool operator==(const ArchitectureSpec&) const = default;
};

struct LossWeights {
    double beta1 = 1.0;
    double beta2 = 0.0;
    double beta3 = 1.0;
    // Weight of the optional ||g - R P g|| / ||g|| penalty; zero disables it.
    double beta_p1 = 0.0;
    bool operator==(const LossWeights&) const = default;
};

template <class Scalar>
using MatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
struct SabonModel {
    // Layer l maps width(l-1) -> width(l); weights[l] is out x in.
    std::vector<MatrixT<Scalar>> weights;
    std::vector<VectorT<Scalar>> biases;
    MatrixT<Scalar> latent; // G, N x N, no bias
    LossWeights loss;
    int k_step = 0; // 0 disables E3

    int input_dim() const { return static_cast<int>(weights.front().cols()); }
    int basis_size() const { return static_cast<int>(latent.rows()); }
    std::size_t layer_count() const { return weights.size(); }
    ArchitectureSpec architecture() const;
    std::size_t parameter_count() const { return architecture().parameter_count(); }

    template <class Other>
    SabonModel<Other> cast() const {
        SabonModel<Other> out;
        for (const auto& w : weights) out.weights.push_back(w.template cast<Other>());
        for (const auto& b : biases) out.biases.push_back(b.template cast<Other>());
        out.latent = latent.template cast<Other>();
        out.loss = loss;
        out.k_step = k_step;
        return out;
    }
};

// He-style initialisation (variance 2/fan_in) for layers feeding a ReLU,
// variance 1/fan_in for the output layer, zero biases, G = I. Draws are made in
// double so float and double models from the same seed agree.
template <class Scalar>
SabonModel<Scalar> init_model(const ArchitectureSpec& spec, const LossWeights& loss, int k_step,
                              SeedStream& rng);

// n x N matrix whose column j is phi_j at the n embedded points (rows of `embedded`).
template <class Scalar>
MatrixT<Scalar> encode_basis(const SabonModel<Scalar>& model, const MatrixT<Scalar>& embedded);

// Batched blocks; columns of g / c / a index functions.
template <class Scalar>
MatrixT<Scalar> project(const MatrixT<Scalar>& basis, const MatrixT<Scalar>& g) {
    return basis.transpose() * g / static_cast<Scalar>(basis.rows());
}

template <class Scalar>
MatrixT<Scalar> latent_apply(const MatrixT<Scalar>& latent, const MatrixT<Scalar>& c) {
    return latent * c;
}

template <class Scalar>
MatrixT<Scalar> reconstruct(const MatrixT<Scalar>& basis, const MatrixT<Scalar>& a) {
    return basis * a;
}

// R o G o P applied to every column of g, using a precomputed basis.
template <class Scalar>
MatrixT<Scalar> model_forward(const MatrixT<Scalar>& basis, const MatrixT<Scalar>& latent,
                              const MatrixT<Scalar>& g) {
    return reconstruct<Scalar>(basis, latent_apply<Scalar>(latent, project<Scalar>(basis, g)));
}

// Basis sampled on a specific grid, used by the FieldSample-level API.
struct BasisMatrix {
    GridKey grid;
    Eigen::MatrixXd values; // n x N

    int size() const { return static_cast<int>(values.cols()); }
};

BasisMatrix encode_basis(const SabonModel<double>& model, const Grid& grid);
// Throws GridMismatch when g is not sampled on the basis grid.
Eigen::VectorXd project(const BasisMatrix& basis, const FieldSample& g);
Eigen::VectorXd latent_apply(const Eigen::MatrixXd& latent, const Eigen::VectorXd& c);
FieldSample reconstruct(const BasisMatrix& basis, const Eigen::VectorXd& a);
FieldSample model_forward(const SabonModel<double>& model, const Grid& grid, const FieldSample& g);

// A batch of training triples (g, L g, L^k g) stored column-wise.
template <class Scalar>
struct Batch {
    MatrixT<Scalar> inputs;
    MatrixT<Scalar> targets;
    MatrixT<Scalar> kstep_targets; // empty when E3 is unused
};

struct LossBreakdown {
    double e1 = 0;
    double e2 = 0;
    double e3 = 0;
    double ep1 = 0;
    double total = 0;
};

template <class Scalar>
struct Gradients {
    std::vector<MatrixT<Scalar>> weights;
    std::vector<VectorT<Scalar>> biases;
    MatrixT<Scalar> latent;
};

// Throws ZeroDenominator if any target used with positive weight has zero norm.
template <class Scalar>
LossBreakdown compute_loss(const SabonModel<Scalar>& model, const MatrixT<Scalar>& embedded,
                           const Batch<Scalar>& batch);

template <class Scalar>
struct LossAndGradients {
    LossBreakdown loss;
    Gradients<Scalar> grads;
};

// Exact reverse-mode gradients of J. Encoder gradients flow through both the
// projection and the reconstruction, and through E2 / E3 / E_p1. Throws
// NonFinite on NaN or Inf.
template <class Scalar>
LossAndGradients<Scalar> backward(const SabonModel<Scalar>& model,
                                  const MatrixT<Scalar>& embedded, const Batch<Scalar>& batch);

struct AdamSettings {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

template <class Scalar>
struct AdamState {
    AdamSettings settings;
    std::int64_t step = 0;
    Gradients<Scalar> first;
    Gradients<Scalar> second;
};

template <class Scalar>
AdamState<Scalar> make_adam_state(const SabonModel<Scalar>& model, const AdamSettings& settings);

// One bias-corrected adaptive-moment update. `learning_rate` overrides the
// stored rate when positive (used by the optional cosine schedule).
template <class Scalar>
void adam_step(SabonModel<Scalar>& model, AdamState<Scalar>& state,
               const Gradients<Scalar>& grads, double learning_rate = -1.0);

// Checkpoints: versioned binary container, little-endian, raw IEEE floats.
struct CheckpointMeta {
    std::string config_hash;
    std::string rng_state;
    std::int64_t epoch = 0;
};

void save_checkpoint(std::ostream& out, const SabonModel<float>& model,
                     const AdamState<float>& adam, const CheckpointMeta& meta);
void save_checkpoint(const std::string& path, const SabonModel<float>& model,
                     const AdamState<float>& adam, const CheckpointMeta& meta);

struct Checkpoint {
    SabonModel<float> model;
    AdamState<float> adam;
    CheckpointMeta meta;
};

Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::string& path);

} // namespace sabon
