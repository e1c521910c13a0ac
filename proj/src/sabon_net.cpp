#include "sabon/sabon_net.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "sabon/binary_io.hpp"
#include "sabon/errors.hpp"

namespace sabon {

std::size_t ArchitectureSpec::parameter_count() const {
    std::size_t count = 0;
    int fan_in = input_dim;
    for (int width : hidden) {
        count += static_cast<std::size_t>(fan_in) * width + width;
        fan_in = width;
    }
    count += static_cast<std::size_t>(fan_in) * basis_size + basis_size;
    count += static_cast<std::size_t>(basis_size) * basis_size;
    return count;
}

template <class Scalar>
ArchitectureSpec SabonModel<Scalar>::architecture() const {
    ArchitectureSpec spec;
    spec.input_dim = input_dim();
    spec.hidden.clear();
    for (std::size_t l = 0; l + 1 < weights.size(); ++l) {
        spec.hidden.push_back(static_cast<int>(weights[l].rows()));
    }
    spec.basis_size = basis_size();
    return spec;
}

template <class Scalar>
SabonModel<Scalar> init_model(const ArchitectureSpec& spec, const LossWeights& loss, int k_step,
                              SeedStream& rng) {
    if (spec.input_dim <= 0 || spec.basis_size <= 0) {
        throw std::invalid_argument("init_model: widths must be positive");
    }
    for (int w : spec.hidden) {
        if (w <= 0) throw std::invalid_argument("init_model: widths must be positive");
    }
    SabonModel<Scalar> model;
    model.loss = loss;
    model.k_step = k_step;
    std::vector<int> widths{spec.input_dim};
    widths.insert(widths.end(), spec.hidden.begin(), spec.hidden.end());
    widths.push_back(spec.basis_size);
    for (std::size_t l = 1; l < widths.size(); ++l) {
        const int fan_in = widths[l - 1];
        const int fan_out = widths[l];
        const bool feeds_relu = l + 1 < widths.size();
        const double stddev = std::sqrt((feeds_relu ? 2.0 : 1.0) / fan_in);
        Eigen::MatrixXd w(fan_out, fan_in);
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
            for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = stddev * rng.normal();
        }
        model.weights.push_back(w.cast<Scalar>());
        model.biases.push_back(VectorT<Scalar>::Zero(fan_out));
    }
    model.latent = MatrixT<Scalar>::Identity(spec.basis_size, spec.basis_size);
    return model;
}

namespace {

// Hidden pre-activations and activations kept for the backward pass, stored
// feature-major (width x n).
template <class Scalar>
struct EncoderTrace {
    std::vector<MatrixT<Scalar>> activations; // activations[0] = input^T
    MatrixT<Scalar> output;                    // N x n
};

template <class Scalar>
EncoderTrace<Scalar> encoder_forward(const SabonModel<Scalar>& model,
                                     const MatrixT<Scalar>& embedded) {
    if (embedded.cols() != model.input_dim()) {
        throw std::invalid_argument("encode_basis: ambient dimension does not match encoder input");
    }
    EncoderTrace<Scalar> trace;
    trace.activations.reserve(model.layer_count());
    trace.activations.push_back(embedded.transpose());
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
        MatrixT<Scalar> z = model.weights[l] * trace.activations.back();
        z.colwise() += model.biases[l];
        if (l + 1 == model.layer_count()) {
            trace.output = std::move(z);
        } else {
            trace.activations.push_back(z.cwiseMax(Scalar(0)));
        }
    }
    return trace;
}

// Accumulates one relative-residual term ||Y - Phi A||/||Y|| averaged over
// columns, where A = latent * Phi^T S / n (latent == nullptr means identity).
template <class Scalar>
double relative_term(const MatrixT<Scalar>& phi, const MatrixT<Scalar>* latent,
                     const MatrixT<Scalar>& source, const MatrixT<Scalar>& target, double weight,
                     const char* name, MatrixT<Scalar>* dphi, MatrixT<Scalar>* dlatent) {
    const auto n = static_cast<Scalar>(phi.rows());
    const Eigen::Index batch = target.cols();
    if (batch == 0) throw std::invalid_argument(std::string(name) + ": empty batch");
    if (source.rows() != phi.rows() || target.rows() != phi.rows()) {
        throw GridMismatch(std::string(name) + ": field length does not match basis grid");
    }
    const MatrixT<Scalar> coeffs = phi.transpose() * source / n;
    const MatrixT<Scalar> mapped = latent ? MatrixT<Scalar>(*latent * coeffs) : coeffs;
    MatrixT<Scalar> residual = phi * mapped - target;

    double total = 0.0;
    VectorT<Scalar> scale(batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
        const double target_norm = std::sqrt(static_cast<double>(target.col(b).squaredNorm()) / n);
        if (!(target_norm > 0.0)) {
            throw ZeroDenominator(std::string(name) + ": target field has zero norm");
        }
        const double residual_norm =
            std::sqrt(static_cast<double>(residual.col(b).squaredNorm()) / n);
        total += residual_norm / target_norm;
        // d(||r||/||y||)/dr = r / (n ||r|| ||y||); zero residual has zero subgradient.
        scale[b] = residual_norm > 0.0
                       ? static_cast<Scalar>(weight / (batch * n * residual_norm * target_norm))
                       : Scalar(0);
    }
    if (dphi) {
        const MatrixT<Scalar> upstream = residual * scale.asDiagonal(); // dJ/dpred
        const MatrixT<Scalar> dmapped = phi.transpose() * upstream;    // N x B
        *dphi += upstream * mapped.transpose();
        if (latent) {
            *dlatent += dmapped * coeffs.transpose();
            *dphi += source * (latent->transpose() * dmapped).transpose() / n;
        } else {
            *dphi += source * dmapped.transpose() / n;
        }
    }
    return total / static_cast<double>(batch);
}

template <class Scalar>
bool uses_kstep(const SabonModel<Scalar>& model) {
    return model.k_step > 0 && model.loss.beta3 != 0.0;
}

template <class Scalar>
LossBreakdown evaluate_terms(const SabonModel<Scalar>& model, const MatrixT<Scalar>& phi,
                             const Batch<Scalar>& batch, MatrixT<Scalar>* dphi,
                             MatrixT<Scalar>* dlatent) {
    const LossWeights& w = model.loss;
    LossBreakdown loss;
    loss.e1 = relative_term<Scalar>(phi, &model.latent, batch.inputs, batch.targets, w.beta1, "E1",
                                    w.beta1 != 0.0 ? dphi : nullptr,
                                    w.beta1 != 0.0 ? dlatent : nullptr);
    const auto n = static_cast<double>(phi.rows());
    const auto basis_count = static_cast<double>(phi.cols());
    loss.e2 = static_cast<double>(phi.cwiseAbs().sum()) / (n * basis_count);
    if (dphi && w.beta2 != 0.0) {
        const auto factor = static_cast<Scalar>(w.beta2 / (n * basis_count));
        *dphi += phi.unaryExpr([factor](Scalar v) {
            return v > Scalar(0) ? factor : (v < Scalar(0) ? -factor : Scalar(0));
        });
    }
    if (uses_kstep(model)) {
        if (batch.kstep_targets.cols() != batch.inputs.cols()) {
            throw std::invalid_argument("compute_loss: k-step targets missing for E3");
        }
        loss.e3 = relative_term<Scalar>(phi, nullptr, batch.kstep_targets, batch.kstep_targets,
                                        w.beta3, "E3", dphi, dlatent);
    }
    if (w.beta_p1 != 0.0) {
        loss.ep1 = relative_term<Scalar>(phi, nullptr, batch.inputs, batch.inputs, w.beta_p1,
                                         "E_p1", dphi, dlatent);
    }
    loss.total = w.beta1 * loss.e1 + w.beta2 * loss.e2 + (uses_kstep(model) ? w.beta3 * loss.e3 : 0.0) +
                 w.beta_p1 * loss.ep1;
    return loss;
}

template <class Scalar>
void check_finite(const MatrixT<Scalar>& m, const char* what) {
    if (!m.allFinite()) throw NonFinite(std::string("backward: non-finite gradient in ") + what);
}

} // namespace

template <class Scalar>
MatrixT<Scalar> encode_basis(const SabonModel<Scalar>& model, const MatrixT<Scalar>& embedded) {
    return encoder_forward(model, embedded).output.transpose();
}

template <class Scalar>
LossBreakdown compute_loss(const SabonModel<Scalar>& model, const MatrixT<Scalar>& embedded,
                           const Batch<Scalar>& batch) {
    const MatrixT<Scalar> phi = encode_basis(model, embedded);
    return evaluate_terms<Scalar>(model, phi, batch, nullptr, nullptr);
}

template <class Scalar>
LossAndGradients<Scalar> backward(const SabonModel<Scalar>& model,
                                  const MatrixT<Scalar>& embedded, const Batch<Scalar>& batch) {
    EncoderTrace<Scalar> trace = encoder_forward(model, embedded);
    const MatrixT<Scalar> phi = trace.output.transpose();

    LossAndGradients<Scalar> result;
    MatrixT<Scalar> dphi = MatrixT<Scalar>::Zero(phi.rows(), phi.cols());
    result.grads.latent = MatrixT<Scalar>::Zero(model.latent.rows(), model.latent.cols());
    result.loss = evaluate_terms<Scalar>(model, phi, batch, &dphi, &result.grads.latent);

    const std::size_t layers = model.layer_count();
    result.grads.weights.resize(layers);
    result.grads.biases.resize(layers);
    MatrixT<Scalar> delta = dphi.transpose(); // dJ/dZ_L, N x n
    for (std::size_t l = layers; l-- > 0;) {
        const MatrixT<Scalar>& input = trace.activations[l];
        result.grads.weights[l] = delta * input.transpose();
        result.grads.biases[l] = delta.rowwise().sum();
        if (l == 0) break;
        MatrixT<Scalar> upstream = model.weights[l].transpose() * delta;
        // input = relu(z) so relu'(z) is nonzero exactly where input > 0.
        delta = upstream.cwiseProduct(
            input.unaryExpr([](Scalar v) { return v > Scalar(0) ? Scalar(1) : Scalar(0); }));
    }
    for (std::size_t l = 0; l < layers; ++l) {
        check_finite<Scalar>(result.grads.weights[l], "encoder weights");
        check_finite<Scalar>(result.grads.biases[l], "encoder biases");
    }
    check_finite<Scalar>(result.grads.latent, "latent map");
    return result;
}

template <class Scalar>
AdamState<Scalar> make_adam_state(const SabonModel<Scalar>& model, const AdamSettings& settings) {
    AdamState<Scalar> state;
    state.settings = settings;
    auto zeros = [&] {
        Gradients<Scalar> g;
        for (const auto& w : model.weights) g.weights.push_back(MatrixT<Scalar>::Zero(w.rows(), w.cols()));
        for (const auto& b : model.biases) g.biases.push_back(VectorT<Scalar>::Zero(b.size()));
        g.latent = MatrixT<Scalar>::Zero(model.latent.rows(), model.latent.cols());
        return g;
    };
    state.first = zeros();
    state.second = zeros();
    return state;
}

namespace {

template <class Param>
void adam_update(Param& param, Param& m, Param& v, const Param& g, double b1, double b2,
                 double step_size, double eps_hat) {
    using Scalar = typename Param::Scalar;
    m = static_cast<Scalar>(b1) * m + static_cast<Scalar>(1.0 - b1) * g;
    v = static_cast<Scalar>(b2) * v + static_cast<Scalar>(1.0 - b2) * g.cwiseProduct(g);
    param.array() -= static_cast<Scalar>(step_size) * m.array() /
                     (v.array().sqrt() + static_cast<Scalar>(eps_hat));
}

} // namespace

template <class Scalar>
void adam_step(SabonModel<Scalar>& model, AdamState<Scalar>& state, const Gradients<Scalar>& grads,
               double learning_rate) {
    if (grads.weights.size() != model.weights.size() || grads.latent.rows() != model.latent.rows()) {
        throw std::invalid_argument("adam_step: gradient shapes do not match model");
    }
    const AdamSettings& s = state.settings;
    state.step += 1;
    const double lr = learning_rate > 0.0 ? learning_rate : s.learning_rate;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(s.beta1, t);
    const double c2 = 1.0 - std::pow(s.beta2, t);
    // Bias correction folded into the step size and epsilon.
    const double step_size = lr * std::sqrt(c2) / c1;
    const double eps_hat = s.epsilon * std::sqrt(c2);
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        adam_update(model.weights[l], state.first.weights[l], state.second.weights[l],
                    grads.weights[l], s.beta1, s.beta2, step_size, eps_hat);
        adam_update(model.biases[l], state.first.biases[l], state.second.biases[l], grads.biases[l],
                    s.beta1, s.beta2, step_size, eps_hat);
    }
    adam_update(model.latent, state.first.latent, state.second.latent, grads.latent, s.beta1,
                s.beta2, step_size, eps_hat);
}

BasisMatrix encode_basis(const SabonModel<double>& model, const Grid& grid) {
    return {grid.key, encode_basis<double>(model, grid.embedded)};
}

Eigen::VectorXd project(const BasisMatrix& basis, const FieldSample& g) {
    if (!(basis.grid == g.grid) || basis.values.rows() != g.values.size()) {
        throw GridMismatch("project: field and basis live on different grids");
    }
    return basis.values.transpose() * g.values / static_cast<double>(basis.values.rows());
}

Eigen::VectorXd latent_apply(const Eigen::MatrixXd& latent, const Eigen::VectorXd& c) {
    if (latent.cols() != c.size()) throw std::invalid_argument("latent_apply: size mismatch");
    return latent * c;
}

FieldSample reconstruct(const BasisMatrix& basis, const Eigen::VectorXd& a) {
    if (basis.values.cols() != a.size()) throw std::invalid_argument("reconstruct: size mismatch");
    return {basis.grid, basis.values * a};
}

FieldSample model_forward(const SabonModel<double>& model, const Grid& grid, const FieldSample& g) {
    const BasisMatrix basis = encode_basis(model, grid);
    return reconstruct(basis, latent_apply(model.latent, project(basis, g)));
}

namespace {

constexpr char kCheckpointMagic[] = "SABONCKP";
constexpr std::uint32_t kCheckpointVersion = 1;

void write_gradients(std::ostream& out, const Gradients<float>& g) {
    for (const auto& w : g.weights) binary::write_matrix(out, w);
    for (const auto& b : g.biases) binary::write_matrix(out, b);
    binary::write_matrix(out, g.latent);
}

Gradients<float> read_gradients(std::istream& in, std::size_t layers) {
    Gradients<float> g;
    for (std::size_t l = 0; l < layers; ++l) g.weights.push_back(binary::read_matrix<MatrixT<float>>(in));
    for (std::size_t l = 0; l < layers; ++l) g.biases.push_back(binary::read_matrix<VectorT<float>>(in));
    g.latent = binary::read_matrix<MatrixT<float>>(in);
    return g;
}

} // namespace

void save_checkpoint(std::ostream& out, const SabonModel<float>& model, const AdamState<float>& adam,
                     const CheckpointMeta& meta) {
    out.write(kCheckpointMagic, 8);
    binary::write<std::uint32_t>(out, kCheckpointVersion);
    binary::write_string(out, meta.config_hash);
    binary::write_string(out, meta.rng_state);
    binary::write<std::int64_t>(out, meta.epoch);
    binary::write<double>(out, model.loss.beta1);
    binary::write<double>(out, model.loss.beta2);
    binary::write<double>(out, model.loss.beta3);
    binary::write<double>(out, model.loss.beta_p1);
    binary::write<std::int32_t>(out, model.k_step);
    binary::write<std::uint64_t>(out, model.layer_count());
    for (const auto& w : model.weights) binary::write_matrix(out, w);
    for (const auto& b : model.biases) binary::write_matrix(out, b);
    binary::write_matrix(out, model.latent);
    binary::write<double>(out, adam.settings.learning_rate);
    binary::write<double>(out, adam.settings.beta1);
    binary::write<double>(out, adam.settings.beta2);
    binary::write<double>(out, adam.settings.epsilon);
    binary::write<std::int64_t>(out, adam.step);
    write_gradients(out, adam.first);
    write_gradients(out, adam.second);
}

void save_checkpoint(const std::string& path, const SabonModel<float>& model,
                     const AdamState<float>& adam, const CheckpointMeta& meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    save_checkpoint(out, model, adam, meta);
}

Checkpoint load_checkpoint(std::istream& in) {
    binary::expect_magic(in, std::string(kCheckpointMagic, 8));
    const auto version = binary::read<std::uint32_t>(in);
    if (version != kCheckpointVersion) throw std::runtime_error("load_checkpoint: unsupported version");
    Checkpoint ck;
    ck.meta.config_hash = binary::read_string(in);
    ck.meta.rng_state = binary::read_string(in);
    ck.meta.epoch = binary::read<std::int64_t>(in);
    ck.model.loss.beta1 = binary::read<double>(in);
    ck.model.loss.beta2 = binary::read<double>(in);
    ck.model.loss.beta3 = binary::read<double>(in);
    ck.model.loss.beta_p1 = binary::read<double>(in);
    ck.model.k_step = binary::read<std::int32_t>(in);
    const auto layers = binary::read<std::uint64_t>(in);
    if (layers == 0 || layers > 1024) throw std::runtime_error("load_checkpoint: bad layer count");
    for (std::uint64_t l = 0; l < layers; ++l) ck.model.weights.push_back(binary::read_matrix<MatrixT<float>>(in));
    for (std::uint64_t l = 0; l < layers; ++l) ck.model.biases.push_back(binary::read_matrix<VectorT<float>>(in));
    ck.model.latent = binary::read_matrix<MatrixT<float>>(in);
    ck.adam.settings.learning_rate = binary::read<double>(in);
    ck.adam.settings.beta1 = binary::read<double>(in);
    ck.adam.settings.beta2 = binary::read<double>(in);
    ck.adam.settings.epsilon = binary::read<double>(in);
    ck.adam.step = binary::read<std::int64_t>(in);
    ck.adam.first = read_gradients(in, layers);
    ck.adam.second = read_gradients(in, layers);
    return ck;
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    return load_checkpoint(in);
}

#define SABON_INSTANTIATE(Scalar)                                                                  \
    template struct SabonModel<Scalar>;                                                            \
    template SabonModel<Scalar> init_model<Scalar>(const ArchitectureSpec&, const LossWeights&, int, \
                                                   SeedStream&);                                   \
    template MatrixT<Scalar> encode_basis<Scalar>(const SabonModel<Scalar>&, const MatrixT<Scalar>&); \
    template LossBreakdown compute_loss<Scalar>(const SabonModel<Scalar>&, const MatrixT<Scalar>&,   \
                                                const Batch<Scalar>&);                             \
    template LossAndGradients<Scalar> backward<Scalar>(const SabonModel<Scalar>&,                  \
                                                       const MatrixT<Scalar>&, const Batch<Scalar>&); \
    template AdamState<Scalar> make_adam_state<Scalar>(const SabonModel<Scalar>&, const AdamSettings&); \
    template void adam_step<Scalar>(SabonModel<Scalar>&, AdamState<Scalar>&, const Gradients<Scalar>&, \
                                    double);

SABON_INSTANTIATE(float)
SABON_INSTANTIATE(double)

#undef SABON_INSTANTIATE

} // namespace sabon
