#include "sabon/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

#include "sabon/artifacts.hpp"
#include "sabon/binary_io.hpp"
#include "sabon/errors.hpp"
#include "sabon/hash.hpp"

namespace sabon {

namespace {

constexpr char kDatasetMagic[] = "SABONDAT";
constexpr std::uint32_t kDatasetVersion = 1;
constexpr double kMinNorm = 1e-10;

// Stream tags; each consumer of randomness owns one child stream.
enum StreamTag : std::uint64_t { kTrainData = 1, kValidationData = 2, kTestData = 3, kInit = 4, kShuffle = 5 };

std::string hash_coefficients(const TrigPoly& p) {
    Sha256 h;
    h.update(p.coeffs.data(), p.coeffs.size() * sizeof(double));
    return h.hex_digest();
}

double discrete_norm(const Eigen::VectorXd& v) {
    return std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
}

Split build_split(const TrainConfig& cfg, const Grid& grid, const PreimageTable& one,
                  const PreimageTable* kstep, SeedStream rng, int count) {
    Split split;
    const auto n = static_cast<Eigen::Index>(grid.size());
    split.inputs.resize(n, count);
    split.targets.resize(n, count);
    if (kstep) split.kstep_targets.resize(n, count);
    std::size_t terms = static_cast<std::size_t>(2 * cfg.order + 1);
    if (grid.dim() == 2) terms *= terms;
    split.coefficients.resize(static_cast<Eigen::Index>(terms), count);
    for (int j = 0; j < count;) {
        const TrigPoly p = sample_trig_poly(rng, grid.dim(), cfg.order);
        const FieldSample g = sample_field(p, grid);
        const FieldSample lg = transfer_apply(p, one);
        FieldSample lkg;
        if (kstep) lkg = transfer_apply(p, *kstep);
        if (discrete_norm(g.values) < kMinNorm || discrete_norm(lg.values) < kMinNorm ||
            (kstep && discrete_norm(lkg.values) < kMinNorm)) {
            continue; // redraw
        }
        split.inputs.col(j) = g.values;
        split.targets.col(j) = lg.values;
        if (kstep) split.kstep_targets.col(j) = lkg.values;
        split.coefficients.col(j) = Eigen::Map<const Eigen::VectorXd>(p.coeffs.data(), static_cast<Eigen::Index>(p.coeffs.size()));
        split.coefficient_hashes.push_back(hash_coefficients(p));
        ++j;
    }
    return split;
}

void write_split(std::ostream& out, const Split& s) {
    binary::write_matrix(out, s.inputs);
    binary::write_matrix(out, s.targets);
    binary::write_matrix(out, s.kstep_targets);
    binary::write_matrix(out, s.coefficients);
    binary::write<std::uint64_t>(out, s.coefficient_hashes.size());
    for (const std::string& h : s.coefficient_hashes) binary::write_string(out, h);
}

Split read_split(std::istream& in) {
    Split s;
    s.inputs = binary::read_matrix<Eigen::MatrixXd>(in);
    s.targets = binary::read_matrix<Eigen::MatrixXd>(in);
    s.kstep_targets = binary::read_matrix<Eigen::MatrixXd>(in);
    s.coefficients = binary::read_matrix<Eigen::MatrixXd>(in);
    const auto count = binary::read<std::uint64_t>(in);
    if (count != static_cast<std::uint64_t>(s.inputs.cols())) throw std::runtime_error("dataset: hash count mismatch");
    for (std::uint64_t i = 0; i < count; ++i) s.coefficient_hashes.push_back(binary::read_string(in));
    return s;
}

std::string payload(const Dataset& data) {
    std::ostringstream out(std::ios::binary);
    binary::write_string(out, data.map);
    binary::write<std::int32_t>(out, data.order);
    binary::write<std::uint64_t>(out, data.seed);
    binary::write<std::int32_t>(out, data.grid.dim);
    binary::write<std::int32_t>(out, data.grid.side);
    binary::write<std::int32_t>(out, data.k_step);
    write_split(out, data.train);
    write_split(out, data.validation);
    write_split(out, data.test);
    return out.str();
}

template <class Scalar>
double mean_relative_error(const MatrixT<Scalar>& basis, const MatrixT<Scalar>& latent, const Split& split) {
    if (split.size() == 0) throw std::invalid_argument("evaluate: empty split");
    const MatrixT<Scalar> g = split.inputs.template cast<Scalar>();
    const MatrixT<Scalar> prediction = model_forward<Scalar>(basis, latent, g);
    double sum = 0.0;
    for (Eigen::Index j = 0; j < split.size(); ++j) {
        const Eigen::VectorXd diff = split.targets.col(j) - prediction.col(j).template cast<double>();
        const double den = split.targets.col(j).norm();
        if (!(den > 0.0)) throw ZeroDenominator("evaluate: zero target");
        sum += diff.norm() / den;
    }
    return sum / static_cast<double>(split.size());
}

Batch<float> gather(const Split& split, const std::vector<Eigen::Index>& order, std::size_t begin,
                    std::size_t end, bool with_kstep) {
    const auto count = static_cast<Eigen::Index>(end - begin);
    Batch<float> b;
    b.inputs.resize(split.inputs.rows(), count);
    b.targets.resize(split.inputs.rows(), count);
    if (with_kstep) b.kstep_targets.resize(split.inputs.rows(), count);
    for (Eigen::Index c = 0; c < count; ++c) {
        const Eigen::Index j = order[begin + static_cast<std::size_t>(c)];
        b.inputs.col(c) = split.inputs.col(j).cast<float>();
        b.targets.col(c) = split.targets.col(j).cast<float>();
        if (with_kstep) b.kstep_targets.col(c) = split.kstep_targets.col(j).cast<float>();
    }
    return b;
}

// Fisher-Yates with our own uniform draws so the order is platform independent.
void shuffle(std::vector<Eigen::Index>& order, SeedStream& rng) {
    for (std::size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.next_u64() % i);
        std::swap(order[i - 1], order[j]);
    }
}

} // namespace

TrainConfig circle_preset(Scale scale) {
    TrainConfig cfg;
    cfg.map = CircleRotation{};
    cfg.grid_side = 100;
    cfg.order = 9;
    cfg.architecture = {2, {512, 512, 512, 512, 512}, 19};
    cfg.k_step = 0;
    cfg.loss = {1.0, 0.0, 0.0, 0.0};
    cfg.batch_size = 0;
    if (scale == Scale::Paper) {
        cfg.train_size = 1000;
        cfg.validation_size = 500;
        cfg.test_size = 100;
        cfg.epochs = 10000;
    } else {
        cfg.train_size = 500;
        cfg.validation_size = 200;
        cfg.test_size = 100;
        cfg.architecture.hidden = {128, 128, 128};
        cfg.epochs = 2000;
    }
    return cfg;
}

TrainConfig torus_preset(const MapDescriptor& map, Scale scale) {
    if (intrinsic_dim(map) != 2) throw ConfigError("torus_preset: map is not a torus map");
    TrainConfig cfg;
    cfg.map = map;
    cfg.loss = {1.0, 0.0, 1.0, 0.0};
    cfg.k_step = 2;
    const bool conjugated = std::holds_alternative<ConjugatedCat>(map);
    if (scale == Scale::Paper) {
        cfg.grid_side = 100;
        cfg.train_size = 3000;
        cfg.validation_size = 500;
        cfg.test_size = 500;
        cfg.order = 5;
        cfg.architecture = {4, {2048, 2048, 2048, 2048, 2048}, conjugated ? 676 : 324};
        cfg.epochs = 4500;
        cfg.batch_size = 256;
    } else {
        cfg.grid_side = 48;
        cfg.train_size = 500;
        cfg.validation_size = 200;
        cfg.test_size = 200;
        cfg.order = 1;
        cfg.architecture = {4, {256, 256, 256}, 36};
        cfg.loss = {1.0, 0.0, 3.0, 0.3};
        cfg.epochs = 1000;
        cfg.batch_size = 50;
        cfg.learning_rate = 3e-3;
        cfg.cosine_schedule = true;
    }
    return cfg;
}

TrainConfig preset_for(const MapDescriptor& map, Scale scale) {
    return intrinsic_dim(map) == 1 ? circle_preset(scale) : torus_preset(map, scale);
}

void validate(const TrainConfig& cfg) {
    try {
        validate(cfg.map);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const int dim = intrinsic_dim(cfg.map);
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    require(cfg.grid_side >= 2, "grid side must be at least 2");
    require(cfg.train_size >= 1 && cfg.validation_size >= 1 && cfg.test_size >= 1, "split sizes must be positive");
    require(cfg.order >= 1, "polynomial order must be positive");
    require(cfg.architecture.input_dim == ambient_dim(dim), "input_dim must equal the embedding dimension");
    require(cfg.architecture.basis_size >= 1, "basis size must be positive");
    for (int w : cfg.architecture.hidden) require(w >= 1, "hidden widths must be positive");
    require(cfg.k_step >= 0, "k must be non-negative");
    require(cfg.loss.beta1 >= 0 && cfg.loss.beta2 >= 0 && cfg.loss.beta3 >= 0 && cfg.loss.beta_p1 >= 0,
            "loss weights must be non-negative");
    require(cfg.epochs >= 0, "epochs must be non-negative");
    require(cfg.learning_rate > 0.0, "learning rate must be positive");
    require(cfg.batch_size >= 0, "batch size must be non-negative");
    require(cfg.validation_every >= 1, "validation cadence must be positive");
    require(cfg.threads >= 1, "threads must be positive");
}

std::string describe_map(const MapDescriptor& map) {
    return std::visit(
        [](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, CircleRotation>) {
                return "circle(alpha=" + format_double(m.alpha) + ")";
            } else if constexpr (std::is_same_v<M, PerturbedCat>) {
                return "cat(delta=" + format_double(m.delta) + ")";
            } else {
                return "conjugated-cat(delta=" + format_double(m.delta) + ",a=" + format_double(m.a) +
                       ",b=" + format_double(m.b) + ")";
            }
        },
        map);
}

std::string Dataset::hash() const { return sha256_hex(payload(*this)); }

Dataset build_dataset(const TrainConfig& cfg) {
    validate(cfg);
    const Grid grid = build_grid(intrinsic_dim(cfg.map), cfg.grid_side);
    const PreimageTable one = build_preimage_table(cfg.map, grid, 1, cfg.threads);
    PreimageTable kstep;
    if (cfg.k_step >= 1) kstep = build_preimage_table(cfg.map, grid, cfg.k_step, cfg.threads);
    const PreimageTable* k_table = cfg.k_step >= 1 ? &kstep : nullptr;
    const SeedStream root(cfg.seed);
    Dataset data;
    data.map = describe_map(cfg.map);
    data.order = cfg.order;
    data.seed = cfg.seed;
    data.grid = grid.key;
    data.k_step = cfg.k_step;
    data.train = build_split(cfg, grid, one, k_table, root.split(kTrainData), cfg.train_size);
    data.validation = build_split(cfg, grid, one, k_table, root.split(kValidationData), cfg.validation_size);
    data.test = build_split(cfg, grid, one, k_table, root.split(kTestData), cfg.test_size);
    return data;
}

void save_dataset(std::ostream& out, const Dataset& data) {
    const std::string body = payload(data);
    out.write(kDatasetMagic, sizeof(kDatasetMagic) - 1);
    binary::write<std::uint32_t>(out, kDatasetVersion);
    binary::write_string(out, sha256_hex(body));
    binary::write_string(out, body);
    if (!out) throw std::runtime_error("save_dataset: write failed");
}

void save_dataset(const std::string& path, const Dataset& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_dataset: cannot open " + path);
    save_dataset(out, data);
}

Dataset load_dataset(std::istream& in) {
    binary::expect_magic(in, kDatasetMagic);
    const auto version = binary::read<std::uint32_t>(in);
    if (version != kDatasetVersion) throw std::runtime_error("load_dataset: unsupported version");
    const std::string expected = binary::read_string(in);
    const std::string body = binary::read_string(in);
    if (sha256_hex(body) != expected) throw std::runtime_error("load_dataset: checksum mismatch");
    std::istringstream s(body, std::ios::binary);
    Dataset data;
    data.map = binary::read_string(s);
    data.order = binary::read<std::int32_t>(s);
    data.seed = binary::read<std::uint64_t>(s);
    data.grid.dim = binary::read<std::int32_t>(s);
    data.grid.side = binary::read<std::int32_t>(s);
    data.k_step = binary::read<std::int32_t>(s);
    data.train = read_split(s);
    data.validation = read_split(s);
    data.test = read_split(s);
    return data;
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
    return load_dataset(in);
}

double evaluate(const SabonModel<double>& model, const Grid& grid, const Split& split) {
    const Eigen::MatrixXd basis = encode_basis(model, grid.embedded);
    return mean_relative_error<double>(basis, model.latent, split);
}

double evaluate(const SabonModel<float>& model, const Grid& grid, const Split& split) {
    return evaluate(model.cast<double>(), grid, split);
}

double scheduled_learning_rate(const TrainConfig& cfg, int epoch) {
    if (!cfg.cosine_schedule || cfg.epochs == 0) return cfg.learning_rate;
    return 0.5 * cfg.learning_rate * (1.0 + std::cos(std::numbers::pi * epoch / cfg.epochs));
}

RunReport train(const TrainConfig& cfg, const Dataset& data) {
    validate(cfg);
    const auto start = std::chrono::steady_clock::now();
    const Grid grid = build_grid(intrinsic_dim(cfg.map), cfg.grid_side);
    if (!(grid.key == data.grid)) throw GridMismatch("train: dataset grid does not match config");
    if (cfg.k_step != data.k_step) throw ConfigError("train: dataset k does not match config");

    const SeedStream root(cfg.seed);
    SeedStream init_rng = root.split(kInit);
    SeedStream shuffle_rng = root.split(kShuffle);
    SabonModel<float> model = init_model<float>(cfg.architecture, cfg.loss, cfg.k_step, init_rng);
    AdamSettings settings;
    settings.learning_rate = cfg.learning_rate;
    AdamState<float> adam = make_adam_state(model, settings);
    const MatrixT<float> embedded = grid.embedded.cast<float>();

    RunReport report;
    report.best_validation_e1 = evaluate(model, grid, data.validation);
    report.best_epoch = 0;
    report.model = model;

    const std::size_t count = static_cast<std::size_t>(data.train.size());
    const std::size_t batch = cfg.batch_size == 0 ? count : std::min<std::size_t>(cfg.batch_size, count);
    std::vector<Eigen::Index> order(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = static_cast<Eigen::Index>(i);
    const bool with_kstep = cfg.k_step >= 1;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (batch < count) shuffle(order, shuffle_rng);
        const double lr = scheduled_learning_rate(cfg, epoch - 1);
        EpochRecord rec;
        rec.epoch = epoch;
        double weight = 0.0;
        for (std::size_t begin = 0; begin < count; begin += batch) {
            const std::size_t end = std::min(count, begin + batch);
            const Batch<float> b = gather(data.train, order, begin, end, with_kstep);
            LossAndGradients<float> step;
            try {
                step = backward(model, embedded, b);
            } catch (const NonFinite& e) {
                throw NonFinite("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
            }
            adam_step(model, adam, step.grads, lr);
            const double w = static_cast<double>(end - begin);
            rec.train_loss += w * step.loss.total;
            rec.train_e1 += w * step.loss.e1;
            weight += w;
        }
        rec.train_loss /= weight;
        rec.train_e1 /= weight;
        if (epoch % cfg.validation_every == 0 || epoch == cfg.epochs) {
            rec.validation_e1 = evaluate(model, grid, data.validation);
            if (!std::isfinite(rec.validation_e1)) {
                throw NonFinite("validation error is not finite at epoch " + std::to_string(epoch));
            }
            if (rec.validation_e1 < report.best_validation_e1) {
                report.best_validation_e1 = rec.validation_e1;
                report.best_epoch = epoch;
                report.model = model;
            }
        }
        report.curve.push_back(rec);
    }
    report.adam = std::move(adam);
    report.test_error = evaluate(report.model, grid, data.test);
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

void write_curve_csv(std::ostream& out, const RunReport& report) {
    out << "epoch,train_loss,train_e1,validation_e1\r\n";
    out << std::setprecision(9);
    for (const EpochRecord& r : report.curve) {
        out << r.epoch << ',' << r.train_loss << ',' << r.train_e1 << ',';
        if (std::isfinite(r.validation_e1)) out << r.validation_e1;
        out << "\r\n";
    }
}

void write_summary(std::ostream& out, const RunReport& report) {
    out << std::setprecision(9);
    out << "best_epoch=" << report.best_epoch << '\n';
    out << "best_validation_e1=" << report.best_validation_e1 << '\n';
    out << "test_mean_relative_l2=" << report.test_error << '\n';
    out << "epochs_run=" << report.curve.size() << '\n';
    out << "parameters=" << report.model.parameter_count() << '\n';
}

} // namespace sabon
