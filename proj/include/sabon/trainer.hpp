#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sabon/dynamics.hpp"
#include "sabon/function_space.hpp"
#include "sabon/sabon_net.hpp"

namespace sabon {

enum class Scale { Paper, Desk };

struct TrainConfig {
    MapDescriptor map = CircleRotation{};
    int grid_side = 100;
    int train_size = 1000;
    int validation_size = 500;
    int test_size = 100;
    int order = 9; // K of the random trigonometric polynomials
    ArchitectureSpec architecture;
    LossWeights loss;
    int k_step = 0;
    int epochs = 10000;
    double learning_rate = 1e-3;
    int batch_size = 0; // 0 = full batch
    std::uint64_t seed = 0;
    int validation_every = 50;
    bool cosine_schedule = false;
    int threads = 1;
};

// Presets for each map. Paper scale follows the published data and
// architecture tables; desk scale is sized for a single CPU core.
TrainConfig circle_preset(Scale scale);
TrainConfig torus_preset(const MapDescriptor& map, Scale scale);
TrainConfig preset_for(const MapDescriptor& map, Scale scale);

// Throws ConfigError on inconsistent fields.
void validate(const TrainConfig& cfg);

// Triples (g, L g, L^k g) stored column-wise on one grid.
struct Split {
    Eigen::MatrixXd inputs;
    Eigen::MatrixXd targets;
    Eigen::MatrixXd kstep_targets; // empty when k_step == 0
    Eigen::MatrixXd coefficients;  // polynomial coefficient tensors, one column per function
    std::vector<std::string> coefficient_hashes; // SHA-256 of each column

    Eigen::Index size() const { return inputs.cols(); }
};

struct Dataset {
    std::string map;   // name and parameters of the generating map
    int order = 0;     // K
    std::uint64_t seed = 0;
    GridKey grid;
    int k_step = 0;
    Split train;
    Split validation;
    Split test;

    // SHA-256 of the serialised container payload.
    std::string hash() const;
};

std::string describe_map(const MapDescriptor& map);

// Splits are drawn from disjoint child streams of the seed. Polynomials whose
// input or target has (numerically) zero norm are redrawn.
Dataset build_dataset(const TrainConfig& cfg);

void save_dataset(std::ostream& out, const Dataset& data);
void save_dataset(const std::string& path, const Dataset& data);
Dataset load_dataset(std::istream& in);
Dataset load_dataset(const std::string& path);

// Mean over columns of ||L g - R G P g|| / ||L g||, evaluated in double.
double evaluate(const SabonModel<double>& model, const Grid& grid, const Split& split);
double evaluate(const SabonModel<float>& model, const Grid& grid, const Split& split);

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0;
    double train_e1 = 0;
    double validation_e1 = std::numeric_limits<double>::quiet_NaN();
};

struct RunReport {
    std::vector<EpochRecord> curve;
    int best_epoch = 0;
    double best_validation_e1 = 0;
    double test_error = 0;
    double wall_seconds = 0;
    SabonModel<float> model; // best-validation model
    AdamState<float> adam;   // optimiser state at the end of training
};

// Float32 training with Adam. Validation E1 is recorded every
// cfg.validation_every epochs (and after the last one); the model with the
// lowest validation E1 is returned and evaluated once on the test split.
// Throws NonFinite (with the epoch in the message) if the loss diverges.
RunReport train(const TrainConfig& cfg, const Dataset& data);

// Learning rate at the start of `epoch` (cosine decay to zero when enabled).
double scheduled_learning_rate(const TrainConfig& cfg, int epoch);

// Loss curve as CSV and the key=value summary.
void write_curve_csv(std::ostream& out, const RunReport& report);
void write_summary(std::ostream& out, const RunReport& report);

} // namespace sabon
