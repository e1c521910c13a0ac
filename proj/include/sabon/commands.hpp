#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sabon/config.hpp"
#include "sabon/galerkin.hpp"
#include "sabon/spectral.hpp"

namespace sabon {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitNumerical = 2, kExitThreshold = 3 };

struct CommandContext {
    ExperimentConfig config;
    std::filesystem::path out = "out";
    int threads = 1;
    std::string model_path; // checkpoint for spectrum / baseline
    std::string data_path;  // dataset cache for train
    bool untrained = false; // spectrum of a freshly initialised model
    bool fourier_only = false;
    bool config_from_file = false; // reproduce: use the file's map instead of the target's preset
    std::ostream* log = nullptr;
};

int run_gen_data(const CommandContext& ctx);
int run_train(const CommandContext& ctx);
int run_spectrum(const CommandContext& ctx);
int run_srb(const CommandContext& ctx);
int run_baseline(const CommandContext& ctx);
// target: table1 | table3 | table4 | table5 | fig6
int run_reproduce(const std::string& target, const CommandContext& ctx);

// Dispatches and maps exceptions to exit codes: ConfigError -> 1,
// NumericalError -> 2 (with diagnostic.txt in the output directory).
int run_command(const std::string& command, const std::string& target, const CommandContext& ctx);

// Pieces shared with the acceptance suite.
struct LearnedSpectrum {
    Eigen::MatrixXd gram;
    std::vector<EigenPair> pairs;
};
LearnedSpectrum learned_spectrum(const SabonModel<double>& model, const Grid& grid);

struct BasisComparison {
    ErrorTableRow fourier;
    std::optional<ErrorTableRow> learned;
    SRBGroundTruth truth;
    std::optional<Complex> learned_leading; // leading eigenvalue of G M on the training grid
};

// Fourier row (per_dim^2 functions) and optionally the row of a learned
// basis, both against the ground-truth SRB of the map (computed unless given).
BasisComparison compare_bases(const ExperimentConfig& cfg, const SabonModel<double>* learned, int threads,
                              std::ostream* log, const SRBGroundTruth* truth = nullptr);

// Reference values from the published tables used by `reproduce`.
struct ReferenceRow {
    double l2_projection;
    double hm1_projection;
    double l2_approximation;
    double hm1_approximation;
};
ReferenceRow fourier_reference(const MapDescriptor& map);

} // namespace sabon
