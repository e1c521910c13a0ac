#include "sabon/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

#include "sabon/artifacts.hpp"
#include "sabon/errors.hpp"
#include "sabon/hash.hpp"

namespace fs = std::filesystem;

namespace sabon {

namespace {

std::ostream& logger(const CommandContext& ctx) {
    static std::ostringstream sink;
    if (ctx.log) return *ctx.log;
    sink.str("");
    return sink;
}

// Collects artifacts in write order and emits the manifest last.
class Run {
public:
    Run(const CommandContext& ctx, const std::string& command) : ctx_(ctx), command_(command) {
        fs::create_directories(ctx.out);
        manifest_.set("schema", std::to_string(kConfigSchema));
        manifest_.set("command", command);
        manifest_.set("map", map_name(ctx.config.train.map));
        manifest_.set("scale", scale_name(ctx.config.scale));
        manifest_.set("seed", std::to_string(ctx.config.train.seed));
        manifest_.set("threads", std::to_string(ctx.threads));
        manifest_.set("config_hash", config_hash(ctx.config));
        write_text(fs::path("config.txt"), canonical_config(ctx.config));
    }

    fs::path path(const fs::path& name) const { return ctx_.out / name; }
    void add(const fs::path& name) { manifest_.add_artifact(ctx_.out, path(name)); }
    void write_text(const fs::path& name, const std::string& text) {
        write_text_file(path(name), text);
        add(name);
    }
    void write_csv(const fs::path& name, const CsvWriter& csv) {
        csv.save(path(name));
        add(name);
    }
    void set(const std::string& key, const std::string& value) { manifest_.set(key, value); }
    // One manifest per command, so commands can share an output directory.
    void finish() {
        std::string tag = command_;
        std::replace(tag.begin(), tag.end(), ' ', '_');
        manifest_.save(path("manifest_" + tag + ".txt"));
    }

private:
    const CommandContext& ctx_;
    std::string command_;
    Manifest manifest_;
};

// Wall-clock times go to a separate file that is not part of the manifest,
// so manifests stay bit-identical between runs. The file is an append-only log.
void record_time(const CommandContext& ctx, const std::string& what, double seconds) {
    std::ofstream out(ctx.out / "timing.txt", std::ios::app);
    out << what << "=" << format_double(seconds) << "\n";
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Grid training_grid(const TrainConfig& cfg) { return build_grid(intrinsic_dim(cfg.map), cfg.grid_side); }

Dataset obtain_dataset(const CommandContext& ctx) {
    TrainConfig cfg = ctx.config.train;
    cfg.threads = ctx.threads;
    if (ctx.data_path.empty()) return build_dataset(cfg);
    Dataset data = load_dataset(ctx.data_path);
    if (data.map != describe_map(cfg.map) || data.order != cfg.order || data.seed != cfg.seed ||
        !(data.grid == training_grid(cfg).key) || data.k_step != cfg.k_step ||
        data.train.size() != cfg.train_size || data.validation.size() != cfg.validation_size ||
        data.test.size() != cfg.test_size) {
        throw ConfigError("dataset cache " + ctx.data_path + " does not match the configuration");
    }
    return data;
}

SabonModel<double> obtain_model(const CommandContext& ctx) {
    if (ctx.untrained) {
        SeedStream rng = SeedStream(ctx.config.train.seed).split(4);
        return init_model<double>(ctx.config.train.architecture, ctx.config.train.loss, ctx.config.train.k_step, rng);
    }
    const std::string path = ctx.model_path.empty() ? (ctx.out / "model.ckpt").string() : ctx.model_path;
    if (!fs::exists(path)) throw ConfigError("model checkpoint not found: " + path + " (train first or pass --model)");
    const Checkpoint ck = load_checkpoint(path);
    if (!(ck.model.architecture() == ctx.config.train.architecture)) {
        throw ConfigError("checkpoint architecture does not match the configuration");
    }
    return ck.model.cast<double>();
}

RunReport train_and_save(const CommandContext& ctx, Run& run, const std::string& prefix) {
    auto& log = logger(ctx);
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset data = obtain_dataset(ctx);
    log << "dataset ready (" << data.train.size() << " train functions), hash " << data.hash().substr(0, 16) << "\n";
    TrainConfig cfg = ctx.config.train;
    cfg.threads = ctx.threads;
    RunReport report = train(cfg, data);
    log << "trained " << cfg.epochs << " epochs; best validation E1 " << report.best_validation_e1 << " at epoch "
        << report.best_epoch << "; test error " << report.test_error << "\n";

    CheckpointMeta meta;
    meta.config_hash = config_hash(ctx.config);
    meta.rng_state = "seed=" + std::to_string(cfg.seed);
    meta.epoch = report.best_epoch;
    save_checkpoint(run.path(prefix + "model.ckpt").string(), report.model, report.adam, meta);
    run.add(prefix + "model.ckpt");

    std::ostringstream curve;
    write_curve_csv(curve, report);
    run.write_text(prefix + "curve.csv", curve.str());
    std::vector<double> x;
    std::vector<double> train_loss;
    std::vector<double> val;
    for (const EpochRecord& r : report.curve) {
        x.push_back(r.epoch);
        train_loss.push_back(r.train_loss);
        val.push_back(r.validation_e1);
    }
    // Validation points are sparse; draw only the epochs where they exist.
    std::vector<double> vx;
    std::vector<double> vy;
    for (std::size_t i = 0; i < val.size(); ++i) {
        if (std::isfinite(val[i])) {
            vx.push_back(x[i]);
            vy.push_back(val[i]);
        }
    }
    write_curve_svg(run.path(prefix + "curve.svg"), x, {{"train J", train_loss}}, "training loss");
    run.add(prefix + "curve.svg");
    if (!vx.empty()) {
        write_curve_svg(run.path(prefix + "validation.svg"), vx, {{"validation E1", vy}}, "validation E1");
        run.add(prefix + "validation.svg");
    }
    std::ostringstream summary;
    write_summary(summary, report);
    summary << "dataset_hash=" << data.hash() << "\n";
    run.write_text(prefix + "summary.txt", summary.str());
    record_time(ctx, prefix + "train_seconds", seconds_since(t0));
    return report;
}

std::vector<Complex> values_of(const std::vector<EigenPair>& pairs) {
    std::vector<Complex> out;
    for (const EigenPair& p : pairs) out.push_back(p.value);
    return out;
}

void write_spectrum(Run& run, const std::string& prefix, const SpectralReport& report, const Grid& grid,
                    int heatmaps) {
    CsvWriter csv({"index", "real", "imag", "modulus", "argument", "hm1_norm", "l2_norm", "hm1_ratio", "residual"});
    for (std::size_t k = 0; k < report.pairs.size(); ++k) {
        const Complex z = report.pairs[k].value;
        const EigenDiagnostics& d = report.diagnostics[k];
        csv.add_row({std::to_string(k), format_double(z.real()), format_double(z.imag()), format_double(std::abs(z)),
                     format_double(std::arg(z)), format_double(d.h_minus_one), format_double(d.l2),
                     format_double(d.ratio), format_double(d.residual)});
    }
    run.write_csv(prefix + "eigenvalues.csv", csv);
    write_eigenvalue_svg(run.path(prefix + "eigenvalues.svg"), values_of(report.pairs), "eigenvalues of GM");
    run.add(prefix + "eigenvalues.svg");
    const int count = std::min<int>(heatmaps, static_cast<int>(report.eigenfunctions.size()));
    for (int k = 0; k < count; ++k) {
        const ComplexField& psi = report.eigenfunctions[static_cast<std::size_t>(k)];
        const std::string stem = prefix + "eigenfunction_" + std::to_string(k);
        if (grid.dim() == 1) {
            CsvWriter f({"theta", "real", "imag"});
            for (Eigen::Index i = 0; i < psi.values.size(); ++i) {
                f.add_row({format_double(grid.points[static_cast<std::size_t>(i)][0]),
                           format_double(psi.values[i].real()), format_double(psi.values[i].imag())});
            }
            run.write_csv(stem + ".csv", f);
        } else {
            const Eigen::VectorXd re = psi.values.real();
            write_field_csv(run.path(stem + ".csv"), re, 2, grid.side());
            run.add(stem + ".csv");
            write_heatmap_svg(run.path(stem + ".svg"), re, grid.side(), "Re eigenfunction " + std::to_string(k));
            run.add(stem + ".svg");
        }
    }
}

CsvWriter error_table(const BasisComparison& cmp) {
    CsvWriter csv({"basis", "size", "l2_projection", "hm1_projection", "l2_approximation", "hm1_approximation"});
    auto row = [&csv](const ErrorTableRow& r) {
        csv.add_row({r.basis, std::to_string(r.size), format_double(r.projection.l2),
                     format_double(r.projection.h_minus_one), format_double(r.approximation.l2),
                     format_double(r.approximation.h_minus_one)});
    };
    if (cmp.learned) row(*cmp.learned);
    row(cmp.fourier);
    return csv;
}

struct Check {
    std::string name;
    double value;
    double target;
    std::string rule;
    bool pass;
};

int write_checks(Run& run, const std::vector<Check>& checks, std::ostream& log) {
    CsvWriter csv({"check", "value", "target", "rule", "pass"});
    bool all = true;
    for (const Check& c : checks) {
        csv.add_row({c.name, format_double(c.value), format_double(c.target), c.rule, c.pass ? "true" : "false"});
        log << (c.pass ? "ok   " : "MISS ") << c.name << ": " << c.value << " (" << c.rule << ")\n";
        all = all && c.pass;
    }
    run.write_csv("checks.csv", csv);
    return all ? kExitOk : kExitThreshold;
}

Check relative_check(const std::string& name, double value, double target, double tol) {
    const double rel = std::abs(value - target) / std::abs(target);
    std::ostringstream rule;
    rule << "within " << tol * 100 << "% of " << format_double(target);
    return {name, value, target, rule.str(), rel <= tol};
}

Check upper_check(const std::string& name, double value, double bound) {
    return {name, value, bound, "<= " + format_double(bound), value <= bound};
}

CommandContext with_map(const CommandContext& ctx, const MapDescriptor& map, bool config_given) {
    CommandContext out = ctx;
    if (config_given) {
        if (map_name(ctx.config.train.map) != map_name(map)) {
            throw ConfigError("this target needs map " + map_name(map) + " but the config declares " +
                              map_name(ctx.config.train.map));
        }
        return out;
    }
    const std::uint64_t seed = ctx.config.train.seed;
    out.config = default_experiment(map, ctx.config.scale);
    out.config.train.seed = seed;
    return out;
}

bool is_perfect_square(int n, int& root) {
    root = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
    return root * root == n;
}

} // namespace

LearnedSpectrum learned_spectrum(const SabonModel<double>& model, const Grid& grid) {
    LearnedSpectrum out;
    const BasisMatrix basis = encode_basis(model, grid);
    out.gram = gram_matrix(basis);
    out.pairs = solve_eigenpairs(model.latent, out.gram);
    return out;
}

ReferenceRow fourier_reference(const MapDescriptor& map) {
    if (std::holds_alternative<PerturbedCat>(map)) return {2.647e-1, 1.576e-2, 2.648e-1, 1.578e-2};
    if (std::holds_alternative<ConjugatedCat>(map)) return {2.409e-1, 1.095e-2, 2.414e-1, 1.132e-2};
    throw ConfigError("no reference table for map " + map_name(map));
}

BasisComparison compare_bases(const ExperimentConfig& cfg, const SabonModel<double>* learned, int threads,
                              std::ostream* log, const SRBGroundTruth* truth) {
    const MapDescriptor& map = cfg.train.map;
    if (intrinsic_dim(map) != 2) throw ConfigError("basis comparison needs a torus map");
    BasisComparison out;
    if (truth) {
        out.truth = *truth;
    } else {
        SRBOptions srb = cfg.srb;
        srb.threads = threads;
        srb.analysis_side = cfg.baseline.analysis_side;
        out.truth = ground_truth_srb(map, srb);
    }
    if (log) *log << "ground truth: lambda = " << out.truth.eigenvalue << " after " << out.truth.iterations << " iterations\n";

    const Grid analysis = build_grid(2, cfg.baseline.analysis_side);
    const Grid quad = build_grid(2, cfg.baseline.quad_side);
    const PreimageTable table = build_preimage_table(map, quad, 1, threads);

    const FourierBasis fourier = build_fourier_basis(cfg.baseline.per_dim, analysis);
    out.fourier.basis = "Fourier";
    out.fourier.size = fourier.size();
    out.fourier.projection = projection_errors(out.truth.density, fourier.sampled);
    const GalerkinOperator fourier_op = galerkin_operator(table, quad, fourier_basis_set(fourier), 1e8, threads);
    out.fourier.approximation = approximation_errors(out.truth.density, fourier.sampled, fourier_op).errors;

    if (learned) {
        const BasisMatrix sampled = encode_basis(*learned, analysis);
        ErrorTableRow row;
        row.basis = "SABON";
        row.size = sampled.size();
        row.projection = projection_errors(out.truth.density, sampled);
        const GalerkinOperator op = galerkin_operator(table, quad, learned_basis_set(*learned), 1e8, threads);
        const ApproximationResult approx = approximation_errors(out.truth.density, sampled, op);
        row.approximation = approx.errors;
        out.learned = row;
        const LearnedSpectrum spec = learned_spectrum(*learned, build_grid(2, cfg.train.grid_side));
        out.learned_leading = spec.pairs.front().value;
    }
    return out;
}

int run_gen_data(const CommandContext& ctx) {
    Run run(ctx, "gen-data");
    TrainConfig cfg = ctx.config.train;
    cfg.threads = ctx.threads;
    const Dataset data = build_dataset(cfg);
    save_dataset(run.path("dataset.bin").string(), data);
    run.add("dataset.bin");
    std::ostringstream s;
    s << "dataset_hash=" << data.hash() << "\n";
    s << "grid_side=" << data.grid.side << "\n";
    s << "train=" << data.train.size() << "\nvalidation=" << data.validation.size() << "\ntest=" << data.test.size()
      << "\nk_step=" << data.k_step << "\n";
    run.write_text("dataset_summary.txt", s.str());
    run.set("dataset_hash", data.hash());
    run.finish();
    logger(ctx) << "wrote " << run.path("dataset.bin").string() << " (hash " << data.hash() << ")\n";
    return kExitOk;
}

int run_train(const CommandContext& ctx) {
    Run run(ctx, "train");
    const RunReport report = train_and_save(ctx, run, "");
    run.set("test_mean_relative_l2", format_double(report.test_error));
    run.finish();
    return kExitOk;
}

int run_spectrum(const CommandContext& ctx) {
    const SabonModel<double> model = obtain_model(ctx);
    Run run(ctx, "spectrum");
    const Grid grid = training_grid(ctx.config.train);
    const LearnedSpectrum spec = learned_spectrum(model, grid);
    const SpectralReport report = eigen_diagnostics(ctx.config.train.map, grid, encode_basis(model, grid), spec.pairs,
                                                    ctx.threads);
    write_spectrum(run, "", report, grid, grid.dim() == 1 ? static_cast<int>(spec.pairs.size()) : 6);
    CsvWriter gram_csv([&] {
        std::vector<std::string> h{"row"};
        for (Eigen::Index j = 0; j < spec.gram.cols(); ++j) h.push_back("c" + std::to_string(j));
        return h;
    }());
    for (Eigen::Index i = 0; i < spec.gram.rows(); ++i) {
        std::vector<std::string> r{std::to_string(i)};
        for (Eigen::Index j = 0; j < spec.gram.cols(); ++j) r.push_back(format_double(spec.gram(i, j)));
        gram_csv.add_row(std::move(r));
    }
    run.write_csv("gram.csv", gram_csv);
    run.finish();
    logger(ctx) << "leading eigenvalue " << spec.pairs.front().value << "\n";
    return kExitOk;
}

int run_srb(const CommandContext& ctx) {
    if (intrinsic_dim(ctx.config.train.map) != 2) throw ConfigError("srb needs a torus map");
    Run run(ctx, "srb");
    SRBOptions srb = ctx.config.srb;
    srb.threads = ctx.threads;
    const auto t0 = std::chrono::steady_clock::now();
    const SRBGroundTruth truth = ground_truth_srb(ctx.config.train.map, srb);
    write_field_csv(run.path("srb_density.csv"), truth.density.values, 2, truth.density.grid.side);
    run.add("srb_density.csv");
    write_heatmap_svg(run.path("srb_density.svg"), truth.density.values, truth.density.grid.side,
                      "ground-truth SRB density (" + map_name(ctx.config.train.map) + ")");
    run.add("srb_density.svg");
    std::ostringstream s;
    s << "eigenvalue_real=" << format_double(truth.eigenvalue.real()) << "\n";
    s << "eigenvalue_imag=" << format_double(truth.eigenvalue.imag()) << "\n";
    s << "iterations=" << truth.iterations << "\nmodes=" << truth.modes << "\nquad_side=" << srb.quad_side << "\n";
    run.write_text("srb_summary.txt", s.str());
    run.finish();
    record_time(ctx, "srb_seconds", seconds_since(t0));
    logger(ctx) << "SRB eigenvalue " << truth.eigenvalue << " after " << truth.iterations << " iterations\n";
    return kExitOk;
}

int run_baseline(const CommandContext& ctx) {
    std::optional<SabonModel<double>> model;
    if (!ctx.model_path.empty()) model = obtain_model(ctx);
    Run run(ctx, "baseline");
    const BasisComparison cmp = compare_bases(ctx.config, model ? &*model : nullptr, ctx.threads, ctx.log);
    run.write_csv("errors.csv", error_table(cmp));
    run.finish();
    return kExitOk;
}

int run_reproduce(const std::string& target, const CommandContext& base) {
    auto& log = logger(base);
    if (target == "table1") {
        Run run(base, "reproduce table1");
        CsvWriter csv({"example", "D", "K", "validation", "test", "n"});
        const TrainConfig circle = circle_preset(base.config.scale);
        const TrainConfig cat = torus_preset(PerturbedCat{}, base.config.scale);
        auto add = [&csv](const std::string& name, const TrainConfig& c) {
            const int n = intrinsic_dim(c.map) == 1 ? c.grid_side : c.grid_side * c.grid_side;
            csv.add_row({name, std::to_string(c.train_size), std::to_string(c.order), std::to_string(c.validation_size),
                         std::to_string(c.test_size), std::to_string(n)});
        };
        add("Circle rotation", circle);
        add("Perturbed cat map", cat);
        run.write_csv("table1.csv", csv);
        // The dataset generator must honour the preset sizes exactly.
        TrainConfig probe = circle;
        const Dataset data = build_dataset(probe);
        std::vector<Check> checks{
            {"circle train functions", static_cast<double>(data.train.size()), static_cast<double>(circle.train_size), "exact",
             data.train.size() == circle.train_size},
            {"circle grid points", static_cast<double>(data.train.inputs.rows()), static_cast<double>(circle.grid_side), "exact",
             data.train.inputs.rows() == circle.grid_side}};
        if (base.config.scale == Scale::Paper) {
            checks.push_back({"circle D", static_cast<double>(circle.train_size), 1000, "exact", circle.train_size == 1000});
            checks.push_back({"cat D", static_cast<double>(cat.train_size), 3000, "exact", cat.train_size == 3000});
            checks.push_back({"cat n", static_cast<double>(cat.grid_side * cat.grid_side), 10000, "exact",
                              cat.grid_side == 100});
        }
        const int code = write_checks(run, checks, log);
        run.finish();
        return code;
    }
    if (target == "table3") {
        const CommandContext ctx = with_map(base, CircleRotation{}, base.config_from_file);
        Run run(ctx, "reproduce table3");
        static constexpr std::array<double, 4> kBetas{0.0, 0.1, 0.2, 0.6};
        static constexpr std::array<double, 4> kPaper{3.974e-3, 3.641e-3, 3.958e-3, 6.234e-3};
        CsvWriter csv({"model", "beta2", "mean_relative_error", "paper_value"});
        std::vector<Check> checks;
        for (std::size_t i = 0; i < kBetas.size(); ++i) {
            CommandContext one = ctx;
            one.config.train.loss.beta2 = kBetas[i];
            const std::string prefix = "beta2_" + format_double(kBetas[i]) + "/";
            const RunReport report = train_and_save(one, run, prefix);
            const std::string name = kBetas[i] == 0.0 ? "No Sparsity" : "Sparsity";
            csv.add_row({name, format_double(kBetas[i]), format_double(report.test_error), format_double(kPaper[i])});
            checks.push_back(upper_check("test error beta2=" + format_double(kBetas[i]), report.test_error, 1.5e-2));
        }
        run.write_csv("table3.csv", csv);
        const int code = write_checks(run, checks, log);
        run.finish();
        return code;
    }
    if (target == "table4" || target == "table5") {
        const MapDescriptor map = target == "table4" ? MapDescriptor{PerturbedCat{}} : MapDescriptor{ConjugatedCat{}};
        CommandContext ctx = with_map(base, map, base.config_from_file);
        Run run(ctx, "reproduce " + target);
        std::optional<SabonModel<double>> learned;
        if (!ctx.fourier_only) {
            const RunReport report = train_and_save(ctx, run, "");
            learned = report.model.cast<double>();
        }
        if (learned) {
            // Compare against the Fourier basis with the same number of functions.
            int root = 0;
            if (!is_perfect_square(learned->basis_size(), root)) {
                throw ConfigError("basis size must be a perfect square for an equal-cardinality Fourier comparison");
            }
            ctx.config.baseline.per_dim = root;
        }
        const auto t0 = std::chrono::steady_clock::now();
        const BasisComparison cmp = compare_bases(ctx.config, learned ? &*learned : nullptr, ctx.threads, &log);
        record_time(ctx, "baseline_seconds", seconds_since(t0));
        run.write_csv(target + ".csv", error_table(cmp));
        write_field_csv(run.path("srb_density.csv"), cmp.truth.density.values, 2, cmp.truth.density.grid.side);
        run.add("srb_density.csv");
        write_heatmap_svg(run.path("srb_density.svg"), cmp.truth.density.values, cmp.truth.density.grid.side,
                          "ground-truth SRB density");
        run.add("srb_density.svg");

        std::vector<Check> checks;
        checks.push_back({"ground-truth eigenvalue", std::abs(cmp.truth.eigenvalue - 1.0), 0.0, "|lambda - 1| <= 1e-3",
                          std::abs(cmp.truth.eigenvalue - 1.0) <= 1e-3});
        const bool paper_fourier = ctx.config.baseline.per_dim == (target == "table4" ? 18 : 26);
        if (paper_fourier) {
            const ReferenceRow ref = fourier_reference(map);
            checks.push_back(relative_check("Fourier L2 projection", cmp.fourier.projection.l2, ref.l2_projection, 0.05));
            checks.push_back(relative_check("Fourier H-1 projection", cmp.fourier.projection.h_minus_one, ref.hm1_projection, 0.05));
            checks.push_back(relative_check("Fourier L2 approximation", cmp.fourier.approximation.l2, ref.l2_approximation, 0.05));
            checks.push_back(relative_check("Fourier H-1 approximation", cmp.fourier.approximation.h_minus_one,
                                            ref.hm1_approximation, 0.05));
        }
        if (cmp.learned) {
            const double factor = cmp.fourier.projection.l2 / cmp.learned->projection.l2;
            checks.push_back({"L2 projection improvement over Fourier", factor, 1.5, ">= 1.5", factor >= 1.5});
            const double hfactor = cmp.fourier.projection.h_minus_one / cmp.learned->projection.h_minus_one;
            checks.push_back({"H-1 projection improvement over Fourier", hfactor, 1.0, "> 1", hfactor > 1.0});
            checks.push_back(upper_check("|leading eigenvalue of G M - 1|", std::abs(*cmp.learned_leading - 1.0), 0.05));
        }
        const int code = write_checks(run, checks, log);
        run.finish();
        return code;
    }
    if (target == "fig6") {
        const CommandContext ctx = with_map(base, CircleRotation{}, base.config_from_file);
        Run run(ctx, "reproduce fig6");
        const RunReport report = train_and_save(ctx, run, "");
        const SabonModel<double> model = report.model.cast<double>();
        const Grid grid = training_grid(ctx.config.train);
        const LearnedSpectrum spec = learned_spectrum(model, grid);
        const SpectralReport sr = eigen_diagnostics(ctx.config.train.map, grid, encode_basis(model, grid), spec.pairs,
                                                    ctx.threads);
        write_spectrum(run, "", sr, grid, static_cast<int>(spec.pairs.size()));
        const double alpha = std::get<CircleRotation>(ctx.config.train.map).alpha;
        double worst_modulus = 0.0;
        double worst_angle = 0.0;
        for (const EigenPair& p : spec.pairs) {
            const double m = std::abs(p.value);
            worst_modulus = std::max(worst_modulus, m < 0.85 ? 0.85 - m : (m > 1.05 ? m - 1.05 : 0.0));
            // Distance of the argument to the nearest multiple of -alpha, modulo 2 pi.
            const double step = -alpha;
            double best = std::numeric_limits<double>::infinity();
            for (int k = -20; k <= 20; ++k) {
                const double d = std::remainder(std::arg(p.value) - k * step, 2 * std::numbers::pi);
                best = std::min(best, std::abs(d));
            }
            worst_angle = std::max(worst_angle, best);
        }
        std::vector<Check> checks{
            {"modulus outside [0.85, 1.05]", worst_modulus, 0.0, "== 0", worst_modulus == 0.0},
            upper_check("argument distance to multiples of -alpha", worst_angle, 0.1)};
        const int code = write_checks(run, checks, log);
        run.finish();
        return code;
    }
    throw ConfigError("unknown reproduce target '" + target + "' (table1, table3, table4, table5, fig6)");
}

int run_command(const std::string& command, const std::string& target, const CommandContext& ctx) {
    try {
        if (command == "gen-data") return run_gen_data(ctx);
        if (command == "train") return run_train(ctx);
        if (command == "spectrum") return run_spectrum(ctx);
        if (command == "srb") return run_srb(ctx);
        if (command == "baseline") return run_baseline(ctx);
        if (command == "reproduce") return run_reproduce(target, ctx);
        throw ConfigError("unknown command '" + command + "'");
    } catch (const ConfigError& e) {
        if (ctx.log) *ctx.log << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::error_code ec;
        fs::create_directories(ctx.out, ec);
        std::ofstream diag(ctx.out / "diagnostic.txt");
        diag << "command=" << command << (target.empty() ? "" : " " + target) << "\n";
        diag << "error=" << e.what() << "\n";
        diag << "config_hash=" << config_hash(ctx.config) << "\n";
        diag << "seed=" << ctx.config.train.seed << "\n";
        if (ctx.log) *ctx.log << "numerical failure: " << e.what() << " (see " << (ctx.out / "diagnostic.txt").string() << ")\n";
        return kExitNumerical;
    }
}

} // namespace sabon
