// Command-line front end: sabon <command> [options].
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sabon/commands.hpp"
#include "sabon/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Learned-basis transfer operator experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    int threads = 1;
    std::string scale_text;
    std::string map_text;
    std::string model_path;
    std::string data_path;
    bool untrained = false;
    bool fourier_only = false;
    std::string target;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config file");
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--out", out, "output directory")->capture_default_str();
        sub->add_option("--threads", threads, "worker threads (1 = bitwise reproducible)")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_option("--scale", scale_text, "preset scale")->check(CLI::IsMember({"paper", "desk"}));
        sub->add_option("--map", map_text, "map when no config is given")
            ->check(CLI::IsMember({"circle", "cat", "conjugated-cat"}));
    };

    auto* gen = app.add_subcommand("gen-data", "generate and cache the dataset");
    common(gen);
    auto* tr = app.add_subcommand("train", "train a model and write its checkpoint");
    common(tr);
    tr->add_option("--data", data_path, "dataset cache from gen-data");
    auto* spec = app.add_subcommand("spectrum", "eigenvalues and eigenfunctions of a trained model");
    common(spec);
    spec->add_option("--model", model_path, "checkpoint (default <out>/model.ckpt)");
    spec->add_flag("--untrained", untrained, "use a freshly initialised model");
    auto* srb = app.add_subcommand("srb", "ground-truth SRB density of a torus map");
    common(srb);
    auto* base = app.add_subcommand("baseline", "projection and approximation errors of the Fourier basis");
    common(base);
    base->add_option("--model", model_path, "also evaluate this learned basis");
    auto* rep = app.add_subcommand("reproduce", "regenerate a published table or figure and check it");
    common(rep);
    rep->add_option("target", target, "table1 | table3 | table4 | table5 | fig6")
        ->required()
        ->check(CLI::IsMember({"table1", "table3", "table4", "table5", "fig6"}));
    rep->add_flag("--fourier-only", fourier_only, "skip training; Fourier row only (table4/table5)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : sabon::kExitConfig;
    }

    CLI::App* chosen = app.get_subcommands().front();
    sabon::CommandContext ctx;
    ctx.out = out;
    ctx.threads = threads;
    ctx.model_path = model_path;
    ctx.data_path = data_path;
    ctx.untrained = untrained;
    ctx.fourier_only = fourier_only;
    ctx.log = &std::cout;
    try {
        std::optional<sabon::Scale> scale;
        if (!scale_text.empty()) scale = sabon::parse_scale(scale_text);
        if (!config_path.empty()) {
            if (!map_text.empty()) throw sabon::ConfigError("--map cannot be combined with --config");
            ctx.config = sabon::load_config(config_path, scale);
            ctx.config_from_file = true;
        } else {
            const std::string name = map_text.empty() ? std::string("circle") : map_text;
            ctx.config = sabon::default_experiment(sabon::parse_map(name), scale.value_or(sabon::Scale::Desk));
            ctx.config_from_file = !map_text.empty();
        }
        if (seed) ctx.config.train.seed = *seed;
        ctx.config.train.threads = threads;
    } catch (const sabon::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return sabon::kExitConfig;
    }
    return sabon::run_command(chosen->get_name(), target, ctx);
}
