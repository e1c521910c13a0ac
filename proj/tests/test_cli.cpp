#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sabon/artifacts.hpp"
#include "sabon/commands.hpp"
#include "sabon/config.hpp"
#include "sabon/errors.hpp"
#include "sabon/hash.hpp"

using namespace sabon;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("sabon_cli_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Rows of a CRLF CSV without the header, split on commas (no quoted fields).
std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::istringstream in(slurp(p));
    std::string line;
    std::vector<std::vector<std::string>> rows;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ls(line);
        std::string f;
        while (std::getline(ls, f, ',')) fields.push_back(f);
        rows.push_back(fields);
    }
    return rows;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SABON_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_SUITE("cli") {
    TEST_CASE("config files") {
        const ExperimentConfig c = parse(
            "# circle experiment\n"
            "schema = 1\n"
            "[experiment]\n"
            "map = circle\n"
            "scale = desk\n"
            "seed = 7\n"
            "[model]\n"
            "hidden = 32, 32\n"
            "basis_size = 11\n"
            "[loss]\n"
            "beta2 = 0.1\n"
            "[train]\n"
            "epochs = 5  # short\n");
        CHECK(std::holds_alternative<CircleRotation>(c.train.map));
        CHECK(c.train.seed == 7);
        CHECK(c.train.architecture.hidden == std::vector<int>{32, 32});
        CHECK(c.train.architecture.basis_size == 11);
        CHECK(c.train.loss.beta2 == 0.1);
        CHECK(c.train.epochs == 5);
        CHECK(c.train.train_size == circle_preset(Scale::Desk).train_size);

        const ExperimentConfig t = parse("schema = 1\n[experiment]\nmap = conjugated-cat\nscale = paper\n");
        CHECK(t.train.architecture.basis_size == 676);
        CHECK(t.baseline.per_dim == 26);
    }

    TEST_CASE("config errors carry line numbers") {
        auto message = [](const std::string& text) {
            try {
                parse(text);
            } catch (const ConfigError& e) {
                return std::string(e.what());
            }
            return std::string("no error");
        };
        CHECK(message("schema = 1\n[experiment]\nmap = circle\n[train]\nepochz = 3\n").find("line 5") != std::string::npos);
        CHECK(message("schema = 1\n[experiment]\nmap = circle\nmap = cat\n").find("line 4") != std::string::npos);
        CHECK(message("[experiment]\nmap = circle\n") != "no error");                      // schema missing
        CHECK(message("schema = 2\n[experiment]\nmap = circle\n") != "no error");          // wrong schema
        CHECK(message("schema = 1\n[train]\nepochs = 3\n") != "no error");                 // map missing
        CHECK(message("schema = 1\n[experiment]\nmap = torus\n") != "no error");           // unknown map
        CHECK(message("schema = 1\n[experiment]\nmap = circle\n[train]\nepochs = x\n").find("line 5") != std::string::npos);
        CHECK(message("schema = 1\n[experiment]\nmap = circle\nthis is not a pair\n").find("line 4") != std::string::npos);
    }

    TEST_CASE("canonical form round trips and defines the hash") {
        const ExperimentConfig c = default_experiment(PerturbedCat{}, Scale::Desk);
        const std::string text = canonical_config(c);
        const ExperimentConfig back = parse(text);
        CHECK(canonical_config(back) == text);
        CHECK(config_hash(back) == config_hash(c));
        CHECK(config_hash(c) == sha256_hex(text));
        ExperimentConfig other = c;
        other.train.seed += 1;
        CHECK(config_hash(other) != config_hash(c));
    }

    TEST_CASE("CSV escaping") {
        CHECK(CsvWriter::escape("plain") == "plain");
        CHECK(CsvWriter::escape("a,b") == "\"a,b\"");
        CHECK(CsvWriter::escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
        CHECK(CsvWriter::escape("two\nlines") == "\"two\nlines\"");
        CsvWriter w({"k", "v"});
        w.add_row({"x", "1,5"});
        CHECK(w.str() == "k,v\r\nx,\"1,5\"\r\n");
        CHECK(format_double(0.1) == "0.1");
        CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
    }

    TEST_CASE("SHA-256") {
        CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
        CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    TEST_CASE("spectrum of an untrained model is the Gram spectrum") {
        CommandContext ctx;
        ctx.config = default_experiment(CircleRotation{}, Scale::Desk);
        ctx.config.train.architecture.hidden = {32, 32};
        ctx.untrained = true;
        ctx.out = scratch("spectrum");
        REQUIRE(run_command("spectrum", "", ctx) == kExitOk);
        const auto rows = read_csv(ctx.out / "eigenvalues.csv");
        REQUIRE(rows.size() == 19);
        for (const auto& r : rows) {
            CHECK(std::abs(std::stod(r[2])) <= 1e-10 * std::max(1.0, std::stod(r[1])));
            CHECK(std::stod(r[1]) >= -1e-10);
        }
        CHECK(fs::exists(ctx.out / "manifest_spectrum.txt"));
        CHECK(fs::exists(ctx.out / "gram.csv"));
        fs::remove_all(ctx.out);
    }

    TEST_CASE("generated datasets are reproducible") {
        CommandContext ctx;
        ctx.config = default_experiment(CircleRotation{}, Scale::Desk);
        ctx.out = scratch("gen_a");
        REQUIRE(run_command("gen-data", "", ctx) == kExitOk);
        CommandContext again = ctx;
        again.out = scratch("gen_b");
        REQUIRE(run_command("gen-data", "", again) == kExitOk);
        CHECK(slurp(ctx.out / "manifest_gen-data.txt") == slurp(again.out / "manifest_gen-data.txt"));
        fs::remove_all(ctx.out);
        fs::remove_all(again.out);
    }

    TEST_CASE("exit codes of the executable") {
        const fs::path dir = scratch("exit");
        fs::create_directories(dir);
        {
            std::ofstream bad(dir / "bad.cfg");
            bad << "schema = 1\n[experiment]\nmap = circle\n[train]\nnot_a_key = 1\n";
        }
        CHECK(run_cli("gen-data --config " + (dir / "bad.cfg").string() + " --out " + (dir / "o").string()) == 1);
        CHECK(run_cli("spectrum --out " + (dir / "s").string()) == 1); // neither a model nor --untrained
        CHECK(run_cli("spectrum --untrained --out " + (dir / "s").string()) == 0);
        {
            std::ofstream coarse(dir / "coarse.cfg");
            coarse << "schema = 1\n[experiment]\nmap = circle\n[data]\ngrid_side = 1\n";
        }
        CHECK(run_cli("gen-data --config " + (dir / "coarse.cfg").string() + " --out " + (dir / "c").string()) == 1);
        {
            // One power iteration cannot converge: numerical failure with a diagnostic file.
            std::ofstream stall(dir / "stall.cfg");
            stall << "schema = 1\n[experiment]\nmap = cat\n[srb]\nmodes = 8\nquad_side = 16\n"
                     "analysis_side = 8\nmax_iterations = 1\n";
        }
        CHECK(run_cli("srb --config " + (dir / "stall.cfg").string() + " --out " + (dir / "n").string()) == 2);
        CHECK(fs::exists(dir / "n" / "diagnostic.txt"));
        fs::remove_all(dir);
    }
}
