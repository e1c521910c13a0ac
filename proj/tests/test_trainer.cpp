#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "sabon/errors.hpp"
#include "sabon/trainer.hpp"

using namespace sabon;

namespace {

TrainConfig tiny_circle(int epochs) {
    TrainConfig cfg = circle_preset(Scale::Desk);
    cfg.train_size = 40;
    cfg.validation_size = 20;
    cfg.test_size = 10;
    cfg.architecture.hidden = {16, 16};
    cfg.epochs = epochs;
    cfg.validation_every = 10;
    cfg.learning_rate = 3e-3;
    cfg.seed = 17;
    return cfg;
}

} // namespace

TEST_SUITE("trainer") {
    TEST_CASE("presets") {
        const TrainConfig c = circle_preset(Scale::Paper);
        CHECK(c.train_size == 1000);
        CHECK(c.validation_size == 500);
        CHECK(c.test_size == 100);
        CHECK(c.grid_side == 100);
        CHECK(c.order == 9);
        CHECK(c.architecture.parameter_count() == 1062268);
        const TrainConfig t = torus_preset(PerturbedCat{}, Scale::Paper);
        CHECK(t.train_size == 3000);
        CHECK(t.validation_size == 500);
        CHECK(t.test_size == 500);
        CHECK(t.k_step == 2);
        CHECK(t.architecture.basis_size == 324);
        CHECK(torus_preset(ConjugatedCat{}, Scale::Paper).architecture.basis_size == 676);
        CHECK_THROWS_AS(torus_preset(CircleRotation{}, Scale::Desk), ConfigError);
        for (const MapDescriptor& m : {MapDescriptor{CircleRotation{}}, MapDescriptor{PerturbedCat{}}, MapDescriptor{ConjugatedCat{}}}) {
            CHECK_NOTHROW(validate(preset_for(m, Scale::Paper)));
            CHECK_NOTHROW(validate(preset_for(m, Scale::Desk)));
        }
    }

    TEST_CASE("config validation") {
        TrainConfig bad = circle_preset(Scale::Desk);
        bad.architecture.input_dim = 4;
        CHECK_THROWS_AS(validate(bad), ConfigError);
        bad = circle_preset(Scale::Desk);
        bad.learning_rate = 0.0;
        CHECK_THROWS_AS(validate(bad), ConfigError);
        bad = circle_preset(Scale::Desk);
        bad.map = ConjugatedCat{0.01, 0.2, 0.1};
        CHECK_THROWS_AS(validate(bad), ConfigError);
        TrainConfig no_kstep = circle_preset(Scale::Desk);
        no_kstep.loss.beta3 = 1.0; // ignored when k = 0
        CHECK_NOTHROW(validate(no_kstep));
    }

    TEST_CASE("circle dataset at paper scale") {
        const TrainConfig cfg = circle_preset(Scale::Paper);
        const Dataset data = build_dataset(cfg);
        CHECK(data.train.size() == 1000);
        CHECK(data.validation.size() == 500);
        CHECK(data.test.size() == 100);
        CHECK(data.train.inputs.rows() == 100);
        CHECK(data.train.kstep_targets.size() == 0);
        CHECK(data.train.coefficients.rows() == 19);
        CHECK(data.order == 9);

        std::set<std::string> seen;
        for (const Split* s : {&data.train, &data.validation, &data.test}) {
            for (const std::string& h : s->coefficient_hashes) CHECK(seen.insert(h).second);
        }
        CHECK(build_dataset(cfg).hash() == data.hash());
        TrainConfig other = cfg;
        other.seed = 1;
        CHECK(build_dataset(other).hash() != data.hash());
    }

    TEST_CASE("torus dataset carries k-step targets on the full grid") {
        TrainConfig cfg = torus_preset(PerturbedCat{}, Scale::Paper);
        cfg.train_size = 4;
        cfg.validation_size = 2;
        cfg.test_size = 2;
        const Dataset data = build_dataset(cfg);
        CHECK(data.train.inputs.rows() == 10000);
        CHECK(data.train.kstep_targets.rows() == 10000);
        CHECK(data.train.kstep_targets.cols() == 4);
        CHECK(data.train.coefficients.rows() == 121);
        CHECK(data.k_step == 2);
        // Columns agree with direct evaluation of the stored coefficients.
        TrigPoly p{2, 5, {}};
        p.coeffs.assign(data.test.coefficients.col(1).data(), data.test.coefficients.col(1).data() + 121);
        const Grid grid = build_grid(2, 100);
        CHECK((transfer_apply(PerturbedCat{}, p, grid, 2).values - data.test.kstep_targets.col(1)).norm() == 0.0);
    }

    TEST_CASE("dataset container round trip") {
        const TrainConfig cfg = tiny_circle(0);
        const Dataset data = build_dataset(cfg);
        std::stringstream buf;
        save_dataset(buf, data);
        const std::string bytes = buf.str();
        const Dataset back = load_dataset(buf);
        CHECK(back.hash() == data.hash());
        CHECK(back.map == data.map);
        CHECK(back.seed == 17);
        CHECK(back.train.inputs == data.train.inputs);
        CHECK(back.test.coefficients == data.test.coefficients);
        std::stringstream again;
        save_dataset(again, back);
        CHECK(again.str() == bytes);

        std::string corrupt = bytes;
        corrupt[corrupt.size() / 2] ^= 0x01;
        std::stringstream bad(corrupt);
        CHECK_THROWS(load_dataset(bad));
    }

    TEST_CASE("evaluation of synthetic models") {
        const TrainConfig cfg = tiny_circle(0);
        const Dataset data = build_dataset(cfg);
        const Grid grid = build_grid(1, 100);
        SeedStream rng(3);
        SabonModel<double> zero = init_model<double>(cfg.architecture, cfg.loss, 0, rng);
        zero.weights.back().setZero();
        CHECK(evaluate(zero, grid, data.test) == 1.0);

        SabonModel<double> null_latent = init_model<double>(cfg.architecture, cfg.loss, 0, rng);
        null_latent.latent.setZero();
        CHECK(evaluate(null_latent, grid, data.test) == 1.0);

        // First harmonics are an invariant subspace of the rotation: a linear
        // encoder producing sqrt(2) cos, sqrt(2) sin and the rotation as G is exact.
        SabonModel<double> perfect;
        perfect.weights = {std::sqrt(2.0) * Eigen::MatrixXd::Identity(2, 2)};
        perfect.biases = {Eigen::VectorXd::Zero(2)};
        perfect.latent.resize(2, 2);
        perfect.latent << std::cos(1.0), std::sin(1.0), -std::sin(1.0), std::cos(1.0);
        Split harmonic;
        harmonic.inputs.resize(100, 2);
        harmonic.targets.resize(100, 2);
        for (Eigen::Index i = 0; i < 100; ++i) {
            const double th = grid.points[static_cast<std::size_t>(i)][0];
            harmonic.inputs.row(i) << std::cos(th), std::sin(th) + 0.5 * std::cos(th);
            harmonic.targets.row(i) << std::cos(th + 1), std::sin(th + 1) + 0.5 * std::cos(th + 1);
        }
        CHECK(evaluate(perfect, grid, harmonic) <= 1e-14);
    }

    TEST_CASE("zero epochs echo the initial model") {
        const TrainConfig cfg = tiny_circle(0);
        const Dataset data = build_dataset(cfg);
        const RunReport r = train(cfg, data);
        CHECK(r.curve.empty());
        CHECK(r.best_epoch == 0);
        SeedStream root(cfg.seed);
        SeedStream init = root.split(4);
        const SabonModel<float> fresh = init_model<float>(cfg.architecture, cfg.loss, cfg.k_step, init);
        for (std::size_t l = 0; l < fresh.layer_count(); ++l) CHECK(r.model.weights[l] == fresh.weights[l]);
        CHECK(r.test_error == evaluate(fresh, build_grid(1, 100), data.test));
        CHECK(r.adam.step == 0);
    }

    TEST_CASE("training reduces the error and best-so-far selection is monotone in the budget") {
        const Dataset data = build_dataset(tiny_circle(0));
        const RunReport shortrun = train(tiny_circle(60), data);
        const RunReport longrun = train(tiny_circle(120), data);
        CHECK(shortrun.curve.size() == 60);
        CHECK(longrun.best_validation_e1 <= shortrun.best_validation_e1);
        CHECK(shortrun.best_validation_e1 < 1.0);
        CHECK(longrun.test_error < 1.0);
        // Identical prefixes: training is deterministic.
        for (std::size_t e = 0; e < shortrun.curve.size(); ++e) {
            CHECK(shortrun.curve[e].train_loss == longrun.curve[e].train_loss);
        }
        std::ostringstream csv;
        write_curve_csv(csv, shortrun);
        CHECK(csv.str().rfind("epoch,train_loss,train_e1,validation_e1\r\n", 0) == 0);
    }

    TEST_CASE("cosine schedule") {
        TrainConfig cfg = tiny_circle(100);
        CHECK(scheduled_learning_rate(cfg, 50) == cfg.learning_rate);
        cfg.cosine_schedule = true;
        CHECK(scheduled_learning_rate(cfg, 0) == doctest::Approx(cfg.learning_rate));
        CHECK(scheduled_learning_rate(cfg, 50) == doctest::Approx(cfg.learning_rate / 2));
        CHECK(scheduled_learning_rate(cfg, 99) < 1e-5);
    }

    TEST_CASE("mismatched datasets are rejected") {
        const Dataset data = build_dataset(tiny_circle(0));
        TrainConfig cfg = tiny_circle(1);
        cfg.grid_side = 50;
        CHECK_THROWS_AS(train(cfg, data), GridMismatch);
    }
}
