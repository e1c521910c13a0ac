#include <doctest.h>

#include <cmath>
#include <random>

#include "sabon/dynamics.hpp"
#include "sabon/errors.hpp"
#include "oracles.hpp"

using namespace sabon;
using namespace oracle;

TEST_SUITE("dynamics") {
    TEST_CASE("state points are stored reduced") {
        const StatePoint p = StatePoint::torus(1.25, -0.25);
        CHECK(p[0] == doctest::Approx(0.25));
        CHECK(p[1] == doctest::Approx(0.75));
        const StatePoint q = StatePoint::angle(-1.0);
        CHECK(q[0] == doctest::Approx(kTwoPi - 1.0));
        CHECK(StatePoint::torus(1.0, 0.0)[0] == 0.0);
        CHECK(wrap_periodic(-1e-18, 1.0) < 1.0);
    }

    TEST_CASE("circle rotation forward and inverse") {
        const MapDescriptor map = CircleRotation{};
        CHECK(forward_map(map, StatePoint::angle(0.0))[0] == doctest::Approx(kTwoPi - 1.0).epsilon(1e-15));
        CHECK(inverse_map(map, StatePoint::angle(1.0))[0] == doctest::Approx(2.0).epsilon(1e-15));
        CHECK(jacobian_det(map, StatePoint::angle(0.3)) == 1.0);
    }

    TEST_CASE("linear cat map fixed point, inverse and unit determinant") {
        const MapDescriptor map = PerturbedCat{0.0};
        const StatePoint origin = forward_map(map, StatePoint::torus(0, 0));
        CHECK(origin[0] == 0.0);
        CHECK(origin[1] == 0.0);
        const StatePoint x = inverse_map(map, StatePoint::torus(0.5, 0.0));
        CHECK(std::abs(torus_delta(x[0], 0.5)) < 1e-14);
        CHECK(std::abs(torus_delta(x[1], 0.5)) < 1e-14);
        for (const StatePoint& p : random_torus_points(20, 1)) CHECK(jacobian_det(map, p) == doctest::Approx(1.0));
        const InverseOrbit orbit = inverse_orbit_weight(map, StatePoint::torus(0, 0), 3);
        CHECK(periodic_distance(orbit.point, StatePoint::torus(0, 0)) < 1e-14);
        CHECK(orbit.weight == doctest::Approx(1.0));
    }

    TEST_CASE("perturbed cat matches an extended-precision evaluation") {
        const double delta = 0.01;
        const StatePoint y = forward_map(PerturbedCat{delta}, StatePoint::torus(0.25, 0.5));
        const auto [u, v] = cat_reference(0.25L, 0.5L, delta);
        CHECK(std::abs(torus_delta(y[0], static_cast<double>(u))) < 1e-15);
        CHECK(std::abs(torus_delta(y[1], static_cast<double>(v))) < 1e-15);
        for (const StatePoint& p : random_torus_points(200, 2)) {
            const StatePoint q = forward_map(PerturbedCat{delta}, p);
            const auto [ru, rv] = cat_reference(p[0], p[1], delta);
            CHECK(std::abs(torus_delta(q[0], static_cast<double>(ru))) < 1e-14);
            CHECK(std::abs(torus_delta(q[1], static_cast<double>(rv))) < 1e-14);
        }
    }

    TEST_CASE("Newton inverse round trip on 10^4 points for every map") {
        const std::vector<MapDescriptor> maps{CircleRotation{}, PerturbedCat{}, ConjugatedCat{}};
        for (const MapDescriptor& map : maps) {
            double worst = 0.0;
            if (intrinsic_dim(map) == 1) {
                std::mt19937_64 rng(3);
                std::uniform_real_distribution<double> u(0.0, kTwoPi);
                for (int i = 0; i < 10000; ++i) {
                    const StatePoint y = StatePoint::angle(u(rng));
                    worst = std::max(worst, periodic_distance(forward_map(map, inverse_map(map, y)), y));
                }
            } else {
                for (const StatePoint& y : random_torus_points(10000, 4)) {
                    worst = std::max(worst, periodic_distance(forward_map(map, inverse_map(map, y)), y));
                }
            }
            INFO(map_name(map));
            CHECK(worst <= 1e-10);
        }
    }

    TEST_CASE("inverse_map reports non-convergence") {
        CHECK_THROWS_AS(inverse_map(PerturbedCat{}, StatePoint::torus(0.3, 0.7), 1e-30, 2), NonConvergence);
    }

    TEST_CASE("Jacobian determinants agree with finite differences") {
        const std::vector<MapDescriptor> maps{PerturbedCat{}, ConjugatedCat{}};
        for (const MapDescriptor& map : maps) {
            double worst = 0.0;
            for (const StatePoint& p : random_torus_points(100, 5)) {
                const double exact = jacobian_det(map, p);
                CHECK(exact > 0.0);
                worst = std::max(worst, std::abs(exact - fd_det(map, p, 1, 1e-6)) / exact);
            }
            INFO(map_name(map));
            CHECK(worst <= 1e-6);
        }
    }

    TEST_CASE("two-step inverse orbit weight matches the twice-iterated map") {
        const MapDescriptor map = PerturbedCat{};
        double worst = 0.0;
        for (const StatePoint& y : random_torus_points(50, 6)) {
            const InverseOrbit orbit = inverse_orbit_weight(map, y, 2);
            const double fd = fd_det(map, orbit.point, 2, 1e-6);
            worst = std::max(worst, std::abs(orbit.weight - fd) / fd);
            // One step equals inverse_map plus jacobian_det.
            const InverseOrbit one = inverse_orbit_weight(map, y, 1);
            const StatePoint x = inverse_map(map, y);
            CHECK(periodic_distance(one.point, x) == 0.0);
            CHECK(one.weight == jacobian_det(map, x));
        }
        CHECK(worst <= 1e-5);
    }

    TEST_CASE("conjugated map equals F^{-1} o T o F") {
        const ConjugatedCat conj{};
        const MapDescriptor map = conj;
        for (const StatePoint& z : random_torus_points(1000, 7)) {
            const StatePoint direct = forward_map(map, z);
            const StatePoint via = inverse_conjugacy(conj, forward_map(PerturbedCat{conj.delta}, conjugacy(conj, z)));
            CHECK(periodic_distance(direct, via) <= 1e-10);
            CHECK(periodic_distance(inverse_conjugacy(conj, conjugacy(conj, z)), z) <= 1e-13);
        }
    }

    TEST_CASE("conjugacy components are strictly increasing") {
        const ConjugatedCat conj{};
        double prev_x = -1.0;
        double prev_y = -1.0;
        for (int i = 0; i <= 2000; ++i) {
            const double t = i / 2000.0;
            const double fx = t - conj.a * std::sin(kTwoPi * t);
            const double fy = t + conj.b * std::sin(kTwoPi * t + std::numbers::pi / 4);
            CHECK(fx > prev_x);
            CHECK(fy > prev_y);
            prev_x = fx;
            prev_y = fy;
        }
        CHECK_THROWS_AS(validate(MapDescriptor{ConjugatedCat{0.01, 0.2, 0.1}}), std::invalid_argument);
    }

    TEST_CASE("embeddings") {
        const Eigen::VectorXd c = embed_state(StatePoint::angle(0.0));
        CHECK(c.size() == 2);
        CHECK(c[0] == 1.0);
        CHECK(c[1] == 0.0);
        const Eigen::VectorXd t = embed_state(StatePoint::torus(0.0, 0.25));
        CHECK(t.size() == 4);
        CHECK(t[0] == doctest::Approx(1.0));
        CHECK(std::abs(t[1]) < 1e-15);
        CHECK(std::abs(t[2]) < 1e-15);
        CHECK(t[3] == doctest::Approx(1.0));
        for (const StatePoint& p : random_torus_points(100, 8)) {
            const Eigen::VectorXd e = embed_state(p);
            CHECK(std::abs(e[0] * e[0] + e[1] * e[1] - 1.0) < 1e-15);
            CHECK(std::abs(e[2] * e[2] + e[3] * e[3] - 1.0) < 1e-15);
        }
    }
}
