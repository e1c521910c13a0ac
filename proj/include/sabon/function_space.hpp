#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sabon/dynamics.hpp"

namespace sabon {

// Identifies a uniform grid; FieldSamples on different keys cannot be mixed.
struct GridKey {
    int dim = 1;
    int side = 0;
    bool operator==(const GridKey&) const = default;
    std::size_t size() const {
        return dim == 1 ? static_cast<std::size_t>(side)
                        : static_cast<std::size_t>(side) * static_cast<std::size_t>(side);
    }
};

// Uniform corner-node grid: theta_i = 2pi i/m on the circle, (i/m, j/m) on the
// torus with point index i*m + j (x varies slowest).
struct Grid {
    GridKey key;
    std::vector<StatePoint> points;
    Eigen::MatrixXd embedded; // n x ambient_dim

    std::size_t size() const { return points.size(); }
    int dim() const { return key.dim; }
    int side() const { return key.side; }
};

Grid build_grid(int dim, int side);

// Values of an observable on a grid.
struct FieldSample {
    GridKey grid;
    Eigen::VectorXd values;
};

// Splittable deterministic random stream. Children derived with split() are
// independent of each other and of the parent's subsequent draws.
class SeedStream {
public:
    explicit SeedStream(std::uint64_t seed);

    SeedStream split(std::uint64_t tag) const;
    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }
    // Uniform on [0, 1) with 53 random bits; platform independent.
    double uniform01();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    // Standard normal via Box-Muller on uniform01 draws.
    double normal();

    std::mt19937_64& engine() { return engine_; }
    const std::mt19937_64& engine() const { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

// Tensor-product trigonometric polynomial. The per-dimension dictionary is
// index 0..K -> cos(k s), index K+1..2K -> sin((index-K) s), where s is the
// angle on the circle or 2pi x on the unit torus. Coefficients are stored with
// the first coordinate's dictionary index varying slowest.
struct TrigPoly {
    int dim = 1;
    int order = 1;
    std::vector<double> coeffs;

    int terms_per_dim() const { return 2 * order + 1; }
    std::size_t size() const { return coeffs.size(); }
};

TrigPoly sample_trig_poly(SeedStream& rng, int dim, int order);

// Dictionary values for one coordinate (already scaled to an angle).
void trig_dictionary(double angle, int order, std::span<double> out);

double eval_trig_poly(const TrigPoly& p, const StatePoint& x);

// Precomputed inverse orbits T^{-k}(x_i) and weights on a grid.
struct PreimageTable {
    GridKey grid;
    int steps = 1;
    std::vector<StatePoint> points;
    Eigen::VectorXd weights;
};

PreimageTable build_preimage_table(const MapDescriptor& map, const Grid& grid, int k,
                                   int threads = 1);

// (L^k p)(x_i) = p(T^{-k} x_i) / w_i.
FieldSample transfer_apply(const MapDescriptor& map, const TrigPoly& p, const Grid& grid, int k);
FieldSample transfer_apply(const TrigPoly& p, const PreimageTable& table);

// (K p)(x_i) = p(T(x_i)).
FieldSample koopman_apply(const MapDescriptor& map, const TrigPoly& p, const Grid& grid);

FieldSample sample_field(const TrigPoly& p, const Grid& grid);

// (1/n) sum_i u_i v_i. Throws GridMismatch.
double inner_product(const FieldSample& u, const FieldSample& v);

struct DiscreteNorms {
    double l2 = 0;
    double l1 = 0;
};

DiscreteNorms discrete_norms(const FieldSample& u);

} // namespace sabon
