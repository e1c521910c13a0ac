#include "sabon/function_space.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "sabon/errors.hpp"
#include "sabon/parallel.hpp"

namespace sabon {

Grid build_grid(int dim, int side) {
    if (dim != 1 && dim != 2) throw std::invalid_argument("build_grid: dim must be 1 or 2");
    if (side < 2) throw std::invalid_argument("build_grid: side must be >= 2");
    Grid grid;
    grid.key = {dim, side};
    const std::size_t n = grid.key.size();
    grid.points.reserve(n);
    if (dim == 1) {
        for (int i = 0; i < side; ++i) grid.points.push_back(StatePoint::angle(kTwoPi * i / side));
    } else {
        for (int i = 0; i < side; ++i) {
            for (int j = 0; j < side; ++j) {
                grid.points.push_back(
                    StatePoint::torus(static_cast<double>(i) / side, static_cast<double>(j) / side));
            }
        }
    }
    grid.embedded.resize(static_cast<Eigen::Index>(n), ambient_dim(dim));
    for (std::size_t p = 0; p < n; ++p) {
        grid.embedded.row(static_cast<Eigen::Index>(p)) = embed_state(grid.points[p]).transpose();
    }
    return grid;
}

SeedStream::SeedStream(std::uint64_t seed) : seed_(seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    engine_.seed(seq);
}

SeedStream SeedStream::split(std::uint64_t tag) const {
    // splitmix64 finaliser over (seed, tag) keeps child streams decorrelated.
    std::uint64_t z = seed_ ^ (0x9E3779B97F4A7C15ULL * (tag + 1));
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return SeedStream(z);
}

double SeedStream::uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double SeedStream::normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

TrigPoly sample_trig_poly(SeedStream& rng, int dim, int order) {
    if (order < 1) throw std::invalid_argument("sample_trig_poly: order must be >= 1");
    if (dim != 1 && dim != 2) throw std::invalid_argument("sample_trig_poly: dim must be 1 or 2");
    TrigPoly p;
    p.dim = dim;
    p.order = order;
    std::size_t count = static_cast<std::size_t>(p.terms_per_dim());
    if (dim == 2) count *= static_cast<std::size_t>(p.terms_per_dim());
    p.coeffs.resize(count);
    for (double& c : p.coeffs) c = rng.uniform(-1.0, 1.0);
    return p;
}

void trig_dictionary(double angle, int order, std::span<double> out) {
    out[0] = 1.0;
    for (int k = 1; k <= order; ++k) {
        out[static_cast<std::size_t>(k)] = std::cos(k * angle);
        out[static_cast<std::size_t>(order + k)] = std::sin(k * angle);
    }
}

double eval_trig_poly(const TrigPoly& p, const StatePoint& x) {
    if (x.dim() != p.dim) throw std::invalid_argument("eval_trig_poly: dimension mismatch");
    const std::size_t t = static_cast<std::size_t>(p.terms_per_dim());
    // Largest supported dictionary is bounded by the stack buffer below.
    constexpr std::size_t kMaxTerms = 129;
    if (t > kMaxTerms) throw std::invalid_argument("eval_trig_poly: order too large");
    std::array<double, kMaxTerms> first{};
    const double scale = p.dim == 1 ? 1.0 : kTwoPi;
    trig_dictionary(scale * x[0], p.order, std::span(first.data(), t));
    if (p.dim == 1) {
        double s = 0.0;
        for (std::size_t a = 0; a < t; ++a) s += p.coeffs[a] * first[a];
        return s;
    }
    std::array<double, kMaxTerms> second{};
    trig_dictionary(scale * x[1], p.order, std::span(second.data(), t));
    double s = 0.0;
    for (std::size_t a = 0; a < t; ++a) {
        double row = 0.0;
        for (std::size_t b = 0; b < t; ++b) row += p.coeffs[a * t + b] * second[b];
        s += first[a] * row;
    }
    return s;
}

PreimageTable build_preimage_table(const MapDescriptor& map, const Grid& grid, int k,
                                   int threads) {
    if (k < 1) throw std::invalid_argument("build_preimage_table: k must be >= 1");
    PreimageTable table;
    table.grid = grid.key;
    table.steps = k;
    table.points.resize(grid.size());
    table.weights.resize(static_cast<Eigen::Index>(grid.size()));
    parallel_for(grid.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const InverseOrbit orbit = inverse_orbit_weight(map, grid.points[i], k);
            table.points[i] = orbit.point;
            table.weights[static_cast<Eigen::Index>(i)] = orbit.weight;
        }
    });
    return table;
}

FieldSample transfer_apply(const TrigPoly& p, const PreimageTable& table) {
    FieldSample out{table.grid, Eigen::VectorXd(static_cast<Eigen::Index>(table.points.size()))};
    for (std::size_t i = 0; i < table.points.size(); ++i) {
        const auto idx = static_cast<Eigen::Index>(i);
        out.values[idx] = eval_trig_poly(p, table.points[i]) / table.weights[idx];
    }
    return out;
}

FieldSample transfer_apply(const MapDescriptor& map, const TrigPoly& p, const Grid& grid, int k) {
    return transfer_apply(p, build_preimage_table(map, grid, k));
}

FieldSample koopman_apply(const MapDescriptor& map, const TrigPoly& p, const Grid& grid) {
    FieldSample out{grid.key, Eigen::VectorXd(static_cast<Eigen::Index>(grid.size()))};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out.values[static_cast<Eigen::Index>(i)] = eval_trig_poly(p, forward_map(map, grid.points[i]));
    }
    return out;
}

FieldSample sample_field(const TrigPoly& p, const Grid& grid) {
    FieldSample out{grid.key, Eigen::VectorXd(static_cast<Eigen::Index>(grid.size()))};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out.values[static_cast<Eigen::Index>(i)] = eval_trig_poly(p, grid.points[i]);
    }
    return out;
}

double inner_product(const FieldSample& u, const FieldSample& v) {
    if (!(u.grid == v.grid) || u.values.size() != v.values.size()) {
        throw GridMismatch("inner_product: fields live on different grids");
    }
    return u.values.dot(v.values) / static_cast<double>(u.values.size());
}

DiscreteNorms discrete_norms(const FieldSample& u) {
    const double n = static_cast<double>(u.values.size());
    return {std::sqrt(u.values.squaredNorm() / n), u.values.cwiseAbs().sum() / n};
}

} // namespace sabon
