#pragma once

#include <array>
#include <numbers>
#include <string>
#include <variant>

#include <Eigen/Core>

namespace sabon {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Reduce v into the half-open interval [0, period).
double wrap_periodic(double v, double period);

// A point of the circle (one angle in [0, 2pi)) or of the 2-torus (two
// coordinates in [0, 1)). Coordinates are always stored reduced.
class StatePoint {
public:
    StatePoint() = default;

    static StatePoint angle(double theta);
    static StatePoint torus(double x, double y);

    int dim() const { return dim_; }
    double operator[](int i) const { return coords_[static_cast<std::size_t>(i)]; }
    // Period of every coordinate: 2pi on the circle, 1 on the torus.
    double period() const { return dim_ == 1 ? kTwoPi : 1.0; }

    bool operator==(const StatePoint&) const = default;

private:
    std::array<double, 2> coords_{0.0, 0.0};
    int dim_ = 1;
};

// Largest per-coordinate distance on the circle/torus metric.
double periodic_distance(const StatePoint& a, const StatePoint& b);

struct CircleRotation {
    double alpha = -1.0;
};

struct PerturbedCat {
    double delta = 0.01;
};

// F^{-1} o T o F with T the perturbed cat map and
// F(x, y) = (x - a sin 2pi x, y + b sin(2pi y + pi/4)).
struct ConjugatedCat {
    double delta = 0.01;
    double a = 0.1;
    double b = 0.1;
};

using MapDescriptor = std::variant<CircleRotation, PerturbedCat, ConjugatedCat>;

// Throws std::invalid_argument when the parameters leave the invertible range
// (|a|, |b| must stay below 1/(2pi) for the conjugacy).
void validate(const MapDescriptor& map);

int intrinsic_dim(const MapDescriptor& map);
std::string map_name(const MapDescriptor& map);

inline constexpr double kDefaultInverseTol = 1e-12;
inline constexpr int kDefaultNewtonIterations = 50;

StatePoint forward_map(const MapDescriptor& map, const StatePoint& x);

// Newton on the lifted map, seeded at the linear cat inverse. Throws
// NonConvergence after max_iterations.
StatePoint inverse_map(const MapDescriptor& map, const StatePoint& y,
                       double tol = kDefaultInverseTol,
                       int max_iterations = kDefaultNewtonIterations);

// |det DT(x)|.
double jacobian_det(const MapDescriptor& map, const StatePoint& x);

struct InverseOrbit {
    StatePoint point;  // T^{-k}(y)
    double weight = 1; // prod_{j=1..k} |det DT(T^{-j} y)|
};

// (L^k f)(y) = f(T^{-k} y) / weight.
InverseOrbit inverse_orbit_weight(const MapDescriptor& map, const StatePoint& y, int k);

// Circle -> (cos, sin); torus -> (cos 2pi x, sin 2pi x, cos 2pi y, sin 2pi y).
Eigen::VectorXd embed_state(const StatePoint& x);
int ambient_dim(int intrinsic_dim);

// Conjugacy helpers for ConjugatedCat.
StatePoint conjugacy(const ConjugatedCat& map, const StatePoint& z);
StatePoint inverse_conjugacy(const ConjugatedCat& map, const StatePoint& w);
double conjugacy_det(const ConjugatedCat& map, const StatePoint& z);

} // namespace sabon
