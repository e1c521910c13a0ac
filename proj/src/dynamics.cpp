#include "sabon/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sabon/errors.hpp"

namespace sabon {

namespace {

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};

// Signed distance to the nearest integer.
double frac_residual(double v) { return v - std::nearbyint(v); }

struct Lifted {
    double x;
    double y;
};

Lifted cat_lifted(double delta, double x, double y) {
    return {2.0 * x + y + 2.0 * delta * std::cos(kTwoPi * x),
            x + y + delta * std::sin(4.0 * kPi * y + 1.0)};
}

// Partial derivatives of the lifted perturbed cat map; off-diagonal entries are 1.
struct CatJacobian {
    double dxdx;
    double dydy;
    double det() const { return dxdx * dydy - 1.0; }
};

CatJacobian cat_jacobian(double delta, double x, double y) {
    return {2.0 - 4.0 * kPi * delta * std::sin(kTwoPi * x),
            1.0 + 4.0 * kPi * delta * std::cos(4.0 * kPi * y + 1.0)};
}

StatePoint cat_forward(double delta, const StatePoint& p) {
    auto [x, y] = cat_lifted(delta, p[0], p[1]);
    return StatePoint::torus(x, y);
}

StatePoint cat_inverse(double delta, const StatePoint& target, double tol, int max_iterations) {
    // Seed with the inverse of [[2,1],[1,1]].
    double x = wrap_periodic(target[0] - target[1], 1.0);
    double y = wrap_periodic(-target[0] + 2.0 * target[1], 1.0);
    for (int it = 0; it <= max_iterations; ++it) {
        auto [fx, fy] = cat_lifted(delta, x, y);
        const double rx = frac_residual(fx - target[0]);
        const double ry = frac_residual(fy - target[1]);
        if (std::max(std::abs(rx), std::abs(ry)) <= tol) {
            return StatePoint::torus(x, y);
        }
        if (it == max_iterations) break;
        const CatJacobian j = cat_jacobian(delta, x, y);
        const double det = j.det();
        x -= (j.dydy * rx - ry) / det;
        y -= (-rx + j.dxdx * ry) / det;
    }
    throw NonConvergence("perturbed cat inverse: Newton did not reach tolerance");
}

// Solves u + c sin(2pi u + phase) = v on the circle of unit length. The map is
// strictly increasing for |c| < 1/(2pi), so the root is bracketed by v -/+ |c|.
double invert_circle_diffeo(double c, double phase, double v, double tol) {
    auto h = [&](double u) { return u + c * std::sin(kTwoPi * u + phase) - v; };
    double lo = v - std::abs(c);
    double hi = v + std::abs(c);
    double u = v;
    for (int it = 0; it < 200; ++it) {
        const double r = h(u);
        if (std::abs(r) <= tol) return wrap_periodic(u, 1.0);
        if (r > 0.0) {
            hi = u;
        } else {
            lo = u;
        }
        const double slope = 1.0 + kTwoPi * c * std::cos(kTwoPi * u + phase);
        double next = u - r / slope;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (hi - lo < 1e-16) return wrap_periodic(next, 1.0);
        u = next;
    }
    throw NonConvergence("conjugacy inverse: 1D Newton did not converge");
}

constexpr double kConjugacyTol = 1e-14;

} // namespace

double wrap_periodic(double v, double period) {
    double r = std::fmod(v, period);
    if (r < 0.0) r += period;
    if (r >= period) r = 0.0;
    return r;
}

StatePoint StatePoint::angle(double theta) {
    StatePoint p;
    p.dim_ = 1;
    p.coords_ = {wrap_periodic(theta, kTwoPi), 0.0};
    return p;
}

StatePoint StatePoint::torus(double x, double y) {
    StatePoint p;
    p.dim_ = 2;
    p.coords_ = {wrap_periodic(x, 1.0), wrap_periodic(y, 1.0)};
    return p;
}

double periodic_distance(const StatePoint& a, const StatePoint& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("periodic_distance: dimension mismatch");
    const double period = a.period();
    double worst = 0.0;
    for (int i = 0; i < a.dim(); ++i) {
        double d = std::abs(a[i] - b[i]);
        d = std::min(d, period - d);
        worst = std::max(worst, d);
    }
    return worst;
}

void validate(const MapDescriptor& map) {
    if (const auto* conj = std::get_if<ConjugatedCat>(&map)) {
        const double limit = 1.0 / kTwoPi;
        if (!(std::abs(conj->a) < limit) || !(std::abs(conj->b) < limit)) {
            throw std::invalid_argument("conjugated cat: |a| and |b| must be below 1/(2pi)");
        }
    }
}

int intrinsic_dim(const MapDescriptor& map) {
    return std::holds_alternative<CircleRotation>(map) ? 1 : 2;
}

std::string map_name(const MapDescriptor& map) {
    return std::visit(Overloaded{[](const CircleRotation&) { return std::string("circle"); },
                                 [](const PerturbedCat&) { return std::string("cat"); },
                                 [](const ConjugatedCat&) { return std::string("conjugated-cat"); }},
                      map);
}

StatePoint conjugacy(const ConjugatedCat& map, const StatePoint& z) {
    return StatePoint::torus(z[0] - map.a * std::sin(kTwoPi * z[0]),
                             z[1] + map.b * std::sin(kTwoPi * z[1] + kPi / 4.0));
}

StatePoint inverse_conjugacy(const ConjugatedCat& map, const StatePoint& w) {
    return StatePoint::torus(invert_circle_diffeo(-map.a, 0.0, w[0], kConjugacyTol),
                             invert_circle_diffeo(map.b, kPi / 4.0, w[1], kConjugacyTol));
}

double conjugacy_det(const ConjugatedCat& map, const StatePoint& z) {
    return std::abs((1.0 - kTwoPi * map.a * std::cos(kTwoPi * z[0])) *
                    (1.0 + kTwoPi * map.b * std::cos(kTwoPi * z[1] + kPi / 4.0)));
}

StatePoint forward_map(const MapDescriptor& map, const StatePoint& x) {
    return std::visit(
        Overloaded{
            [&](const CircleRotation& m) { return StatePoint::angle(x[0] + m.alpha); },
            [&](const PerturbedCat& m) { return cat_forward(m.delta, x); },
            [&](const ConjugatedCat& m) {
                return inverse_conjugacy(m, cat_forward(m.delta, conjugacy(m, x)));
            }},
        map);
}

StatePoint inverse_map(const MapDescriptor& map, const StatePoint& y, double tol,
                       int max_iterations) {
    if (!(tol > 0.0)) throw std::invalid_argument("inverse_map: tol must be positive");
    return std::visit(
        Overloaded{
            [&](const CircleRotation& m) { return StatePoint::angle(y[0] - m.alpha); },
            [&](const PerturbedCat& m) { return cat_inverse(m.delta, y, tol, max_iterations); },
            [&](const ConjugatedCat& m) {
                const StatePoint pre = cat_inverse(m.delta, conjugacy(m, y), tol, max_iterations);
                return inverse_conjugacy(m, pre);
            }},
        map);
}

double jacobian_det(const MapDescriptor& map, const StatePoint& x) {
    return std::visit(
        Overloaded{[&](const CircleRotation&) { return 1.0; },
                   [&](const PerturbedCat& m) {
                       return std::abs(cat_jacobian(m.delta, x[0], x[1]).det());
                   },
                   [&](const ConjugatedCat& m) {
                       const StatePoint fz = conjugacy(m, x);
                       const StatePoint image = inverse_conjugacy(m, cat_forward(m.delta, fz));
                       const double cat = std::abs(cat_jacobian(m.delta, fz[0], fz[1]).det());
                       return cat * conjugacy_det(m, x) / conjugacy_det(m, image);
                   }},
        map);
}

InverseOrbit inverse_orbit_weight(const MapDescriptor& map, const StatePoint& y, int k) {
    if (k < 1) throw std::invalid_argument("inverse_orbit_weight: k must be >= 1");
    InverseOrbit orbit{y, 1.0};
    for (int j = 0; j < k; ++j) {
        orbit.point = inverse_map(map, orbit.point);
        orbit.weight *= jacobian_det(map, orbit.point);
    }
    return orbit;
}

int ambient_dim(int intrinsic) { return 2 * intrinsic; }

Eigen::VectorXd embed_state(const StatePoint& x) {
    if (x.dim() == 1) {
        return Eigen::Vector2d(std::cos(x[0]), std::sin(x[0]));
    }
    Eigen::VectorXd e(4);
    e << std::cos(kTwoPi * x[0]), std::sin(kTwoPi * x[0]), std::cos(kTwoPi * x[1]),
        std::sin(kTwoPi * x[1]);
    return e;
}

} // namespace sabon
