#include "sabon/fft.hpp"

#include <mutex>
#include <stdexcept>

#include <fftw3.h>

namespace sabon {

namespace {

// FFTW's planner is not thread-safe; execution with new-array execute is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

std::vector<Complex> transform(std::span<const Complex> data, GridKey grid, int sign) {
    if (data.size() != grid.size()) throw std::invalid_argument("fft: data size does not match grid");
    std::vector<Complex> in(data.begin(), data.end());
    std::vector<Complex> out(data.size());
    auto* fin = reinterpret_cast<fftw_complex*>(in.data());
    auto* fout = reinterpret_cast<fftw_complex*>(out.data());
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = grid.dim == 1 ? fftw_plan_dft_1d(grid.side, fin, fout, sign, FFTW_ESTIMATE)
                             : fftw_plan_dft_2d(grid.side, grid.side, fin, fout, sign, FFTW_ESTIMATE);
    }
    if (!plan) throw std::runtime_error("fft: planning failed");
    fftw_execute(plan);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

} // namespace

std::vector<Complex> fft_forward(std::span<const Complex> data, GridKey grid) {
    return transform(data, grid, FFTW_FORWARD);
}

std::vector<Complex> fft_inverse(std::span<const Complex> data, GridKey grid) {
    return transform(data, grid, FFTW_BACKWARD);
}

std::vector<Complex> fourier_coefficients(std::span<const Complex> values, GridKey grid) {
    std::vector<Complex> out = fft_forward(values, grid);
    const double inv_n = 1.0 / static_cast<double>(grid.size());
    for (Complex& c : out) c *= inv_n;
    return out;
}

std::vector<Complex> fourier_coefficients(const FieldSample& u) {
    std::vector<Complex> values(static_cast<std::size_t>(u.values.size()));
    for (Eigen::Index i = 0; i < u.values.size(); ++i) values[static_cast<std::size_t>(i)] = u.values[i];
    return fourier_coefficients(values, u.grid);
}

int folded_frequency(int index, int side) { return index <= side / 2 ? index : index - side; }

std::vector<double> h_minus_one_weights(GridKey grid) {
    std::vector<double> w(grid.size());
    if (grid.dim == 1) {
        for (int i = 0; i < grid.side; ++i) {
            const double k = folded_frequency(i, grid.side);
            w[static_cast<std::size_t>(i)] = 1.0 / (1.0 + k * k);
        }
        return w;
    }
    for (int i = 0; i < grid.side; ++i) {
        const double kx = folded_frequency(i, grid.side);
        for (int j = 0; j < grid.side; ++j) {
            const double ky = folded_frequency(j, grid.side);
            w[static_cast<std::size_t>(i) * grid.side + j] = 1.0 / (1.0 + kx * kx + ky * ky);
        }
    }
    return w;
}

} // namespace sabon
