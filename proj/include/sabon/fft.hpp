#pragma once

#include <complex>
#include <span>
#include <vector>

#include "sabon/function_space.hpp"

namespace sabon {

using Complex = std::complex<double>;

// Thin FFTW wrapper for the uniform grids used here. Data is laid out like
// FieldSample values: index i on the circle, i*m + j on the torus. Plans are
// created with FFTW_ESTIMATE so results are reproducible run to run.
std::vector<Complex> fft_forward(std::span<const Complex> data, GridKey grid);
std::vector<Complex> fft_inverse(std::span<const Complex> data, GridKey grid);

// f_hat_k = (1/n) sum_j f(x_j) e^{-2 pi i k.x_j}.
std::vector<Complex> fourier_coefficients(const FieldSample& u);
std::vector<Complex> fourier_coefficients(std::span<const Complex> values, GridKey grid);

// Integer frequency of FFT bin `index` on a grid of `side` points, folded to
// the symmetric range with the Nyquist bin at +side/2.
int folded_frequency(int index, int side);

// (1 + |k|^2)^{-1} for every FFT bin of the grid, same layout as the data.
std::vector<double> h_minus_one_weights(GridKey grid);

} // namespace sabon
