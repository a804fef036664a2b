#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

// Thin FFTW wrapper. Plans are cached per size and shared between threads;
// plan creation is serialized internally.
namespace leakaudit::fft {

using Complex = std::complex<double>;

// Smallest n' >= n whose prime factors are all in {2, 3, 5, 7}.
std::size_t next_fast_size(std::size_t n);

// Real-to-half-complex transform of x zero-padded to n_fft. Returns
// n_fft/2 + 1 bins, unnormalized.
std::vector<Complex> forward_real(std::span<const double> x, std::size_t n_fft);

// Inverse of forward_real, normalized by 1/n_fft.
std::vector<double> inverse_real(std::span<const Complex> half_spectrum, std::size_t n_fft);

// Full complex inverse transform, normalized by 1/n.
std::vector<Complex> inverse_complex(std::span<const Complex> spectrum);

} // namespace leakaudit::fft
