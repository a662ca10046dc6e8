// derevb/fft.hpp

// Copyright 2026  The derevb authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DEREVB_FFT_HPP
#define DEREVB_FFT_HPP

#include <complex>
#include <cstddef>
#include <vector>

namespace derevb::fft {

std::size_t next_pow2(std::size_t n);
bool is_pow2(std::size_t n);

// In-place iterative radix-2 transform; size must be a power of two.
// inverse=true applies the 1/N scale.
void transform(std::vector<std::complex<double>>& a, bool inverse);

// Real-input forward DFT; returns the n/2+1 one-sided bins.
// x is zero-padded (or truncated) to n, which must be a power of two.
std::vector<std::complex<double>> rfft(const double* x, std::size_t len,
                                       std::size_t n);

// One-sided bins -> n real samples (n a power of two, bins.size() == n/2+1).
// The spectrum is extended conjugate-symmetrically; the imaginary parts of
// the DC and Nyquist bins do not contribute (real part taken at the end).
std::vector<double> irfft(const std::complex<double>* bins, std::size_t n);

}  // namespace derevb::fft

#endif  // DEREVB_FFT_HPP
