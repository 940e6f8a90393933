#pragma once

#include <complex>
#include <cstddef>

namespace qmeas::fft {

// Thin wrapper over FFTW double-precision c2c transforms.
//
// Conventions used throughout this project:
//  - forward(n, in, out):  out[m] = sum_i in[i] exp(-2*pi*I*m*i/n)   (unscaled)
//  - inverse(n, in, out):  out[i] = (1/n) sum_m in[m] exp(+2*pi*I*m*i/n)
// so inverse(forward(x)) == x.
//
// Plans are cached per (size, direction) in thread-local storage; plan
// creation is serialized behind a global mutex because FFTW's planner is not
// thread safe. Plans are created with FFTW_ESTIMATE so that planning is
// deterministic and results are bit-reproducible run to run.
void forward(std::size_t n, const std::complex<double>* in, std::complex<double>* out);
void inverse(std::size_t n, const std::complex<double>* in, std::complex<double>* out);

// Batched strided transforms: `howmany` transforms of length n, reading
// element k of transform t at in[t*dist + k*stride] (same layout for out).
// in == out (in place) is allowed.
void forward_many(std::size_t n, std::size_t howmany, std::ptrdiff_t stride,
                  std::ptrdiff_t dist, const std::complex<double>* in,
                  std::complex<double>* out);
void inverse_many(std::size_t n, std::size_t howmany, std::ptrdiff_t stride,
                  std::ptrdiff_t dist, const std::complex<double>* in,
                  std::complex<double>* out);

}  // namespace qmeas::fft
