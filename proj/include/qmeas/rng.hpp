#pragma once

#include <cstdint>
#include <random>

namespace qmeas {

// Deterministic random stream. The uniform and normal transforms are written
// out explicitly (rather than using std::*_distribution) so that a given seed
// produces identical draws on every platform and standard library.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t raw() { return eng_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller; draws are produced in pairs.
    double normal();

  private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// splitmix64 finalizer; used to decorrelate derived seeds.
std::uint64_t splitmix64(std::uint64_t x);

// Seed for trajectory `index` derived from the master seed. Streams for
// different indices are independent for all practical purposes.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace qmeas
