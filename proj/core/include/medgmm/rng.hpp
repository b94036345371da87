#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace medgmm {

// Seeded random stream with reproducible substream derivation. All variate
// kernels in the library draw through this class (never through
// std::*_distribution, whose sequences are implementation-defined), so a
// given seed produces identical draws on every platform.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0);

  // Deterministic substream: stream(id) depends only on (seed, id).
  RngStream stream(std::uint64_t id) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform();
  // Uniform on (0, 1], safe as a log() argument.
  double uniform_pos();
  double uniform(double lo, double hi);

  double normal();
  double exponential();                    // rate 1
  double gamma(double shape);              // scale 1
  double gamma(double shape, double rate); // mean shape/rate
  double chi_squared(double dof);

  int categorical(std::span<const double> probs);
  int categorical_from_log(std::span<const double> log_weights);
  std::vector<double> dirichlet(std::span<const double> alpha);
  std::vector<int> permutation(int n);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace medgmm
