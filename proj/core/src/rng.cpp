#include "medgmm/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace medgmm {

namespace {

// splitmix64; used to expand the seed and to hash (seed, stream id).
std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : seed_(seed) {
  std::uint64_t s = seed;
  // decorrelate nearby seeds before feeding the engine
  engine_.seed(splitmix64(s));
}

RngStream RngStream::stream(std::uint64_t id) const {
  std::uint64_t s = seed_;
  std::uint64_t h = splitmix64(s);
  s = h ^ (id + 0x9e3779b97f4a7c15ULL);
  return RngStream(splitmix64(s));
}

std::uint64_t RngStream::next_u64() { return engine_(); }

double RngStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_pos() {
  return 1.0 - uniform();
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  // Marsaglia polar method
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * f;
  has_spare_ = true;
  return u * f;
}

double RngStream::exponential() { return -std::log(uniform_pos()); }

double RngStream::gamma(double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be positive");
  if (shape < 1.0) {
    // boost: G(a) = G(a+1) * U^{1/a}
    const double g = gamma(shape + 1.0);
    return g * std::pow(uniform_pos(), 1.0 / shape);
  }
  // Marsaglia-Tsang squeeze
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_pos();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double RngStream::gamma(double shape, double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("gamma: rate must be positive");
  return gamma(shape) / rate;
}

double RngStream::chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

int RngStream::categorical(std::span<const double> probs) {
  const double u = uniform();
  double acc = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    acc += probs[k];
    if (u < acc) return static_cast<int>(k);
  }
  return static_cast<int>(probs.size()) - 1;
}

int RngStream::categorical_from_log(std::span<const double> log_weights) {
  double mx = log_weights[0];
  for (double w : log_weights)
    if (w > mx) mx = w;
  double total = 0.0;
  std::vector<double> expw(log_weights.size());
  for (std::size_t k = 0; k < log_weights.size(); ++k) {
    expw[k] = std::exp(log_weights[k] - mx);
    total += expw[k];
  }
  const double u = uniform() * total;
  double acc = 0.0;
  for (std::size_t k = 0; k < expw.size(); ++k) {
    acc += expw[k];
    if (u < acc) return static_cast<int>(k);
  }
  return static_cast<int>(expw.size()) - 1;
}

std::vector<double> RngStream::dirichlet(std::span<const double> alpha) {
  std::vector<double> out(alpha.size());
  double total = 0.0;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    out[k] = gamma(alpha[k]);
    total += out[k];
  }
  for (double& v : out) v /= total;
  return out;
}

std::vector<int> RngStream::permutation(int n) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(uniform() * (i + 1));
    std::swap(idx[i], idx[j <= i ? j : i]);
  }
  return idx;
}

}  // namespace medgmm
