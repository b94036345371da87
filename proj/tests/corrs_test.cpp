#include <cmath>
#include <map>
#include <numbers>

#include "doctest.h"
#include "medgmm/corrs.hpp"
#include "medgmm/distributions.hpp"
#include "support/oracles.hpp"

using namespace medgmm;

namespace {

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// un-augmented binomial-logit likelihood for one stick column
double stick_likelihood(const Eigen::VectorXd& b, const Eigen::VectorXi& y,
                        const Eigen::VectorXi& n) {
  double l = 1.0;
  for (int j = 0; j < b.size(); ++j) {
    if (n[j] == 0) continue;
    const double e = expit(b[j]);
    l *= (y[j] == 1 ? e : 1.0 - e);
  }
  return l;
}

double mvn2_density(const Eigen::Vector2d& x, const Eigen::Vector2d& mean,
                    const Eigen::Matrix2d& cov) {
  const Eigen::Vector2d c = x - mean;
  return std::exp(-0.5 * c.dot(cov.inverse() * c)) /
         (2.0 * std::numbers::pi * std::sqrt(cov.determinant()));
}

struct GridPosterior {
  Eigen::Vector2d mean;
  Eigen::Vector2d sd;
  double corr;
};

// dense numerical posterior of one p=2 logit block under the exact
// (non-augmented) likelihood
GridPosterior grid_block_posterior(const Eigen::VectorXi& y, const Eigen::VectorXi& n,
                                   const Eigen::Vector2d& prior_mean,
                                   const Eigen::Matrix2d& prior_cov) {
  const double lo = -12.0, hi = 6.0;
  const int steps = 480;
  const double h = (hi - lo) / steps;
  double z = 0, m1 = 0, m2 = 0, s11 = 0, s22 = 0, s12 = 0;
  for (int i = 0; i <= steps; ++i) {
    for (int j = 0; j <= steps; ++j) {
      const Eigen::Vector2d b{lo + i * h, lo + j * h};
      Eigen::VectorXd bv(2);
      bv << b[0], b[1];
      const double f = stick_likelihood(bv, y, n) * mvn2_density(b, prior_mean, prior_cov);
      z += f;
      m1 += f * b[0];
      m2 += f * b[1];
      s11 += f * b[0] * b[0];
      s22 += f * b[1] * b[1];
      s12 += f * b[0] * b[1];
    }
  }
  GridPosterior out;
  out.mean = {m1 / z, m2 / z};
  const double v11 = s11 / z - out.mean[0] * out.mean[0];
  const double v22 = s22 / z - out.mean[1] * out.mean[1];
  const double v12 = s12 / z - out.mean[0] * out.mean[1];
  out.sd = {std::sqrt(v11), std::sqrt(v22)};
  out.corr = v12 / (out.sd[0] * out.sd[1]);
  return out;
}

// PG-augmented Gibbs on one p=2 block with everything else frozen
struct ChainMoments {
  Eigen::Vector2d mean;
  Eigen::Vector2d sd;
  double corr;
};
ChainMoments augmented_block_chain(const Eigen::VectorXi& gamma, double prior_mean,
                                   const Eigen::Matrix2d& d, double sigma_d2, long iters,
                                   RngStream& rng) {
  Hyperparameters hyper;
  hyper.stick_prior_mean = Eigen::Vector3d::Constant(prior_mean);
  CorrSState state = CorrSState::init(2, hyper);
  state.sigma_d2 = Eigen::Vector3d::Constant(sigma_d2);
  CorrsStructure structure(SymmetricMatrix{d});

  double m1 = 0, m2 = 0, s11 = 0, s22 = 0, s12 = 0;
  long kept = 0;
  const long burn = iters / 10;
  for (long t = 0; t < iters; ++t) {
    update_pg_auxiliaries(gamma, state, rng);
    update_b_block(0, gamma, state, structure, rng);
    if (t < burn) continue;
    const double b1 = state.logits(0, 0), b2 = state.logits(1, 0);
    m1 += b1;
    m2 += b2;
    s11 += b1 * b1;
    s22 += b2 * b2;
    s12 += b1 * b2;
    ++kept;
  }
  ChainMoments out;
  out.mean = {m1 / kept, m2 / kept};
  const double v11 = s11 / kept - out.mean[0] * out.mean[0];
  const double v22 = s22 / kept - out.mean[1] * out.mean[1];
  const double v12 = s12 / kept - out.mean[0] * out.mean[1];
  out.sd = {std::sqrt(v11), std::sqrt(v22)};
  out.corr = v12 / (out.sd[0] * out.sd[1]);
  return out;
}

}  // namespace

TEST_CASE("stick_probs cascade") {
  SUBCASE("zero logits halve the stick at every break") {
    const Eigen::Vector4d pi = stick_probs(Eigen::Vector3d::Zero());
    CHECK(pi[0] == doctest::Approx(0.5));
    CHECK(pi[1] == doctest::Approx(0.25));
    CHECK(pi[2] == doctest::Approx(0.125));
    CHECK(pi[3] == doctest::Approx(0.125));
    CHECK(pi.sum() == doctest::Approx(1.0));
  }
  SUBCASE("saturated first logit consumes the stick") {
    const Eigen::Vector4d pi = stick_probs({30.0, 0.0, 0.0});
    CHECK(pi[0] > 1.0 - 1e-12);
    CHECK(pi[1] < 1e-12);
    CHECK(pi[3] < 1e-12);
    CHECK(pi.sum() == doctest::Approx(1.0));
  }
  SUBCASE("logits round-trip through the probabilities") {
    RngStream rng(51);
    for (int rep = 0; rep < 2000; ++rep) {
      Eigen::Vector3d b;
      for (int k = 0; k < 3; ++k) b[k] = rng.uniform(-30.0, 30.0);
      const Eigen::Vector3d back = stick_logits(stick_probs(b));
      for (int k = 0; k < 3; ++k)
        CHECK(std::abs(back[k] - b[k]) < 1e-12 * std::max(1.0, std::abs(b[k])));
    }
  }
}

TEST_CASE("stick counts track consumed sticks") {
  CHECK(stick_counts(1) == std::array<int, 3>{1, 0, 0});
  CHECK(stick_counts(2) == std::array<int, 3>{1, 1, 0});
  CHECK(stick_counts(3) == std::array<int, 3>{1, 1, 1});
  CHECK(stick_counts(4) == std::array<int, 3>{1, 1, 1});
  for (int g = 1; g <= 4; ++g) {
    const auto c = stick_counts(g);
    for (int k = 0; k + 1 < 3; ++k)
      if (c[k] == 0) CHECK(c[k + 1] == 0);
  }
}

TEST_CASE("update_pg_auxiliaries zeros exactly where the stick is consumed") {
  Hyperparameters hyper;
  CorrSState state = CorrSState::init(3, hyper);
  RngStream rng(52);
  Eigen::VectorXi gamma(3);
  gamma << 1, 4, 2;
  update_pg_auxiliaries(gamma, state, rng);
  CHECK(state.pg(0, 1) == 0.0);  // gamma=1: second and third sticks unused
  CHECK(state.pg(0, 2) == 0.0);
  CHECK(state.pg(1, 0) > 0.0);   // gamma=4 draws all three
  CHECK(state.pg(1, 1) > 0.0);
  CHECK(state.pg(1, 2) > 0.0);
  CHECK(state.pg(2, 2) == 0.0);  // gamma=2: third stick unused

  // zero logit, unit count: mean 1/4
  state.logits.setZero();
  std::vector<double> draws;
  for (int i = 0; i < 100000; ++i) {
    update_pg_auxiliaries(gamma, state, rng);
    draws.push_back(state.pg(1, 0));
  }
  CHECK(std::abs(oracles::mean(draws) - 0.25) < 0.005);
}

TEST_CASE("update_b_block: scalar case matches the closed form to 1e-12") {
  Hyperparameters hyper;
  hyper.stick_prior_mean = Eigen::Vector3d::Constant(-1.0);
  CorrSState state = CorrSState::init(1, hyper);
  state.sigma_d2 << 0.7, 1.0, 1.0;
  state.pg(0, 0) = 0.9;
  CorrsStructure structure(SymmetricMatrix::identity(1));
  Eigen::VectorXi gamma(1);
  gamma << 1;

  RngStream rng(53);
  RngStream replay = rng;
  update_b_block(0, gamma, state, structure, rng);
  const double z = replay.normal();

  const double prec = 0.9 + 1.0 / 0.7;
  const double kappa = 1.0 - 0.5;  // I(gamma=1) - n/2
  const double mu = (kappa + (-1.0) / 0.7) / prec;
  const double expected = mu + z / std::sqrt(prec);
  CHECK(std::abs(state.logits(0, 0) - expected) < 1e-12);
}

TEST_CASE("PG augmentation reproduces the exact logit posterior (grid oracle)") {
  Eigen::Matrix2d d_corr;
  d_corr << 1.0, 0.9, 0.9, 1.0;
  const Eigen::Matrix2d d_eye = Eigen::Matrix2d::Identity();
  const double sigma_d2 = 1.5;
  RngStream rng(54);

  SUBCASE("one active, one inactive mediator") {
    Eigen::VectorXi gamma(2);
    gamma << 1, 4;
    Eigen::VectorXi y(2), n(2);
    y << 1, 0;
    n << 1, 1;
    const double a = -2.0;
    const GridPosterior grid =
        grid_block_posterior(y, n, Eigen::Vector2d::Constant(a), sigma_d2 * d_corr);
    const ChainMoments chain = augmented_block_chain(gamma, a, d_corr, sigma_d2, 400000, rng);
    for (int j = 0; j < 2; ++j) {
      CHECK(std::abs(chain.mean[j] - grid.mean[j]) < 0.05);
      CHECK(std::abs(chain.sd[j] - grid.sd[j]) / grid.sd[j] < 0.10);
    }
  }
  SUBCASE("very negative prior mean shrinks between evidence and prior") {
    Eigen::VectorXi gamma(2);
    gamma << 4, 4;
    Eigen::VectorXi y(2), n(2);
    y << 0, 0;
    n << 1, 1;
    const double a = -5.0;
    const GridPosterior grid =
        grid_block_posterior(y, n, Eigen::Vector2d::Constant(a), sigma_d2 * d_corr);
    const ChainMoments chain = augmented_block_chain(gamma, a, d_corr, sigma_d2, 400000, rng);
    for (int j = 0; j < 2; ++j) {
      CHECK(std::abs(chain.mean[j] - grid.mean[j]) < 0.05);
      CHECK(std::abs(chain.sd[j] - grid.sd[j]) / grid.sd[j] < 0.10);
      CHECK(chain.mean[j] < -1.0);
      CHECK(chain.mean[j] > -8.0);
    }
  }
  SUBCASE("correlated structure raises the posterior correlation of the block") {
    Eigen::VectorXi y(2), n(2);
    y << 1, 0;
    n << 1, 1;
    const double a = -2.0;
    const GridPosterior with_corr =
        grid_block_posterior(y, n, Eigen::Vector2d::Constant(a), sigma_d2 * d_corr);
    const GridPosterior without =
        grid_block_posterior(y, n, Eigen::Vector2d::Constant(a), sigma_d2 * d_eye);
    CHECK(with_corr.corr > without.corr + 0.3);

    Eigen::VectorXi gamma(2);
    gamma << 1, 4;
    const ChainMoments chain = augmented_block_chain(gamma, a, d_corr, sigma_d2, 400000, rng);
    CHECK(std::abs(chain.corr - with_corr.corr) < 0.05);
  }
}

TEST_CASE("update_sigma_d2 inverse-gamma conditional") {
  Hyperparameters hyper;
  hyper.corrs_ig_shape = 2.0;
  hyper.corrs_ig_rate = 1.0;
  RngStream rng(55);
  const int p = 4;

  SUBCASE("logits at the prior mean give the prior-rate draw") {
    CorrSState state = CorrSState::init(p, hyper);
    CorrsStructure structure(SymmetricMatrix::identity(p));
    std::vector<double> draws;
    for (int i = 0; i < 20000; ++i)
      draws.push_back(update_sigma_d2(0, state, structure, hyper, rng));
    const double expected = 1.0 / (2.0 + 0.5 * p - 1.0);
    CHECK(std::abs(oracles::mean(draws) - expected) < 4.0 * oracles::se_mean(draws));
  }
  SUBCASE("quadratic form of norm 2 under the identity structure") {
    CorrSState state = CorrSState::init(p, hyper);
    CorrsStructure structure(SymmetricMatrix::identity(p));
    state.logits.col(1).setConstant(hyper.stick_prior_mean[1]);
    state.logits(0, 1) += std::sqrt(2.0);  // (b-a)'D^{-1}(b-a) = 2
    std::vector<double> draws;
    for (int i = 0; i < 20000; ++i)
      draws.push_back(update_sigma_d2(1, state, structure, hyper, rng));
    const double expected = 2.0 / (2.0 + 0.5 * p - 1.0);  // IG(2 + p/2, 2)
    CHECK(std::abs(oracles::mean(draws) - expected) < 4.0 * oracles::se_mean(draws));
  }
  SUBCASE("the quadratic form is rotation invariant when D is the identity") {
    CorrSState state = CorrSState::init(p, hyper);
    CorrsStructure structure(SymmetricMatrix::identity(p));
    Eigen::VectorXd dev(p);
    dev << 1.0, -0.5, 0.3, 0.8;
    Eigen::MatrixXd q = Eigen::MatrixXd::Identity(p, p) -
                        2.0 * Eigen::VectorXd::Ones(p) * Eigen::VectorXd::Ones(p).transpose() / p;
    const Eigen::VectorXd rotated = q * dev;
    CHECK(std::abs(dev.squaredNorm() - rotated.squaredNorm()) < 1e-10);

    state.logits.col(2) = Eigen::VectorXd::Constant(p, hyper.stick_prior_mean[2]) + dev;
    std::vector<double> d1;
    for (int i = 0; i < 40000; ++i) d1.push_back(update_sigma_d2(2, state, structure, hyper, rng));
    state.logits.col(2) = Eigen::VectorXd::Constant(p, hyper.stick_prior_mean[2]) + rotated;
    std::vector<double> d2;
    for (int i = 0; i < 40000; ++i) d2.push_back(update_sigma_d2(2, state, structure, hyper, rng));
    CHECK(oracles::ks_statistic(d1, d2) < oracles::ks_critical(d1.size(), d2.size(), 0.01));
  }
}

TEST_CASE("corrs_label_update prior/evidence combination") {
  Hyperparameters hyper;
  CorrSState state = CorrSState::init(2, hyper);
  RngStream rng(56);

  SUBCASE("uniform probabilities and flat evidence give uniform labels") {
    state.pi.row(0) = Eigen::Vector4d::Constant(0.25);
    Eigen::Vector4d counts = Eigen::Vector4d::Zero();
    for (int i = 0; i < 40000; ++i)
      counts[corrs_label_update(0, state, Eigen::Vector4d::Zero(), rng) - 1] += 1.0;
    counts /= counts.sum();
    for (int k = 0; k < 4; ++k) CHECK(std::abs(counts[k] - 0.25) < 0.01);
  }
  SUBCASE("a near-degenerate prior dominates") {
    state.pi.row(0) << 1.0 - 3e-12, 1e-12, 1e-12, 1e-12;
    for (int i = 0; i < 2000; ++i)
      CHECK(corrs_label_update(0, state, Eigen::Vector4d::Zero(), rng) == 1);
  }
}

TEST_CASE("joint label/logit chain matches labels-by-quadrature enumeration at p=2") {
  // exact marginal label posterior: for each of the 16 label states integrate
  // the three stick-binomial likelihoods against their MVN priors on a grid
  const int p = 2;
  Eigen::Matrix2d d;
  d << 1.0, 0.7, 0.7, 1.0;
  const double sigma_d2 = 1.0;
  Eigen::MatrixXd log_m(2, 4);
  log_m << 0.6, -0.2, 0.0, 0.2,
           -0.4, 0.5, 0.1, 0.0;
  Hyperparameters hyper;
  hyper.stick_prior_mean << -1.0, -0.8, -0.6;

  auto block_integral = [&](int k, const Eigen::VectorXi& gamma) {
    Eigen::VectorXi y(p), n(p);
    for (int j = 0; j < p; ++j) {
      const auto counts = stick_counts(gamma[j]);
      n[j] = counts[k];
      y[j] = gamma[j] == k + 1 ? 1 : 0;
    }
    const Eigen::Vector2d a = Eigen::Vector2d::Constant(hyper.stick_prior_mean[k]);
    const Eigen::Matrix2d cov = sigma_d2 * d;
    return oracles::integrate_2d(
        [&](double b1, double b2) {
          Eigen::VectorXd b(2);
          b << b1, b2;
          return stick_likelihood(b, y, n) * mvn2_density({b1, b2}, a, cov);
        },
        -10, 6, -10, 6, 240);
  };

  double exact[16];
  double total = 0.0;
  for (int s = 0; s < 16; ++s) {
    Eigen::VectorXi gamma(2);
    gamma << 1 + s % 4, 1 + s / 4;
    double v = std::exp(log_m(0, gamma[0] - 1) + log_m(1, gamma[1] - 1));
    for (int k = 0; k < 3; ++k) v *= block_integral(k, gamma);
    exact[s] = v;
    total += v;
  }
  for (double& e : exact) e /= total;

  // augmented chain over (w, b, gamma) with sigma_d2 frozen
  RngStream rng(57);
  CorrSState state = CorrSState::init(p, hyper);
  state.sigma_d2 = Eigen::Vector3d::Constant(sigma_d2);
  CorrsStructure structure(SymmetricMatrix{d});
  Eigen::VectorXi gamma = Eigen::VectorXi::Constant(p, 4);
  std::map<int, long> visits;
  const long iters = 400000;
  bool counts_ok = true;
  for (long t = 0; t < iters; ++t) {
    update_pg_auxiliaries(gamma, state, rng);
    for (int k = 0; k < 3; ++k) update_b_block(k, gamma, state, structure, rng, k == 2);
    for (int j = 0; j < p; ++j) gamma[j] = corrs_label_update(j, state, log_m.row(j), rng);
    for (int j = 0; j < p; ++j) {
      const auto c = stick_counts(gamma[j]);
      counts_ok = counts_ok && c[0] == 1 && (c[1] != 0 || c[2] == 0);
    }
    visits[(gamma[0] - 1) + 4 * (gamma[1] - 1)]++;
  }
  CHECK(counts_ok);
  double tv = 0.0;
  for (int s = 0; s < 16; ++s) tv += std::abs(double(visits[s]) / iters - exact[s]);
  CHECK(tv / 2.0 < 0.02);
}

TEST_CASE("block update order does not change the conditional draws' law") {
  // the three stick blocks are conditionally independent given the PG draws
  // and labels; permuting their update order must leave the stationary
  // moments unchanged (seed-matched comparison)
  Hyperparameters hyper;
  const int p = 3;
  Eigen::MatrixXd d = Eigen::MatrixXd::Identity(p, p);
  d(0, 1) = d(1, 0) = 0.5;
  CorrsStructure structure(SymmetricMatrix{d});
  Eigen::VectorXi gamma(p);
  gamma << 1, 2, 4;

  auto run = [&](const std::array<int, 3>& order, std::uint64_t seed) {
    RngStream rng(seed);
    CorrSState state = CorrSState::init(p, hyper);
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    const long iters = 200000;
    for (long t = 0; t < iters; ++t) {
      update_pg_auxiliaries(gamma, state, rng);
      for (int k : order) update_b_block(k, gamma, state, structure, rng, false);
      for (int kk = 0; kk < 3; ++kk) mean[kk] += state.logits(0, kk);
    }
    return Eigen::Vector3d(mean / double(iters));
  };

  const Eigen::Vector3d forward = run({0, 1, 2}, 58);
  const Eigen::Vector3d reversed = run({2, 1, 0}, 59);
  for (int k = 0; k < 3; ++k) CHECK(std::abs(forward[k] - reversed[k]) < 0.03);
}

TEST_CASE("corrs structure rejects non-PD input") {
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 1.5, 1.5, 1.0;
  CHECK_THROWS_AS(CorrsStructure(SymmetricMatrix{bad}), std::invalid_argument);
}
