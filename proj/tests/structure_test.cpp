#include <cmath>

#include "doctest.h"
#include "medgmm/simulate.hpp"
#include "medgmm/structure.hpp"
#include "support/oracles.hpp"

using namespace medgmm;

namespace {

Eigen::MatrixXd gaussian_matrix(int n, int p, std::uint64_t seed) {
  RngStream rng(seed);
  Eigen::MatrixXd m(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) m(i, j) = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("estimate_correlation basics") {
  SUBCASE("identical columns correlate exactly") {
    Eigen::MatrixXd m = gaussian_matrix(50, 3, 61);
    m.col(2) = m.col(0);
    const CorrelationSummary s = estimate_correlation(m);
    CHECK(s.corr(0, 2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.corr(0, 0) == 1.0);
    CHECK(s.corr(1, 2) == s.corr(2, 1));
  }
  SUBCASE("independent columns stay within the sampling-noise bound") {
    const CorrelationSummary s = estimate_correlation(gaussian_matrix(10000, 8, 62));
    double worst = 0.0;
    for (int i = 0; i < 8; ++i)
      for (int j = i + 1; j < 8; ++j) worst = std::max(worst, s.abs_corr(i, j));
    CHECK(worst < 0.05);
  }
  SUBCASE("block design correlations track the generator at n=1000") {
    SimDesign design;
    design.n = 1000;
    RngStream rng(63);
    const SymmetricMatrix cov = gen_block_covariance(design, rng);
    const TrueEffects eff = gen_effects(design, rng);
    const MediationDataset data = gen_dataset(design, eff, cov, rng);
    // the generated mediators carry the exposure pathway on top of the noise
    // covariance: corr = (cov + alpha alpha') scaled by the implied variances
    const CorrelationSummary s = estimate_correlation(data.mediators);
    double worst = 0.0;
    const int structured = design.block_count * design.block_size;
    for (int i = 0; i < structured; ++i) {
      for (int j = i + 1; j < structured; ++j) {
        if (i / design.block_size != j / design.block_size) continue;
        const double implied =
            (cov(i, j) + eff.alpha_a[i] * eff.alpha_a[j]) /
            std::sqrt((1.0 + eff.alpha_a[i] * eff.alpha_a[i]) *
                      (1.0 + eff.alpha_a[j] * eff.alpha_a[j]));
        worst = std::max(worst, std::abs(s.corr(i, j) - implied));
      }
    }
    CHECK(worst < 0.1);
  }
  SUBCASE("errors") {
    Eigen::MatrixXd m = gaussian_matrix(20, 2, 64);
    m.col(1).setConstant(3.0);
    CHECK_THROWS_WITH_AS(estimate_correlation(m), doctest::Contains("column 1"),
                         std::invalid_argument);
    CHECK_THROWS_AS(estimate_correlation(gaussian_matrix(2, 3, 65)), std::invalid_argument);
  }
}

TEST_CASE("two-means split and graph construction") {
  SUBCASE("well-separated populations recover the gap threshold") {
    // 6 mediators: pairs (0,1), (2,3) strongly correlated, everything else noise
    RngStream rng(66);
    Eigen::MatrixXd m = gaussian_matrix(4000, 6, 67);
    m.col(1) = 0.8 * m.col(0) + 0.6 * m.col(1);
    m.col(3) = 0.8 * m.col(2) + 0.6 * m.col(3);
    const CorrelationSummary s = estimate_correlation(m);
    const GraphBuildResult built = build_neighbor_graph(s);
    CHECK_FALSE(built.degenerate);
    CHECK(built.graph.edge_count() == 2);
    CHECK(built.graph.edges[0] == std::pair<int, int>(0, 1));
    CHECK(built.graph.edges[1] == std::pair<int, int>(2, 3));
    CHECK(built.threshold > 0.1);
    CHECK(built.threshold < 0.8);
  }
  SUBCASE("equal correlations degenerate to an empty graph") {
    CorrelationSummary s;
    s.corr = Eigen::MatrixXd::Identity(4, 4);
    s.abs_corr = s.corr;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) s.offdiag_abs.push_back(0.0);
    const GraphBuildResult built = build_neighbor_graph(s);
    CHECK(built.degenerate);
    CHECK(built.graph.edge_count() == 0);
  }
  SUBCASE("block design recovers within-block edges at n=1000") {
    SimDesign design;
    design.n = 1000;
    RngStream rng(68);
    const SymmetricMatrix cov = gen_block_covariance(design, rng);
    const TrueEffects eff = gen_effects(design, rng);
    const MediationDataset data = gen_dataset(design, eff, cov, rng);
    const GraphBuildResult built = build_neighbor_graph(estimate_correlation(data.mediators));

    long within_hit = 0, within_total = 0, between_hit = 0, between_total = 0;
    std::vector<std::vector<bool>> edge(design.p, std::vector<bool>(design.p, false));
    for (const auto& [i, j] : built.graph.edges) edge[i][j] = edge[j][i] = true;
    const int structured = design.block_count * design.block_size;
    for (int i = 0; i < structured; ++i) {
      for (int j = i + 1; j < structured; ++j) {
        if (i / design.block_size == j / design.block_size) {
          ++within_total;
          within_hit += edge[i][j];
        } else {
          ++between_total;
          between_hit += edge[i][j];
        }
      }
    }
    CHECK(double(within_hit) / within_total >= 0.95);
    CHECK(double(between_hit) / between_total <= 0.05);
  }
  SUBCASE("threshold monotonicity on bimodal inputs") {
    RngStream rng(69);
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<double> vals;
      const int noise = 30 + int(rng.uniform() * 30);
      const int signal = 5 + int(rng.uniform() * 10);
      for (int i = 0; i < noise; ++i) vals.push_back(rng.uniform(0.0, 0.15));
      for (int i = 0; i < signal; ++i) vals.push_back(rng.uniform(0.5, 0.7));
      const auto [lo1, hi1] = two_means_1d(vals);
      const double thr1 = 0.5 * (lo1 + hi1);
      // add a strictly larger signal value
      vals.push_back(rng.uniform(0.75, 1.0));
      const auto [lo2, hi2] = two_means_1d(vals);
      const double thr2 = 0.5 * (lo2 + hi2);
      // every edge above the old threshold survives the new one
      for (double v : vals)
        if (v >= 0.5) CHECK((v >= thr1) == (v >= thr2));
    }
  }
}

TEST_CASE("build_corrs_D") {
  SUBCASE("positive definite absolute correlations pass through unchanged") {
    Eigen::MatrixXd m = gaussian_matrix(200, 4, 70);
    const CorrelationSummary s = estimate_correlation(m);
    const SymmetricMatrix d = build_corrs_D(s);
    CHECK(d.mat() == s.abs_corr);
  }
  SUBCASE("indefinite absolute correlations are projected to PD with unit diagonal") {
    // a rank-deficient sample correlation (n-1 < p) with mixed signs turns
    // indefinite after taking absolute values; 3x3 cannot produce this (the
    // determinant never decreases under abs there), so use p=4 with n=3
    bool found = false;
    for (std::uint64_t seed = 0; seed < 200 && !found; ++seed) {
      const Eigen::MatrixXd m = gaussian_matrix(3, 4, 71 + seed);
      const CorrelationSummary s = estimate_correlation(m);
      if (SymmetricMatrix(s.abs_corr).min_eigenvalue() > -1e-4) continue;
      found = true;
      const SymmetricMatrix d = build_corrs_D(s, 1e-6);
      CHECK(d.min_eigenvalue() >= 1e-6 * 0.999);
      for (int i = 0; i < 4; ++i) CHECK(d(i, i) == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(found);
  }
  SUBCASE("eigen floor holds on a stress corpus") {
    RngStream rng(73);
    for (int rep = 0; rep < 30; ++rep) {
      const int n = 4 + int(rng.uniform() * 6);
      const int p = 6 + int(rng.uniform() * 6);
      const CorrelationSummary s =
          estimate_correlation(gaussian_matrix(n, p, 1000 + rep));
      const SymmetricMatrix d = build_corrs_D(s, 1e-6);
      CHECK(d.min_eigenvalue() >= 1e-6 * 0.999);
      SymmetricMatrix copy = d;
      CHECK(copy.factorize());
    }
  }
}

TEST_CASE("perturb_graph") {
  RngStream rng(74);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < 10; ++i)
    for (int j = i + 1; j < 10; ++j)
      if ((i / 5) == (j / 5)) edges.emplace_back(i, j);  // two 5-cliques
  const NeighborGraph g = NeighborGraph::from_edges(10, edges);

  SUBCASE("rate zero is the identity") {
    const NeighborGraph out = perturb_graph(g, 0.0, rng);
    CHECK(out.edges == g.edges);
  }
  SUBCASE("rate one swaps every edge out") {
    const NeighborGraph out = perturb_graph(g, 1.0, rng);
    CHECK(out.edge_count() == g.edge_count());
    for (const auto& e : out.edges)
      CHECK(std::find(g.edges.begin(), g.edges.end(), e) == g.edges.end());
  }
  SUBCASE("edge count preserved and at least one swap for small positive rates") {
    const NeighborGraph out = perturb_graph(g, 0.01, rng);
    CHECK(out.edge_count() == g.edge_count());
    int moved = 0;
    for (const auto& e : out.edges)
      moved += std::find(g.edges.begin(), g.edges.end(), e) == g.edges.end();
    CHECK(moved == 1);
  }
  SUBCASE("insufficient non-edges") {
    // complete graph has nowhere to swap to
    std::vector<std::pair<int, int>> complete;
    for (int i = 0; i < 5; ++i)
      for (int j = i + 1; j < 5; ++j) complete.emplace_back(i, j);
    const NeighborGraph k5 = NeighborGraph::from_edges(5, complete);
    CHECK_THROWS_AS(perturb_graph(k5, 0.5, rng), std::invalid_argument);
  }
  SUBCASE("graphs stay simple after perturbation") {
    for (int rep = 0; rep < 20; ++rep) {
      const NeighborGraph out = perturb_graph(g, 0.3, rng);
      for (const auto& [i, j] : out.edges) CHECK(i < j);
      auto sorted = out.edges;
      std::sort(sorted.begin(), sorted.end());
      CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    }
  }
}

TEST_CASE("perturb_correlation") {
  RngStream rng(75);
  const CorrelationSummary s = estimate_correlation(gaussian_matrix(100, 6, 76));

  SUBCASE("zero noise is the identity") {
    const CorrelationSummary out = perturb_correlation(s, 0.0, rng);
    CHECK(out.corr == s.corr);
  }
  SUBCASE("output stays symmetric with unit diagonal and clipped entries") {
    const CorrelationSummary out = perturb_correlation(s, 0.5, rng);
    for (int i = 0; i < 6; ++i) {
      CHECK(out.corr(i, i) == 1.0);
      for (int j = 0; j < 6; ++j) {
        CHECK(out.corr(i, j) == out.corr(j, i));
        CHECK(out.corr(i, j) <= 1.0);
        CHECK(out.corr(i, j) >= -1.0);
      }
    }
    CHECK(out.corr != s.corr);
  }
}
