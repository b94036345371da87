#include "medgmm/structure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace medgmm {

CorrelationSummary estimate_correlation(const Eigen::MatrixXd& mediators) {
  const int n = static_cast<int>(mediators.rows());
  const int p = static_cast<int>(mediators.cols());
  if (n < 3) throw std::invalid_argument("estimate_correlation: need at least 3 rows");
  if (p < 1) throw std::invalid_argument("estimate_correlation: need at least 1 column");

  Eigen::MatrixXd centered = mediators.rowwise() - mediators.colwise().mean();
  Eigen::VectorXd norms(p);
  for (int j = 0; j < p; ++j) {
    norms[j] = centered.col(j).norm();
    if (norms[j] == 0.0)
      throw std::invalid_argument("estimate_correlation: column " + std::to_string(j) +
                                  " is constant");
  }

  CorrelationSummary s;
  s.corr = (centered.transpose() * centered).eval();
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) s.corr(i, j) /= norms[i] * norms[j];
  s.corr.diagonal().setOnes();
  s.corr = 0.5 * (s.corr + s.corr.transpose().eval());
  s.abs_corr = s.corr.cwiseAbs();
  s.offdiag_abs.reserve(static_cast<std::size_t>(p) * (p - 1) / 2);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) s.offdiag_abs.push_back(s.abs_corr(i, j));
  return s;
}

std::pair<double, double> two_means_1d(const std::vector<double>& values) {
  if (values.size() < 2) throw std::invalid_argument("two_means_1d: need at least 2 values");
  std::vector<double> x = values;
  std::sort(x.begin(), x.end());
  const int m = static_cast<int>(x.size());

  std::vector<double> prefix(m + 1, 0.0), prefix_sq(m + 1, 0.0);
  for (int i = 0; i < m; ++i) {
    prefix[i + 1] = prefix[i] + x[i];
    prefix_sq[i + 1] = prefix_sq[i] + x[i] * x[i];
  }
  auto sse = [&](int lo, int hi) {  // [lo, hi)
    const int c = hi - lo;
    if (c == 0) return 0.0;
    const double s = prefix[hi] - prefix[lo];
    return (prefix_sq[hi] - prefix_sq[lo]) - s * s / c;
  };

  int best_split = 1;
  double best = std::numeric_limits<double>::infinity();
  for (int s = 1; s < m; ++s) {
    const double cost = sse(0, s) + sse(s, m);
    if (cost < best) {
      best = cost;
      best_split = s;
    }
  }
  const double lo_center = (prefix[best_split]) / best_split;
  const double hi_center = (prefix[m] - prefix[best_split]) / (m - best_split);
  return {lo_center, hi_center};
}

GraphBuildResult build_neighbor_graph(const CorrelationSummary& summary) {
  const int p = summary.p();
  if (p < 2) throw std::invalid_argument("build_neighbor_graph: need at least 2 mediators");

  GraphBuildResult out;
  const auto& vals = summary.offdiag_abs;
  const auto [mn, mx] = std::minmax_element(vals.begin(), vals.end());
  if (*mx - *mn < 1e-12) {
    out.degenerate = true;
    out.threshold = *mx;
    out.graph = NeighborGraph::from_edges(p, {});
    return out;
  }

  const auto [lo, hi] = two_means_1d(vals);
  out.threshold = 0.5 * (lo + hi);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j)
      if (summary.abs_corr(i, j) >= out.threshold) edges.emplace_back(i, j);
  out.graph = NeighborGraph::from_edges(p, std::move(edges));
  return out;
}

SymmetricMatrix build_corrs_D(const CorrelationSummary& summary, double eigen_floor) {
  return nearest_positive_definite(SymmetricMatrix(summary.abs_corr), eigen_floor);
}

NeighborGraph perturb_graph(const NeighborGraph& graph, double rate, RngStream& rng) {
  if (rate < 0.0 || rate > 1.0) throw std::invalid_argument("perturb_graph: rate must be in [0,1]");
  const int e = graph.edge_count();
  if (rate == 0.0 || e == 0) return graph;
  int swaps = static_cast<int>(std::floor(rate * e));
  if (swaps == 0) swaps = 1;

  const long total_pairs = static_cast<long>(graph.p) * (graph.p - 1) / 2;
  if (total_pairs - e < swaps)
    throw std::invalid_argument("perturb_graph: not enough non-edges to swap in");

  // remove a random sample of edges
  std::vector<int> order = rng.permutation(e);
  std::vector<bool> removed(e, false);
  for (int i = 0; i < swaps; ++i) removed[order[i]] = true;

  std::vector<std::pair<int, int>> edges;
  edges.reserve(e);
  for (int i = 0; i < e; ++i)
    if (!removed[i]) edges.push_back(graph.edges[i]);

  // add the same count of original non-edges, sampled by rejection
  std::vector<std::vector<bool>> is_edge(graph.p, std::vector<bool>(graph.p, false));
  for (const auto& [i, j] : graph.edges) is_edge[i][j] = is_edge[j][i] = true;
  std::vector<std::vector<bool>> added(graph.p, std::vector<bool>(graph.p, false));
  int added_count = 0;
  while (added_count < swaps) {
    const int i = static_cast<int>(rng.uniform() * graph.p);
    const int j = static_cast<int>(rng.uniform() * graph.p);
    if (i == j || i >= graph.p || j >= graph.p) continue;
    const int a = std::min(i, j), b = std::max(i, j);
    if (is_edge[a][b] || added[a][b]) continue;
    added[a][b] = true;
    edges.emplace_back(a, b);
    ++added_count;
  }
  return NeighborGraph::from_edges(graph.p, std::move(edges));
}

CorrelationSummary perturb_correlation(const CorrelationSummary& summary, double noise_sd,
                                       RngStream& rng) {
  if (noise_sd < 0.0) throw std::invalid_argument("perturb_correlation: noise sd must be >= 0");
  if (noise_sd == 0.0) return summary;

  CorrelationSummary out = summary;
  const int p = summary.p();
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      const double v = std::clamp(summary.corr(i, j) + noise_sd * rng.normal(), -1.0, 1.0);
      out.corr(i, j) = v;
      out.corr(j, i) = v;
    }
  }
  out.abs_corr = out.corr.cwiseAbs();
  out.offdiag_abs.clear();
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) out.offdiag_abs.push_back(out.abs_corr(i, j));
  return out;
}

}  // namespace medgmm
