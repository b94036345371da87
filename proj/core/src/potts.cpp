#include "medgmm/potts.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "medgmm/gmm.hpp"

namespace medgmm {

namespace {

// union-find with path compression and union by rank
struct UnionFind {
  std::vector<int> parent, rank_;
  explicit UnionFind(int n) : parent(n), rank_(n, 0) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }
};

}  // namespace

NeighborGraph NeighborGraph::from_edges(int p, std::vector<std::pair<int, int>> raw) {
  NeighborGraph g;
  g.p = p;
  for (auto& [i, j] : raw) {
    if (i == j) throw std::invalid_argument("neighbor graph: self-loop at node " + std::to_string(i));
    if (i < 0 || j < 0 || i >= p || j >= p)
      throw std::invalid_argument("neighbor graph: node index out of range");
    if (i > j) std::swap(i, j);
  }
  std::sort(raw.begin(), raw.end());
  raw.erase(std::unique(raw.begin(), raw.end()), raw.end());
  g.edges = std::move(raw);
  g.neighbors.assign(p, {});
  g.incident_edges.assign(p, {});
  for (int e = 0; e < static_cast<int>(g.edges.size()); ++e) {
    const auto [i, j] = g.edges[e];
    g.neighbors[i].push_back(j);
    g.neighbors[j].push_back(i);
    g.incident_edges[i].push_back(e);
    g.incident_edges[j].push_back(e);
  }
  return g;
}

Eigen::Vector4d potts_conditional_label(int j, const Eigen::VectorXi& gamma,
                                        const PottsState& potts,
                                        const Eigen::Vector4d& data_log_marginals) {
  Eigen::Vector4d logw = data_log_marginals + potts.field;
  for (int nb : potts.graph->neighbors[j]) logw[gamma[nb] - 1] += potts.coupling[gamma[nb] - 1];
  const double mx = logw.maxCoeff();
  Eigen::Vector4d w = (logw.array() - mx).exp();
  return w / w.sum();
}

double potts_log_unnorm(const Eigen::VectorXi& gamma, const PottsState& potts) {
  double s = 0.0;
  for (int j = 0; j < gamma.size(); ++j) s += potts.field[gamma[j] - 1];
  for (const auto& [i, j] : potts.graph->edges)
    if (gamma[i] == gamma[j]) s += potts.coupling[gamma[i] - 1];
  return s;
}

void sample_gamma_from_prior(const PottsState& potts, int sweeps, Eigen::VectorXi& gamma,
                             RngStream& rng) {
  if (sweeps < 1) throw std::invalid_argument("sample_gamma_from_prior: sweeps must be positive");
  const Eigen::Vector4d zero = Eigen::Vector4d::Zero();
  const int p = static_cast<int>(gamma.size());
  for (int s = 0; s < sweeps; ++s) {
    for (int j = 0; j < p; ++j) {
      const Eigen::Vector4d probs = potts_conditional_label(j, gamma, potts, zero);
      gamma[j] = 1 + rng.categorical(std::span<const double>(probs.data(), 4));
    }
  }
}

bool dmh_update_theta(PottsParam which, int k, const Eigen::VectorXi& gamma, PottsState& potts,
                      const Hyperparameters& hyper, int inner_sweeps, RngStream& rng) {
  double& cur = which == PottsParam::Field ? potts.field[k] : potts.coupling[k];
  const double prior_mean = which == PottsParam::Field ? hyper.field_prior_mean[k]
                                                       : hyper.coupling_prior_mean[k];
  const double prior_sd = which == PottsParam::Field ? hyper.field_prior_sd[k]
                                                     : hyper.coupling_prior_sd[k];
  const double old = cur;
  const double proposed = old + hyper.dmh_step_sd * rng.normal();

  // auxiliary field simulated from the proposal, started at the data field
  cur = proposed;
  Eigen::VectorXi aux = gamma;
  sample_gamma_from_prior(potts, inner_sweeps, aux, rng);
  cur = old;

  // sufficient statistic of the updated component
  auto stat = [&](const Eigen::VectorXi& g) -> double {
    if (which == PottsParam::Field) {
      int c = 0;
      for (int j = 0; j < g.size(); ++j)
        if (g[j] == k + 1) ++c;
      return c;
    }
    int c = 0;
    for (const auto& [i, j] : potts.graph->edges)
      if (g[i] == k + 1 && g[j] == k + 1) ++c;
    return c;
  };

  // normalizing constants cancel in the double-MH ratio
  const double dprior = (-0.5 * (proposed - prior_mean) * (proposed - prior_mean) +
                         0.5 * (old - prior_mean) * (old - prior_mean)) /
                        (prior_sd * prior_sd);
  const double log_r = dprior + (old - proposed) * (stat(aux) - stat(gamma));

  if (std::log(rng.uniform_pos()) < log_r) {
    cur = proposed;
    return true;
  }
  return false;
}

void sw_sweep(Eigen::VectorXi& gamma, const PottsState& potts,
              const std::function<Eigen::Vector4d(int)>& log_marginal, RngStream& rng,
              const std::function<void(const std::vector<int>&, int)>& on_relabel,
              BondSet* bonds_out) {
  const NeighborGraph& graph = *potts.graph;
  const int p = graph.p;
  const int n_edges = graph.edge_count();

  // step 1: bond draws; bonds cannot form across differently labeled pairs
  std::vector<double> u(n_edges);
  for (int e = 0; e < n_edges; ++e) {
    const auto& [i, j] = graph.edges[e];
    const double upper = gamma[i] == gamma[j] ? std::exp(potts.coupling[gamma[i] - 1]) : 1.0;
    u[e] = rng.uniform(0.0, upper);
  }

  // step 2: connected components of active bonds (u > 1)
  UnionFind uf(p);
  for (int e = 0; e < n_edges; ++e)
    if (u[e] > 1.0) uf.unite(graph.edges[e].first, graph.edges[e].second);

  std::vector<std::vector<int>> clusters;
  std::vector<int> cluster_of(p, -1);
  for (int j = 0; j < p; ++j) {
    const int root = uf.find(j);
    if (cluster_of[root] < 0) {
      cluster_of[root] = static_cast<int>(clusters.size());
      clusters.emplace_back();
    }
    cluster_of[j] = cluster_of[root];
    clusters[cluster_of[j]].push_back(j);
  }

  // step 3: sequential cluster relabeling; a label k is admissible only if
  // exp(coupling_k) covers every incident bond value it would have to carry
  // (internal edges, and boundary edges to neighbors currently labeled k)
  std::vector<int> members_sorted;
  for (auto& cluster : clusters) {
    Eigen::Vector4d logw = Eigen::Vector4d::Zero();
    for (int m : cluster) logw += log_marginal(m) + potts.field;

    Eigen::Vector4d max_u = Eigen::Vector4d::Zero();  // per candidate label
    double internal_max = 0.0;
    const int cid = cluster_of[cluster.front()];
    for (int m : cluster) {
      for (int e : graph.incident_edges[m]) {
        const auto& [a, b] = graph.edges[e];
        const int other = a == m ? b : a;
        if (cluster_of[other] == cid) {
          if (other > m) internal_max = std::max(internal_max, u[e]);
        } else {
          const int lab = gamma[other] - 1;
          max_u[lab] = std::max(max_u[lab], u[e]);
        }
      }
    }

    bool any = false;
    for (int k = 0; k < 4; ++k) {
      const double bound = std::exp(potts.coupling[k]);
      if (bound < internal_max || bound < max_u[k])
        logw[k] = -std::numeric_limits<double>::infinity();
      else
        any = true;
    }
    int newk;
    if (!any) {
      newk = gamma[cluster.front()];  // numerically impossible under legal bonds
    } else {
      newk = 1 + rng.categorical_from_log(std::span<const double>(logw.data(), 4));
    }
    for (int m : cluster) gamma[m] = newk;
    if (on_relabel) {
      members_sorted = cluster;
      on_relabel(members_sorted, newk);
    }
  }

  if (bonds_out) bonds_out->u = std::move(u);
}

PosteriorTrace potts_fit(const MediationDataset& data, const NeighborGraph& graph,
                         const Hyperparameters& hyper, const FitOptions& options,
                         RngStream& rng) {
  options.validate();
  if (graph.p != data.p())
    throw std::invalid_argument("potts_fit: graph has " + std::to_string(graph.p) +
                                " nodes for " + std::to_string(data.p()) + " mediators");

  GibbsEngine engine(data, hyper);
  PottsState potts;
  potts.graph = &graph;
  potts.field = hyper.field_prior_mean;
  potts.coupling = hyper.coupling_prior_mean;

  PosteriorTrace trace;
  trace.reserve(data.p(), options.iterations, options.burnin, options.thin, 8);
  trace.extra_names = {"field1", "field2", "field3", "field4",
                       "coupling1", "coupling2", "coupling3", "coupling4"};
  Eigen::VectorXd accepts = Eigen::VectorXd::Zero(8);

  Eigen::VectorXi& gamma = engine.state().mixture.gamma;
  for (long it = 0; it < options.iterations; ++it) {
    for (int j : rng.permutation(data.p())) {
      const Eigen::Vector4d probs = potts_conditional_label(j, gamma, potts, engine.log_marginal_row(j));
      engine.set_label(j, 1 + rng.categorical(std::span<const double>(probs.data(), 4)), rng);
    }
    if (options.sw_every > 0 && (it + 1) % options.sw_every == 0) {
      sw_sweep(
          gamma, potts, [&](int j) { return engine.log_marginal_row(j); }, rng,
          [&](const std::vector<int>& members, int k) {
            for (int m : members) engine.set_label(m, k, rng);
          });
    }
    engine.update_shared(rng);
    for (int k = 0; k < 4; ++k)
      accepts[k] += dmh_update_theta(PottsParam::Field, k, gamma, potts, hyper,
                                     options.dmh_inner_sweeps, rng);
    for (int k = 0; k < 4; ++k)
      accepts[4 + k] += dmh_update_theta(PottsParam::Coupling, k, gamma, potts, hyper,
                                         options.dmh_inner_sweeps, rng);

    if (options.refresh_every > 0 && (it + 1) % options.refresh_every == 0) {
      engine.refresh_residuals();
      engine.check_finite_state(it);
    }
    if (it >= options.burnin && (it - options.burnin) % options.thin == 0) {
      Eigen::VectorXd extras(8);
      extras << potts.field, potts.coupling;
      trace.record(engine.state(), extras);
    }
  }
  trace.dmh_acceptance = accepts / static_cast<double>(options.iterations);
  return trace;
}

}  // namespace medgmm
