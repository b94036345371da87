#include "medgmm/runner.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include "medgmm/corrs.hpp"
#include "medgmm/gmm.hpp"
#include "medgmm/io.hpp"
#include "medgmm/structure.hpp"

namespace medgmm {

Method method_from_string(const std::string& name) {
  if (name == "gmm") return Method::Gmm;
  if (name == "potts") return Method::Potts;
  if (name == "corrs") return Method::Corrs;
  throw std::invalid_argument("unknown method '" + name + "' (expected gmm, potts or corrs)");
}

std::string method_to_string(Method method) {
  switch (method) {
    case Method::Gmm: return "gmm";
    case Method::Potts: return "potts";
    case Method::Corrs: return "corrs";
  }
  return "gmm";
}

void RunConfig::validate() const {
  fit.validate();
  hyper.validate();
  if (chains < 1) throw std::invalid_argument("config: chains must be at least 1");
  if (!(fdr_target > 0.0 && fdr_target < 1.0))
    throw std::invalid_argument("config: fdr target must be in (0,1)");
}

ResolvedStructure resolve_structure(const MediationDataset& data, Method method,
                                    const StructureSpec& spec) {
  ResolvedStructure out;
  if (method == Method::Gmm) return out;

  if (method == Method::Potts) {
    if (spec.source == StructureSpec::Source::GraphFile) {
      out.graph = read_edge_list(spec.path, data.p());
    } else if (spec.source == StructureSpec::Source::MatrixFile) {
      throw std::invalid_argument("method potts takes a graph file, not a matrix file");
    } else {
      if (data.n() < 3)
        throw std::invalid_argument(
            "method potts needs a neighbor graph: none supplied and the dataset is too small "
            "(n < 3) to estimate one");
      auto built = build_neighbor_graph(estimate_correlation(data.mediators));
      out.threshold = built.threshold;
      out.degenerate = built.degenerate;
      out.graph = std::move(built.graph);
    }
    return out;
  }

  // CorrS
  if (spec.source == StructureSpec::Source::MatrixFile) {
    SymmetricMatrix m(read_matrix_csv(spec.path).values);
    if (m.dim() != data.p())
      throw std::invalid_argument("structure matrix dimension does not match mediator count");
    if (!m.factorize())
      throw std::invalid_argument("structure matrix is not positive definite (min eigenvalue " +
                                  std::to_string(m.min_eigenvalue()) + ")");
    out.matrix = std::move(m);
  } else if (spec.source == StructureSpec::Source::GraphFile) {
    throw std::invalid_argument("method corrs takes a correlation matrix, not a graph file");
  } else {
    if (data.n() < 3)
      throw std::invalid_argument(
          "method corrs needs a structure matrix: none supplied and the dataset is too small "
          "(n < 3) to estimate one");
    out.matrix = build_corrs_D(estimate_correlation(data.mediators), spec.eigen_floor);
    out.matrix->factorize();
  }
  return out;
}

namespace {

void destandardize_trace(PosteriorTrace& trace, const Standardizer& s) {
  for (int j = 0; j < trace.p; ++j) {
    trace.beta_m.col(j) *= s.y_sd / s.m_sd[j];
    trace.alpha_a.col(j) *= s.m_sd[j] / s.a_sd;
  }
  trace.beta_a *= s.y_sd / s.a_sd;
  trace.sigma_e2 *= s.y_sd * s.y_sd;
}

}  // namespace

PosteriorTrace fit_single_chain(const MediationDataset& data, Method method,
                                const ResolvedStructure& structure, const Hyperparameters& hyper,
                                const FitOptions& options, RngStream rng) {
  const Standardizer scaler = Standardizer::fit(data);
  const MediationDataset scaled = scaler.apply(data);

  PosteriorTrace trace;
  switch (method) {
    case Method::Gmm:
      trace = gmm_fit(scaled, hyper, options, rng);
      break;
    case Method::Potts:
      if (!structure.graph) throw std::invalid_argument("potts fit: no neighbor graph resolved");
      trace = potts_fit(scaled, *structure.graph, hyper, options, rng);
      break;
    case Method::Corrs:
      if (!structure.matrix) throw std::invalid_argument("corrs fit: no structure matrix resolved");
      trace = corrs_fit(scaled, *structure.matrix, hyper, options, rng);
      break;
  }
  destandardize_trace(trace, scaler);
  return trace;
}

int worker_count(int cap) {
  int workers = 0;
  if (const char* env = std::getenv("MEDGMM_WORKERS")) workers = std::atoi(env);
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers <= 0) workers = 1;
  return std::min(workers, std::max(1, cap));
}

FitResult run_fit(const MediationDataset& data, const RunConfig& config) {
  config.validate();
  data.validate();
  const auto start = std::chrono::steady_clock::now();

  FitResult result;
  result.structure = resolve_structure(data, config.method, config.structure);
  result.chains.resize(config.chains);

  RngStream master(config.seed);
  std::vector<std::string> errors(config.chains);
  const int workers = worker_count(config.chains);
  std::atomic<int> next{0};
  auto work = [&]() {
    for (;;) {
      const int c = next.fetch_add(1);
      if (c >= config.chains) return;
      try {
        result.chains[c] = fit_single_chain(data, config.method, result.structure, config.hyper,
                                            config.fit, master.stream(c));
      } catch (const std::exception& e) {
        errors[c] = e.what();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error("chain failed: " + e);

  result.report = build_selection_report(result.chains, config.fdr_target);

  if (config.chains >= 2) {
    result.pip_psrf.resize(data.p());
    std::vector<Eigen::VectorXd> traces(config.chains);
    for (int j = 0; j < data.p(); ++j) {
      for (int c = 0; c < config.chains; ++c) traces[c] = result.chains[c].active_indicator_trace(j);
      // an indicator that never moves in any chain is trivially converged
      bool constant = true;
      for (const auto& t : traces)
        if (t.minCoeff() != traces[0][0] || t.maxCoeff() != traces[0][0]) constant = false;
      result.pip_psrf[j] = constant ? 1.0 : psrf(traces);
    }
    for (int c = 0; c < config.chains; ++c) traces[c] = result.chains[c].beta_a;
    result.beta_a_psrf = psrf(traces);
    for (int c = 0; c < config.chains; ++c) traces[c] = result.chains[c].sigma_e2;
    result.sigma_e2_psrf = psrf(traces);
  }

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace medgmm
