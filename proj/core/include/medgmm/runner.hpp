#pragma once

#include <optional>
#include <string>
#include <vector>

#include "medgmm/analysis.hpp"
#include "medgmm/data.hpp"
#include "medgmm/fitopts.hpp"
#include "medgmm/linalg.hpp"
#include "medgmm/potts.hpp"

namespace medgmm {

enum class Method { Gmm, Potts, Corrs };

Method method_from_string(const std::string& name);
std::string method_to_string(Method method);

struct StructureSpec {
  enum class Source { Auto, GraphFile, MatrixFile };
  Source source = Source::Auto;
  std::string path;
  double eigen_floor = 1e-6;
};

struct RunConfig {
  Method method = Method::Gmm;
  FitOptions fit;
  int chains = 4;
  std::uint64_t seed = 0;
  double fdr_target = 0.1;
  Hyperparameters hyper;
  StructureSpec structure;

  void validate() const;
};

// Structure input resolved for a dataset: the neighbor graph (Potts) or the
// PD matrix (CorrS), built from the data unless supplied as a file.
struct ResolvedStructure {
  std::optional<NeighborGraph> graph;
  std::optional<SymmetricMatrix> matrix;
  double threshold = 0.0;   // auto graph threshold
  bool degenerate = false;  // auto graph found no separation
};

ResolvedStructure resolve_structure(const MediationDataset& data, Method method,
                                    const StructureSpec& spec);

// One chain: standardize, run the requested sampler, map coefficient draws
// back to the input scale (variance draws for the outcome are rescaled too;
// sigma_g2 stays on the standardized scale since mediator columns scale
// individually).
PosteriorTrace fit_single_chain(const MediationDataset& data, Method method,
                                const ResolvedStructure& structure, const Hyperparameters& hyper,
                                const FitOptions& options, RngStream rng);

struct FitResult {
  std::vector<PosteriorTrace> chains;
  SelectionReport report;
  Eigen::VectorXd pip_psrf;  // per mediator, empty when chains < 2
  double beta_a_psrf = 0.0;
  double sigma_e2_psrf = 0.0;
  ResolvedStructure structure;
  double wall_seconds = 0.0;
};

// Multi-chain fit: chains run on a worker pool with substreams of the
// configured seed, the pooled report and per-PIP convergence diagnostics are
// assembled afterwards.
FitResult run_fit(const MediationDataset& data, const RunConfig& config);

// Worker count: MEDGMM_WORKERS when set, hardware concurrency otherwise.
int worker_count(int cap);

}  // namespace medgmm
