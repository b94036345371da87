#pragma once

#include <optional>
#include <string>
#include <vector>

#include "medgmm/analysis.hpp"
#include "medgmm/data.hpp"
#include "medgmm/fitopts.hpp"
#include "medgmm/linalg.hpp"
#include "medgmm/rng.hpp"
#include "medgmm/structure.hpp"

namespace medgmm {

enum class Placement { OneBlock, TwoBlocks, FiveBlocks };

// A synthetic design: block-structured mediator correlation, four-component
// effect generation with actives pinned to designated blocks.
struct SimDesign {
  std::string id = "design";
  int n = 100;
  int p = 200;
  int block_size = 10;
  int block_count = 10;
  // within-block correlation max(0, rho1_c0 - rho1_c1 * |i-j|); constant when
  // rho1_c1 = 0
  double rho1_c0 = 0.5;
  double rho1_c1 = 0.03;
  double rho2 = 0.0;  // between structured blocks
  Placement placement = Placement::OneBlock;
  int active_count = -1;  // -1: round(p * proportions[0])
  Eigen::Vector4d proportions{0.05, 0.05, 0.10, 0.80};
  Eigen::Matrix2d effect_cov = (Eigen::Matrix2d() << 0.5, 0.2, 0.2, 0.5).finished();
  double effect_var2 = 0.5;  // beta_m variance in component 2
  double effect_var3 = 0.5;  // alpha_a variance in component 3
  double beta_a = 0.5;
  double outcome_noise_sd = 1.0;

  // replaces the block structure with a sparse random correlation surrogate
  // (a small fraction of pairs above 0.2, the rest near zero)
  bool weak_surrogate = false;
  double surrogate_high_frac = 0.03;

  int resolved_active_count() const;
  void validate() const;
};

struct TrueEffects {
  Eigen::VectorXd beta_m, alpha_a;
  Eigen::VectorXi labels;  // 1..4
  std::vector<bool> active() const;
  Eigen::VectorXd nie() const;  // per-mediator alpha * beta
};

TrueEffects gen_effects(const SimDesign& design, RngStream& rng);

// Mediator correlation matrix for the design; PD enforced by projection when
// the raw construction is not. The surrogate variant consumes the rng.
SymmetricMatrix gen_block_covariance(const SimDesign& design, RngStream& rng);

MediationDataset gen_dataset(const SimDesign& design, const TrueEffects& effects,
                             const SymmetricMatrix& cov, RngStream& rng);

// The design's generating correlation matrix viewed as a structure input
// (the "precise" structure the sensitivity perturbations degrade).
CorrelationSummary design_correlation_summary(const SymmetricMatrix& cov);

// One fully seeded dataset + truth for the simulate command.
struct SimBundle {
  MediationDataset data;
  TrueEffects effects;
};
SimBundle simulate_bundle(const SimDesign& design, RngStream& rng);

struct PerturbSettings {
  double graph_rate = 0.0;     // Potts neighbor rewiring proportion
  double corr_noise_sd = 0.0;  // CorrS correlation noise
};

struct GridConfig {
  std::vector<SimDesign> designs;
  std::vector<std::string> methods;  // gmm | potts | corrs
  int replicates = 20;
  FitOptions fit;
  Hyperparameters hyper;
  double fdr_target = 0.1;
  PerturbSettings perturb;
  std::uint64_t seed = 0;
  int workers = 0;  // 0: hardware concurrency
};

struct ReplicateResult {
  std::string design_id;
  std::string method;
  int replicate = 0;
  bool ok = false;
  std::string error;
  double tpr = 0.0;  // oracle TPR at 10% FDR
  double mse_non_null = 0.0, mse_null = 0.0;
  double tpr_locfdr = 0.0, fdr_locfdr = 0.0;
  double tpr_pip5 = 0.0, fdr_pip5 = 0.0;
  double tpr_pip9 = 0.0, fdr_pip9 = 0.0;
  double seconds = 0.0;
};

struct GridAggregate {
  std::string design_id;
  std::string method;
  int completed = 0, failed = 0;
  // mean and standard error (sd / sqrt(completed)) per metric
  double tpr_mean = 0, tpr_se = 0;
  double mse_non_null_mean = 0, mse_non_null_se = 0;
  double mse_null_mean = 0, mse_null_se = 0;
  double tpr_locfdr_mean = 0, tpr_locfdr_se = 0;
  double fdr_locfdr_mean = 0, fdr_locfdr_se = 0;
  double tpr_pip5_mean = 0, tpr_pip5_se = 0;
  double fdr_pip5_mean = 0, fdr_pip5_se = 0;
  double tpr_pip9_mean = 0, tpr_pip9_se = 0;
  double fdr_pip9_mean = 0, fdr_pip9_se = 0;
};

struct GridResult {
  std::vector<ReplicateResult> rows;
  std::vector<GridAggregate> aggregates;
};

// Runs every (design, method, replicate) cell: generate data, derive the
// structure input, fit one chain, score against the truth. Replicates run on
// a worker pool; the same replicate seed produces the same dataset for every
// method. Per-replicate failures are recorded, not fatal.
GridResult run_grid(const GridConfig& config);

}  // namespace medgmm
