#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "medgmm/conditionals.hpp"

namespace medgmm {

// Retained post-burn-in draws of one chain plus per-mediator component
// occupancy counts.
struct PosteriorTrace {
  int p = 0;
  long iterations = 0, burnin = 0;
  int thin = 1;
  int retained = 0;  // number of stored draws

  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> labels;  // T x p
  Eigen::MatrixXd beta_m, alpha_a;                                     // T x p
  Eigen::VectorXd beta_a, sigma_e2, sigma_g2, sigma_a2;                // T
  Eigen::MatrixXd extras;                                              // T x k, sampler-specific
  std::vector<std::string> extra_names;
  Eigen::MatrixXi occupancy;  // p x 4, counts per component over retained draws

  long clamp_events = 0;                 // CorrS logit clamping counter
  Eigen::VectorXd dmh_acceptance;        // Potts: per-parameter DMH acceptance rates
  double wall_seconds = 0.0;

  void reserve(int p_, long iterations_, long burnin_, int thin_, int n_extras);
  void record(const ChainState& state, const Eigen::VectorXd& extra_row);
  Eigen::VectorXd pips() const;
  // 0/1 trace of "mediator j in the active component" for convergence checks.
  Eigen::VectorXd active_indicator_trace(int j) const;
};

Eigen::VectorXd compute_pips(const PosteriorTrace& trace);

// Largest local-FDR cutoff whose included running mean stays below the
// target; matches an exhaustive search over all cutoffs exactly.
struct LocfdrSelection {
  double c1 = 0.0;
  std::vector<int> selected;
};
LocfdrSelection locfdr_threshold(const Eigen::VectorXd& locfdr, double target);

// Oracle TPR: the largest score-threshold selection whose realized FDR stays
// at or below `fdr`, ties on scores included together. Requires a non-empty
// truth set.
double tpr_at_fixed_fdr(const Eigen::VectorXd& scores, const std::vector<bool>& truth,
                        double fdr);

struct MseMetrics {
  double non_null = 0.0;
  double null = 0.0;
};
MseMetrics mse_metrics(const Eigen::VectorXd& nie_hat, const Eigen::VectorXd& nie_true,
                       const std::vector<bool>& active);

// Classic potential scale reduction factor over two or more equal-length
// scalar chains.
double psrf(const std::vector<Eigen::VectorXd>& chains);

struct RuleStats {
  std::string rule;
  double tpr = 0.0;
  double fdr = 0.0;
};
// TPR and realized FDR under the locfdr rule at `locfdr_target` and the fixed
// PIP > 0.5 / PIP > 0.9 cutoffs.
std::vector<RuleStats> empirical_fdr_report(const Eigen::VectorXd& pips, double locfdr_target,
                                            const std::vector<bool>& truth);

// PIPs, the local-FDR selection, and per-mediator/global effect summaries
// pooled over chains (equal-tailed 95% credible intervals).
struct SelectionReport {
  Eigen::VectorXd pip, locfdr;
  double c1 = 0.0;
  double fdr_target = 0.1;
  std::vector<int> selected;
  Eigen::VectorXd nie_mean, nie_lo, nie_hi;  // per mediator
  double nde_mean = 0, nde_lo = 0, nde_hi = 0;
  double nie_total_mean = 0, nie_total_lo = 0, nie_total_hi = 0;
  double te_mean = 0, te_lo = 0, te_hi = 0;
};
SelectionReport build_selection_report(const std::vector<PosteriorTrace>& chains,
                                       double fdr_target);

double quantile(std::vector<double> values, double prob);

}  // namespace medgmm
