#include "medgmm/simulate.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "medgmm/distributions.hpp"
#include "medgmm/runner.hpp"
#include "medgmm/structure.hpp"

namespace medgmm {

int SimDesign::resolved_active_count() const {
  if (active_count >= 0) return active_count;
  return static_cast<int>(std::lround(p * proportions[0]));
}

void SimDesign::validate() const {
  if (n < 2 || p < 1) throw std::invalid_argument("design: n must be >= 2 and p >= 1");
  if (block_size < 1 || block_count < 0) throw std::invalid_argument("design: bad block geometry");
  if (block_count * block_size > p)
    throw std::invalid_argument("design: blocks cover more mediators than p");
  if (std::abs(proportions.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("design: proportions must sum to 1");
  if ((proportions.array() < 0).any()) throw std::invalid_argument("design: negative proportion");
  const int actives = resolved_active_count();
  const int blocks_needed = placement == Placement::OneBlock    ? 1
                            : placement == Placement::TwoBlocks ? 2
                                                                : 5;
  if (!weak_surrogate && actives > 0) {
    if (block_count < blocks_needed)
      throw std::invalid_argument("design: placement needs more blocks than the design has");
    if (actives > blocks_needed * block_size)
      throw std::invalid_argument("design: active mediators exceed designated block capacity");
  } else if (actives > p) {
    throw std::invalid_argument("design: active mediators exceed p");
  }
  if (!(outcome_noise_sd > 0)) throw std::invalid_argument("design: outcome noise sd must be positive");
  if (weak_surrogate && (surrogate_high_frac < 0 || surrogate_high_frac > 1))
    throw std::invalid_argument("design: surrogate_high_frac must be in [0,1]");
}

std::vector<bool> TrueEffects::active() const {
  std::vector<bool> out(labels.size());
  for (int j = 0; j < labels.size(); ++j) out[j] = labels[j] == 1;
  return out;
}

Eigen::VectorXd TrueEffects::nie() const { return alpha_a.array() * beta_m.array(); }

TrueEffects gen_effects(const SimDesign& design, RngStream& rng) {
  design.validate();
  const int p = design.p;
  const int actives = design.resolved_active_count();

  TrueEffects eff;
  eff.labels = Eigen::VectorXi::Zero(p);
  eff.beta_m = Eigen::VectorXd::Zero(p);
  eff.alpha_a = Eigen::VectorXd::Zero(p);

  // actives pinned to the designated blocks, spread evenly from each block's
  // first slot; component 2-4 labels fill the rest iid
  const int blocks_used = design.placement == Placement::OneBlock    ? 1
                          : design.placement == Placement::TwoBlocks ? 2
                                                                     : 5;
  int placed = 0;
  for (int b = 0; b < blocks_used; ++b) {
    const int share = actives / blocks_used + (b < actives % blocks_used ? 1 : 0);
    for (int s = 0; s < share; ++s) eff.labels[b * design.block_size + s] = 1;
    placed += share;
  }
  if (placed != actives) throw std::logic_error("gen_effects: placement mismatch");

  const double rest = design.proportions[1] + design.proportions[2] + design.proportions[3];
  const double probs[3] = {design.proportions[1] / rest, design.proportions[2] / rest,
                           design.proportions[3] / rest};
  for (int j = 0; j < p; ++j) {
    if (eff.labels[j] == 1) continue;
    eff.labels[j] = 2 + rng.categorical(std::span<const double>(probs, 3));
  }

  // effect pairs per component
  const Eigen::Matrix2d chol = design.effect_cov.llt().matrixL();
  for (int j = 0; j < p; ++j) {
    switch (eff.labels[j]) {
      case 1: {
        const Eigen::Vector2d z{rng.normal(), rng.normal()};
        const Eigen::Vector2d pair = chol * z;
        eff.beta_m[j] = pair[0];
        eff.alpha_a[j] = pair[1];
        break;
      }
      case 2:
        eff.beta_m[j] = std::sqrt(design.effect_var2) * rng.normal();
        break;
      case 3:
        eff.alpha_a[j] = std::sqrt(design.effect_var3) * rng.normal();
        break;
      default:
        break;
    }
  }
  return eff;
}

namespace {

SymmetricMatrix surrogate_correlation(const SimDesign& design, RngStream& rng) {
  const int p = design.p;
  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      double v;
      if (rng.uniform() < design.surrogate_high_frac) {
        v = rng.uniform(0.2, 0.4) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
      } else {
        v = rng.uniform(-0.12, 0.12);
      }
      corr(i, j) = corr(j, i) = v;
    }
  }
  return nearest_positive_definite(SymmetricMatrix(corr), 1e-6);
}

}  // namespace

SymmetricMatrix gen_block_covariance(const SimDesign& design, RngStream& rng) {
  design.validate();
  if (design.weak_surrogate) return surrogate_correlation(design, rng);

  const int p = design.p;
  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(p, p);
  const int structured = design.block_count * design.block_size;
  for (int i = 0; i < structured; ++i) {
    for (int j = i + 1; j < structured; ++j) {
      const bool same_block = i / design.block_size == j / design.block_size;
      double v;
      if (same_block) {
        // affine decay in within-block index distance, floored at zero
        v = std::max(0.0, design.rho1_c0 - design.rho1_c1 * std::abs(i - j));
      } else {
        v = design.rho2;
      }
      corr(i, j) = corr(j, i) = v;
    }
  }
  SymmetricMatrix out(corr);
  if (out.factorize() && out.min_eigenvalue() >= 1e-8) return out;
  return nearest_positive_definite(out, 1e-6);
}

MediationDataset gen_dataset(const SimDesign& design, const TrueEffects& effects,
                             const SymmetricMatrix& cov, RngStream& rng) {
  const int n = design.n, p = design.p;
  if (cov.dim() != p) throw std::invalid_argument("gen_dataset: covariance dimension mismatch");
  if (!cov.factorize()) throw std::invalid_argument("gen_dataset: covariance not positive definite");
  const Eigen::MatrixXd chol = cov.cholesky().matrixL();

  MediationDataset data;
  data.exposure.resize(n);
  for (int i = 0; i < n; ++i) data.exposure[i] = rng.normal();

  data.mediators.resize(n, p);
  Eigen::VectorXd z(p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) z[j] = rng.normal();
    data.mediators.row(i) =
        (data.exposure[i] * effects.alpha_a + chol * z).transpose();
  }

  data.outcome.resize(n);
  for (int i = 0; i < n; ++i)
    data.outcome[i] = data.mediators.row(i).dot(effects.beta_m) + data.exposure[i] * design.beta_a +
                      design.outcome_noise_sd * rng.normal();
  data.covariates.resize(n, 0);
  return data;
}

SimBundle simulate_bundle(const SimDesign& design, RngStream& rng) {
  SimBundle out;
  out.effects = gen_effects(design, rng);
  const SymmetricMatrix cov = gen_block_covariance(design, rng);
  out.data = gen_dataset(design, out.effects, cov, rng);
  return out;
}

CorrelationSummary design_correlation_summary(const SymmetricMatrix& cov) {
  CorrelationSummary s;
  s.corr = cov.mat();
  s.abs_corr = s.corr.cwiseAbs();
  const int p = cov.dim();
  s.offdiag_abs.reserve(static_cast<std::size_t>(p) * (p - 1) / 2);
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) s.offdiag_abs.push_back(s.abs_corr(i, j));
  return s;
}

namespace {

struct Cell {
  int design_idx;
  int method_idx;
  int replicate;
};

ReplicateResult run_cell(const GridConfig& config, const Cell& cell,
                         const SymmetricMatrix& cov) {
  const SimDesign& design = config.designs[cell.design_idx];
  const Method method = method_from_string(config.methods[cell.method_idx]);

  ReplicateResult row;
  row.design_id = design.id;
  row.method = config.methods[cell.method_idx];
  row.replicate = cell.replicate;

  const auto start = std::chrono::steady_clock::now();
  try {
    RngStream design_master = RngStream(config.seed).stream(cell.design_idx);
    RngStream data_rng = design_master.stream(cell.replicate);
    RngStream perturb_rng = design_master.stream(1000000 + cell.replicate);
    RngStream fit_rng =
        design_master.stream(2000000 + cell.replicate * 16 + cell.method_idx);

    const TrueEffects effects = gen_effects(design, data_rng);
    const MediationDataset data = gen_dataset(design, effects, cov, data_rng);

    // structure inputs come from the design's generating correlation (the
    // precise structure, which the perturbation settings then degrade); the
    // surrogate and no-correlation designs carry no usable block structure
    // and fall back to estimation from the simulated mediators
    ResolvedStructure structure;
    if (method == Method::Potts) {
      GraphBuildResult built;
      if (design.weak_surrogate) {
        built = build_neighbor_graph(estimate_correlation(data.mediators));
      } else {
        built = build_neighbor_graph(design_correlation_summary(cov));
        if (built.degenerate) built = build_neighbor_graph(estimate_correlation(data.mediators));
      }
      structure.threshold = built.threshold;
      structure.degenerate = built.degenerate;
      if (config.perturb.graph_rate > 0)
        structure.graph = perturb_graph(built.graph, config.perturb.graph_rate, perturb_rng);
      else
        structure.graph = std::move(built.graph);
    } else if (method == Method::Corrs) {
      CorrelationSummary summary = design.weak_surrogate
                                       ? estimate_correlation(data.mediators)
                                       : design_correlation_summary(cov);
      if (config.perturb.corr_noise_sd > 0)
        summary = perturb_correlation(summary, config.perturb.corr_noise_sd, perturb_rng);
      structure.matrix = build_corrs_D(summary);
      structure.matrix->factorize();
    }

    const PosteriorTrace trace =
        fit_single_chain(data, method, structure, config.hyper, config.fit, fit_rng);

    const Eigen::VectorXd pips = trace.pips();
    const std::vector<bool> truth = effects.active();
    row.tpr = tpr_at_fixed_fdr(pips, truth, config.fdr_target);

    Eigen::VectorXd nie_hat = Eigen::VectorXd::Zero(design.p);
    for (int j = 0; j < design.p; ++j)
      nie_hat[j] = (trace.beta_m.col(j).array() * trace.alpha_a.col(j).array()).mean();
    const MseMetrics mse = mse_metrics(nie_hat, effects.nie(), truth);
    row.mse_non_null = mse.non_null;
    row.mse_null = mse.null;

    const auto rules = empirical_fdr_report(pips, config.fdr_target, truth);
    row.tpr_locfdr = rules[0].tpr;
    row.fdr_locfdr = rules[0].fdr;
    row.tpr_pip5 = rules[1].tpr;
    row.fdr_pip5 = rules[1].fdr;
    row.tpr_pip9 = rules[2].tpr;
    row.fdr_pip9 = rules[2].fdr;
    row.ok = true;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

void aggregate(GridResult& result, const GridConfig& config) {
  for (std::size_t d = 0; d < config.designs.size(); ++d) {
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      GridAggregate agg;
      agg.design_id = config.designs[d].id;
      agg.method = config.methods[m];
      std::vector<const ReplicateResult*> rows;
      for (const auto& row : result.rows)
        if (row.design_id == agg.design_id && row.method == agg.method)
          rows.push_back(&row);
      std::vector<double> vals;
      auto mean_se = [&](auto getter, double& mean, double& se) {
        vals.clear();
        for (const auto* r : rows)
          if (r->ok) vals.push_back(getter(*r));
        if (vals.empty()) {
          mean = se = std::numeric_limits<double>::quiet_NaN();
          return;
        }
        double s = 0;
        for (double v : vals) s += v;
        mean = s / vals.size();
        double ss = 0;
        for (double v : vals) ss += (v - mean) * (v - mean);
        se = vals.size() > 1 ? std::sqrt(ss / (vals.size() - 1) / vals.size()) : 0.0;
      };
      for (const auto* r : rows) (r->ok ? agg.completed : agg.failed)++;
      mean_se([](const ReplicateResult& r) { return r.tpr; }, agg.tpr_mean, agg.tpr_se);
      mean_se([](const ReplicateResult& r) { return r.mse_non_null; }, agg.mse_non_null_mean,
              agg.mse_non_null_se);
      mean_se([](const ReplicateResult& r) { return r.mse_null; }, agg.mse_null_mean,
              agg.mse_null_se);
      mean_se([](const ReplicateResult& r) { return r.tpr_locfdr; }, agg.tpr_locfdr_mean,
              agg.tpr_locfdr_se);
      mean_se([](const ReplicateResult& r) { return r.fdr_locfdr; }, agg.fdr_locfdr_mean,
              agg.fdr_locfdr_se);
      mean_se([](const ReplicateResult& r) { return r.tpr_pip5; }, agg.tpr_pip5_mean,
              agg.tpr_pip5_se);
      mean_se([](const ReplicateResult& r) { return r.fdr_pip5; }, agg.fdr_pip5_mean,
              agg.fdr_pip5_se);
      mean_se([](const ReplicateResult& r) { return r.tpr_pip9; }, agg.tpr_pip9_mean,
              agg.tpr_pip9_se);
      mean_se([](const ReplicateResult& r) { return r.fdr_pip9; }, agg.fdr_pip9_mean,
              agg.fdr_pip9_se);
      result.aggregates.push_back(std::move(agg));
    }
  }
}

}  // namespace

GridResult run_grid(const GridConfig& config) {
  if (config.designs.empty() || config.methods.empty() || config.replicates < 1)
    throw std::invalid_argument("run_grid: empty grid");
  config.fit.validate();
  config.hyper.validate();
  for (const auto& m : config.methods) method_from_string(m);

  // design covariances are shared across replicates; factor them up front so
  // worker threads only read the cached factor
  std::vector<SymmetricMatrix> covs;
  for (std::size_t d = 0; d < config.designs.size(); ++d) {
    RngStream cov_rng = RngStream(config.seed).stream(d).stream(900000);
    covs.push_back(gen_block_covariance(config.designs[d], cov_rng));
    covs.back().factorize();
  }

  std::vector<Cell> cells;
  for (std::size_t d = 0; d < config.designs.size(); ++d)
    for (int r = 0; r < config.replicates; ++r)
      for (std::size_t m = 0; m < config.methods.size(); ++m)
        cells.push_back({static_cast<int>(d), static_cast<int>(m), r});

  GridResult result;
  result.rows.resize(cells.size());
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      result.rows[i] = run_cell(config, cells[i], covs[cells[i].design_idx]);
    }
  };
  const int workers =
      config.workers > 0 ? config.workers : worker_count(static_cast<int>(cells.size()));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  aggregate(result, config);
  return result;
}

}  // namespace medgmm
