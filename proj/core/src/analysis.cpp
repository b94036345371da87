#include "medgmm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace medgmm {

void PosteriorTrace::reserve(int p_, long iterations_, long burnin_, int thin_, int n_extras) {
  p = p_;
  iterations = iterations_;
  burnin = burnin_;
  thin = thin_;
  const long cap = (iterations_ - burnin_ + thin_ - 1) / thin_;
  labels.resize(cap, p_);
  beta_m.resize(cap, p_);
  alpha_a.resize(cap, p_);
  beta_a.resize(cap);
  sigma_e2.resize(cap);
  sigma_g2.resize(cap);
  sigma_a2.resize(cap);
  extras.resize(cap, n_extras);
  occupancy = Eigen::MatrixXi::Zero(p_, 4);
  retained = 0;
}

void PosteriorTrace::record(const ChainState& state, const Eigen::VectorXd& extra_row) {
  const int t = retained++;
  for (int j = 0; j < p; ++j) {
    const int k = state.mixture.gamma[j];
    labels(t, j) = static_cast<std::uint8_t>(k);
    occupancy(j, k - 1) += 1;
  }
  beta_m.row(t) = state.outcome.beta_m;
  alpha_a.row(t) = state.mediator.alpha_a;
  beta_a[t] = state.outcome.beta_a;
  sigma_e2[t] = state.outcome.sigma_e2;
  sigma_g2[t] = state.mediator.sigma_g2;
  sigma_a2[t] = state.outcome.sigma_a2;
  if (extras.cols() > 0) extras.row(t) = extra_row;
}

Eigen::VectorXd PosteriorTrace::pips() const {
  if (retained < 1) throw std::invalid_argument("trace: no retained draws");
  return occupancy.col(0).cast<double>() / static_cast<double>(retained);
}

Eigen::VectorXd PosteriorTrace::active_indicator_trace(int j) const {
  Eigen::VectorXd out(retained);
  for (int t = 0; t < retained; ++t) out[t] = labels(t, j) == 1 ? 1.0 : 0.0;
  return out;
}

Eigen::VectorXd compute_pips(const PosteriorTrace& trace) { return trace.pips(); }

LocfdrSelection locfdr_threshold(const Eigen::VectorXd& locfdr, double target) {
  if (!(target > 0.0 && target < 1.0))
    throw std::invalid_argument("locfdr_threshold: target must be in (0,1)");
  const int p = static_cast<int>(locfdr.size());
  std::vector<int> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return locfdr[a] < locfdr[b]; });

  // candidate cutoffs: each distinct value (selection = strictly smaller
  // entries) plus one above the maximum (selection = everything)
  double best_c1 = locfdr[order[0]];  // empty selection fallback
  int best_count = 0;
  double prefix = 0.0;
  int i = 0;
  while (i <= p) {
    const double candidate = (i < p) ? locfdr[order[i]] : locfdr[order[p - 1]] + 1.0;
    // advance i to the first index with value >= candidate already holds;
    // selection size for this candidate is i only when locfdr[order[i]] is a
    // new distinct value, so skip duplicates of the previous value
    if (i == 0 || i == p || locfdr[order[i]] != locfdr[order[i - 1]]) {
      if (i == 0 || prefix / i < target) {
        best_c1 = candidate;
        best_count = i;
      }
    }
    if (i < p) prefix += locfdr[order[i]];
    ++i;
  }
  LocfdrSelection sel;
  sel.c1 = best_c1;
  sel.selected.assign(order.begin(), order.begin() + best_count);
  std::sort(sel.selected.begin(), sel.selected.end());
  return sel;
}

double tpr_at_fixed_fdr(const Eigen::VectorXd& scores, const std::vector<bool>& truth,
                        double fdr) {
  const int p = static_cast<int>(scores.size());
  if (static_cast<int>(truth.size()) != p)
    throw std::invalid_argument("tpr_at_fixed_fdr: score/truth length mismatch");
  const int actives = static_cast<int>(std::count(truth.begin(), truth.end(), true));
  if (actives == 0) throw std::invalid_argument("tpr_at_fixed_fdr: truth has no active mediators");

  std::vector<int> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] > scores[b]; });

  double best_tpr = 0.0;
  int tp = 0;
  for (int i = 0; i < p;) {
    // include the whole tie group
    const double s = scores[order[i]];
    while (i < p && scores[order[i]] == s) {
      if (truth[order[i]]) ++tp;
      ++i;
    }
    const double realized_fdr = static_cast<double>(i - tp) / i;
    if (realized_fdr <= fdr) best_tpr = std::max(best_tpr, static_cast<double>(tp) / actives);
  }
  return best_tpr;
}

MseMetrics mse_metrics(const Eigen::VectorXd& nie_hat, const Eigen::VectorXd& nie_true,
                       const std::vector<bool>& active) {
  MseMetrics out;
  double ss_active = 0.0, ss_null = 0.0;
  int n_active = 0, n_null = 0;
  for (int j = 0; j < nie_hat.size(); ++j) {
    const double d = nie_hat[j] - nie_true[j];
    if (active[j]) {
      ss_active += d * d;
      ++n_active;
    } else {
      ss_null += d * d;
      ++n_null;
    }
  }
  out.non_null = n_active > 0 ? ss_active / n_active : std::numeric_limits<double>::quiet_NaN();
  out.null = n_null > 0 ? ss_null / n_null : std::numeric_limits<double>::quiet_NaN();
  return out;
}

double psrf(const std::vector<Eigen::VectorXd>& chains) {
  const int m = static_cast<int>(chains.size());
  if (m < 2) throw std::invalid_argument("psrf: need at least 2 chains");
  const long t = chains[0].size();
  if (t < 10) throw std::invalid_argument("psrf: chains too short");
  for (const auto& c : chains)
    if (c.size() != t) throw std::invalid_argument("psrf: chains must have equal length");

  Eigen::VectorXd means(m);
  double within = 0.0;
  for (int c = 0; c < m; ++c) {
    means[c] = chains[c].mean();
    within += (chains[c].array() - means[c]).square().sum() / (t - 1);
  }
  within /= m;
  const double grand = means.mean();
  const double between_over_t = (means.array() - grand).square().sum() / (m - 1);
  const double var_hat = (t - 1.0) / t * within + between_over_t;
  if (within <= 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(var_hat / within);
}

std::vector<RuleStats> empirical_fdr_report(const Eigen::VectorXd& pips, double locfdr_target,
                                            const std::vector<bool>& truth) {
  const int p = static_cast<int>(pips.size());
  const int actives = static_cast<int>(std::count(truth.begin(), truth.end(), true));
  auto stats_for = [&](const std::vector<int>& sel, const std::string& name) {
    int tp = 0;
    for (int j : sel)
      if (truth[j]) ++tp;
    RuleStats r;
    r.rule = name;
    r.tpr = actives > 0 ? static_cast<double>(tp) / actives : 0.0;
    r.fdr = sel.empty() ? 0.0 : static_cast<double>(sel.size() - tp) / sel.size();
    return r;
  };

  const Eigen::VectorXd locfdr = 1.0 - pips.array();
  std::vector<RuleStats> out;
  out.push_back(stats_for(locfdr_threshold(locfdr, locfdr_target).selected, "locfdr"));
  for (double cut : {0.5, 0.9}) {
    std::vector<int> sel;
    for (int j = 0; j < p; ++j)
      if (pips[j] > cut) sel.push_back(j);
    out.push_back(stats_for(sel, cut == 0.5 ? "pip>0.5" : "pip>0.9"));
  }
  return out;
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double h = prob * (values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = h - lo;
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

SelectionReport build_selection_report(const std::vector<PosteriorTrace>& chains,
                                       double fdr_target) {
  if (chains.empty()) throw std::invalid_argument("build_selection_report: no chains");
  const int p = chains[0].p;
  long total = 0;
  for (const auto& c : chains) total += c.retained;

  SelectionReport rep;
  rep.fdr_target = fdr_target;
  Eigen::VectorXd occupancy1 = Eigen::VectorXd::Zero(p);
  for (const auto& c : chains) occupancy1 += c.occupancy.col(0).cast<double>();
  rep.pip = occupancy1 / static_cast<double>(total);
  rep.locfdr = 1.0 - rep.pip.array();
  auto sel = locfdr_threshold(rep.locfdr, fdr_target);
  rep.c1 = sel.c1;
  rep.selected = std::move(sel.selected);

  rep.nie_mean.resize(p);
  rep.nie_lo.resize(p);
  rep.nie_hi.resize(p);
  std::vector<double> draws;
  draws.reserve(total);
  std::vector<double> nde_draws, nie_draws, te_draws;
  nde_draws.reserve(total);
  nie_draws.reserve(total);
  te_draws.reserve(total);

  for (int j = 0; j < p; ++j) {
    draws.clear();
    for (const auto& c : chains)
      for (int t = 0; t < c.retained; ++t) draws.push_back(c.beta_m(t, j) * c.alpha_a(t, j));
    rep.nie_mean[j] = std::accumulate(draws.begin(), draws.end(), 0.0) / draws.size();
    rep.nie_lo[j] = quantile(draws, 0.025);
    rep.nie_hi[j] = quantile(draws, 0.975);
  }
  for (const auto& c : chains) {
    for (int t = 0; t < c.retained; ++t) {
      const double nde = c.beta_a[t];
      const double nie = c.beta_m.row(t).dot(c.alpha_a.row(t));
      nde_draws.push_back(nde);
      nie_draws.push_back(nie);
      te_draws.push_back(nde + nie);
    }
  }
  auto summarize = [&](std::vector<double>& d, double& mean, double& lo, double& hi) {
    mean = std::accumulate(d.begin(), d.end(), 0.0) / d.size();
    lo = quantile(d, 0.025);
    hi = quantile(d, 0.975);
  };
  summarize(nde_draws, rep.nde_mean, rep.nde_lo, rep.nde_hi);
  summarize(nie_draws, rep.nie_total_mean, rep.nie_total_lo, rep.nie_total_hi);
  summarize(te_draws, rep.te_mean, rep.te_lo, rep.te_hi);
  return rep;
}

}  // namespace medgmm
