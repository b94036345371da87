// Command-line front end: simulate, fit, evaluate, diagnose, grid.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "medgmm/analysis.hpp"
#include "medgmm/io.hpp"
#include "medgmm/runner.hpp"
#include "medgmm/simulate.hpp"
#include "medgmm/version.hpp"

namespace fs = std::filesystem;
using namespace medgmm;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct CommonOverrides {
  std::optional<std::string> method;
  std::optional<std::uint64_t> seed;
  std::optional<int> chains;
  std::optional<long> iterations, burnin;
  std::optional<int> thin;
  std::optional<double> fdr;
  std::optional<std::string> graph_file, matrix_file;
};

void apply_overrides(RunConfig& config, const CommonOverrides& ov) {
  if (ov.method) config.method = method_from_string(*ov.method);
  if (ov.seed) config.seed = *ov.seed;
  if (ov.chains) config.chains = *ov.chains;
  if (ov.iterations) config.fit.iterations = *ov.iterations;
  if (ov.burnin) config.fit.burnin = *ov.burnin;
  if (ov.thin) config.fit.thin = *ov.thin;
  if (ov.fdr) config.fdr_target = *ov.fdr;
  if (ov.graph_file) {
    config.structure.source = StructureSpec::Source::GraphFile;
    config.structure.path = *ov.graph_file;
  }
  if (ov.matrix_file) {
    config.structure.source = StructureSpec::Source::MatrixFile;
    config.structure.path = *ov.matrix_file;
  }
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed_override) {
  SimConfig config = parse_sim_config(read_text_file(config_path));
  if (seed_override) config.seed = *seed_override;
  const std::string prov =
      provenance_line(config.seed, fnv1a64(design_to_json(config.design, config.seed, config.replicates)));

  fs::create_directories(out_dir);
  write_text_file((fs::path(out_dir) / "design.json").string(),
                  design_to_json(config.design, config.seed, config.replicates));

  RngStream master(config.seed);
  for (int r = 0; r < config.replicates; ++r) {
    RngStream rng = master.stream(r);
    const SimBundle bundle = simulate_bundle(config.design, rng);
    std::string dir = out_dir;
    if (config.replicates > 1) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "rep%04d", r);
      dir = (fs::path(out_dir) / buf).string();
    }
    write_dataset_dir(dir, bundle.data, prov);
    write_truth_csv((fs::path(dir) / "truth.csv").string(), bundle.effects, prov);
  }
  std::cout << "wrote " << config.replicates << " dataset(s) under " << out_dir << "\n";
  return 0;
}

void write_fit_outputs(const std::string& out_dir, const FitResult& result,
                       const RunConfig& config, const std::string& prov) {
  fs::create_directories(out_dir);
  const SelectionReport& rep = result.report;
  const int p = static_cast<int>(rep.pip.size());

  {
    std::ofstream out(fs::path(out_dir) / "pips.csv");
    out << prov << "\nmediator,pip,locfdr,selected\n";
    std::vector<bool> sel(p, false);
    for (int j : rep.selected) sel[j] = true;
    for (int j = 0; j < p; ++j)
      out << mediator_name(j) << "," << format_double(rep.pip[j]) << ","
          << format_double(rep.locfdr[j]) << "," << (sel[j] ? 1 : 0) << "\n";
  }
  {
    std::ofstream out(fs::path(out_dir) / "effects.csv");
    out << prov << "\nmediator,nie_mean,nie_lo,nie_hi\n";
    for (int j = 0; j < p; ++j)
      out << mediator_name(j) << "," << format_double(rep.nie_mean[j]) << ","
          << format_double(rep.nie_lo[j]) << "," << format_double(rep.nie_hi[j]) << "\n";
  }
  if (result.pip_psrf.size() > 0) {
    std::ofstream out(fs::path(out_dir) / "psrf.csv");
    out << prov << "\nparam,psrf\n";
    for (int j = 0; j < p; ++j)
      out << mediator_name(j) << "," << format_double(result.pip_psrf[j]) << "\n";
    out << "beta_a," << format_double(result.beta_a_psrf) << "\n";
    out << "sigma_e2," << format_double(result.sigma_e2_psrf) << "\n";
  }

  // per-chain traces for the diagnose command
  for (std::size_t c = 0; c < result.chains.size(); ++c) {
    const PosteriorTrace& tr = result.chains[c];
    char buf[40];
    std::snprintf(buf, sizeof(buf), "trace_gamma_chain%zu.csv", c);
    {
      std::ofstream out(fs::path(out_dir) / buf);
      out << prov << "\n";
      const auto names = mediator_names(p);
      for (int j = 0; j < p; ++j) out << (j ? "," : "") << names[j];
      out << "\n";
      for (int t = 0; t < tr.retained; ++t) {
        for (int j = 0; j < p; ++j) out << (j ? "," : "") << int(tr.labels(t, j));
        out << "\n";
      }
    }
    std::snprintf(buf, sizeof(buf), "trace_scalars_chain%zu.csv", c);
    {
      std::ofstream out(fs::path(out_dir) / buf);
      out << prov << "\nbeta_a,sigma_e2,sigma_g2,sigma_a2";
      for (const auto& name : tr.extra_names) out << "," << name;
      out << "\n";
      for (int t = 0; t < tr.retained; ++t) {
        out << format_double(tr.beta_a[t]) << "," << format_double(tr.sigma_e2[t]) << ","
            << format_double(tr.sigma_g2[t]) << "," << format_double(tr.sigma_a2[t]);
        for (Eigen::Index e = 0; e < tr.extras.cols(); ++e)
          out << "," << format_double(tr.extras(t, e));
        out << "\n";
      }
    }
  }

  {
    std::ostringstream os;
    os << "{\n";
    os << "  \"method\": \"" << method_to_string(config.method) << "\",\n";
    os << "  \"chains\": " << config.chains << ",\n";
    os << "  \"seed\": " << config.seed << ",\n";
    os << "  \"iterations\": " << config.fit.iterations << ",\n";
    os << "  \"burnin\": " << config.fit.burnin << ",\n";
    os << "  \"thin\": " << config.fit.thin << ",\n";
    os << "  \"fdr_target\": " << format_double(rep.fdr_target) << ",\n";
    os << "  \"locfdr_cutoff\": " << format_double(rep.c1) << ",\n";
    os << "  \"n_selected\": " << rep.selected.size() << ",\n";
    os << "  \"selected\": [";
    for (std::size_t i = 0; i < rep.selected.size(); ++i)
      os << (i ? ", " : "") << "\"" << mediator_name(rep.selected[i]) << "\"";
    os << "],\n";
    os << "  \"nde\": {\"mean\": " << format_double(rep.nde_mean)
       << ", \"lo\": " << format_double(rep.nde_lo) << ", \"hi\": " << format_double(rep.nde_hi)
       << "},\n";
    os << "  \"nie\": {\"mean\": " << format_double(rep.nie_total_mean)
       << ", \"lo\": " << format_double(rep.nie_total_lo)
       << ", \"hi\": " << format_double(rep.nie_total_hi) << "},\n";
    os << "  \"te\": {\"mean\": " << format_double(rep.te_mean)
       << ", \"lo\": " << format_double(rep.te_lo) << ", \"hi\": " << format_double(rep.te_hi)
       << "},\n";
    long clamps = 0;
    for (const auto& tr : result.chains) clamps += tr.clamp_events;
    os << "  \"logit_clamp_events\": " << clamps << ",\n";
    os << "  \"structure_threshold\": " << format_double(result.structure.threshold) << ",\n";
    os << "  \"structure_degenerate\": " << (result.structure.degenerate ? "true" : "false")
       << "\n";
    os << "}\n";
    write_text_file((fs::path(out_dir) / "summary.json").string(), os.str());
  }
  {
    // wall time kept out of the deterministic outputs
    std::ofstream out(fs::path(out_dir) / "timings.txt");
    out << "wall_seconds " << result.wall_seconds << "\n";
  }
}

int cmd_fit(const std::string& config_path, const std::string& data_dir,
            const std::string& out_dir, const CommonOverrides& ov) {
  RunConfig config;
  std::string config_text = "{}";
  if (!config_path.empty()) {
    config_text = read_text_file(config_path);
    config = parse_fit_config(config_text);
  }
  apply_overrides(config, ov);
  config.validate();

  const MediationDataset data = read_dataset_dir(data_dir);
  const FitResult result = run_fit(data, config);
  const std::string prov = provenance_line(config.seed, fnv1a64(config_text));
  write_fit_outputs(out_dir, result, config, prov);

  std::cout << "fit " << method_to_string(config.method) << " on n=" << data.n()
            << " p=" << data.p() << ": " << result.report.selected.size()
            << " mediators selected at locfdr target " << config.fdr_target << " (c1="
            << format_double(result.report.c1) << ", " << result.wall_seconds << " s)\n";
  if (result.pip_psrf.size() > 0) {
    std::vector<double> v(result.pip_psrf.data(), result.pip_psrf.data() + result.pip_psrf.size());
    std::cout << "PIP PSRF 95% interval: [" << format_double(quantile(v, 0.025)) << ", "
              << format_double(quantile(v, 0.975)) << "]\n";
  }
  return 0;
}

int cmd_evaluate(const std::string& report_dir, const std::string& truth_path,
                 const std::string& out_path, double fdr_target) {
  const TruthTable truth = read_truth_csv(truth_path);
  const NamedMatrix pips_file = read_matrix_csv((fs::path(report_dir) / "pips.csv").string(), true);
  if (pips_file.values.rows() != truth.labels.size())
    throw std::invalid_argument("evaluate: report has " + std::to_string(pips_file.values.rows()) +
                                " mediators, truth has " + std::to_string(truth.labels.size()));
  // columns: mediator(name, parsed as nan) pip locfdr selected; read by header
  int pip_col = -1;
  for (std::size_t c = 0; c < pips_file.columns.size(); ++c)
    if (pips_file.columns[c] == "pip") pip_col = static_cast<int>(c);
  if (pip_col < 0) throw std::invalid_argument("evaluate: pips.csv has no 'pip' column");
  const Eigen::VectorXd pips = pips_file.values.col(pip_col);

  const NamedMatrix effects = read_matrix_csv((fs::path(report_dir) / "effects.csv").string(), true);
  int nie_col = -1;
  for (std::size_t c = 0; c < effects.columns.size(); ++c)
    if (effects.columns[c] == "nie_mean") nie_col = static_cast<int>(c);
  if (nie_col < 0) throw std::invalid_argument("evaluate: effects.csv has no 'nie_mean' column");

  const std::vector<bool> active = truth.active();
  const double tpr = tpr_at_fixed_fdr(pips, active, fdr_target);
  const auto rules = empirical_fdr_report(pips, fdr_target, active);
  const MseMetrics mse = mse_metrics(effects.values.col(nie_col), truth.nie(), active);

  std::ostringstream os;
  os << "metric,value\n";
  os << "tpr_at_fdr," << format_double(tpr) << "\n";
  for (const auto& r : rules)
    os << "tpr_" << r.rule << "," << format_double(r.tpr) << "\nfdr_" << r.rule << ","
       << format_double(r.fdr) << "\n";
  os << "mse_non_null," << format_double(mse.non_null) << "\n";
  os << "mse_null," << format_double(mse.null) << "\n";
  if (out_path.empty())
    std::cout << os.str();
  else
    write_text_file(out_path, os.str());
  return 0;
}

int cmd_diagnose(const std::string& trace_dir, const std::string& out_path) {
  // collect chains
  std::vector<NamedMatrix> gammas, scalars;
  for (int c = 0;; ++c) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "trace_gamma_chain%d.csv", c);
    const fs::path g = fs::path(trace_dir) / buf;
    if (!fs::exists(g)) break;
    gammas.push_back(read_matrix_csv(g.string()));
    std::snprintf(buf, sizeof(buf), "trace_scalars_chain%d.csv", c);
    scalars.push_back(read_matrix_csv((fs::path(trace_dir) / buf).string()));
  }
  if (gammas.size() < 2)
    throw std::invalid_argument("diagnose: need at least 2 chains in " + trace_dir + " (found " +
                                std::to_string(gammas.size()) + ")");

  const int p = static_cast<int>(gammas[0].values.cols());
  std::ostringstream os;
  os << "param,psrf\n";
  std::vector<double> pip_psrfs;
  std::vector<std::string> flagged;
  std::vector<Eigen::VectorXd> traces(gammas.size());
  for (int j = 0; j < p; ++j) {
    bool constant = true;
    for (std::size_t c = 0; c < gammas.size(); ++c) {
      traces[c] = (gammas[c].values.col(j).array() == 1.0).cast<double>();
      if (traces[c].minCoeff() != traces[0][0] || traces[c].maxCoeff() != traces[0][0])
        constant = false;
    }
    const double r = constant ? 1.0 : psrf(traces);
    pip_psrfs.push_back(r);
    os << gammas[0].columns[j] << "," << format_double(r) << "\n";
    if (r > 1.2) flagged.push_back(gammas[0].columns[j]);
  }
  for (const std::string scalar : {"beta_a", "sigma_e2"}) {
    int col = -1;
    for (std::size_t c = 0; c < scalars[0].columns.size(); ++c)
      if (scalars[0].columns[c] == scalar) col = static_cast<int>(c);
    if (col < 0) continue;
    for (std::size_t c = 0; c < scalars.size(); ++c) traces[c] = scalars[c].values.col(col);
    const double r = psrf(traces);
    os << scalar << "," << format_double(r) << "\n";
    if (r > 1.2) flagged.push_back(scalar);
  }

  std::cout << "chains: " << gammas.size() << "\n";
  std::cout << "PIP PSRF 95% interval: [" << format_double(quantile(pip_psrfs, 0.025)) << ", "
            << format_double(quantile(pip_psrfs, 0.975)) << "]\n";
  if (flagged.empty()) {
    std::cout << "no parameters with PSRF > 1.2\n";
  } else {
    std::cout << flagged.size() << " parameter(s) with PSRF > 1.2:";
    for (const auto& f : flagged) std::cout << " " << f;
    std::cout << "\n";
  }
  if (!out_path.empty()) write_text_file(out_path, os.str());
  return 0;
}

int cmd_grid(const std::string& config_path, const std::string& out_dir) {
  const std::string config_text = read_text_file(config_path);
  const GridConfig config = parse_grid_config(config_text);
  const GridResult result = run_grid(config);
  const std::string prov = provenance_line(config.seed, fnv1a64(config_text));

  fs::create_directories(out_dir);
  {
    std::ofstream out(fs::path(out_dir) / "results.csv");
    out << prov
        << "\ndesign,method,replicate,ok,tpr,mse_non_null,mse_null,tpr_locfdr,fdr_locfdr,"
           "tpr_pip5,fdr_pip5,tpr_pip9,fdr_pip9,error\n";
    for (const auto& r : result.rows) {
      out << r.design_id << "," << r.method << "," << r.replicate << "," << (r.ok ? 1 : 0) << ","
          << format_double(r.tpr) << "," << format_double(r.mse_non_null) << ","
          << format_double(r.mse_null) << "," << format_double(r.tpr_locfdr) << ","
          << format_double(r.fdr_locfdr) << "," << format_double(r.tpr_pip5) << ","
          << format_double(r.fdr_pip5) << "," << format_double(r.tpr_pip9) << ","
          << format_double(r.fdr_pip9) << "," << r.error << "\n";
    }
  }
  {
    std::ofstream out(fs::path(out_dir) / "summary.csv");
    out << prov
        << "\ndesign,method,completed,failed,tpr,tpr_se,mse_non_null,mse_non_null_se,mse_null,"
           "mse_null_se,tpr_locfdr,tpr_locfdr_se,fdr_locfdr,fdr_locfdr_se,tpr_pip5,tpr_pip5_se,"
           "fdr_pip5,fdr_pip5_se,tpr_pip9,tpr_pip9_se,fdr_pip9,fdr_pip9_se\n";
    for (const auto& a : result.aggregates) {
      out << a.design_id << "," << a.method << "," << a.completed << "," << a.failed << ","
          << format_double(a.tpr_mean) << "," << format_double(a.tpr_se) << ","
          << format_double(a.mse_non_null_mean) << "," << format_double(a.mse_non_null_se) << ","
          << format_double(a.mse_null_mean) << "," << format_double(a.mse_null_se) << ","
          << format_double(a.tpr_locfdr_mean) << "," << format_double(a.tpr_locfdr_se) << ","
          << format_double(a.fdr_locfdr_mean) << "," << format_double(a.fdr_locfdr_se) << ","
          << format_double(a.tpr_pip5_mean) << "," << format_double(a.tpr_pip5_se) << ","
          << format_double(a.fdr_pip5_mean) << "," << format_double(a.fdr_pip5_se) << ","
          << format_double(a.tpr_pip9_mean) << "," << format_double(a.tpr_pip9_se) << ","
          << format_double(a.fdr_pip9_mean) << "," << format_double(a.fdr_pip9_se) << "\n";
    }
  }
  {
    // wall times are not part of the reproducible outputs
    std::ofstream out(fs::path(out_dir) / "timings.csv");
    out << "design,method,replicate,seconds\n";
    for (const auto& r : result.rows)
      out << r.design_id << "," << r.method << "," << r.replicate << "," << r.seconds << "\n";
  }

  int failures = 0;
  for (const auto& r : result.rows)
    if (!r.ok) ++failures;
  std::cout << "grid complete: " << result.rows.size() << " cells, " << failures << " failures\n";
  for (const auto& a : result.aggregates)
    std::cout << "  " << a.design_id << " / " << a.method << ": TPR@" << "fdr "
              << format_double(a.tpr_mean) << " (se " << format_double(a.tpr_se) << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian mediation analysis with correlated mediator selection"};
  app.set_version_flag("--version", std::string("medgmm ") + kVersion);
  app.require_subcommand(1);

  std::string config_path, data_dir, out_dir = "out", report_dir, truth_path, trace_dir,
              out_path;
  double eval_fdr = 0.1;
  CommonOverrides ov;

  auto add_overrides = [&](CLI::App* cmd) {
    cmd->add_option("--method", ov.method, "gmm | potts | corrs");
    cmd->add_option("--seed", ov.seed, "master seed");
    cmd->add_option("--chains", ov.chains, "number of chains");
    cmd->add_option("--iterations", ov.iterations, "MCMC iterations");
    cmd->add_option("--burnin", ov.burnin, "burn-in iterations");
    cmd->add_option("--thin", ov.thin, "thinning interval");
    cmd->add_option("--fdr", ov.fdr, "local FDR target");
    cmd->add_option("--graph", ov.graph_file, "neighbor graph edge-list file (potts)");
    cmd->add_option("--corr-matrix", ov.matrix_file, "structure matrix CSV (corrs)");
  };

  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset with ground truth");
  sim->add_option("--config", config_path, "simulation config (JSON)")->required();
  sim->add_option("--out", out_dir, "output directory");
  sim->add_option("--seed", ov.seed, "master seed override");

  auto* fit = app.add_subcommand("fit", "run a posterior sampler on a dataset");
  fit->add_option("--config", config_path, "fit config (JSON)");
  fit->add_option("--data", data_dir, "directory with A.csv, M.csv, Y.csv [C.csv]")->required();
  fit->add_option("--out", out_dir, "output directory");
  add_overrides(fit);

  auto* eval = app.add_subcommand("evaluate", "score a fit report against simulation truth");
  eval->add_option("--report", report_dir, "fit output directory")->required();
  eval->add_option("--truth", truth_path, "truth.csv from simulate")->required();
  eval->add_option("--out", out_path, "metrics CSV (stdout when omitted)");
  eval->add_option("--fdr", eval_fdr, "FDR target for the oracle TPR");

  auto* diag = app.add_subcommand("diagnose", "PSRF convergence summary over stored chains");
  diag->add_option("--trace", trace_dir, "fit output directory with >= 2 chains")->required();
  diag->add_option("--out", out_path, "psrf CSV output path");

  auto* grid = app.add_subcommand("grid", "run a design x method replicate grid");
  grid->add_option("--config", config_path, "grid config (JSON)")->required();
  grid->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitValidation;
  }

  try {
    if (sim->parsed()) return cmd_simulate(config_path, out_dir, ov.seed);
    if (fit->parsed()) return cmd_fit(config_path, data_dir, out_dir, ov);
    if (eval->parsed()) return cmd_evaluate(report_dir, truth_path, out_path, eval_fdr);
    if (diag->parsed()) return cmd_diagnose(trace_dir, out_path);
    if (grid->parsed()) return cmd_grid(config_path, out_dir);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
