#include "medgmm/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "medgmm/version.hpp"

namespace medgmm {

using nlohmann::json;

std::string mediator_name(int j) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "M%04d", j + 1);
  return buf;
}

std::vector<std::string> mediator_names(int p) {
  std::vector<std::string> names(p);
  for (int j = 0; j < p; ++j) names[j] = mediator_name(j);
  return names;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string provenance_line(std::uint64_t seed, std::uint64_t config_hash) {
  std::ostringstream os;
  os << "# medgmm " << kVersion << " seed=" << seed << " config=" << std::hex << config_hash;
  return os.str();
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  // shortest representation that parses back to the same double
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  if (std::stod(buf) != v) std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << text;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& values,
                      const std::vector<std::string>& columns, const std::string& provenance) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  if (!provenance.empty()) out << provenance << "\n";
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
  out << "\n";
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j)
      out << (j ? "," : "") << format_double(values(i, j));
    out << "\n";
  }
}

NamedMatrix read_matrix_csv(const std::string& path, bool allow_text_cells) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  NamedMatrix out;
  std::string line;
  std::vector<std::vector<double>> rows;
  bool header_done = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    if (!header_done) {
      while (std::getline(ss, cell, ',')) out.columns.push_back(cell);
      header_done = true;
      continue;
    }
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        if (!allow_text_cells)
          throw std::invalid_argument("non-numeric cell '" + cell + "' in " + path);
        row.push_back(std::numeric_limits<double>::quiet_NaN());
      }
    }
    if (row.size() != out.columns.size())
      throw std::invalid_argument("ragged row in " + path);
    rows.push_back(std::move(row));
  }
  out.values.resize(rows.size(), out.columns.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < out.columns.size(); ++j) out.values(i, j) = rows[i][j];
  return out;
}

void write_edge_list(const std::string& path, const NeighborGraph& graph,
                     const std::string& provenance) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  if (!provenance.empty()) out << provenance << "\n";
  for (const auto& [i, j] : graph.edges) out << i << " " << j << "\n";
}

NeighborGraph read_edge_list(const std::string& path, int p) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open graph file: " + path);
  std::vector<std::pair<int, int>> edges;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    int i, j;
    if (!(ss >> i >> j)) throw std::invalid_argument("malformed edge line '" + line + "' in " + path);
    edges.emplace_back(i, j);
  }
  return NeighborGraph::from_edges(p, std::move(edges));
}

std::vector<bool> TruthTable::active() const {
  std::vector<bool> out(labels.size());
  for (int j = 0; j < labels.size(); ++j) out[j] = labels[j] == 1;
  return out;
}

Eigen::VectorXd TruthTable::nie() const { return alpha_a.array() * beta_m.array(); }

void write_truth_csv(const std::string& path, const TrueEffects& effects,
                     const std::string& provenance) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  if (!provenance.empty()) out << provenance << "\n";
  out << "mediator,label,alpha_a,beta_m\n";
  for (int j = 0; j < effects.labels.size(); ++j)
    out << mediator_name(j) << "," << effects.labels[j] << "," << format_double(effects.alpha_a[j])
        << "," << format_double(effects.beta_m[j]) << "\n";
}

TruthTable read_truth_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open truth file: " + path);
  std::string line;
  std::vector<int> labels;
  std::vector<double> alphas, betas;
  bool header_done = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_done) {
      header_done = true;
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 4) throw std::invalid_argument("malformed truth row in " + path);
    labels.push_back(std::stoi(cells[1]));
    alphas.push_back(std::stod(cells[2]));
    betas.push_back(std::stod(cells[3]));
  }
  TruthTable t;
  t.labels = Eigen::Map<Eigen::VectorXi>(labels.data(), labels.size());
  t.alpha_a = Eigen::Map<Eigen::VectorXd>(alphas.data(), alphas.size());
  t.beta_m = Eigen::Map<Eigen::VectorXd>(betas.data(), betas.size());
  return t;
}

MediationDataset read_dataset_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  MediationDataset data;
  data.exposure = read_matrix_csv((fs::path(dir) / "A.csv").string()).values.col(0);
  data.outcome = read_matrix_csv((fs::path(dir) / "Y.csv").string()).values.col(0);
  data.mediators = read_matrix_csv((fs::path(dir) / "M.csv").string()).values;
  const auto cpath = fs::path(dir) / "C.csv";
  if (fs::exists(cpath))
    data.covariates = read_matrix_csv(cpath.string()).values;
  else
    data.covariates.resize(data.outcome.size(), 0);
  data.validate();
  return data;
}

void write_dataset_dir(const std::string& dir, const MediationDataset& data,
                       const std::string& provenance) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_matrix_csv((fs::path(dir) / "A.csv").string(), data.exposure, {"A"}, provenance);
  write_matrix_csv((fs::path(dir) / "Y.csv").string(), data.outcome, {"Y"}, provenance);
  write_matrix_csv((fs::path(dir) / "M.csv").string(), data.mediators, mediator_names(data.p()),
                   provenance);
  if (data.q() > 0) {
    std::vector<std::string> cnames(data.q());
    for (int w = 0; w < data.q(); ++w) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "C%03d", w + 1);
      cnames[w] = buf;
    }
    write_matrix_csv((fs::path(dir) / "C.csv").string(), data.covariates, cnames, provenance);
  }
}

namespace {

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> known,
                         const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known)
      if (it.key() == k) ok = true;
    if (!ok) throw std::invalid_argument("unknown config key '" + it.key() + "' in " + where);
  }
}

Eigen::Vector4d vec4(const json& arr, const std::string& where) {
  if (!arr.is_array() || arr.size() != 4)
    throw std::invalid_argument(where + " must be an array of 4 numbers");
  return {arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>(), arr[3].get<double>()};
}

Hyperparameters parse_hyper(const json& h) {
  Hyperparameters out;
  reject_unknown_keys(h,
                      {"psi0", "df", "h_a", "l_a", "h1", "l1", "h2", "l2", "field_prior_mean",
                       "field_prior_sd", "coupling_prior_mean", "coupling_prior_sd", "dmh_step_sd",
                       "stick_prior_mean", "corrs_ig_shape", "corrs_ig_rate"},
                      "hyper");
  if (h.contains("psi0")) {
    const auto& m = h["psi0"];
    if (!m.is_array() || m.size() != 2 || !m[0].is_array() || m[0].size() != 2)
      throw std::invalid_argument("hyper.psi0 must be a 2x2 array");
    out.psi0 << m[0][0].get<double>(), m[0][1].get<double>(), m[1][0].get<double>(),
        m[1][1].get<double>();
  }
  if (h.contains("df")) out.df = h["df"].get<double>();
  if (h.contains("h_a")) out.h_a = h["h_a"].get<double>();
  if (h.contains("l_a")) out.l_a = h["l_a"].get<double>();
  if (h.contains("h1")) out.h1 = h["h1"].get<double>();
  if (h.contains("l1")) out.l1 = h["l1"].get<double>();
  if (h.contains("h2")) out.h2 = h["h2"].get<double>();
  if (h.contains("l2")) out.l2 = h["l2"].get<double>();
  if (h.contains("field_prior_mean")) out.field_prior_mean = vec4(h["field_prior_mean"], "hyper.field_prior_mean");
  if (h.contains("field_prior_sd")) out.field_prior_sd = vec4(h["field_prior_sd"], "hyper.field_prior_sd");
  if (h.contains("coupling_prior_mean"))
    out.coupling_prior_mean = vec4(h["coupling_prior_mean"], "hyper.coupling_prior_mean");
  if (h.contains("coupling_prior_sd"))
    out.coupling_prior_sd = vec4(h["coupling_prior_sd"], "hyper.coupling_prior_sd");
  if (h.contains("dmh_step_sd")) out.dmh_step_sd = h["dmh_step_sd"].get<double>();
  if (h.contains("stick_prior_mean")) {
    const auto& a = h["stick_prior_mean"];
    if (!a.is_array() || a.size() != 3)
      throw std::invalid_argument("hyper.stick_prior_mean must be an array of 3 numbers");
    out.stick_prior_mean = {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
  }
  if (h.contains("corrs_ig_shape")) out.corrs_ig_shape = h["corrs_ig_shape"].get<double>();
  if (h.contains("corrs_ig_rate")) out.corrs_ig_rate = h["corrs_ig_rate"].get<double>();
  return out;
}

FitOptions parse_fit_options(const json& f) {
  FitOptions out;
  reject_unknown_keys(
      f, {"iterations", "burnin", "thin", "sw_every", "dmh_inner_sweeps", "refresh_every"}, "fit");
  if (f.contains("iterations")) out.iterations = f["iterations"].get<long>();
  if (f.contains("burnin")) out.burnin = f["burnin"].get<long>();
  if (f.contains("thin")) out.thin = f["thin"].get<int>();
  if (f.contains("sw_every")) out.sw_every = f["sw_every"].get<int>();
  if (f.contains("dmh_inner_sweeps")) out.dmh_inner_sweeps = f["dmh_inner_sweeps"].get<int>();
  if (f.contains("refresh_every")) out.refresh_every = f["refresh_every"].get<int>();
  return out;
}

SimDesign parse_design(const json& d) {
  SimDesign out;
  reject_unknown_keys(d,
                      {"id", "n", "p", "block_size", "block_count", "rho1_c0", "rho1_c1", "rho2",
                       "placement", "active_count", "proportions", "beta_a", "outcome_noise_sd",
                       "weak_surrogate", "surrogate_high_frac"},
                      "design");
  if (d.contains("id")) out.id = d["id"].get<std::string>();
  if (d.contains("n")) out.n = d["n"].get<int>();
  if (d.contains("p")) out.p = d["p"].get<int>();
  if (d.contains("block_size")) out.block_size = d["block_size"].get<int>();
  if (d.contains("block_count")) out.block_count = d["block_count"].get<int>();
  if (d.contains("rho1_c0")) out.rho1_c0 = d["rho1_c0"].get<double>();
  if (d.contains("rho1_c1")) out.rho1_c1 = d["rho1_c1"].get<double>();
  if (d.contains("rho2")) out.rho2 = d["rho2"].get<double>();
  if (d.contains("placement")) {
    const std::string p = d["placement"].get<std::string>();
    if (p == "one_block") out.placement = Placement::OneBlock;
    else if (p == "two_blocks") out.placement = Placement::TwoBlocks;
    else if (p == "five_blocks") out.placement = Placement::FiveBlocks;
    else throw std::invalid_argument("design.placement must be one_block, two_blocks or five_blocks");
  }
  if (d.contains("active_count")) out.active_count = d["active_count"].get<int>();
  if (d.contains("proportions")) out.proportions = vec4(d["proportions"], "design.proportions");
  if (d.contains("beta_a")) out.beta_a = d["beta_a"].get<double>();
  if (d.contains("outcome_noise_sd")) out.outcome_noise_sd = d["outcome_noise_sd"].get<double>();
  if (d.contains("weak_surrogate")) out.weak_surrogate = d["weak_surrogate"].get<bool>();
  if (d.contains("surrogate_high_frac")) out.surrogate_high_frac = d["surrogate_high_frac"].get<double>();
  return out;
}

}  // namespace

RunConfig parse_fit_config(const std::string& json_text) {
  const json j = json::parse(json_text);
  reject_unknown_keys(j,
                      {"method", "iterations", "burnin", "thin", "sw_every", "dmh_inner_sweeps",
                       "refresh_every", "chains", "seed", "fdr", "structure", "hyper"},
                      "config");
  RunConfig out;
  if (j.contains("method")) out.method = method_from_string(j["method"].get<std::string>());
  json fit_keys = json::object();
  for (const char* k : {"iterations", "burnin", "thin", "sw_every", "dmh_inner_sweeps", "refresh_every"})
    if (j.contains(k)) fit_keys[k] = j[k];
  out.fit = parse_fit_options(fit_keys);
  if (j.contains("chains")) out.chains = j["chains"].get<int>();
  if (j.contains("seed")) out.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("fdr")) out.fdr_target = j["fdr"].get<double>();
  if (j.contains("hyper")) out.hyper = parse_hyper(j["hyper"]);
  if (j.contains("structure")) {
    const auto& s = j["structure"];
    reject_unknown_keys(s, {"source", "path", "eigen_floor"}, "structure");
    if (s.contains("source")) {
      const std::string src = s["source"].get<std::string>();
      if (src == "auto") out.structure.source = StructureSpec::Source::Auto;
      else if (src == "graph-file") out.structure.source = StructureSpec::Source::GraphFile;
      else if (src == "matrix-file") out.structure.source = StructureSpec::Source::MatrixFile;
      else throw std::invalid_argument("structure.source must be auto, graph-file or matrix-file");
    }
    if (s.contains("path")) out.structure.path = s["path"].get<std::string>();
    if (s.contains("eigen_floor")) out.structure.eigen_floor = s["eigen_floor"].get<double>();
  }
  return out;
}

SimConfig parse_sim_config(const std::string& json_text) {
  const json j = json::parse(json_text);
  reject_unknown_keys(j, {"design", "seed", "replicates"}, "sim config");
  SimConfig out;
  if (j.contains("design")) out.design = parse_design(j["design"]);
  if (j.contains("seed")) out.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("replicates")) out.replicates = j["replicates"].get<int>();
  if (out.replicates < 1) throw std::invalid_argument("sim config: replicates must be at least 1");
  out.design.validate();
  return out;
}

GridConfig parse_grid_config(const std::string& json_text) {
  const json j = json::parse(json_text);
  reject_unknown_keys(j, {"designs", "methods", "replicates", "fit", "hyper", "fdr", "perturb", "seed", "workers"},
                      "grid config");
  GridConfig out;
  if (!j.contains("designs") || !j["designs"].is_array() || j["designs"].empty())
    throw std::invalid_argument("grid config: designs must be a non-empty array");
  for (const auto& d : j["designs"]) {
    out.designs.push_back(parse_design(d));
    out.designs.back().validate();
  }
  if (j.contains("methods"))
    for (const auto& m : j["methods"]) {
      method_from_string(m.get<std::string>());  // validates
      out.methods.push_back(m.get<std::string>());
    }
  else
    out.methods = {"gmm", "potts", "corrs"};
  if (j.contains("replicates")) out.replicates = j["replicates"].get<int>();
  if (out.replicates < 1) throw std::invalid_argument("grid config: replicates must be at least 1");
  if (j.contains("fit")) out.fit = parse_fit_options(j["fit"]);
  if (j.contains("hyper")) out.hyper = parse_hyper(j["hyper"]);
  if (j.contains("fdr")) out.fdr_target = j["fdr"].get<double>();
  if (j.contains("perturb")) {
    const auto& p = j["perturb"];
    reject_unknown_keys(p, {"graph_rate", "corr_noise_sd"}, "perturb");
    if (p.contains("graph_rate")) out.perturb.graph_rate = p["graph_rate"].get<double>();
    if (p.contains("corr_noise_sd")) out.perturb.corr_noise_sd = p["corr_noise_sd"].get<double>();
  }
  if (j.contains("seed")) out.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("workers")) out.workers = j["workers"].get<int>();
  return out;
}

std::string design_to_json(const SimDesign& design, std::uint64_t seed, int replicates) {
  json d;
  d["id"] = design.id;
  d["n"] = design.n;
  d["p"] = design.p;
  d["block_size"] = design.block_size;
  d["block_count"] = design.block_count;
  d["rho1_c0"] = design.rho1_c0;
  d["rho1_c1"] = design.rho1_c1;
  d["rho2"] = design.rho2;
  d["placement"] = design.placement == Placement::OneBlock    ? "one_block"
                   : design.placement == Placement::TwoBlocks ? "two_blocks"
                                                              : "five_blocks";
  d["active_count"] = design.resolved_active_count();
  d["proportions"] = {design.proportions[0], design.proportions[1], design.proportions[2],
                      design.proportions[3]};
  d["beta_a"] = design.beta_a;
  d["outcome_noise_sd"] = design.outcome_noise_sd;
  d["weak_surrogate"] = design.weak_surrogate;
  if (design.weak_surrogate) d["surrogate_high_frac"] = design.surrogate_high_frac;
  json out;
  out["design"] = d;
  out["seed"] = seed;
  out["replicates"] = replicates;
  return out.dump(2) + "\n";
}

}  // namespace medgmm
