#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "medgmm/potts.hpp"
#include "medgmm/runner.hpp"
#include "medgmm/simulate.hpp"

namespace medgmm {

// Column-major mediator naming: M0001, M0002, ...
std::string mediator_name(int j);
std::vector<std::string> mediator_names(int p);

std::uint64_t fnv1a64(const std::string& text);

// "# medgmm <version> seed=<seed> config=<hash>" comment placed on the first
// line of every output file.
std::string provenance_line(std::uint64_t seed, std::uint64_t config_hash);

struct NamedMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> columns;
};

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& values,
                      const std::vector<std::string>& columns, const std::string& provenance);
// Strict numeric parse by default; with allow_text_cells, non-numeric cells
// (report name columns) read as NaN.
NamedMatrix read_matrix_csv(const std::string& path, bool allow_text_cells = false);

void write_edge_list(const std::string& path, const NeighborGraph& graph,
                     const std::string& provenance);
// Two whitespace-separated 0-based integer columns; '#' lines are comments.
NeighborGraph read_edge_list(const std::string& path, int p);

struct TruthTable {
  Eigen::VectorXi labels;
  Eigen::VectorXd alpha_a, beta_m;
  std::vector<bool> active() const;
  Eigen::VectorXd nie() const;
};
void write_truth_csv(const std::string& path, const TrueEffects& effects,
                     const std::string& provenance);
TruthTable read_truth_csv(const std::string& path);

MediationDataset read_dataset_dir(const std::string& dir);
void write_dataset_dir(const std::string& dir, const MediationDataset& data,
                       const std::string& provenance);

// JSON config parsing (all fields optional unless noted; unknown keys are
// rejected to catch typos).
RunConfig parse_fit_config(const std::string& json_text);
struct SimConfig {
  SimDesign design;
  std::uint64_t seed = 0;
  int replicates = 1;
};
SimConfig parse_sim_config(const std::string& json_text);
GridConfig parse_grid_config(const std::string& json_text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
std::string design_to_json(const SimDesign& design, std::uint64_t seed, int replicates);

std::string format_double(double v);

}  // namespace medgmm
