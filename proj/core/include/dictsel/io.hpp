#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dictsel/datagen.hpp"
#include "dictsel/library.hpp"
#include "dictsel/regressors.hpp"
#include "dictsel/weakform.hpp"

namespace dictsel::io {

/// Trajectory CSV: header "t,x1..xd" plus "dx1..dxd" when derivatives are
/// present. Values are written with 17 significant digits so a write/read
/// round trip is bit-exact.
void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryDataset& data);
TrajectoryDataset read_trajectory_csv(const std::filesystem::path& path);

/// Grid CSV: flat "x,t,u" rows (space-major) plus a JSON sidecar holding the
/// grid metadata {x0,dx,nx,t0,dt,nt}.
void write_grid_csv(const std::filesystem::path& csv_path, const std::filesystem::path& meta_path,
                    const GridDataset& data);
GridDataset read_grid_csv(const std::filesystem::path& csv_path,
                          const std::filesystem::path& meta_path);

std::string dictionary_to_json(const Dictionary& dict);
Dictionary dictionary_from_json(const std::string& text);

/// Score-trace CSV with columns level, removed_labels (semicolon-joined),
/// score, relative_ratio, kind, coordinate. `coordinate_index` selects the
/// per-coordinate score column; -1 writes the aggregate ("all"). Ratios are
/// recomputed from the written score column.
void write_score_trace_csv(const std::filesystem::path& path, const ScoreTrace& trace,
                           const std::vector<std::string>& labels, int coordinate_index,
                           const std::string& coordinate_name);

/// STLS trace CSV: iteration, support_labels, nnz, objective.
void write_stls_trace_csv(const std::filesystem::path& path, const StlsTrace& trace,
                          const std::vector<std::string>& labels);

std::string sparse_model_to_json(const SparseModel& model);

std::string bank_summary_to_json(const BankSummary& bank);

std::string noise_meta_to_json(const NoiseMeta& meta);
NoiseMeta noise_meta_from_json(const std::string& text);

/// Weak system CSV: one row per test-function row of G, columns labeled by
/// term, then one b_<i> column per coordinate.
void write_weak_system_csv(const std::filesystem::path& path, const WeakSystem& system);

std::string format_double(double v);

}  // namespace dictsel::io
