#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "lsmrn/data.hpp"
#include "lsmrn/experiments.hpp"
#include "lsmrn/graph.hpp"
#include "lsmrn/incremental.hpp"
#include "lsmrn/model.hpp"

namespace lsmrn::io {

namespace fs = std::filesystem;

// Network: `src,dst` per directed edge; optional coordinates `vertex,x,y`.
// Without coordinates the vertex count is max id + 1 unless `num_vertices`
// is given.
RoadNetwork read_network(const fs::path& edges_path, const fs::path& coords_path = {}, int num_vertices = 0);
void write_network(const fs::path& edges_path, const RoadNetwork& network);
void write_coords(const fs::path& coords_path, const RoadNetwork& network);

// Readings: `timestamp,src,dst,speed`.
std::vector<ReadingRecord> read_readings(const fs::path& path);
void write_readings(const fs::path& path, std::span<const ReadingRecord> readings);

// Series archive: directory holding `manifest.csv` (key,value rows for n, T,
// span) and `snapshot_<t>.csv` files with `src,dst,speed`.
SnapshotSeries read_series_archive(const fs::path& dir, const RoadNetwork& network);
void write_series_archive(const fs::path& dir, const SnapshotSeries& series);

// Hold-out mask: `t,src,dst,true_speed`.
HoldoutMask read_mask(const fs::path& path);
void write_mask(const fs::path& path, const HoldoutMask& mask);

struct ModelFile {
  LatentState state;
  Hyperparams hyper;
};

// Versioned text model: header, dimensions, hyperparameters, then every
// matrix row-major with 17 significant digits.
void write_model(std::ostream& out, const LatentState& state, const Hyperparams& hyper);
void write_model(const fs::path& path, const LatentState& state, const Hyperparams& hyper);
ModelFile read_model(std::istream& in);
ModelFile read_model(const fs::path& path);

// `iteration,objective`
void write_trace(const fs::path& path, std::span<const double> trace);
// `sweep,candidates,violated_edges,max_violation`
void write_sweep_diagnostics(const fs::path& path, std::span<const SweepDiagnostics> diagnostics);

// Method table `task,method,mape,rmse,scored,train_ms,predict_ms` and step
// table `method,step,mape,rmse,scored,ms`.
void write_report_csv(const fs::path& methods_path, const fs::path& steps_path, const ExperimentReport& report);
void print_report(std::ostream& out, const ExperimentReport& report);

}  // namespace lsmrn::io
