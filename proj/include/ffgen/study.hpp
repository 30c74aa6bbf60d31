#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ffgen/data_io.hpp"
#include "ffgen/metrics.hpp"
#include "ffgen/ode.hpp"
#include "ffgen/trainer.hpp"
#include "ffgen/trajectory.hpp"

namespace ffgen::study {

// Settings shared by the overlap sweep and the family comparison.
struct RunSettings {
  trainer::TrainConfig train;  // seed is replaced per run
  ode::SolverConfig solver;    // t_start / t_end are taken from the spec
  std::size_t samples = 1000;
  std::size_t projections = 200;
  std::size_t energy_points = 2000;
  bool record_wall_time = false;
  bool plot = true;
  unsigned threads = 1;
};

struct StudyConfig {
  std::vector<std::size_t> overlap_counts;  // ON values
  data_io::Dataset dataset;                 // training points
  PointSet reference;                       // held-out points the metrics compare against
  trajectory::TrajectorySpec base_spec;     // family forced to SuperposedLinear
  RunSettings run;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path outdir;

  void validate() const;
};

// One (configuration, seed) cell.
struct RunRecord {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string failure;
  metrics::MetricReport report;
  std::filesystem::path samples_path;
  std::string samples_sha256;
};

struct StudyRow {
  std::size_t overlap_count = 0;
  std::vector<RunRecord> runs;
  bool failed = false;  // every seed failed
  metrics::MetricReport mean;
  bool collapsed = false;  // sliced Wasserstein above 1.5x the sweep minimum
};

struct StudyResult {
  std::vector<StudyRow> rows;
  std::optional<metrics::IndexTable> index;  // absent when composite_index rejected the table
  std::string index_error;
};

// Trains one SuperposedLinear model per (ON, seed), generates, measures, and
// writes <outdir>/on=<k>/seed=<s>/{checkpoint.txt,samples.csv,report.csv},
// <outdir>/on=<k>/report.csv and <outdir>/index.csv.
StudyResult run_superposition_study(const StudyConfig& cfg);

// Trains, samples and measures one spec; files go to `dir`.
RunRecord run_single(const PointSet& train_points, const PointSet& reference, const trajectory::TrajectorySpec& spec,
                     const RunSettings& settings, std::uint64_t seed, const std::filesystem::path& dir);

struct FamilyEntry {
  std::string label;
  trajectory::TrajectorySpec spec;
};

// "linear", "curve:3", "superposed_linear:4", "gaussian_bridge", "poisson".
FamilyEntry parse_family_entry(std::string_view text, const trajectory::TrajectorySpec& base);

struct CompareConfig {
  std::vector<FamilyEntry> families;
  data_io::Dataset dataset;
  PointSet reference;
  RunSettings run;
  std::vector<std::uint64_t> seeds;
  double divergence_g = 1.0;
  std::vector<double> divergence_times;
  std::size_t divergence_n = 1000;
  std::filesystem::path outdir;
};

struct FamilyResult {
  FamilyEntry family;
  std::vector<RunRecord> runs;
  metrics::MetricReport mean;
  bool failed = false;
};

struct CompareResult {
  std::vector<FamilyResult> families;
  // divergence[i] compares families[0] with families[i + 1] over divergence_times.
  std::vector<std::vector<double>> divergence;
};

// Equal training budget per family; writes <outdir>/family=<i>-<label>/...,
// compare.csv and divergence.csv.
CompareResult compare_families(const CompareConfig& cfg);

}  // namespace ffgen::study
