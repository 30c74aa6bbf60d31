#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ffgen/point_set.hpp"
#include "ffgen/rng.hpp"
#include "ffgen/trajectory.hpp"

namespace ffgen::metrics {

struct MetricReport {
  double sliced_wasserstein = 0.0;
  double energy_distance = 0.0;
  std::size_t nfe = 0;
  double wall_time = 0.0;  // seconds
};

std::string report_csv_header();  // sliced_wasserstein,energy_distance,nfe,wall_time
std::string report_csv_row(const MetricReport& report);

// Wasserstein-1 distance between two 1-D empirical distributions.
double wasserstein_1d(std::vector<double> a, std::vector<double> b);

// Mean over n_projections random unit directions of the 1-D W1 distance
// between the projected sets.
double sliced_wasserstein(const PointSet& a, const PointSet& b, std::size_t n_projections, Stream& rng);

// Energy distance 2E|X-Y| - E|X-X'| - E|Y-Y'| (V-statistic, so never negative).
// Sets larger than max_points are subsampled without replacement.
double energy_distance(const PointSet& a, const PointSet& b, Stream& rng, std::size_t max_points = 2000);

// Kolmogorov-Smirnov distance sup |F_n - F|.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);

struct IndexColumn {
  std::string name;
  bool lower_is_better = false;
  std::vector<double> values;
};

struct IndexTable {
  std::vector<long long> keys;  // ON per row
  std::vector<IndexColumn> columns;
  std::vector<double> weights;  // filled by composite_index, one per column
  std::vector<double> index;    // filled by composite_index, one per row
};

// z-score per column (sign flipped when lower is better), weights proportional
// to the coefficient of variation std/|mean| of the raw column, index =
// logistic(sum_j w_j z_j). Population standard deviation throughout.
IndexTable composite_index(IndexTable table);

// Raw Inception, FID and NFE columns for ON = 1..10 as published.
IndexTable published_overlap_table();

std::size_t argmax_index(const IndexTable& table);

// Row per key: ON,<columns...>,index (index column omitted when empty).
std::string index_table_csv(const IndexTable& table);

// Silverman's rule per dimension: 1.06 * std_k * n^(-1/5).
Vec silverman_bandwidth(const PointSet& samples);

// Gradient of the log of a product-Gaussian kernel density estimate at x.
// bandwidth: one entry (shared) or one per dimension; empty selects Silverman.
Vec estimate_score(const PointSet& samples, std::span<const double> x, std::span<const double> bandwidth = {});

struct DivergenceConfig {
  double g = 1.0;
  std::vector<double> t_grid;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  double rtol = 1e-6;
  double atol = 1e-6;
  unsigned threads = 1;
};

// Indicator -1/2 g^2 |E_z[grad log p_t(x_t) - grad log q_t(y_t)]| at each grid
// time. Both ensembles start from the same prior draws z at t = T and follow
// their own oracle fields down to each grid time; scores are KDE estimates at
// the coupled points x_t(z), y_t(z). The expectation is taken per component
// and its Euclidean norm is reported.
std::vector<double> trajectory_divergence(const trajectory::TrajectorySpec& family_p,
                                          const trajectory::TrajectorySpec& family_q, const PointSet& dataset,
                                          const DivergenceConfig& cfg);

}  // namespace ffgen::metrics
