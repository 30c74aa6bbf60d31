#include "ffgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ffgen/errors.hpp"
#include "ffgen/field.hpp"
#include "ffgen/format.hpp"
#include "ffgen/ode.hpp"
#include "ffgen/parallel.hpp"
#include "ffgen/sampler.hpp"

namespace ffgen::metrics {

std::string report_csv_header() { return "sliced_wasserstein,energy_distance,nfe,wall_time"; }

std::string report_csv_row(const MetricReport& r) {
  return format_double(r.sliced_wasserstein) + ',' + format_double(r.energy_distance) + ',' + std::to_string(r.nfe) +
         ',' + format_double(r.wall_time);
}

double wasserstein_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidInput("wasserstein_1d: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a.size() == b.size()) {
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
    return total / static_cast<double>(a.size());
  }
  // Integrate |Qa(u) - Qb(u)| over the merged quantile breakpoints.
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double u = 0.0, total = 0.0;
  while (i < a.size() && j < b.size()) {
    const double next_a = static_cast<double>(i + 1) / na;
    const double next_b = static_cast<double>(j + 1) / nb;
    const double next = std::min(next_a, next_b);
    total += (next - u) * std::abs(a[i] - b[j]);
    u = next;
    if (next_a <= next) ++i;
    if (next_b <= next) ++j;
  }
  return total;
}

double sliced_wasserstein(const PointSet& a, const PointSet& b, std::size_t n_projections, Stream& rng) {
  if (a.empty() || b.empty()) throw InvalidInput("sliced_wasserstein: empty sample set");
  if (a.dim() != b.dim()) {
    throw InvalidInput("sliced_wasserstein: dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                       std::to_string(b.dim()) + ")");
  }
  if (n_projections == 0) throw InvalidInput("sliced_wasserstein: n_projections must be >= 1");
  const std::size_t d = a.dim();
  std::vector<double> pa(a.size()), pb(b.size());
  double total = 0.0;
  for (std::size_t p = 0; p < n_projections; ++p) {
    const Vec dir = d == 1 ? Vec{1.0} : sampler::sample_unit_sphere(d, rng);
    for (std::size_t i = 0; i < a.size(); ++i) {
      pa[i] = std::inner_product(dir.begin(), dir.end(), a[i].begin(), 0.0);
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
      pb[i] = std::inner_product(dir.begin(), dir.end(), b[i].begin(), 0.0);
    }
    total += wasserstein_1d(pa, pb);
  }
  return total / static_cast<double>(n_projections);
}

namespace {

PointSet subsample(const PointSet& s, std::size_t max_points, Stream& rng) {
  if (s.size() <= max_points) return s;
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < max_points; ++i) std::swap(idx[i], idx[i + rng.index_below(s.size() - i)]);
  idx.resize(max_points);
  std::sort(idx.begin(), idx.end());
  return s.subset(idx);
}

double mean_distance(const PointSet& a, const PointSet& b) {
  double total = 0.0;
  const std::size_t d = a.dim();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto x = a[i];
    for (std::size_t j = 0; j < b.size(); ++j) {
      const auto y = b[j];
      double r2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) r2 += (x[k] - y[k]) * (x[k] - y[k]);
      total += std::sqrt(r2);
    }
  }
  return total / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

}  // namespace

double energy_distance(const PointSet& a, const PointSet& b, Stream& rng, std::size_t max_points) {
  if (a.empty() || b.empty()) throw InvalidInput("energy_distance: empty sample set");
  if (a.dim() != b.dim()) throw InvalidInput("energy_distance: dimension mismatch");
  if (max_points == 0) throw InvalidInput("energy_distance: max_points must be >= 1");
  const PointSet sa = subsample(a, max_points, rng);
  const PointSet sb = subsample(b, max_points, rng);
  const double e = 2.0 * mean_distance(sa, sb) - mean_distance(sa, sa) - mean_distance(sb, sb);
  return std::max(0.0, e);
}

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw InvalidInput("ks_statistic: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    worst = std::max({worst, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return worst;
}

IndexTable composite_index(IndexTable table) {
  const std::size_t rows = table.keys.size();
  if (rows < 2) throw InvalidInput("composite_index: at least 2 rows required, got " + std::to_string(rows));
  if (table.columns.empty()) throw InvalidInput("composite_index: no columns");
  const std::size_t cols = table.columns.size();
  std::vector<std::vector<double>> z(cols, std::vector<double>(rows));
  table.weights.assign(cols, 0.0);
  for (std::size_t c = 0; c < cols; ++c) {
    const auto& col = table.columns[c];
    if (col.values.size() != rows) throw InvalidInput("composite_index: column '" + col.name + "' is ragged");
    for (double v : col.values) {
      if (!std::isfinite(v)) throw InvalidInput("composite_index: column '" + col.name + "' has a non-finite value");
    }
    const double mean = std::accumulate(col.values.begin(), col.values.end(), 0.0) / static_cast<double>(rows);
    double var = 0.0;
    for (double v : col.values) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(rows));
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      throw DegenerateInput("composite_index: column '" + col.name + "' has zero variance");
    }
    if (mean == 0.0) throw DegenerateInput("composite_index: column '" + col.name + "' has zero mean");
    const double sign = col.lower_is_better ? -1.0 : 1.0;
    for (std::size_t r = 0; r < rows; ++r) z[c][r] = sign * (col.values[r] - mean) / sd;
    table.weights[c] = sd / std::abs(mean);
  }
  const double wsum = std::accumulate(table.weights.begin(), table.weights.end(), 0.0);
  for (double& w : table.weights) w /= wsum;
  table.index.assign(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += table.weights[c] * z[c][r];
    table.index[r] = 1.0 / (1.0 + std::exp(-s));
  }
  return table;
}

IndexTable published_overlap_table() {
  IndexTable t;
  t.keys = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  t.columns = {
      {"inception", false, {10.27, 10.76, 11.12, 11.25, 11.54, 12.01, 11.79, 12.07, 12.11, 12.11}},
      {"fid", true, {10.22, 9.51, 7.27, 6.14, 5.12, 4.44, 3.75, 3.42, 2.91, 2.33}},
      {"nfe", true, {46, 89, 124, 189, 322, 632, 689, 744, 782, 800}},
  };
  return t;
}

std::size_t argmax_index(const IndexTable& table) {
  if (table.index.empty()) throw InvalidInput("argmax_index: table has no index column");
  return static_cast<std::size_t>(std::max_element(table.index.begin(), table.index.end()) - table.index.begin());
}

std::string index_table_csv(const IndexTable& table) {
  std::string out = "on";
  for (const auto& c : table.columns) out += ',' + c.name;
  if (!table.index.empty()) out += ",index";
  out += '\n';
  for (std::size_t r = 0; r < table.keys.size(); ++r) {
    out += std::to_string(table.keys[r]);
    for (const auto& c : table.columns) out += ',' + format_double(c.values.at(r));
    if (!table.index.empty()) out += ',' + format_double(table.index[r]);
    out += '\n';
  }
  return out;
}

Vec silverman_bandwidth(const PointSet& samples) {
  if (samples.size() < 2) throw InvalidInput("silverman_bandwidth: need at least 2 samples");
  const std::size_t d = samples.dim();
  const double n = static_cast<double>(samples.size());
  Vec mean(d, 0.0), var(d, 0.0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) mean[k] += samples[i][k];
  }
  for (double& m : mean) m /= n;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) var[k] += (samples[i][k] - mean[k]) * (samples[i][k] - mean[k]);
  }
  Vec h(d);
  for (std::size_t k = 0; k < d; ++k) {
    h[k] = 1.06 * std::sqrt(var[k] / (n - 1.0)) * std::pow(n, -0.2);
    if (!(h[k] > 0)) h[k] = 1e-12;  // collapsed ensemble
  }
  return h;
}

Vec estimate_score(const PointSet& samples, std::span<const double> x, std::span<const double> bandwidth) {
  if (samples.size() < 100) {
    throw InvalidInput("estimate_score: need at least 100 samples, got " + std::to_string(samples.size()));
  }
  const std::size_t d = samples.dim();
  if (x.size() != d) throw InvalidInput("estimate_score: dimension mismatch");
  Vec h;
  if (bandwidth.empty()) {
    h = silverman_bandwidth(samples);
  } else if (bandwidth.size() == 1 || bandwidth.size() == d) {
    for (std::size_t k = 0; k < d; ++k) h.push_back(bandwidth[bandwidth.size() == 1 ? 0 : k]);
  } else {
    throw InvalidInput("estimate_score: bandwidth must have 1 or d entries");
  }
  for (double v : h) {
    if (!(v > 0)) throw InvalidInput("estimate_score: bandwidth must be > 0");
  }
  std::vector<double> logw(samples.size());
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double e = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double u = (x[k] - samples[i][k]) / h[k];
      e -= 0.5 * u * u;
    }
    logw[i] = e;
    peak = std::max(peak, e);
  }
  Vec score(d, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double w = std::exp(logw[i] - peak);
    total += w;
    for (std::size_t k = 0; k < d; ++k) score[k] += w * (samples[i][k] - x[k]);
  }
  for (std::size_t k = 0; k < d; ++k) score[k] /= total * h[k] * h[k];
  return score;
}

std::vector<double> trajectory_divergence(const trajectory::TrajectorySpec& family_p,
                                          const trajectory::TrajectorySpec& family_q, const PointSet& dataset,
                                          const DivergenceConfig& cfg) {
  if (family_p.dim != family_q.dim || dataset.dim() != family_p.dim) {
    throw InvalidInput("trajectory_divergence: families and dataset must share a dimension");
  }
  if (family_p.horizon != family_q.horizon) throw InvalidInput("trajectory_divergence: families must share T");
  if (cfg.n < 1000) throw InvalidInput("trajectory_divergence: n must be >= 1000");
  const double horizon = family_p.horizon;
  const double floor_t = std::max(family_p.t_min, family_q.t_min);
  for (double t : cfg.t_grid) {
    if (!(t >= floor_t && t <= horizon)) {
      throw InvalidInput("trajectory_divergence: grid time " + format_double(t, 6) + " outside [t_min, T]");
    }
  }
  const std::size_t d = family_p.dim;
  const field::OracleField field_p(dataset, family_p);
  const field::OracleField field_q(dataset, family_q);

  // Shared base draws z: both ensembles consume the same stream per particle.
  PointSet xs(d, cfg.n), ys(d, cfg.n);
  for (std::size_t j = 0; j < cfg.n; ++j) {
    Stream rp(cfg.seed, "divergence", j);
    Stream rq(cfg.seed, "divergence", j);
    sampler::sample_terminal(family_p, rp, xs[j]);
    sampler::sample_terminal(family_q, rq, ys[j]);
  }

  std::vector<std::size_t> order(cfg.t_grid.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return cfg.t_grid[a] > cfg.t_grid[b];
  });

  std::vector<double> out(cfg.t_grid.size(), 0.0);
  double current = horizon;
  for (std::size_t gi : order) {
    const double t = cfg.t_grid[gi];
    if (t < current) {
      ode::SolverConfig sc;
      sc.method = ode::Method::RK45;
      sc.rtol = cfg.rtol;
      sc.atol = cfg.atol;
      sc.t_start = current;
      sc.t_end = t;
      parallel_for(cfg.n, cfg.threads, [&](std::size_t j) {
        const auto xp = ode::integrate(field_p, xs[j], sc, false).final_state();
        std::copy(xp.begin(), xp.end(), xs[j].begin());
        const auto yq = ode::integrate(field_q, ys[j], sc, false).final_state();
        std::copy(yq.begin(), yq.end(), ys[j].begin());
      });
      current = t;
    }
    if (xs == ys) {
      out[gi] = 0.0;
      continue;
    }
    const Vec hp = silverman_bandwidth(xs);
    const Vec hq = silverman_bandwidth(ys);
    std::vector<Vec> diffs(cfg.n);
    parallel_for(cfg.n, cfg.threads, [&](std::size_t j) {
      const Vec sp = estimate_score(xs, xs[j], hp);
      const Vec sq = estimate_score(ys, ys[j], hq);
      diffs[j].resize(d);
      for (std::size_t k = 0; k < d; ++k) diffs[j][k] = sp[k] - sq[k];
    });
    Vec mean(d, 0.0);
    for (const auto& v : diffs) {
      for (std::size_t k = 0; k < d; ++k) mean[k] += v[k];
    }
    double norm2 = 0.0;
    for (double m : mean) norm2 += (m / static_cast<double>(cfg.n)) * (m / static_cast<double>(cfg.n));
    out[gi] = -0.5 * cfg.g * cfg.g * std::sqrt(norm2);
  }
  return out;
}

}  // namespace ffgen::metrics
