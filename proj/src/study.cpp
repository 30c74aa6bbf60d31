#include "ffgen/study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

#include "ffgen/checkpoint.hpp"
#include "ffgen/errors.hpp"
#include "ffgen/field.hpp"
#include "ffgen/format.hpp"
#include "ffgen/parallel.hpp"

namespace ffgen::study {

namespace fs = std::filesystem;

namespace {

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::size_t mean_nfe(const ode::GenerationResult& gen) {
  if (gen.per_sample_nfe.empty()) return 0;
  return static_cast<std::size_t>(
      std::llround(static_cast<double>(gen.nfe) / static_cast<double>(gen.per_sample_nfe.size())));
}

metrics::MetricReport average(const std::vector<RunRecord>& runs) {
  metrics::MetricReport out;
  double nfe = 0.0;
  std::size_t ok = 0;
  for (const auto& r : runs) {
    if (r.failed) continue;
    out.sliced_wasserstein += r.report.sliced_wasserstein;
    out.energy_distance += r.report.energy_distance;
    out.wall_time += r.report.wall_time;
    nfe += static_cast<double>(r.report.nfe);
    ++ok;
  }
  if (ok == 0) return {};
  const double inv = 1.0 / static_cast<double>(ok);
  out.sliced_wasserstein *= inv;
  out.energy_distance *= inv;
  out.wall_time *= inv;
  out.nfe = static_cast<std::size_t>(std::llround(nfe * inv));
  return out;
}

std::string run_rows_csv(const std::vector<RunRecord>& runs) {
  std::ostringstream out;
  out << "seed,status," << metrics::report_csv_header() << ",samples_sha256\n";
  for (const auto& r : runs) {
    out << r.seed << ',' << (r.failed ? "failed" : "ok") << ',';
    if (r.failed) {
      out << ",,,,";
    } else {
      out << metrics::report_csv_row(r.report) << ',' << r.samples_sha256;
    }
    out << '\n';
  }
  return out.str();
}

std::string joined_hashes(const std::vector<RunRecord>& runs) {
  std::string out;
  for (const auto& r : runs) {
    if (r.failed) continue;
    if (!out.empty()) out += ';';
    out += r.samples_sha256;
  }
  return out;
}

}  // namespace

void StudyConfig::validate() const {
  if (overlap_counts.empty()) throw InvalidInput("study: ON range is empty");
  for (std::size_t on : overlap_counts) {
    if (on == 0) throw InvalidInput("study: ON values must be >= 1");
  }
  if (seeds.empty()) throw InvalidInput("study: seeds are empty");
  if (dataset.points.empty()) throw InvalidInput("study: dataset is empty");
  if (reference.empty()) throw InvalidInput("study: reference set is empty");
  if (reference.dim() != dataset.dim()) throw InvalidInput("study: reference and dataset dimensions differ");
  if (run.samples == 0) throw InvalidInput("study: samples must be >= 1");
  run.train.validate();
}

RunRecord run_single(const PointSet& train_points, const PointSet& reference, const trajectory::TrajectorySpec& spec,
                     const RunSettings& settings, std::uint64_t seed, const fs::path& dir) {
  make_dir(dir);
  RunRecord rec;
  rec.seed = seed;
  const auto start = std::chrono::steady_clock::now();

  trainer::TrainConfig tc = settings.train;
  tc.seed = seed;
  trainer::TrainResult trained;
  try {
    trained = trainer::train(train_points, spec, tc);
  } catch (const trainer::TrainingDiverged& e) {
    trainer::write_checkpoint(dir / "checkpoint_diverged.txt", {spec, e.diagnostic(), std::nullopt});
    rec.failed = true;
    rec.failure = e.what();
    data_io::write_text(dir / "failure.txt", rec.failure + "\n");
    return rec;
  }
  trainer::write_checkpoint(dir / "checkpoint.txt", {spec, trained.net, trained.optim});
  trainer::write_training_log(dir, trained.log);

  ode::SolverConfig sc = settings.solver;
  sc.t_start = spec.horizon;
  sc.t_end = spec.t_min;
  const field::LearnedField learned(trained.net, spec);
  ode::GenerationResult gen;
  try {
    gen = ode::generate(learned, spec, settings.samples, sc, seed, settings.threads);
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.failure = e.what();
    data_io::write_text(dir / "failure.txt", rec.failure + "\n");
    return rec;
  }

  rec.samples_path = dir / "samples.csv";
  data_io::write_csv(rec.samples_path, gen.samples);
  rec.samples_sha256 = data_io::sha256_file(rec.samples_path);
  if (settings.plot) {
    data_io::SvgStyle style;
    style.title = std::string(trajectory::to_string(spec.family)) + " seed " + std::to_string(seed);
    data_io::emit_svg_scatter(dir / "samples.svg", gen.samples, {}, style);
  }

  Stream sw_rng(seed, "metrics/sliced_wasserstein");
  Stream ed_rng(seed, "metrics/energy");
  rec.report.sliced_wasserstein = metrics::sliced_wasserstein(gen.samples, reference, settings.projections, sw_rng);
  rec.report.energy_distance = metrics::energy_distance(gen.samples, reference, ed_rng, settings.energy_points);
  rec.report.nfe = mean_nfe(gen);
  if (settings.record_wall_time) {
    rec.report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  data_io::write_text(dir / "report.csv",
                      metrics::report_csv_header() + "\n" + metrics::report_csv_row(rec.report) + "\n");
  return rec;
}

StudyResult run_superposition_study(const StudyConfig& cfg) {
  cfg.validate();
  make_dir(cfg.outdir);
  trajectory::TrajectorySpec base = cfg.base_spec;
  base.family = trajectory::Family::SuperposedLinear;
  base.dim = cfg.dataset.dim();

  StudyResult result;
  result.rows.resize(cfg.overlap_counts.size());
  const std::size_t n_seeds = cfg.seeds.size();
  std::vector<RunRecord> cells(cfg.overlap_counts.size() * n_seeds);

  // Cells are independent; with several threads they run side by side and
  // each generation uses a single worker.
  RunSettings settings = cfg.run;
  const unsigned outer = settings.threads;
  if (outer > 1) settings.threads = 1;
  parallel_for(cells.size(), outer, [&](std::size_t c) {
    const std::size_t on = cfg.overlap_counts[c / n_seeds];
    const std::uint64_t seed = cfg.seeds[c % n_seeds];
    trajectory::TrajectorySpec spec = base;
    spec.overlap_count = on;
    const fs::path dir = cfg.outdir / ("on=" + std::to_string(on)) / ("seed=" + std::to_string(seed));
    try {
      cells[c] = run_single(cfg.dataset.points, cfg.reference, spec, settings, seed, dir);
    } catch (const IoError&) {
      throw;
    } catch (const std::exception& e) {
      cells[c] = RunRecord{};
      cells[c].seed = seed;
      cells[c].failed = true;
      cells[c].failure = e.what();
    }
  });

  for (std::size_t r = 0; r < result.rows.size(); ++r) {
    auto& row = result.rows[r];
    row.overlap_count = cfg.overlap_counts[r];
    row.runs.assign(cells.begin() + static_cast<std::ptrdiff_t>(r * n_seeds),
                    cells.begin() + static_cast<std::ptrdiff_t>((r + 1) * n_seeds));
    row.failed = std::all_of(row.runs.begin(), row.runs.end(), [](const RunRecord& x) { return x.failed; });
    row.mean = average(row.runs);
    data_io::write_text(cfg.outdir / ("on=" + std::to_string(row.overlap_count)) / "report.csv",
                        run_rows_csv(row.runs));
  }

  double best = std::numeric_limits<double>::infinity();
  for (const auto& row : result.rows) {
    if (!row.failed) best = std::min(best, row.mean.sliced_wasserstein);
  }
  for (auto& row : result.rows) {
    row.collapsed = !row.failed && row.mean.sliced_wasserstein > 1.5 * best;
  }

  metrics::IndexTable table;
  table.columns = {{"sliced_wasserstein", true, {}}, {"energy_distance", true, {}}, {"nfe", true, {}}};
  for (const auto& row : result.rows) {
    if (row.failed) continue;
    table.keys.push_back(static_cast<long long>(row.overlap_count));
    table.columns[0].values.push_back(row.mean.sliced_wasserstein);
    table.columns[1].values.push_back(row.mean.energy_distance);
    table.columns[2].values.push_back(static_cast<double>(row.mean.nfe));
  }
  try {
    result.index = metrics::composite_index(table);
  } catch (const std::exception& e) {
    result.index_error = e.what();
  }

  std::ostringstream csv;
  csv << "on,status,seeds_ok," << metrics::report_csv_header() << ",index,collapsed,samples_sha256\n";
  std::size_t k = 0;
  for (const auto& row : result.rows) {
    const auto ok = std::count_if(row.runs.begin(), row.runs.end(), [](const RunRecord& x) { return !x.failed; });
    csv << row.overlap_count << ',' << (row.failed ? "failed" : "ok") << ',' << ok << ',';
    if (row.failed) {
      csv << ",,,,,,\n";
      continue;
    }
    csv << metrics::report_csv_row(row.mean) << ',';
    if (result.index) csv << format_double(result.index->index[k]);
    csv << ',' << (row.collapsed ? 1 : 0) << ',' << joined_hashes(row.runs) << '\n';
    ++k;
  }
  data_io::write_text(cfg.outdir / "index.csv", csv.str());
  if (!result.index) data_io::write_text(cfg.outdir / "index_absent.txt", result.index_error + "\n");
  return result;
}

FamilyEntry parse_family_entry(std::string_view text, const trajectory::TrajectorySpec& base) {
  const std::string_view trimmed = trim(text);
  const auto colon = trimmed.find(':');
  const std::string_view name = trim(trimmed.substr(0, colon));
  FamilyEntry entry{std::string(trimmed), base};
  entry.spec.family = trajectory::parse_family(name);
  if (colon != std::string_view::npos) {
    const std::string_view param = trim(trimmed.substr(colon + 1));
    switch (entry.spec.family) {
      case trajectory::Family::Curve: {
        const auto m = parse_double(param);
        if (!m) throw InvalidInput("family '" + std::string(trimmed) + "': exponent is not a number");
        entry.spec.curve_exponent = *m;
        break;
      }
      case trajectory::Family::SuperposedLinear: {
        const auto on = parse_int(param);
        if (!on || *on < 1) throw InvalidInput("family '" + std::string(trimmed) + "': ON must be an integer >= 1");
        entry.spec.overlap_count = static_cast<std::size_t>(*on);
        break;
      }
      default:
        throw InvalidInput("family '" + std::string(trimmed) + "' takes no parameter");
    }
  }
  if (entry.spec.family == trajectory::Family::PoissonIsotropic) {
    entry.spec.prior.kind = sampler::PriorKind::PfgmRadial;
  } else if (entry.spec.family == trajectory::Family::SuperposedLinear) {
    entry.spec.prior.kind = sampler::PriorKind::StandardGaussian;
  }
  entry.spec.validate();
  return entry;
}

CompareResult compare_families(const CompareConfig& cfg) {
  if (cfg.families.size() < 2) throw InvalidInput("compare: need at least 2 families");
  if (cfg.seeds.empty()) throw InvalidInput("compare: seeds are empty");
  if (cfg.dataset.points.empty()) throw InvalidInput("compare: dataset is empty");
  if (cfg.reference.dim() != cfg.dataset.dim()) throw InvalidInput("compare: reference and dataset dimensions differ");
  cfg.run.train.validate();
  make_dir(cfg.outdir);

  CompareResult result;
  for (std::size_t i = 0; i < cfg.families.size(); ++i) {
    FamilyResult fr;
    fr.family = cfg.families[i];
    fr.family.spec.dim = cfg.dataset.dim();
    const fs::path dir = cfg.outdir / ("family=" + std::to_string(i) + "-" + fr.family.label);
    for (std::uint64_t seed : cfg.seeds) {
      try {
        fr.runs.push_back(
            run_single(cfg.dataset.points, cfg.reference, fr.family.spec, cfg.run, seed,
                       dir / ("seed=" + std::to_string(seed))));
      } catch (const IoError&) {
        throw;
      } catch (const std::exception& e) {
        RunRecord failed;
        failed.seed = seed;
        failed.failed = true;
        failed.failure = e.what();
        fr.runs.push_back(failed);
      }
    }
    fr.failed = std::all_of(fr.runs.begin(), fr.runs.end(), [](const RunRecord& x) { return x.failed; });
    fr.mean = average(fr.runs);
    data_io::write_text(dir / "report.csv", run_rows_csv(fr.runs));
    result.families.push_back(std::move(fr));
  }

  std::ostringstream csv;
  csv << "family,label,status," << metrics::report_csv_header() << ",samples_sha256\n";
  for (std::size_t i = 0; i < result.families.size(); ++i) {
    const auto& fr = result.families[i];
    csv << i << ',' << fr.family.label << ',' << (fr.failed ? "failed" : "ok") << ',';
    if (fr.failed) {
      csv << ",,,,\n";
    } else {
      csv << metrics::report_csv_row(fr.mean) << ',' << joined_hashes(fr.runs) << '\n';
    }
  }
  data_io::write_text(cfg.outdir / "compare.csv", csv.str());

  // Divergence of every family against the first, on the oracle fields.
  metrics::DivergenceConfig dc;
  dc.g = cfg.divergence_g;
  dc.t_grid = cfg.divergence_times;
  dc.n = cfg.divergence_n;
  dc.seed = cfg.seeds.front();
  dc.threads = cfg.run.threads;
  std::ostringstream div;
  div << "t";
  for (std::size_t i = 1; i < result.families.size(); ++i) {
    div << ",d_0_" << i;
    auto p = result.families[0].family.spec;
    auto q = result.families[i].family.spec;
    result.divergence.push_back(metrics::trajectory_divergence(p, q, cfg.dataset.points, dc));
  }
  div << '\n';
  for (std::size_t k = 0; k < dc.t_grid.size(); ++k) {
    div << format_double(dc.t_grid[k]);
    for (const auto& curve : result.divergence) div << ',' << format_double(curve[k]);
    div << '\n';
  }
  data_io::write_text(cfg.outdir / "divergence.csv", div.str());
  return result;
}

}  // namespace ffgen::study
