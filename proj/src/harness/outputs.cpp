#include "fibdim/harness.hpp"

#include "fibdim/csv.hpp"
#include "fibdim/error.hpp"
#include "fibdim/svg.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

namespace fibdim {

namespace {

constexpr int kCsvVersion = 1;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void write_spectrum(const ResultBundle& b, const std::string& path) {
  CsvWriter csv(path, "spectrum", kCsvVersion, {"quantity", "index", "value", "stderr"});
  if (b.spectrum) {
    const SpectrumEstimate& s = *b.spectrum;
    for (int j = 0; j < static_cast<int>(s.chi.size()); ++j) {
      csv.cell("chi").cell(j + 1).cell(s.chi(j)).cell(s.stderr(j));
      csv.end_row();
    }
    for (int i = 1; i < static_cast<int>(s.chi.size()); ++i) {
      csv.cell("gap").cell(i).cell(s.gap(i)).cell(s.gap_stderr(i));
      csv.end_row();
    }
    csv.cell("sum_chi").cell(0).cell(s.chi.sum()).empty();
    csv.end_row();
    csv.cell("log_det").cell(0).cell(s.log_det_mean).cell(s.log_det_stderr);
    csv.end_row();
  }
  csv.close();
}

void kappa_cells(CsvWriter& csv, const KappaEstimate& k) {
  csv.cell(k.fiber).cell(method_name(k.method)).cell(k.kappa).cell(k.stderr);
}

void estimate_tail(CsvWriter& csv, const KappaEstimate& k) {
  csv.cell(k.effective_samples).cell(k.bandwidth).cell(k.acceptance_rate).cell(k.mean_radius).cell(k.skipped);
  csv.end_row();
}

void write_kappa(const ResultBundle& b, const std::string& path) {
  CsvWriter csv(path, "kappa", kCsvVersion,
                {"fiber", "method", "kappa", "stderr", "gap", "gap_stderr", "combined_stderr", "inequality_holds",
                 "kappa_zero", "relative_disagreement", "effective_samples", "bandwidth", "acceptance_rate",
                 "mean_radius", "skipped"});
  for (const auto& row : b.kappa_rows) {
    for (const auto* est : {&row.density, &row.interval}) {
      if (!*est) continue;
      kappa_cells(csv, **est);
      csv.cell(row.gap).cell(row.gap_stderr).cell(row.combined_stderr);
      csv.cell(row.inequality_holds ? 1 : 0).cell(row.kappa_zero ? 1 : 0);
      if (row.relative_disagreement) {
        csv.cell(*row.relative_disagreement);
      } else {
        csv.empty();
      }
      estimate_tail(csv, **est);
    }
  }
  for (const auto& k : b.extra_kappas) {
    csv.cell(k.fiber).cell("furstenberg").cell(k.kappa).cell(k.stderr);
    if (b.spectrum) {
      csv.cell(b.spectrum->gap(k.fiber)).cell(b.spectrum->gap_stderr(k.fiber));
    } else {
      csv.empty().empty();
    }
    csv.empty().empty().empty().empty();
    estimate_tail(csv, k);
  }
  csv.close();
}

void write_interval_rows(const ResultBundle& b, const std::string& path) {
  CsvWriter csv(path, "interval_rows", kCsvVersion,
                {"fiber", "n", "accepted", "attempted", "mean_log_ratio", "mean_target_mass", "mean_log_length",
                 "used"});
  for (const auto& row : b.kappa_rows) {
    if (!row.interval) continue;
    for (const auto& r : row.interval->rows) {
      csv.cell(row.fiber).cell(r.n).cell(r.accepted).cell(r.attempted).cell(r.mean_log_ratio);
      csv.cell(r.mean_target_mass).cell(r.mean_log_length).cell(r.used ? 1 : 0);
      csv.end_row();
    }
  }
  csv.close();
}

void write_contraction(const ResultBundle& b, const std::string& path) {
  CsvWriter csv(path, "contraction", kCsvVersion,
                {"fiber", "n", "mean_log_length", "stderr", "fit_slope", "fit_intercept", "replicas", "skipped"});
  for (const auto& c : b.contraction) {
    for (const auto& r : c.rows) {
      csv.cell(c.fiber).cell(r.n).cell(r.mean_log_length).cell(r.stderr);
      csv.cell(c.fit.slope).cell(c.fit.intercept).cell(c.replicas).cell(c.skipped);
      csv.end_row();
    }
  }
  csv.close();
}

void write_dimension(const ResultBundle& b, const std::string& summary, const std::string& points,
                     const std::string& masses) {
  CsvWriter s(summary, "dimension", kCsvVersion,
              {"fiber", "kappa", "kappa_stderr", "gap", "predicted", "mean_slope", "slope_iqr", "relative_error",
               "points"});
  CsvWriter p(points, "dimension_points", kCsvVersion,
              {"fiber", "point", "theta", "slope", "intercept", "residual", "levels_used", "r_min", "r_max"});
  CsvWriter m(masses, "ball_mass", kCsvVersion, {"fiber", "point", "radius", "mass"});
  for (const auto& row : b.dimension_rows) {
    s.cell(row.fiber).cell(row.kappa).cell(row.kappa_stderr).cell(row.gap).cell(row.predicted);
    s.cell(row.mean_slope).cell(row.slope_iqr).cell(row.relative_error).cell(row.points.size());
    s.end_row();
    for (std::size_t k = 0; k < row.points.size(); ++k) {
      const DimensionEstimate& e = row.points[k];
      p.cell(row.fiber).cell(k).cell(e.point.theta).cell(e.slope).cell(e.intercept).cell(e.residual);
      p.cell(e.levels_used).cell(e.r_min).cell(e.r_max);
      p.end_row();
      for (std::size_t l = 0; l < e.radii.size(); ++l) {
        m.cell(row.fiber).cell(k).cell(e.radii[l]).cell(e.masses[l]);
        m.end_row();
      }
    }
  }
  s.close();
  p.close();
  m.close();
}

void write_diagnostics(const ResultBundle& b, const std::string& path) {
  CsvWriter csv(path, "diagnostics", kCsvVersion, {"stage", "fiber", "name", "value", "detail"});
  for (const auto& d : b.diagnostics) {
    csv.cell(stage_name(d.stage)).cell(d.fiber).cell(d.name).cell(d.value).cell(d.detail);
    csv.end_row();
  }
  for (const auto& r : b.refusals) {
    csv.cell(stage_name(r.stage)).cell(r.fiber).cell("refusal:" + r.method).cell(r.gate ? 1 : 0);
    csv.cell(std::string(to_string(r.kind)) + ": " + r.message);
    csv.end_row();
  }
  csv.close();
}

std::string dimension_figure(const DimensionFormulaRow& row) {
  XyPlot plot;
  plot.title = "Ball mass against radius, fiber " + std::to_string(row.fiber);
  plot.x_label = "log r";
  plot.y_label = "log mass";
  PlotSeries pts{"sample points", {}, {}, false, "#1f77b4"};
  double mean_intercept = 0.0;
  for (const auto& e : row.points) {
    mean_intercept += e.intercept / static_cast<double>(row.points.size());
    for (std::size_t l = 0; l < e.radii.size(); ++l) {
      if (e.masses[l] > 0.0) {
        pts.x.push_back(std::log(e.radii[l]));
        pts.y.push_back(std::log(e.masses[l]));
      }
    }
  }
  plot.series.push_back(pts);
  if (!row.points.empty()) {
    const auto& radii = row.points.front().radii;
    PlotSeries fit{"mean slope " + format_double(std::round(row.mean_slope * 1000) / 1000), {}, {}, true, "#d62728"};
    PlotSeries pred{"kappa / gap " + format_double(std::round(row.predicted * 1000) / 1000), {}, {}, true, "#2ca02c"};
    for (double r : {radii.front(), radii.back()}) {
      fit.x.push_back(std::log(r));
      fit.y.push_back(mean_intercept + row.mean_slope * std::log(r));
      pred.x.push_back(std::log(r));
      pred.y.push_back(mean_intercept + row.predicted * std::log(r));
    }
    plot.series.push_back(fit);
    plot.series.push_back(pred);
  }
  return render_svg(plot);
}

std::string contraction_figure(const IntervalContractionReport& c, double gap) {
  XyPlot plot;
  plot.title = "Pulled-forward interval length, fiber " + std::to_string(c.fiber);
  plot.x_label = "n";
  plot.y_label = "mean log length";
  plot.legend_right = true;
  PlotSeries data{"mean log length", {}, {}, false, "#1f77b4"};
  for (const auto& r : c.rows) {
    data.x.push_back(static_cast<double>(r.n));
    data.y.push_back(r.mean_log_length);
  }
  plot.series.push_back(data);
  const double n0 = static_cast<double>(c.rows.front().n);
  const double n1 = static_cast<double>(c.rows.back().n);
  plot.series.push_back({"fit slope", {n0, n1}, {c.fit.intercept + c.fit.slope * n0, c.fit.intercept + c.fit.slope * n1},
                         true, "#d62728"});
  plot.series.push_back({"slope -gap", {n0, n1}, {c.fit.intercept - gap * n0, c.fit.intercept - gap * n1}, true,
                         "#2ca02c"});
  return render_svg(plot);
}

std::string kappa_figure(const ResultBundle& b) {
  BarChart chart;
  chart.title = "Entropy against exponent gap";
  chart.y_label = "nats per step";
  chart.series = {"gap", "kappa (density)", "kappa (interval)"};
  chart.colors = {"#7f7f7f", "#1f77b4", "#ff7f0e"};
  for (const auto& row : b.kappa_rows) {
    chart.categories.push_back("fiber " + std::to_string(row.fiber));
    chart.values.push_back({row.gap, row.density ? row.density->kappa : kNaN, row.interval ? row.interval->kappa : kNaN});
    chart.errors.push_back({2 * row.gap_stderr, row.density ? 2 * row.density->stderr : kNaN,
                            row.interval ? 2 * row.interval->stderr : kNaN});
  }
  return render_svg(chart);
}

}  // namespace

std::string summary_text(const ResultBundle& b) {
  std::ostringstream out;
  const ExperimentConfig& c = b.config;
  out << "fibdim " << b.tool_version << "\n";
  out << "ensemble: " << c.ensemble.name << " (d = " << c.ensemble.dim << ", " << kind_name(c.ensemble) << ")\n";
  out << "seed: " << c.seed << "\n";
  out << "threads: " << c.threads << "\n";
  out << "wall_seconds: " << format_double(std::round(b.wall_seconds * 100) / 100) << "\n";
  if (b.spectrum) {
    const SpectrumEstimate& s = *b.spectrum;
    out << "\n[spectrum] horizon " << s.horizon << " x " << s.replicas << " replicas\n";
    for (int j = 0; j < static_cast<int>(s.chi.size()); ++j) {
      out << "chi_" << j + 1 << " = " << format_double(s.chi(j)) << " +- " << format_double(s.stderr(j)) << "\n";
    }
    out << "sum chi = " << format_double(s.chi.sum()) << ", E log|det A| = " << format_double(s.log_det_mean)
        << " +- " << format_double(s.log_det_stderr) << "\n";
  }
  if (!b.contraction.empty()) {
    out << "\n[contraction]\n";
    for (const auto& r : b.contraction) {
      out << "fiber " << r.fiber << ": slope " << format_double(r.fit.slope) << " over n <= " << r.rows.size()
          << ", " << r.replicas << " replicas";
      if (b.spectrum) out << ", -gap " << format_double(-b.spectrum->gap(r.fiber));
      out << "\n";
    }
  }
  if (!b.kappa_rows.empty() || !b.extra_kappas.empty()) {
    out << "\n[entropy]\n";
    for (const auto& row : b.kappa_rows) {
      out << "fiber " << row.fiber << ": gap " << format_double(row.gap) << " +- " << format_double(row.gap_stderr);
      if (row.density) out << ", density " << format_double(row.density->kappa) << " +- " << format_double(row.density->stderr);
      if (row.interval) {
        out << ", interval " << format_double(row.interval->kappa) << " +- " << format_double(row.interval->stderr);
      }
      out << ", inequality " << (row.inequality_holds ? "holds" : "FAILS");
      if (row.kappa_zero) out << ", kappa consistent with 0";
      if (row.relative_disagreement) out << ", disagreement " << format_double(*row.relative_disagreement);
      out << "\n";
    }
    for (const auto& k : b.extra_kappas) {
      out << "fiber " << k.fiber << ": furstenberg " << format_double(k.kappa) << " +- " << format_double(k.stderr)
          << "\n";
    }
  }
  if (!b.dimension_rows.empty()) {
    out << "\n[dimension]\n";
    for (const auto& row : b.dimension_rows) {
      out << "fiber " << row.fiber << ": mean slope " << format_double(row.mean_slope) << " (IQR "
          << format_double(row.slope_iqr) << ") against kappa/gap " << format_double(row.predicted)
          << ", relative error " << format_double(row.relative_error) << "\n";
    }
  }
  if (!b.refusals.empty()) {
    out << "\n[refusals]\n";
    for (const auto& r : b.refusals) {
      out << stage_name(r.stage) << " fiber " << r.fiber << " " << r.method << ": " << to_string(r.kind)
          << (r.gate ? " (hypothesis gate)" : "") << ": " << r.message << "\n";
    }
  }
  return out.str();
}

OutputManifest emit_outputs(const ResultBundle& b, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create output directory '" + dir + "': " + ec.message());
  OutputManifest m;
  m.csv = {"spectrum.csv", "kappa.csv", "interval_rows.csv", "contraction.csv", "dimension.csv",
           "dimension_points.csv", "ball_mass.csv", "diagnostics.csv"};
  write_spectrum(b, join(dir, "spectrum.csv"));
  write_kappa(b, join(dir, "kappa.csv"));
  write_interval_rows(b, join(dir, "interval_rows.csv"));
  write_contraction(b, join(dir, "contraction.csv"));
  write_dimension(b, join(dir, "dimension.csv"), join(dir, "dimension_points.csv"), join(dir, "ball_mass.csv"));
  write_diagnostics(b, join(dir, "diagnostics.csv"));
  m.summary = "summary.txt";
  write_text_file(join(dir, m.summary), summary_text(b));
  m.config_echo = "config.json";
  write_text_file(join(dir, m.config_echo), config_to_json(b.config).dump(2) + "\n");
  if (b.config.figures) {
    for (const auto& row : b.dimension_rows) {
      m.figures.push_back("dimension_fiber" + std::to_string(row.fiber) + ".svg");
      write_text_file(join(dir, m.figures.back()), dimension_figure(row));
    }
    for (const auto& c : b.contraction) {
      if (c.rows.empty() || !b.spectrum) continue;
      m.figures.push_back("contraction_fiber" + std::to_string(c.fiber) + ".svg");
      write_text_file(join(dir, m.figures.back()), contraction_figure(c, b.spectrum->gap(c.fiber)));
    }
    if (!b.kappa_rows.empty()) {
      m.figures.push_back("kappa_gap.svg");
      write_text_file(join(dir, m.figures.back()), kappa_figure(b));
    }
  }
  return m;
}

}  // namespace fibdim
