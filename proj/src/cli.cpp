#include "tasil/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "tasil/cooccur.hpp"
#include "tasil/error.hpp"
#include "tasil/format.hpp"
#include "tasil/grid.hpp"
#include "tasil/km_plot.hpp"
#include "tasil/stratify.hpp"
#include "tasil/survival.hpp"
#include "tasil/synth.hpp"

#ifndef TASIL_VERSION
#define TASIL_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;

namespace tasil::cli {

std::string version() { return TASIL_VERSION; }

namespace {

using survival::Cohort;
using survival::SurvivalRecord;

// Options shared by several subcommands live here so CLI11 can bind to them.
struct Options {
  // score
  std::vector<std::string> grids;
  int conn = 8;
  unsigned threads = 1;
  std::string backend = "auto";
  std::optional<std::size_t> stroma_radius;
  std::string join_cohort;
  std::string join_out;
  // survival / cindex / stratify
  std::string cohort;
  std::string group_col;
  std::vector<std::string> covariates;
  int max_iter = 50;
  double separation_bound = 20.0;
  std::vector<std::string> score_cols{"tasil"};
  std::string direction = "higher-risk";
  std::string discovery;
  std::string validation;
  std::string score_col = "tasil";
  double qlo = 0.1;
  double qhi = 0.9;
  double min_group_frac = 0.1;
  std::string km_out;
  // correlate
  std::string file;
  std::string x_col;
  std::string y_col;
  std::size_t exact_max_n = 10;
  // eval-seg
  std::string truth;
  std::string pred;
  std::string classes = "analysis";
  // synth
  std::optional<std::uint64_t> seed;
  double theta = 0.3;
  synth::SynthGridConfig grid_cfg;
  std::string slide_id = "synth";
  synth::SynthCohortConfig cohort_cfg;
  std::string hazard = "loglinear";
  std::string theta_out;
  std::string grids_dir;
  // plot-km
  std::string in;
  std::string title = "Kaplan-Meier estimate";
  std::optional<double> p_override;
  // common
  std::string out;
};

// ---- output and manifest ----------------------------------------------------

struct Manifest {
  std::string command;
  const CLI::App* app = nullptr;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<std::uint64_t> seeds;
};

nlohmann::ordered_json resolved_config(const CLI::App& app) {
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const CLI::Option* opt : app.get_options()) {
    if (opt->get_name() == "--help" || opt->get_name() == "-h") continue;
    std::string key = opt->get_name();
    while (!key.empty() && key.front() == '-') key.erase(key.begin());
    if (opt->count() > 0) {
      const auto& res = opt->results();
      if (res.size() == 1) {
        cfg[key] = res.front();
      } else {
        cfg[key] = res;
      }
    } else if (!opt->get_default_str().empty()) {
      cfg[key] = opt->get_default_str();
    }
  }
  return cfg;
}

void write_manifest(const Manifest& m, const fs::path& primary_output) {
  nlohmann::ordered_json j;
  j["tool"] = "tasil";
  j["version"] = version();
  j["command"] = m.command;
  j["config"] = m.app ? resolved_config(*m.app) : nlohmann::ordered_json::object();
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  j["seeds"] = m.seeds;
  const fs::path path = primary_output.string() + ".manifest.json";
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write manifest '" + path.string() + "'");
  f << j.dump(2) << '\n';
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  return f;
}

// Writes to --out when given (and records the manifest), else to stdout.
void emit(const Options& o, std::ostream& out, Manifest m,
          const std::function<void(std::ostream&)>& body) {
  if (o.out.empty()) {
    body(out);
    return;
  }
  {
    std::ofstream f = open_output(o.out);
    body(f);
    f.flush();
    if (!f) throw IoError("write failed for '" + o.out + "'");
  }
  m.outputs.insert(m.outputs.begin(), o.out);
  write_manifest(m, o.out);
}

void kv(std::ostream& out, const std::string& key, const std::string& value) {
  out << key << ',' << value << '\n';
}

// ---- score ------------------------------------------------------------------

std::vector<fs::path> expand_grid_paths(const std::vector<std::string>& args) {
  std::vector<fs::path> paths;
  for (const auto& a : args) {
    const fs::path p(a);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ".tlg") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      paths.insert(paths.end(), found.begin(), found.end());
    } else {
      paths.push_back(p);
    }
  }
  if (paths.empty()) throw DataError("score: no grid files found");
  return paths;
}

int cmd_score(const Options& o, const CLI::App& app, std::ostream& out, std::ostream& err) {
  const auto paths = expand_grid_paths(o.grids);
  cooccur::CountOptions count;
  count.connectivity =
      o.conn == 4 ? cooccur::Connectivity::FourNeighbour : cooccur::Connectivity::EightNeighbour;
  count.backend = simd::parse_backend(o.backend);

  struct Row {
    std::string slide_id;
    cooccur::DigitalScores scores;
  };
  std::vector<std::optional<Row>> rows(paths.size());
  std::optional<std::string> failure;
  std::mutex failure_mutex;
  const auto work = [&](std::size_t i) {
    try {
      grid::AnalysisGrid g = grid::load_analysis_grid(paths[i]);
      if (o.stroma_radius) g = grid::restrict_stroma_to_tumour_vicinity(g, *o.stroma_radius);
      rows[i] = Row{g.slide_id(), cooccur::score_grid(g, count)};
    } catch (const std::exception& e) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = e.what();
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(o.threads, 1, paths.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < paths.size(); i += workers) work(i);
      });
    }
  }
  if (failure) throw DataError(*failure);

  std::vector<Row> sorted;
  for (auto& r : rows) sorted.push_back(std::move(*r));
  std::sort(sorted.begin(), sorted.end(),
            [](const Row& a, const Row& b) { return a.slide_id < b.slide_id; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].slide_id == sorted[i - 1].slide_id) {
      throw DataError("score: duplicate slide id '" + sorted[i].slide_id + "'");
    }
  }

  Manifest m{"score", &app, {}, {}, {}};
  for (const auto& p : paths) m.inputs.push_back(p.string());

  if (!o.join_cohort.empty()) {
    if (o.join_out.empty()) throw CLI::ValidationError("--cohort-out", "required with --cohort");
    Cohort cohort = survival::load_cohort(o.join_cohort);
    std::map<std::string, const cooccur::DigitalScores*> by_id;
    for (const auto& r : sorted) by_id[r.slide_id] = &r.scores;
    std::size_t unmatched = 0;
    for (auto& rec : cohort.records) {
      const auto it = by_id.find(rec.case_id);
      if (it == by_id.end()) {
        ++unmatched;
        continue;
      }
      for (const auto& name : synth::kScoreColumns) rec.covariates.erase(name);
      synth::attach_scores(rec, *it->second);
    }
    for (const auto& name : synth::kScoreColumns) {
      if (std::find(cohort.covariate_names.begin(), cohort.covariate_names.end(), name) ==
          cohort.covariate_names.end()) {
        cohort.covariate_names.push_back(name);
      }
    }
    if (unmatched > 0) err << "score: " << unmatched << " cohort case(s) had no grid\n";
    survival::save_cohort(cohort, o.join_out);
    m.inputs.push_back(o.join_cohort);
    m.outputs.push_back(o.join_out);
    if (o.out.empty()) write_manifest(m, o.join_out);
  }

  emit(o, out, m, [&](std::ostream& s) {
    s << cooccur::kScoresCsvHeader << '\n';
    for (const auto& r : sorted) cooccur::write_scores_row(s, r.slide_id, r.scores);
  });
  return kOk;
}

// ---- survival ---------------------------------------------------------------

struct Groups {
  std::vector<double> values;
  std::vector<std::vector<SurvivalRecord>> records;
  std::size_t excluded = 0;
};

Groups split_by_column(const Cohort& cohort, const std::string& column) {
  if (std::find(cohort.covariate_names.begin(), cohort.covariate_names.end(), column) ==
      cohort.covariate_names.end()) {
    throw DataError("cohort '" + cohort.name + "' has no column '" + column + "'");
  }
  std::map<double, std::vector<SurvivalRecord>> by_value;
  Groups g;
  for (const auto& r : cohort.records) {
    const auto v = r.covariate(column);
    if (!v) {
      ++g.excluded;
      continue;
    }
    by_value[*v].push_back(r);
  }
  for (auto& [v, recs] : by_value) {
    g.values.push_back(v);
    g.records.push_back(std::move(recs));
  }
  return g;
}

int cmd_km(const Options& o, const CLI::App& app, std::ostream& out, std::ostream& err) {
  const Cohort cohort = survival::load_cohort(o.cohort);
  Manifest m{"survival km", &app, {o.cohort}, {}, {}};
  std::vector<std::pair<std::string, survival::KMCurve>> curves;
  if (o.group_col.empty()) {
    curves.emplace_back("all", survival::km_fit(cohort.records));
  } else {
    const Groups g = split_by_column(cohort, o.group_col);
    if (g.excluded > 0) err << "survival km: excluded " << g.excluded << " case(s) missing '" << o.group_col << "'\n";
    for (std::size_t i = 0; i < g.values.size(); ++i) {
      curves.emplace_back(format_value(g.values[i]), survival::km_fit(g.records[i]));
    }
  }
  emit(o, out, m, [&](std::ostream& s) {
    s << stratify::kKmCsvHeader << '\n';
    for (const auto& [name, curve] : curves) stratify::write_km_rows(s, name, curve);
  });
  return kOk;
}

int cmd_logrank(const Options& o, const CLI::App& app, std::ostream& out, std::ostream&) {
  const Cohort cohort = survival::load_cohort(o.cohort);
  const Groups g = split_by_column(cohort, o.group_col);
  if (g.values.size() != 2) {
    throw DataError("survival logrank: column '" + o.group_col + "' must take exactly 2 values, found " +
                    std::to_string(g.values.size()));
  }
  const auto res = survival::logrank_test(g.records[0], g.records[1]);
  Manifest m{"survival logrank", &app, {o.cohort}, {}, {}};
  emit(o, out, m, [&](std::ostream& s) {
    kv(s, "group_a", format_value(g.values[0]));
    kv(s, "group_b", format_value(g.values[1]));
    kv(s, "n_a", std::to_string(g.records[0].size()));
    kv(s, "n_b", std::to_string(g.records[1].size()));
    kv(s, "excluded", std::to_string(g.excluded));
    kv(s, "observed_a", format_value(res.observed_a));
    kv(s, "expected_a", format_value(res.expected_a));
    kv(s, "observed_b", format_value(res.observed_b));
    kv(s, "expected_b", format_value(res.expected_b));
    kv(s, "variance", format_value(res.variance));
    kv(s, "chi_square", format_value(res.chi_square));
    kv(s, "p_value", format_value(res.p_value));
  });
  return kOk;
}

int cmd_cox(const Options& o, const CLI::App& app, std::ostream& out, std::ostream&) {
  const Cohort cohort = survival::load_cohort(o.cohort);
  survival::CoxOptions opts;
  opts.max_iterations = o.max_iter;
  opts.separation_bound = o.separation_bound;
  const auto fit = survival::cox_fit(cohort.records, o.covariates, opts);
  Manifest m{"survival cox", &app, {o.cohort}, {}, {}};
  emit(o, out, m, [&](std::ostream& s) {
    s << "covariate,beta,se,hazard_ratio,ci_low,ci_high,z,p_value\n";
    for (const auto& t : fit.terms) {
      s << t.name << ',' << format_value(t.beta) << ',' << format_value(t.se) << ','
        << format_value(t.hazard_ratio) << ',' << format_value(t.ci_low) << ','
        << format_value(t.ci_high) << ',' << format_value(t.z) << ',' << format_value(t.p_value)
        << '\n';
    }
    s << '\n';
    kv(s, "n", std::to_string(fit.n));
    kv(s, "n_events", std::to_string(fit.n_events));
    kv(s, "excluded", std::to_string(fit.excluded));
    kv(s, "loglik", format_value(fit.loglik));
    kv(s, "loglik_null", format_value(fit.loglik_null));
    kv(s, "iterations", std::to_string(fit.iterations));
    kv(s, "converged", fit.converged ? "1" : "0");
    kv(s, "degenerate", fit.degenerate ? "1" : "0");
  });
  return kOk;
}

// ---- stratify ---------------------------------------------------------------

int cmd_stratify(const Options& o, const CLI::App& app, std::ostream& out, std::ostream&) {
  const Cohort disc = survival::load_cohort(o.discovery);
  const Cohort val = survival::load_cohort(o.validation);
  stratify::ThresholdSearchConfig cfg;
  cfg.score_name = o.score_col;
  cfg.quantile_lo = o.qlo;
  cfg.quantile_hi = o.qhi;
  cfg.min_group_fraction = o.min_group_frac;
  const auto res = stratify::run_protocol(disc, val, cfg);

  Manifest m{"stratify", &app, {o.discovery, o.validation}, {}, {}};
  if (!o.km_out.empty()) {
    std::ofstream f = open_output(o.km_out);
    f << stratify::kKmCsvHeader << '\n';
    stratify::write_km_rows(f, "low", res.km_low);
    stratify::write_km_rows(f, "high", res.km_high);
    m.outputs.push_back(o.km_out);
  }
  emit(o, out, m, [&](std::ostream& s) { stratify::write_report(s, res); });
  return kOk;
}

// ---- correlate / cindex -----------------------------------------------------

std::optional<double> parse_cell(std::string_view s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec == std::errc{} && res.ptr == s.data() + s.size()) return v;
  // Pathologist TIL categories map to their ordinal position.
  return static_cast<double>(stratify::parse_til_level(std::string(s)));
}

int cmd_correlate(const Options& o, const CLI::App& app, std::ostream& out, std::ostream&) {
  std::ifstream in(o.file, std::ios::binary);
  if (!in) throw IoError("cannot open '" + o.file + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError(o.file, 1, "empty file");
  const auto split = [](const std::string& l) {
    std::vector<std::string> f;
    std::stringstream ss(l);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!l.empty() && l.back() == ',') f.emplace_back();
    return f;
  };
  const auto header = split(line);
  const auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError(o.file + ": no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t cx = col(o.x_col);
  const std::size_t cy = col(o.y_col);
  std::vector<double> xs, ys;
  std::size_t excluded = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != header.size()) {
      throw ParseError(o.file, line_no, "expected " + std::to_string(header.size()) + " fields");
    }
    std::optional<double> x, y;
    try {
      x = parse_cell(f[cx]);
      y = parse_cell(f[cy]);
    } catch (const DataError& e) {
      throw ParseError(o.file, line_no, e.what());
    }
    if (!x || !y) {
      ++excluded;
      continue;
    }
    xs.push_back(*x);
    ys.push_back(*y);
  }
  survival::SpearmanOptions sopt;
  sopt.exact_max_n = o.exact_max_n;
  const auto res = survival::spearman(xs, ys, sopt);
  Manifest m{"correlate", &app, {o.file}, {}, {}};
  emit(o, out, m, [&](std::ostream& s) {
    kv(s, "x", o.x_col);
    kv(s, "y", o.y_col);
    kv(s, "n", std::to_string(res.n));
    kv(s, "excluded", std::to_string(excluded));
    kv(s, "rho", format_value(res.rho));
    kv(s, "p_value", format_value(res.p_value));
    kv(s, "p_method", res.exact ? "exact-permutation" : "t-approximation");
  });
  return kOk;
}

int cmd_cindex(const Options& o, const CLI::App& app, std::ostream& out, std::ostream&) {
  const Cohort cohort = survival::load_cohort(o.cohort);
  const auto dir = o.direction == "lower-risk" ? survival::RiskDirection::HigherScoreLowerRisk
                                               : survival::RiskDirection::HigherScoreHigherRisk;
  std::vector<std::pair<std::string, survival::Concordance>> rows;
  for (const auto& name : o.score_cols) {
    if (std::find(cohort.covariate_names.begin(), cohort.covariate_names.end(), name) ==
        cohort.covariate_names.end()) {
      throw DataError("cohort '" + cohort.name + "' has no column '" + name + "'");
    }
    rows.emplace_back(name, survival::concordance(cohort.records, name, dir));
  }
  Manifest m{"cindex", &app, {o.cohort}, {}, {}};
  emit(o, out, m, [&](std::ostream& s) {
    s << "score,direction,c_index,comparable,concordant,tied,excluded\n";
    for (const auto& [name, c] : rows) {
      s << name << ',' << o.direction << ',' << format_value(c.c_index) << ',' << c.comparable
        << ',' << c.concordant << ',' << c.tied << ',' << c.excluded << '\n';
    }
  });
  return kOk;
}

// ---- eval-seg ---------------------------------------------------------------

template <typename Label>
void write_confusion(std::ostream& s, const grid::ConfusionMatrix& cm) {
  s << "truth\\pred";
  for (char c : grid::ClassTraits<Label>::kCodes) s << ',' << c;
  s << '\n';
  for (std::size_t i = 0; i < cm.classes(); ++i) {
    s << grid::ClassTraits<Label>::kCodes[i];
    for (std::size_t j = 0; j < cm.classes(); ++j) s << ',' << cm.at(i, j);
    s << '\n';
  }
}

int cmd_eval_seg(const Options& o, const CLI::App& app, std::ostream& out, std::ostream&) {
  Manifest m{"eval-seg", &app, {o.truth, o.pred}, {}, {}};
  const auto report = [&](const grid::ConfusionMatrix& cm, auto write_matrix) {
    emit(o, out, m, [&](std::ostream& s) {
      kv(s, "classes", o.classes);
      kv(s, "n", std::to_string(cm.total()));
      kv(s, "accuracy", format_value(grid::accuracy(cm)));
      kv(s, "macro_f1", format_value(grid::macro_f1(cm)));
      s << '\n';
      write_matrix(s, cm);
    });
  };
  if (o.classes == "annotation") {
    const auto t = grid::load_grid<grid::AnnotationClass>(o.truth);
    const auto p = grid::load_grid<grid::AnnotationClass>(o.pred);
    report(grid::confusion_matrix(t, p), write_confusion<grid::AnnotationClass>);
  } else {
    const auto t = grid::load_analysis_grid(o.truth);
    const auto p = grid::load_analysis_grid(o.pred);
    report(grid::confusion_matrix(t, p), write_confusion<grid::AnalysisClass>);
  }
  return kOk;
}

// ---- synth ------------------------------------------------------------------

int cmd_synth_grid(const Options& o, const CLI::App& app, std::ostream& out, std::ostream&) {
  synth::SynthGridConfig cfg = o.grid_cfg;
  cfg.seed = *o.seed;
  cfg.infiltration_theta = o.theta;
  const auto g = synth::generate_grid(cfg, o.slide_id);
  Manifest m{"synth grid", &app, {}, {}, {cfg.seed}};
  emit(o, out, m, [&](std::ostream& s) { grid::write_tlg(s, g.grid); });
  return kOk;
}

int cmd_synth_cohort(const Options& o, const CLI::App& app, std::ostream&, std::ostream&) {
  synth::SynthCohortConfig cfg = o.cohort_cfg;
  cfg.seed = *o.seed;
  cfg.grid = o.grid_cfg;
  cfg.hazard = o.hazard == "step" ? synth::HazardModel::Step : synth::HazardModel::LogLinear;
  const auto result = synth::generate_cohort(cfg, o.threads);

  Manifest m{"synth cohort", &app, {}, {}, {cfg.seed}};
  const fs::path theta_path =
      o.theta_out.empty() ? fs::path(o.out).replace_extension(".theta.csv") : fs::path(o.theta_out);
  {
    std::ofstream f = open_output(theta_path);
    f << "case_id,theta\n";
    for (std::size_t i = 0; i < result.theta.size(); ++i) {
      f << result.cohort.records[i].case_id << ',' << format_value(result.theta[i]) << '\n';
    }
  }
  m.outputs.push_back(theta_path.string());
  if (!o.grids_dir.empty()) {
    fs::create_directories(o.grids_dir);
    for (const auto& g : result.grids) {
      grid::save_grid(g, fs::path(o.grids_dir) / (g.slide_id() + ".tlg"));
    }
    m.outputs.push_back(o.grids_dir);
  }
  std::ostringstream unused;
  emit(o, unused, m, [&](std::ostream& s) { survival::write_cohort_csv(s, result.cohort); });
  return kOk;
}

// ---- plot-km ----------------------------------------------------------------

int cmd_plot_km(const Options& o, const CLI::App& app, std::ostream& out, std::ostream& err) {
  std::ifstream in(o.in, std::ios::binary);
  if (!in) throw IoError("cannot open '" + o.in + "'");
  const auto series = km_plot::read_km_tables(in, o.in);
  std::optional<double> p = o.p_override;
  if (!p && series.size() == 2) {
    try {
      p = survival::logrank_test(km_plot::reconstruct_records(series[0]),
                                 km_plot::reconstruct_records(series[1]))
              .p_value;
    } catch (const DataError& e) {
      err << "plot-km: no log-rank p-value (" << e.what() << ")\n";
    }
  }
  km_plot::SvgOptions svg;
  svg.title = o.title;
  Manifest m{"plot-km", &app, {o.in}, {}, {}};
  emit(o, out, m, [&](std::ostream& s) { s << km_plot::render_svg(series, p, svg); });
  return kOk;
}

// ---- wiring -----------------------------------------------------------------

void add_grid_options(CLI::App* sub, Options& o) {
  sub->add_option("--rows", o.grid_cfg.rows, "Grid rows")->capture_default_str();
  sub->add_option("--cols", o.grid_cfg.cols, "Grid columns")->capture_default_str();
  sub->add_option("--nests", o.grid_cfg.n_tumour_nests, "Tumour nests")->capture_default_str();
  sub->add_option("--radius-min", o.grid_cfg.nest_radius_min, "Smallest nest radius (cells)")
      ->capture_default_str();
  sub->add_option("--radius-max", o.grid_cfg.nest_radius_max, "Largest nest radius (cells)")
      ->capture_default_str();
  sub->add_option("--stroma-width", o.grid_cfg.stroma_width, "TAS band width (cells)")
      ->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"TASIL-score and survival analysis toolkit", "tasil"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  auto* score = app.add_subcommand("score", "Score TLG grids (files or directories) into a CSV");
  score->add_option("grids", o.grids, "TLG files or directories of .tlg files")->required();
  score->add_option("--conn", o.conn, "Neighbourhood: 4 or 8")
      ->check(CLI::IsMember({4, 8}))
      ->capture_default_str();
  score->add_option("--threads", o.threads, "Grids scored concurrently")->capture_default_str();
  score->add_option("--backend", o.backend, "Kernel backend: auto, scalar, avx2")
      ->check(CLI::IsMember({"auto", "scalar", "avx2"}))
      ->capture_default_str();
  score->add_option("--stroma-radius", o.stroma_radius,
                    "Keep only TAS within this many patches of tumour");
  score->add_option("--cohort", o.join_cohort, "Cohort CSV to merge the scores into");
  score->add_option("--cohort-out", o.join_out, "Where to write the merged cohort CSV");
  score->add_option("--out", o.out, "Scores CSV (default stdout)");

  auto* surv = app.add_subcommand("survival", "Kaplan-Meier, log-rank and Cox on a cohort CSV");
  surv->require_subcommand(1);
  auto* km = surv->add_subcommand("km", "Kaplan-Meier table");
  km->add_option("--cohort", o.cohort, "Cohort CSV")->required();
  km->add_option("--group-col", o.group_col, "Column defining groups");
  km->add_option("--out", o.out, "KM CSV (default stdout)");
  auto* lr = surv->add_subcommand("logrank", "Two-group log-rank test");
  lr->add_option("--cohort", o.cohort, "Cohort CSV")->required();
  lr->add_option("--group-col", o.group_col, "Two-valued group column")->required();
  lr->add_option("--out", o.out, "Result file (default stdout)");
  auto* cox = surv->add_subcommand("cox", "Cox proportional hazards fit");
  cox->add_option("--cohort", o.cohort, "Cohort CSV")->required();
  cox->add_option("--covariates", o.covariates, "Comma-separated covariate columns")
      ->required()
      ->delimiter(',');
  cox->add_option("--max-iter", o.max_iter, "Newton iterations")->capture_default_str();
  cox->add_option("--separation-bound", o.separation_bound, "|beta| flagged as separation")
      ->capture_default_str();
  cox->add_option("--out", o.out, "Result file (default stdout)");

  auto* strat = app.add_subcommand("stratify", "Discovery/validation threshold protocol");
  strat->add_option("--discovery", o.discovery, "Discovery cohort CSV")->required();
  strat->add_option("--validation", o.validation, "Validation cohort CSV")->required();
  strat->add_option("--score-col", o.score_col, "Score column")->capture_default_str();
  strat->add_option("--qlo", o.qlo, "Lower quantile of the search window")->capture_default_str();
  strat->add_option("--qhi", o.qhi, "Upper quantile of the search window")->capture_default_str();
  strat->add_option("--min-group-frac", o.min_group_frac, "Smallest admissible group fraction")
      ->capture_default_str();
  strat->add_option("--km-out", o.km_out, "Also write the validation KM CSV here");
  strat->add_option("--out", o.out, "Report file (default stdout)");

  auto* corr = app.add_subcommand("correlate", "Spearman correlation between two CSV columns");
  corr->add_option("--file", o.file, "CSV file with a header row")->required();
  corr->add_option("--x", o.x_col, "First column")->required();
  corr->add_option("--y", o.y_col, "Second column")->required();
  corr->add_option("--exact-max-n", o.exact_max_n, "Largest n using the exact permutation p")
      ->capture_default_str();
  corr->add_option("--out", o.out, "Result file (default stdout)");

  auto* cidx = app.add_subcommand("cindex", "Harrell's C-index of score columns");
  cidx->add_option("--cohort", o.cohort, "Cohort CSV")->required();
  cidx->add_option("--score-col", o.score_cols, "Comma-separated score columns")
      ->delimiter(',')
      ->capture_default_str();
  cidx->add_option("--direction", o.direction, "higher-risk or lower-risk")
      ->check(CLI::IsMember({"higher-risk", "lower-risk"}))
      ->capture_default_str();
  cidx->add_option("--out", o.out, "Result CSV (default stdout)");

  auto* seg = app.add_subcommand("eval-seg", "Accuracy and macro-F1 of a predicted grid");
  seg->add_option("--truth", o.truth, "Reference TLG")->required();
  seg->add_option("--pred", o.pred, "Predicted TLG")->required();
  seg->add_option("--classes", o.classes, "analysis or annotation")
      ->check(CLI::IsMember({"analysis", "annotation"}))
      ->capture_default_str();
  seg->add_option("--out", o.out, "Result file (default stdout)");

  auto* syn = app.add_subcommand("synth", "Synthetic grids and cohorts");
  syn->require_subcommand(1);
  auto* sgrid = syn->add_subcommand("grid", "One synthetic TLG grid");
  sgrid->add_option("--seed", o.seed, "RNG seed")->required();
  sgrid->add_option("--theta", o.theta, "Infiltration probability in [0, 0.8]")
      ->check(CLI::Range(0.0, 0.8))
      ->capture_default_str();
  sgrid->add_option("--slide-id", o.slide_id, "Slide id")->capture_default_str();
  add_grid_options(sgrid, o);
  sgrid->add_option("--out", o.out, "TLG file (default stdout)");
  auto* scoh = syn->add_subcommand("cohort", "Synthetic cohort CSV with scores and theta sidecar");
  scoh->add_option("--seed", o.seed, "RNG seed")->required();
  scoh->add_option("--n", o.cohort_cfg.n_cases, "Cases")->capture_default_str();
  scoh->add_option("--theta-lo", o.cohort_cfg.theta_lo, "Lowest theta")->capture_default_str();
  scoh->add_option("--theta-hi", o.cohort_cfg.theta_hi, "Highest theta")->capture_default_str();
  scoh->add_option("--lambda0", o.cohort_cfg.baseline_hazard_lambda0, "Baseline hazard per month")
      ->capture_default_str();
  scoh->add_option("--beta", o.cohort_cfg.effect_beta, "Effect size")->capture_default_str();
  scoh->add_option("--horizon", o.cohort_cfg.censor_horizon_months, "Censoring horizon (months)")
      ->capture_default_str();
  scoh->add_option("--hazard", o.hazard, "loglinear or step")
      ->check(CLI::IsMember({"loglinear", "step"}))
      ->capture_default_str();
  scoh->add_option("--cut", o.cohort_cfg.step_cut, "Theta cutpoint of the step hazard")
      ->capture_default_str();
  scoh->add_option("--threads", o.threads, "Cases generated concurrently")->capture_default_str();
  add_grid_options(scoh, o);
  scoh->add_option("--theta-out", o.theta_out, "Ground-truth theta CSV (default <out>.theta.csv)");
  scoh->add_option("--grids-dir", o.grids_dir, "Also write every case's TLG grid here");
  scoh->add_option("--out", o.out, "Cohort CSV")->required();

  auto* plot = app.add_subcommand("plot-km", "SVG step plot from a KM CSV or stratify report");
  plot->add_option("--in", o.in, "KM CSV or stratification report")->required();
  plot->add_option("--title", o.title, "Plot title")->capture_default_str();
  plot->add_option("--p", o.p_override, "Log-rank p shown in the legend (default: recomputed)");
  plot->add_option("--out", o.out, "SVG file (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << version() << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "tasil: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    if (score->parsed()) return cmd_score(o, *score, out, err);
    if (km->parsed()) return cmd_km(o, *km, out, err);
    if (lr->parsed()) return cmd_logrank(o, *lr, out, err);
    if (cox->parsed()) return cmd_cox(o, *cox, out, err);
    if (strat->parsed()) return cmd_stratify(o, *strat, out, err);
    if (corr->parsed()) return cmd_correlate(o, *corr, out, err);
    if (cidx->parsed()) return cmd_cindex(o, *cidx, out, err);
    if (seg->parsed()) return cmd_eval_seg(o, *seg, out, err);
    if (sgrid->parsed()) return cmd_synth_grid(o, *sgrid, out, err);
    if (scoh->parsed()) return cmd_synth_cohort(o, *scoh, out, err);
    if (plot->parsed()) return cmd_plot_km(o, *plot, out, err);
  } catch (const CLI::ParseError& e) {
    err << "tasil: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "tasil: " << e.what() << '\n';
    return kDataError;
  }
  err << "tasil: no command given\n";
  return kUsageError;
}

}  // namespace tasil::cli
