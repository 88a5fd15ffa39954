#include "coralfit/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "coralfit/csv.hpp"
#include "coralfit/predictive.hpp"
#include "coralfit/segmentation.hpp"
#include "coralfit/survey.hpp"
#include "coralfit/svg.hpp"
#include "coralfit/synthetic.hpp"
#include "coralfit/trajectory_io.hpp"
#include "json.hpp"

namespace coralfit::cli {
namespace {

using ojson = nlohmann::ordered_json;

std::ifstream open_input(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::invalid_argument("cannot open " + p.string());
  return in;
}

std::string read_text(const fs::path& p) {
  auto in = open_input(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Rows of a header-led CSV with '#' comment lines skipped.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::invalid_argument("missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
  double number(std::size_t r, std::size_t c) const {
    const auto v = parse_number(rows[r][c]);
    if (!v) throw std::invalid_argument("row " + std::to_string(r + 1) + ": bad number '" +
                                        rows[r][c] + "'");
    return *v;
  }
};

Table read_table(const fs::path& path) {
  auto in = open_input(path);
  Table t;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    auto fields = split_csv_line(line);
    if (!fields) throw ParseError(n, "unterminated quote in " + path.string());
    if (t.header.empty()) {
      for (auto& f : *fields) f = trim(f);
      t.header = std::move(*fields);
    } else {
      if (fields->size() != t.header.size()) {
        throw ParseError(n, "wrong field count in " + path.string());
      }
      t.rows.push_back(std::move(*fields));
    }
  }
  if (t.header.empty()) throw std::invalid_argument(path.string() + " is empty");
  return t;
}

std::vector<fs::path> csv_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::invalid_argument(dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

ojson meta(const RunConfig& cfg) {
  ojson m;
  m["config_hash"] = cfg.hash();
  m["seed"] = cfg.fit.seed;
  return m;
}

ojson diagnostics_json(const ConvergenceReport& rep) {
  ojson arr = ojson::array();
  for (const auto& p : rep.parameters) {
    arr.push_back({{"parameter", p.name},
                   {"r_hat", std::isfinite(p.r_hat) ? ojson(p.r_hat) : ojson(nullptr)},
                   {"r_hat_upper95", std::isfinite(p.r_hat_upper95) ? ojson(p.r_hat_upper95)
                                                                    : ojson(nullptr)},
                   {"ess", p.ess}});
  }
  return arr;
}

}  // namespace

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string output_header(const std::string& what, const RunConfig& cfg) {
  return "# coralfit " + what + " config_hash=" + cfg.hash() +
         " seed=" + std::to_string(cfg.fit.seed) + "\n";
}

std::string file_stem(const std::string& id) {
  std::string s;
  for (char c : id) {
    s.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' ? c : '_');
  }
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(fnv1a(id) & 0xffffffffu));
  return s + "_" + buf;
}

// ---------------------------------------------------------------- draws I/O

std::vector<ChainRun> DrawsFile::chains() const {
  std::map<std::size_t, ChainRun> by_chain;
  for (std::size_t r = 0; r < num_rows(); ++r) {
    auto& c = by_chain[chain[r]];
    c.num_params = num_params();
    c.draws.insert(c.draws.end(), values.begin() + r * num_params(),
                   values.begin() + (r + 1) * num_params());
    c.iterations.push_back(iteration[r]);
    c.log_post_trace.push_back(0.0);
  }
  std::vector<ChainRun> out;
  for (auto& [id, c] : by_chain) out.push_back(std::move(c));
  return out;
}

std::string format_draws(const FitResult& fit, std::size_t model, const RunConfig& cfg) {
  std::ostringstream s;
  s << output_header("draws", cfg);
  s << "# trajectory=" << fit.trajectory_id << "\n";
  s << "# model=" << model << " converged=" << (fit.converged() ? "true" : "false")
    << " iterations=" << fit.iterations_per_chain
    << " thin=" << (fit.chains.empty() ? 0 : fit.chains.front().thin) << "\n";
  s << "chain,iteration";
  for (const auto& n : fit.parameter_names) s << ',' << n;
  s << '\n';
  for (std::size_t c = 0; c < fit.chains.size(); ++c) {
    const auto& run = fit.chains[c];
    for (std::size_t i = 0; i < run.num_draws(); ++i) {
      s << c << ',' << run.iterations[i];
      for (double v : run.draw(i)) s << ',' << format_number(v);
      s << '\n';
    }
  }
  return s.str();
}

DrawsFile read_draws(const fs::path& path) {
  auto in = open_input(path);
  DrawsFile d;
  std::string line;
  bool have_header = false;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      const std::string body = trim(line.substr(1));
      if (body.rfind("trajectory=", 0) == 0) {
        d.trajectory = body.substr(11);
        continue;
      }
      std::istringstream tok(body);
      std::string kv;
      while (tok >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
        if (k == "model") d.model = std::stoul(v);
        if (k == "converged") d.converged = v == "true";
      }
      continue;
    }
    const auto fields = split_csv_line(line);
    if (!fields) throw ParseError(n, "unterminated quote in " + path.string());
    if (!have_header) {
      if (fields->size() < 3 || (*fields)[0] != "chain" || (*fields)[1] != "iteration") {
        throw ParseError(n, path.string() + " is not a draws file");
      }
      d.names.assign(fields->begin() + 2, fields->end());
      have_header = true;
      continue;
    }
    if (fields->size() != d.names.size() + 2) {
      throw ParseError(n, "wrong field count in " + path.string());
    }
    const auto c = parse_number((*fields)[0]);
    const auto it = parse_number((*fields)[1]);
    if (!c || !it || *c < 0 || *it < 0) throw ParseError(n, "bad chain or iteration");
    d.chain.push_back(static_cast<std::size_t>(*c));
    d.iteration.push_back(static_cast<std::size_t>(*it));
    for (std::size_t p = 0; p < d.names.size(); ++p) {
      const auto v = parse_number((*fields)[p + 2]);
      if (!v) throw ParseError(n, "bad value in " + path.string());
      d.values.push_back(*v);
    }
  }
  if (!have_header) throw std::invalid_argument(path.string() + " has no header");
  if (d.trajectory.empty()) throw std::invalid_argument(path.string() + " names no trajectory");
  return d;
}

// ---------------------------------------------------------------- segment

SegmentSummary cmd_segment(const fs::path& survey, const fs::path& out_dir,
                           const RunConfig& cfg) {
  cfg.validate();
  Taxonomy taxonomy;
  if (!cfg.taxonomy_path.empty()) {
    auto in = open_input(cfg.taxonomy_path);
    taxonomy = Taxonomy::parse(in);
  }
  std::map<std::string, double> overrides;
  if (!cfg.site_metadata_path.empty()) {
    auto in = open_input(cfg.site_metadata_path);
    overrides = parse_site_metadata(in);
  }
  auto in = open_input(survey);
  const ParsedSurvey parsed = parse_survey(in, taxonomy);

  SegmentSummary summary;
  summary.warnings = parsed.warnings;
  const auto sites = aggregate(parsed.records, cfg.expected_transects);
  summary.sites = sites.size();
  std::vector<SurveyTrajectory> trajectories;
  std::vector<EventRow> events;
  for (const auto& site : sites) {
    for (const auto& v : site.visits) {
      if (v.missing_transects) {
        summary.warnings.push_back(site.key() + " on " + v.date + ": " +
                                   std::to_string(v.transects.size()) + " transects");
      }
    }
    const auto ev = detect_disturbances(site, cfg.p_threshold, &summary.warnings);
    for (const auto& e : ev) events.push_back({e, site.visits[e.visit].date});
    const auto spans = segment_spans(site, ev, cfg.min_post_visits);
    if (spans.empty()) continue;
    const auto ov = overrides.find(site.key());
    const double K = estimate_K(site, ov == overrides.end() ? std::nullopt
                                                            : std::optional<double>(ov->second));
    for (const auto& span : spans) trajectories.push_back(make_survey_trajectory(site, span, K));
  }
  summary.events = events.size();
  summary.trajectories = trajectories.size();

  ojson m = meta(cfg);
  m["survey"] = survey.filename().string();
  m["p_threshold"] = cfg.p_threshold;
  m["min_post_visits"] = cfg.min_post_visits;
  std::ostringstream tj;
  write_trajectories(tj, trajectories, m);
  std::ostringstream ev;
  ev << output_header("events", cfg);
  write_events(ev, events);
  write_atomic(out_dir / "trajectories.json", tj.str());
  write_atomic(out_dir / "events.csv", ev.str());
  return summary;
}

// ---------------------------------------------------------------- fit

FitSummary cmd_fit(const fs::path& trajectories, const fs::path& out_dir,
                   const RunConfig& cfg) {
  cfg.validate();
  auto in = open_input(trajectories);
  const auto trs = read_trajectories(in);

  struct Outcome {
    ojson entry;
    std::string draws;
    std::string stem;
    bool ok = false;
    bool converged = false;
  };
  std::vector<Outcome> outcomes(trs.size());
  auto fit_one = [&](std::size_t i) {
    Outcome& o = outcomes[i];
    o.entry["id"] = trs[i].id;
    o.stem = file_stem(trs[i].id);
    try {
      Trajectory tr = trs[i].as_model(cfg.model);
      tr.apply_variance_floor();
      tr.validate();
      FitConfig fc = cfg.fit;
      fc.seed = derive_seed(cfg.fit.seed, fnv1a(trs[i].id));
      // spare workers go to the chains of the few trajectories there are
      fc.parallel_chains = cfg.jobs > trs.size();
      const FitResult res = run_fit(tr, fc);
      o.draws = format_draws(res, cfg.model, cfg);
      o.ok = true;
      o.converged = res.converged();
      o.entry["status"] = res.converged() ? "converged" : "not_converged";
      o.entry["draws_file"] = "draws/" + o.stem + ".csv";
      o.entry["iterations_per_chain"] = res.iterations_per_chain;
      o.entry["thin"] = res.chains.empty() ? 0 : res.chains.front().thin;
      ojson acc = ojson::array();
      for (const auto& c : res.chains) acc.push_back(c.acceptance_rate);
      o.entry["acceptance_rates"] = acc;
      o.entry["solver_failures"] = res.solver_failures;
      o.entry["refactorizations"] = res.refactorizations;
      o.entry["diagnostics"] = diagnostics_json(res.report);
      o.entry["failures"] = res.report.failures;
    } catch (const std::exception& e) {
      o.entry["status"] = "error";
      o.entry["error"] = e.what();
    }
  };

  const std::size_t workers = std::min(cfg.jobs, std::max<std::size_t>(trs.size(), 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < trs.size(); ++i) fit_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next++) < trs.size();) fit_one(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  FitSummary summary;
  ojson report;
  report["meta"] = meta(cfg);
  report["meta"]["model"] = cfg.model;
  report["meta"]["trajectories"] = trajectories.filename().string();
  report["trajectories"] = ojson::array();
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    if (o.ok) {
      write_atomic(out_dir / "draws" / (o.stem + ".csv"), o.draws);
      ++summary.fitted;
      if (o.converged) ++summary.converged;
    } else {
      summary.errors.push_back(trs[i].id + ": " + o.entry["error"].get<std::string>());
    }
    report["trajectories"].push_back(o.entry);
  }
  write_atomic(out_dir / "fit_report.json", report.dump(2) + "\n");
  return summary;
}

// ---------------------------------------------------------------- diagnose

void cmd_diagnose(const fs::path& draws_dir, const fs::path& out_csv, const RunConfig& cfg) {
  cfg.validate();
  std::ostringstream s;
  s << output_header("diagnostics", cfg);
  s << "trajectory,parameter,r_hat,r_hat_upper95,ess,converged\n";
  for (const auto& f : csv_files(draws_dir)) {
    const DrawsFile d = read_draws(f);
    const auto runs = d.chains();
    std::vector<ParameterDiagnostics> params;
    const auto sets = parameter_chains(runs);
    for (std::size_t p = 0; p < sets.size(); ++p) {
      try {
        params.push_back(diagnose_parameter(d.names[p], sets[p]));
      } catch (const std::invalid_argument&) {
        params.push_back({d.names[p], std::numeric_limits<double>::infinity(),
                          std::numeric_limits<double>::infinity(), 0.0});
      }
    }
    const auto rep = gate(params, cfg.fit.thresholds);
    for (const auto& p : rep.parameters) {
      s << csv_field(d.trajectory) << ',' << p.name << ',' << format_number(p.r_hat) << ','
        << format_number(p.r_hat_upper95) << ',' << format_number(p.ess) << ','
        << (rep.pass ? "true" : "false") << '\n';
    }
  }
  write_atomic(out_csv, s.str());
}

// ---------------------------------------------------------------- predict

PredictSummary cmd_predict(const fs::path& draws_dir, const fs::path& trajectories,
                           const fs::path& out_dir, const RunConfig& cfg) {
  cfg.validate();
  auto in = open_input(trajectories);
  const auto trs = read_trajectories(in);
  std::map<std::string, DrawsFile> draws;
  for (const auto& f : csv_files(draws_dir)) {
    DrawsFile d = read_draws(f);
    const std::string id = d.trajectory;
    draws.emplace(id, std::move(d));
  }

  PredictSummary summary;
  std::ostringstream bands, quants;
  bands << output_header("bands", cfg) << "trajectory,group,time,level,lo,hi\n";
  quants << output_header("quantiles", cfg) << "trajectory,group,visit,time,obs,q,beta\n";
  for (const auto& st : trs) {
    const auto it = draws.find(st.id);
    if (it == draws.end()) {
      summary.skipped.push_back(st.id + ": no draws");
      continue;
    }
    const DrawsFile& d = it->second;
    if (!d.converged && !cfg.include_unconverged) {
      summary.skipped.push_back(st.id + ": not converged");
      continue;
    }
    Trajectory tr = st.as_model(d.model);
    tr.apply_variance_floor();
    if (d.num_params() != 4 * tr.num_groups || d.num_rows() == 0) {
      throw std::invalid_argument("draws for " + st.id + " do not match the model");
    }
    Rng rng = make_stream(cfg.fit.seed, fnv1a(st.id));
    const auto ens = simulate_predictive(d.values, tr, cfg.predictive_draws, rng, cfg.fit.solver);
    for (std::size_t m = 0; m < tr.num_groups; ++m) {
      for (std::size_t j = 0; j < tr.num_times(); ++j) {
        for (std::size_t l = 0; l < ens.levels.size(); ++l) {
          bands << csv_field(st.id) << ',' << m << ',' << format_number(tr.times[j]) << ','
                << format_number(ens.levels[l]) << ',' << format_number(ens.lo(l, j, m)) << ','
                << format_number(ens.hi(l, j, m)) << '\n';
        }
      }
    }
    for (const auto& r : quantile_records(ens, tr)) {
      quants << csv_field(r.trajectory) << ',' << r.group << ',' << r.visit << ','
             << format_number(r.time) << ',' << format_number(r.obs) << ','
             << format_number(r.q) << ',' << format_number(r.beta) << '\n';
    }
    ++summary.predicted;
  }
  write_atomic(out_dir / "bands.csv", bands.str());
  write_atomic(out_dir / "quantiles.csv", quants.str());
  return summary;
}

// ---------------------------------------------------------------- coverage

void cmd_coverage(const fs::path& quantiles, const fs::path& out_csv, const RunConfig& cfg) {
  cfg.validate();
  const Table t = read_table(quantiles);
  const std::size_t cb = t.col("beta"), cv = t.col("visit");
  std::vector<double> betas;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (cfg.exclude_initial && t.number(r, cv) == 0.0) continue;
    betas.push_back(t.number(r, cb));
  }
  const auto c = coverage_curve(betas);
  std::ostringstream s;
  s << output_header("coverage", cfg) << "beta,p_hat,s_hat\n";
  for (std::size_t i = 0; i < c.beta_grid.size(); ++i) {
    s << c.beta_grid[i] << ',' << format_number(c.p_hat[i]) << ',' << format_number(c.s_hat[i])
      << '\n';
  }
  write_atomic(out_csv, s.str());
}

// ---------------------------------------------------------------- simulate

void cmd_simulate(const fs::path& params_json, const fs::path& out_csv, const RunConfig& cfg) {
  cfg.validate();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text(params_json));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("params file is not valid JSON: " + std::string(e.what()));
  }
  if (!doc.contains("sites") || !doc["sites"].is_array() || doc["sites"].empty()) {
    throw std::invalid_argument("params file needs a non-empty 'sites' array");
  }
  std::vector<TransectRecord> records;
  std::size_t index = 0;
  for (const auto& j : doc["sites"]) {
    SiteSimulation sim;
    try {
      sim.reef = j.value("reef", "SIM");
      sim.site = j.value("site", std::to_string(index + 1));
      sim.params.K = j.at("K").get<double>();
      sim.t0 = j.value("t0", 2000.0);
      sim.visits = j.value("visits", std::size_t{8});
      sim.interval = j.value("interval", 1.0);
      sim.noise_sd = j.value("noise_sd", 1.0);
      sim.transects = j.value("transects", cfg.expected_transects);
      sim.pre_cover = j.value("pre_cover", std::vector<double>{});
      for (const auto& g : j.at("groups")) {
        GroupParams gp;
        gp.alpha = g.at("alpha").get<double>();
        gp.gamma = g.at("gamma").get<double>();
        gp.T_d = g.at("T_d").get<double>();
        gp.alpha_d = g.at("alpha_d").get<double>();
        sim.params.groups.push_back(gp);
        sim.c0.push_back(g.at("c0").get<double>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument("site " + std::to_string(index) + ": " + e.what());
    }
    sim.params.validate();
    Rng rng = make_stream(cfg.fit.seed, index);
    const auto recs = simulate_survey(sim, rng);
    records.insert(records.end(), recs.begin(), recs.end());
    ++index;
  }
  std::ostringstream s;
  s << output_header("survey", cfg);
  write_survey(s, records);
  write_atomic(out_csv, s.str());
}

// ---------------------------------------------------------------- plot

RichardsFigure richards_figure(const std::vector<double>& gammas, double K, double alpha,
                               double c0, double horizon, std::size_t points) {
  RichardsFigure fig;
  fig.gammas = gammas;
  for (std::size_t i = 0; i < points; ++i) {
    fig.times.push_back(horizon * static_cast<double>(i) / static_cast<double>(points - 1));
  }
  svg::Chart chart;
  chart.title = "Richards growth, K = " + format_number(K) + "%";
  chart.x_label = "time (years)";
  chart.y_label = "cover (%)";
  chart.y_min = 0.0;
  chart.y_max = 100.0;
  for (std::size_t g = 0; g < gammas.size(); ++g) {
    const GroupParams gp{alpha, gammas[g], 0.0, 1.0};
    std::vector<double> y;
    for (double t : fig.times) y.push_back(analytic_cover(gp, K, c0, t));
    svg::Curve c;
    c.x = fig.times;
    c.y = y;
    c.color = svg::palette(g);
    c.label = "gamma = " + format_number(gammas[g]);
    chart.curves.push_back(std::move(c));
    fig.curves.push_back(std::move(y));
  }
  fig.svg = chart.render();
  return fig;
}

std::vector<fs::path> cmd_plot(const std::string& kind, const fs::path& input,
                               const fs::path& out, const fs::path& quantiles) {
  std::vector<fs::path> written;
  if (kind == "richards") {
    write_atomic(out, richards_figure().svg);
    written.push_back(out);
  } else if (kind == "coverage") {
    const Table t = read_table(input);
    const std::size_t cb = t.col("beta"), cp = t.col("p_hat"), cs = t.col("s_hat");
    svg::Chart chart;
    chart.title = "Coverage of posterior predictive intervals";
    chart.x_label = "credible level (%)";
    chart.y_label = "proportion of observations inside";
    chart.x_min = 0;
    chart.x_max = 100;
    chart.y_min = 0;
    chart.y_max = 1;
    svg::Band band;
    svg::Curve curve, ideal;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const double b = t.number(r, cb), p = t.number(r, cp), s = t.number(r, cs);
      band.x.push_back(b);
      band.lo.push_back(p - 3 * s);
      band.hi.push_back(p + 3 * s);
      curve.x.push_back(b);
      curve.y.push_back(p);
    }
    ideal.x = {0, 100};
    ideal.y = {0, 1};
    ideal.color = "#000000";
    ideal.dashed = true;
    ideal.width = 1.0;
    chart.bands.push_back(band);
    chart.curves.push_back(ideal);
    chart.curves.push_back(curve);
    write_atomic(out, chart.render());
    written.push_back(out);
  } else if (kind == "bands") {
    const Table t = read_table(input);
    const std::size_t ct = t.col("trajectory"), cg = t.col("group"), ctime = t.col("time"),
                      cl = t.col("level"), clo = t.col("lo"), chi = t.col("hi");
    // (trajectory, group) -> level -> rows
    std::map<std::pair<std::string, std::string>, std::map<double, svg::Band>> panels;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      auto& band = panels[{t.rows[r][ct], t.rows[r][cg]}][t.number(r, cl)];
      band.x.push_back(t.number(r, ctime));
      band.lo.push_back(t.number(r, clo));
      band.hi.push_back(t.number(r, chi));
    }
    std::map<std::pair<std::string, std::string>, svg::Points> obs;
    if (!quantiles.empty()) {
      const Table q = read_table(quantiles);
      const std::size_t qt = q.col("trajectory"), qg = q.col("group"), qtime = q.col("time"),
                        qo = q.col("obs");
      for (std::size_t r = 0; r < q.rows.size(); ++r) {
        auto& p = obs[{q.rows[r][qt], q.rows[r][qg]}];
        p.x.push_back(q.number(r, qtime));
        p.y.push_back(q.number(r, qo));
      }
    }
    fs::create_directories(out);
    for (auto& [key, levels] : panels) {
      svg::Chart chart;
      chart.title = key.first + (key.second == "0" ? "" : " group " + key.second);
      chart.x_label = "time (years)";
      chart.y_label = "cover (%)";
      // widest first so narrower bands draw on top
      for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
        it->second.color = "#1f77b4";
        it->second.opacity = 0.18;
        chart.bands.push_back(it->second);
      }
      if (obs.count(key)) chart.points.push_back(obs[key]);
      const fs::path file = out / (file_stem(key.first) + "_g" + key.second + ".svg");
      write_atomic(file, chart.render());
      written.push_back(file);
    }
  } else if (kind == "draws") {
    const DrawsFile d = read_draws(input);
    const auto runs = d.chains();
    std::vector<svg::Chart> traces, hists;
    for (std::size_t p = 0; p < d.num_params(); ++p) {
      svg::Chart tr;
      tr.title = d.names[p];
      tr.x_label = "iteration";
      for (std::size_t c = 0; c < runs.size(); ++c) {
        svg::Curve curve;
        for (std::size_t i = 0; i < runs[c].num_draws(); ++i) {
          curve.x.push_back(static_cast<double>(runs[c].iterations[i]));
          curve.y.push_back(runs[c].draw(i)[p]);
        }
        curve.color = svg::palette(c);
        curve.width = 0.6;
        tr.curves.push_back(std::move(curve));
      }
      traces.push_back(std::move(tr));

      std::vector<double> v;
      for (std::size_t r = 0; r < d.num_rows(); ++r) v.push_back(d.values[r * d.num_params() + p]);
      const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
      const double lo = *mn, hi = *mx > *mn ? *mx : *mn + 1.0;
      const std::size_t bins = 30;
      svg::Bars bars;
      bars.heights.assign(bins, 0.0);
      for (std::size_t b = 0; b <= bins; ++b) bars.edges.push_back(lo + (hi - lo) * b / bins);
      const double width = (hi - lo) / bins;
      for (double x : v) {
        const auto b = std::min(bins - 1, static_cast<std::size_t>((x - lo) / width));
        bars.heights[b] += 1.0 / (static_cast<double>(v.size()) * width);
      }
      svg::Chart h;
      h.title = d.names[p];
      h.y_label = "density";
      h.bars.push_back(std::move(bars));
      hists.push_back(std::move(h));
    }
    fs::create_directories(out);
    const std::string stem = file_stem(d.trajectory);
    const fs::path trace_file = out / (stem + "_trace.svg");
    const fs::path hist_file = out / (stem + "_marginals.svg");
    write_atomic(trace_file, svg::render_grid(traces, 2));
    write_atomic(hist_file, svg::render_grid(hists, 4, 240, 200));
    written = {trace_file, hist_file};
  } else {
    throw std::invalid_argument("unknown plot kind '" + kind +
                                "' (bands, coverage, draws, richards)");
  }
  return written;
}

// ---------------------------------------------------------------- entry point

namespace {

void print_error(const std::string& command, const std::string& type,
                 const std::string& message) {
  ojson e;
  e["error"] = {{"command", command}, {"type", type}, {"message", message}};
  std::cerr << e.dump() << std::endl;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Bayesian calibration of biphasic coral recovery models"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::map<std::string, std::string> flags;
  app.add_option("--config", config_path, "flat key = value config file");
  const std::vector<std::pair<std::string, std::string>> flag_specs{
      {"seed", "random seed"},
      {"jobs", "parallel trajectory fits"},
      {"model", "1 (total hard coral) or 2 (Acroporidae + other)"},
      {"max-iters", "iteration cap per chain (default 200000)"},
      {"chains", "chains per fit (default 4)"},
      {"rhat-threshold", "R-hat gate (default 1.1)"},
      {"ess-threshold", "ESS gate (default 200)"},
      {"p-threshold", "disturbance t-test level (default 0.05)"}};
  for (const auto& [name, help] : flag_specs) {
    app.add_option_function<std::string>(
        "--" + name, [&flags, key = name](const std::string& v) { flags[key] = v; }, help);
  }

  std::string in1, in2, out, kind, quantiles_path;
  bool exclude_initial = false;

  auto* seg = app.add_subcommand("segment", "survey CSV -> trajectories.json + events.csv");
  seg->add_option("survey", in1, "survey CSV")->required();
  seg->add_option("--out", out, "output directory")->required();
  seg->add_option_function<std::string>(
      "--taxonomy", [&flags](const std::string& v) { flags["taxonomy"] = v; }, "taxonomy CSV");
  seg->add_option_function<std::string>(
      "--site-metadata", [&flags](const std::string& v) { flags["site-metadata"] = v; },
      "site metadata CSV with K_override");

  auto* fit = app.add_subcommand("fit", "trajectories.json -> draws/*.csv + fit_report.json");
  fit->add_option("trajectories", in1, "trajectories.json")->required();
  fit->add_option("--out", out, "output directory")->required();

  auto* diag = app.add_subcommand("diagnose", "draws directory -> diagnostics CSV");
  diag->add_option("draws", in1, "draws directory")->required();
  diag->add_option("--out", out, "output CSV")->required();

  auto* pred = app.add_subcommand("predict", "draws + trajectories -> bands.csv + quantiles.csv");
  pred->add_option("draws", in1, "draws directory")->required();
  pred->add_option("trajectories", in2, "trajectories.json")->required();
  pred->add_option("--out", out, "output directory")->required();

  auto* cov = app.add_subcommand("coverage", "quantiles.csv -> coverage.csv");
  cov->add_option("quantiles", in1, "quantiles CSV")->required();
  cov->add_option("--out", out, "output CSV")->required();
  cov->add_flag("--exclude-initial", exclude_initial, "skip each trajectory's first visit");

  auto* sim = app.add_subcommand("simulate", "params.json -> synthetic survey CSV");
  sim->add_option("params", in1, "simulation parameters JSON")->required();
  sim->add_option("--out", out, "output CSV")->required();

  auto* plot = app.add_subcommand("plot", "static SVG plots");
  plot->add_option("kind", kind, "bands | coverage | draws | richards")->required();
  plot->add_option("input", in1, "input file (unused for richards)");
  plot->add_option("--out", out, "output file or directory")->required();
  plot->add_option("--quantiles", quantiles_path, "quantiles CSV for observed points");

  std::string command = "coralfit";
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error(command, "usage", e.what());
    return 2;
  }
  command = app.get_subcommands().front()->get_name();

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg.load_file(config_path);
    for (const auto& [k, v] : flags) cfg.set(k, v);
    if (exclude_initial) cfg.exclude_initial = true;
    cfg.validate();

    if (command == "segment") {
      const auto s = cmd_segment(in1, out, cfg);
      print_warnings(s.warnings);
      std::cout << "sites=" << s.sites << " events=" << s.events
                << " trajectories=" << s.trajectories << '\n';
    } else if (command == "fit") {
      const auto s = cmd_fit(in1, out, cfg);
      std::cout << "fitted=" << s.fitted << " converged=" << s.converged
                << " errors=" << s.errors.size() << '\n';
      if (!s.errors.empty()) {
        std::string msg;
        for (const auto& e : s.errors) msg += (msg.empty() ? "" : "; ") + e;
        print_error(command, "trajectory", msg);
        return 1;
      }
    } else if (command == "diagnose") {
      cmd_diagnose(in1, out, cfg);
    } else if (command == "predict") {
      const auto s = cmd_predict(in1, in2, out, cfg);
      print_warnings(s.skipped);
      std::cout << "predicted=" << s.predicted << '\n';
    } else if (command == "coverage") {
      cmd_coverage(in1, out, cfg);
    } else if (command == "simulate") {
      cmd_simulate(in1, out, cfg);
    } else if (command == "plot") {
      if (kind != "richards" && in1.empty()) {
        throw std::invalid_argument("plot " + kind + " needs an input file");
      }
      for (const auto& f : cmd_plot(kind, in1, out, quantiles_path)) {
        std::cout << f.string() << '\n';
      }
    }
  } catch (const ParseError& e) {
    print_error(command, "parse", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    print_error(command, "invalid_argument", e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error(command, "runtime", e.what());
    return 1;
  }
  return 0;
}

}  // namespace coralfit::cli
