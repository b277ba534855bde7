#pragma once

// Subcommand dispatch for the conelab CLI. Every run writes its data files
// (CSV, plus JSON for `dispersion`) and a manifest.json into the output
// directory. Exit codes: 0 success, 1 input/validation error, 2 numerical
// contract failure. Errors go to the error stream as
// `conelab: error[<kind>]: <message>`.

#include <algorithm>
#include <array>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "conelab/band_topology.hpp"
#include "conelab/csv.hpp"
#include "conelab/dispersion_lab.hpp"
#include "conelab/errors.hpp"
#include "conelab/flavour_mixing.hpp"
#include "conelab/oscillation.hpp"
#include "conelab/scenario.hpp"
#include "conelab/version.hpp"

namespace conelab {

inline constexpr std::array<std::string_view, 6> kSubcommands{"bands",          "dirac",       "oscillate",
                                                              "sweep-direction", "sweep-delta", "dispersion"};

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;  // overrides [run] out
  unsigned threads = 1;
  bool emit_plot_script = false;
};

namespace runner_detail {

using nlohmann::json;

struct RunContext {
  const Scenario& scenario;
  std::filesystem::path out;
  unsigned threads;
  json outputs = json::array();
  json metadata = json::object();
  std::string plot_script;

  std::ofstream open(const std::string& name) {
    std::ofstream f(out / name, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot write '" + (out / name).string() + "'");
    outputs.push_back(name);
    return f;
  }
};

inline std::string fmt(double v) { return csv::format_double(v); }

inline void write_text_row(std::ostream& os, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
  os << '\n';
}

inline const ModelSection& need_model(const Scenario& s) {
  if (!s.model) throw Error(ErrorKind::Validation, "[model] section is required for this subcommand");
  return *s.model;
}

inline const MixingSection& need_mixing(const Scenario& s) {
  if (!s.mixing) throw Error(ErrorKind::Validation, "[mixing] section is required for this subcommand");
  return *s.mixing;
}

inline double need_p_mag(const RunSection& r) {
  if (!r.p_mag) throw Error(ErrorKind::Validation, "run.p_mag: required for this subcommand");
  if (!(*r.p_mag > 0.0)) throw Error(ErrorKind::Validation, "run.p_mag: must be > 0");
  return *r.p_mag;
}

inline void need_momentum(const RunSection& r) {
  if (!r.kx && !r.p_mag) throw Error(ErrorKind::Validation, "run: give p_mag (with p_angle) or kx, ky");
}

inline void need_times(const RunSection& r) {
  if (!r.t_max) throw Error(ErrorKind::Validation, "run.t_max: required for this subcommand");
}

inline void run_bands(RunContext& ctx) {
  const BlochModel model = need_model(ctx.scenario).build();
  const int nk = ctx.scenario.run.nk.value_or(64);
  if (nk < 4) throw Error(ErrorKind::Validation, "run.nk: must be >= 4");
  const BandGrid grid = sample_bands(model, nk, ctx.threads);
  auto f = ctx.open("bands.csv");
  write_csv(f, grid);
  ctx.metadata["nk"] = nk;
  ctx.metadata["bands"] = grid.n;
  ctx.plot_script = "set datafile separator ','\nset key autotitle columnhead\nsplot 'bands.csv' using 1:2:3 with points\n";
}

inline void run_dirac(RunContext& ctx) {
  const ModelSection& ms = need_model(ctx.scenario);
  const BlochModel model = ms.build();
  const RunSection& run = ctx.scenario.run;
  const int nk = run.nk.value_or(128);
  if (nk < 8) throw Error(ErrorKind::Validation, "run.nk: must be >= 8");
  const auto minima = gap_minima(model, nk, ctx.threads);

  const int n_vel = model.n() / 2;
  auto f = ctx.open("dirac_points.csv");
  std::vector<std::string> header{"kx", "ky", "gap", "charge", "block"};
  for (int i = 1; i <= n_vel; ++i) header.push_back("v_" + std::to_string(i));
  write_text_row(f, header);
  for (std::size_t i = 0; i < minima.size(); ++i) {
    double separation = 2.0 * kPi;
    for (std::size_t j = 0; j < minima.size(); ++j)
      if (j != i) separation = std::min(separation, detail::periodic_distance(minima[i].k, minima[j].k));
    DiracAnalysisOptions opt;
    opt.delta = run.fd_delta;
    opt.n_loop = run.n_loop;
    opt.loop_radius = std::min(run.loop_radius, 0.4 * separation);
    const DiracPointReport r = analyze_dirac_point(model, minima[i].k, opt);
    std::vector<std::string> row{fmt(r.position.x()), fmt(r.position.y()), fmt(r.gap),
                                 r.charge ? std::to_string(*r.charge) : "undefined", ""};
    if (!ms.onsite_h.empty()) {
      const Vec3 g = g_vector(model.t_x(), model.t_y(), r.position);
      std::size_t best = 0;
      for (std::size_t b = 1; b < ms.onsite_h.size(); ++b)
        if ((g - ms.onsite_h[b]).norm() < (g - ms.onsite_h[best]).norm()) best = b;
      row[4] = std::to_string(best);
    }
    for (int v = 0; v < n_vel; ++v)
      row.push_back(v < static_cast<int>(r.velocities.size()) ? fmt(r.velocities[static_cast<std::size_t>(v)]) : "");
    write_text_row(f, row);
  }
  ctx.metadata["nk"] = nk;
  ctx.metadata["minima"] = minima.size();

  if (!ms.onsite_h.empty()) {
    auto a = ctx.open("dirac_analytic.csv");
    write_text_row(a, {"block", "status", "kx", "ky"});
    for (std::size_t b = 0; b < ms.onsite_h.size(); ++b) {
      if (ms.onsite_h[b].z() != 0.0) {
        write_text_row(a, {std::to_string(b), "gapped", "", ""});
        continue;
      }
      const auto pts = dirac_points_analytic(model.t_x(), model.t_y(), ms.onsite_h[b]);
      if (pts.points.empty()) write_text_row(a, {std::to_string(b), to_string(pts.status), "", ""});
      for (const auto& p : pts.points)
        write_text_row(a, {std::to_string(b), to_string(pts.status), fmt(p.x()), fmt(p.y())});
    }
  }
  ctx.plot_script = "set datafile separator ','\nset key autotitle columnhead\nplot 'dirac_points.csv' using 1:2 with points pt 7\n";
}

inline void run_oscillate(RunContext& ctx) {
  const MixingSpec spec = need_mixing(ctx.scenario).build();
  const RunSection& run = ctx.scenario.run;
  need_momentum(run);
  need_times(run);
  const Vec2 k = run.momentum();
  const auto times = run.times();
  const auto traces = evolve_all(spec, k, times, run.branch);
  const auto asym = t_asymmetry(spec, k, times, run.branch);

  std::optional<std::vector<double>> oracle;
  if (run.p_mag && spec.t_x == spec.t_y) {
    try {
      oracle = continuum_transition(spec, *run.p_mag, run.p_angle, run.branch, Flavour::E, Flavour::Mu, times);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ModeAmbiguity) throw;
    }
  }

  auto f = ctx.open("trace.csv");
  std::vector<std::string> header{"t", "distance"};
  for (Flavour a : kFlavours)
    for (Flavour b : kFlavours) header.push_back(std::string("P_") + to_string(a) + "_" + to_string(b));
  header.insert(header.end(), {"dT", "dT_undefined"});
  if (oracle) header.push_back("P_e_mu_continuum");
  csv::write_header(f, header);
  const double c_l = spec.light_speed();
  std::vector<double> row;
  for (std::size_t i = 0; i < times.size(); ++i) {
    row.assign({times[i], c_l * times[i]});
    for (Flavour a : kFlavours)
      for (Flavour b : kFlavours) row.push_back(traces[index(a)].probability(b)[i]);
    row.push_back(asym.values[i]);
    row.push_back(asym.undefined[i] ? 1.0 : 0.0);
    if (oracle) row.push_back((*oracle)[i]);
    csv::write_row(f, row);
  }
  ctx.metadata["k"] = {k.x(), k.y()};
  ctx.metadata["light_speed"] = c_l;
  ctx.metadata["branch"] = run.branch == Branch::Negative ? "negative" : "positive";
  ctx.plot_script =
      "set datafile separator ','\nset key autotitle columnhead\nplot 'trace.csv' using 1:3 with lines, '' using 1:4 "
      "with lines, '' using 1:5 with lines\n";
}

inline void run_sweep_direction(RunContext& ctx) {
  const MixingSpec spec = need_mixing(ctx.scenario).build();
  const RunSection& run = ctx.scenario.run;
  const double p_mag = need_p_mag(run);
  if (run.n_dirs < 16) throw Error(ErrorKind::Validation, "run.n_dirs: must be >= 16");
  const double t_probe = run.t_probe ? *run.t_probe : default_probe_time(spec, p_mag);
  const auto sweep = direction_sweep(spec, p_mag, run.n_dirs, t_probe, run.branch, ctx.threads);
  std::optional<DirectionSweep> alt;
  if (run.p_mag_alt) alt = direction_sweep(spec, *run.p_mag_alt, run.n_dirs, t_probe, run.branch, ctx.threads);

  auto f = ctx.open("sweep_direction.csv");
  std::vector<std::string> header{"angle", "P_e_mu"};
  const bool with_oracle = !sweep.e_to_mu_continuum.empty();
  if (with_oracle) header.push_back("P_e_mu_continuum");
  if (alt) header.push_back("P_e_mu_alt");
  csv::write_header(f, header);
  std::vector<double> row;
  for (std::size_t j = 0; j < sweep.angles.size(); ++j) {
    row.assign({sweep.angles[j], sweep.e_to_mu[j]});
    if (with_oracle) row.push_back(sweep.e_to_mu_continuum[j]);
    if (alt) row.push_back(alt->e_to_mu[j]);
    csv::write_row(f, row);
  }
  ctx.metadata["t_probe"] = t_probe;
  ctx.metadata["probe_distance"] = spec.light_speed() * t_probe;
  ctx.metadata["p_mag"] = p_mag;
  if (alt) ctx.metadata["p_mag_alt"] = *run.p_mag_alt;
  ctx.plot_script =
      "set datafile separator ','\nset key autotitle columnhead\nset polar\nplot 'sweep_direction.csv' using 1:2 with "
      "lines\n";
}

inline void run_sweep_delta(RunContext& ctx) {
  const MixingSpec spec = need_mixing(ctx.scenario).build();
  const RunSection& run = ctx.scenario.run;
  need_momentum(run);
  need_times(run);
  const Vec2 k = run.momentum();
  const auto times = run.times();
  const auto sweeps = delta_sweep(spec, run.deltas, k, times, run.branch, ctx.threads);
  auto f = ctx.open("sweep_delta.csv");
  csv::write_header(f, std::vector<std::string>{"delta", "t", "P_e_mu", "P_mu_e", "dT", "dT_undefined"});
  for (std::size_t d = 0; d < sweeps.size(); ++d)
    for (std::size_t i = 0; i < times.size(); ++i)
      csv::write_row(f, std::vector<double>{run.deltas[d], times[i], sweeps[d].e_to_mu[i], sweeps[d].mu_to_e[i],
                                            sweeps[d].values[i], sweeps[d].undefined[i] ? 1.0 : 0.0});
  ctx.metadata["k"] = {k.x(), k.y()};
  ctx.metadata["deltas"] = run.deltas;
  ctx.plot_script =
      "set datafile separator ','\nset key autotitle columnhead\nplot 'sweep_delta.csv' using 2:5 with lines\n";
}

inline void run_dispersion(RunContext& ctx) {
  if (!ctx.scenario.ladder) throw Error(ErrorKind::Validation, "[ladder] section is required for dispersion");
  const LadderSection& ls = *ctx.scenario.ladder;
  const LadderMixModel model = ls.build();
  auto [p_min, p_max] = default_dispersion_window(model);
  if (ls.p_min) p_min = *ls.p_min;
  if (ls.p_max) p_max = *ls.p_max;
  if (!(p_min > 0.0) || !(p_max > p_min))
    throw Error(ErrorKind::Validation, "ladder: need 0 < p_min < p_max");
  if (p_max > 1e-2 * model.coupling / std::abs(model.light_speed))
    throw Error(ErrorKind::Validation, "ladder.p_max: must be <= 1e-2 g / c_l");
  const DispersionFit fit = fit_dispersion_exponent(model, p_min, p_max, ls.n_samples, ls.angle);

  json j;
  j["N"] = fit.species;
  j["g"] = fit.coupling;
  j["c_l"] = fit.light_speed;
  j["exponent"] = fit.exponent;
  j["r_squared"] = fit.r_squared;
  j["window"] = {fit.p_min, fit.p_max};
  j["angle"] = fit.angle;
  auto jf = ctx.open("dispersion.json");
  jf << j.dump(2) << '\n';

  auto f = ctx.open("dispersion.csv");
  csv::write_header(f, std::vector<std::string>{"p", "E"});
  for (std::size_t i = 0; i < fit.momenta.size(); ++i)
    csv::write_row(f, std::vector<double>{fit.momenta[i], fit.energies[i]});
  ctx.plot_script =
      "set datafile separator ','\nset key autotitle columnhead\nset logscale xy\nplot 'dispersion.csv' using 1:2 "
      "with linespoints\n";
}

inline json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline json scenario_json(const Scenario& s) {
  json j = json::object();
  if (s.model) {
    const auto& m = *s.model;
    json jm;
    jm["n"] = m.n;
    jm["rho_form"] = m.form == RhoForm::Su2 ? "su2" : m.form == RhoForm::DoubleLayer ? "double_layer" : "explicit";
    const BlochModel built = m.build();
    jm["rho"] = std::vector<double>(built.rho().entries().begin(), built.rho().entries().end());
    jm["t_x"] = m.t_x;
    jm["t_y"] = m.t_y;
    if (!m.onsite_diag.empty()) jm["onsite_diag"] = m.onsite_diag;
    if (!m.onsite_h.empty()) {
      jm["onsite_h"] = json::array();
      for (const auto& h : m.onsite_h) jm["onsite_h"].push_back(vec3_json(h));
    }
    j["model"] = jm;
  }
  if (s.mixing) {
    const auto& m = *s.mixing;
    j["mixing"] = {{"theta12", m.pmns.theta12}, {"theta13", m.pmns.theta13}, {"theta23", m.pmns.theta23},
                   {"delta", m.pmns.delta},     {"h1", vec3_json(m.h[0])},   {"h2", vec3_json(m.h[1])},
                   {"h3", vec3_json(m.h[2])},   {"t_x", m.t_x},              {"t_y", m.t_y}};
  }
  if (s.ladder) {
    const auto& l = *s.ladder;
    j["ladder"] = {{"N", l.species}, {"g", l.coupling}, {"c_l", l.light_speed}, {"n_samples", l.n_samples},
                   {"angle", l.angle}};
  }
  return j;
}

}  // namespace runner_detail

/// Scenario embedded in a manifest written by `run`.
inline Scenario scenario_from_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open manifest '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, "manifest '" + path.string() + "': " + e.what());
  }
  if (!j.contains("scenario_text") || !j["scenario_text"].is_string())
    throw Error(ErrorKind::Validation, "manifest: missing scenario_text");
  return parse_scenario_text(j["scenario_text"].get<std::string>(), j.value("scenario_path", std::string()));
}

inline int run(std::string_view subcommand, const Scenario& scenario, const RunOptions& options = {},
               std::ostream& err = std::cerr) {
  using runner_detail::json;
  const auto start = std::chrono::steady_clock::now();
  try {
    if (std::find(kSubcommands.begin(), kSubcommands.end(), subcommand) == kSubcommands.end())
      throw Error(ErrorKind::Validation, "unknown subcommand '" + std::string(subcommand) + "'");
    if (scenario.run.subcommand && *scenario.run.subcommand != subcommand)
      throw Error(ErrorKind::Validation, "run.subcommand: scenario is for '" + *scenario.run.subcommand +
                                             "', not '" + std::string(subcommand) + "'");
    const std::filesystem::path out = options.out_dir ? *options.out_dir : std::filesystem::path(scenario.run.out);
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create output directory '" + out.string() + "': " + ec.message());

    runner_detail::RunContext ctx{scenario, out, std::max(1u, options.threads), json::array(), json::object(), {}};
    if (subcommand == "bands") runner_detail::run_bands(ctx);
    else if (subcommand == "dirac") runner_detail::run_dirac(ctx);
    else if (subcommand == "oscillate") runner_detail::run_oscillate(ctx);
    else if (subcommand == "sweep-direction") runner_detail::run_sweep_direction(ctx);
    else if (subcommand == "sweep-delta") runner_detail::run_sweep_delta(ctx);
    else runner_detail::run_dispersion(ctx);

    if (options.emit_plot_script) {
      auto f = ctx.open("plot.gp");
      f << ctx.plot_script;
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json manifest;
    manifest["tool"] = "conelab";
    manifest["version"] = std::string(kVersion);
    manifest["subcommand"] = std::string(subcommand);
    manifest["scenario_path"] = scenario.source_path;
    manifest["scenario_text"] = scenario.source_text;
    manifest["scenario"] = runner_detail::scenario_json(scenario);
    manifest["threads"] = ctx.threads;
    manifest["outputs"] = ctx.outputs;
    manifest["metadata"] = ctx.metadata;
    manifest["wall_time_seconds"] = wall;
    std::ofstream mf(out / "manifest.json", std::ios::binary);
    if (!mf) throw Error(ErrorKind::Io, "cannot write manifest");
    mf << manifest.dump(2) << '\n';
    return 0;
  } catch (const Error& e) {
    err << "conelab: error[" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return e.is_input_error() ? 1 : 2;
  } catch (const std::exception& e) {
    err << "conelab: error[internal]: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace conelab
