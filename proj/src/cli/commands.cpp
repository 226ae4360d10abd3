#include "tnt/cli/commands.hpp"

#include "tnt/metrology.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <ostream>

#ifndef TNT_VERSION
#define TNT_VERSION "0.0.0"
#endif

namespace tnt::cli {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Short decimal label for file and column names: 0.027 -> "0.027", 5 -> "5".
std::string label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

json optional_number(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

double qfi_along(const StateVector& psi, const Vec3& n) {
  const SpinMoments mom = spin_moments(psi);
  return 4.0 * n.dot(mom.covariance * n);
}

double squeezing_or_nan(const StateVector& psi) {
  try {
    return squeezing_gain(psi).gain;
  } catch (const std::domain_error&) {
    return kNaN;
  }
}

ProtocolSpec protocol_of(const RunConfig& cfg, Readout readout) {
  ProtocolSpec spec;
  spec.hamiltonian = hamiltonian_of(cfg);
  spec.t1 = cfg.t1;
  spec.readout = std::move(readout);
  spec.phi = cfg.phi.value_or(cfg.phi_eval);
  spec.generator_dir = cfg.generator;
  return spec;
}

// F_c of one encoded readout for several noise levels, in either basis mode.
std::vector<double> fisher_for_sigmas(const ProtocolRunner& runner, const Readout& readout,
                                      const std::vector<double>& sigmas, const RunConfig& cfg) {
  const SpinSystem& sys = runner.model().system();
  const EncodedState encoded = runner.encode(cfg.phi_eval, readout);
  std::vector<double> out;
  if (cfg.basis == BasisMode::fixed_sx) {
    const CMatrix sx = basis_matrix(sys, BasisSpec::sx());
    for (double s : sigmas) out.push_back(analytic_fisher(encoded, sx, NoiseKernel(sys.dim(), s)).value);
    return out;
  }
  const BasisOptimizer optimizer(sys, runner.generator_direction());
  const BasisOptimizer::Prepared prepared = optimizer.prepare(encoded);
  for (double s : sigmas) {
    out.push_back(optimizer.optimize(prepared, NoiseKernel(sys.dim(), s), cfg.search).fc);
  }
  return out;
}

json fig1(const RunConfig& cfg, OutputSet& out) {
  const SpinSystem sys(cfg.n_atoms);
  const Model tnt(HamiltonianSpec::twist_and_turn(sys, cfg.lambda));
  const Model oat(HamiltonianSpec::one_axis_twisting(sys));
  const StateVector psi0 = initial_state(sys);
  json panels = json::object();

  for (std::size_t i = 0; i < cfg.snapshot_times.size(); ++i) {
    const double t = cfg.snapshot_times[i];
    const StateVector psi(sys, tnt.evolution().apply(t, psi0.amplitudes()));
    const std::string stem = "fig1_q_" + std::to_string(i);
    out.qgrid(stem, husimi_q(psi, cfg.q_grid));
    panels[stem] = {{"chi_t", t}};
  }

  Table gain;
  gain.columns = {"chi_t", "fq_tnt_n", "fq_oat_n", "gain_tnt", "gain_oat", "heisenberg_n"};
  std::vector<std::vector<double>> rows(cfg.times.size());
  const double n = sys.n_atoms();
  for_each_index(static_cast<int>(rows.size()), Execution::parallel, [&](int i) {
    const double t = cfg.times[i];
    const StateVector a(sys, tnt.evolution().apply(t, psi0.amplitudes()));
    const StateVector b(sys, oat.evolution().apply(t, psi0.amplitudes()));
    rows[i] = {t, qfi_pure(a).value / n, qfi_pure(b).value / n, squeezing_or_nan(a),
               squeezing_or_nan(b), n};
  });
  for (auto& r : rows) gain.add_row(std::move(r));
  out.table("fig1_gain", gain);
  panels["fig1_gain"] = {{"lambda", cfg.lambda}};
  return panels;
}

json fig2(const RunConfig& cfg, OutputSet& out) {
  const Model model(hamiltonian_of(cfg));
  const SpinSystem& sys = model.system();
  const StateVector psi0 = initial_state(sys);
  json panels = json::object();

  for (const auto& [stem, echo] : {std::pair{"fig2_trivial", false}, {"fig2_echo", true}}) {
    Table table;
    table.columns = {"chi_t", "qfi"};
    for (double s : cfg.sigmas) table.columns.push_back("fc_sigma_" + label(s));
    table.columns.push_back("snl");
    std::vector<std::vector<double>> rows(cfg.times.size());
    for_each_index(static_cast<int>(rows.size()), Execution::parallel, [&](int i) {
      RunConfig point = cfg;
      point.t1 = cfg.times[i];
      const ProtocolRunner runner(model, protocol_of(point, Readout::none()), psi0);
      const Readout readout = echo ? Readout::echo(point.t1) : Readout::none();
      std::vector<double> row{point.t1, qfi_along(runner.prepared(), runner.generator_direction())};
      for (double fc : fisher_for_sigmas(runner, readout, cfg.sigmas, cfg)) row.push_back(fc);
      row.push_back(sys.n_atoms());
      rows[i] = std::move(row);
    });
    for (auto& r : rows) table.add_row(std::move(r));
    out.table(stem, table);
    panels[stem] = {{"readout", echo ? "echo" : "none"}, {"basis", to_string(cfg.basis)}};
  }
  return panels;
}

json fig3(const RunConfig& cfg, OutputSet& out) {
  const Model model(hamiltonian_of(cfg));
  const SpinSystem& sys = model.system();
  const ProtocolRunner runner(model, protocol_of(cfg, Readout::none()), initial_state(sys));
  const double dphi = cfg.phi.value_or(1.0 / (2.0 * std::sqrt(static_cast<double>(sys.n_atoms()))));
  const CMatrix sx = basis_matrix(sys, BasisSpec::sx());
  const NoiseKernel clean(sys.dim(), 0.0);
  const NoiseKernel noisy(sys.dim(), cfg.sigma);

  // Display frame: rotate about S_x so the generator becomes S_y. This does
  // not change S_x statistics.
  const Vec3 n = runner.generator_direction();
  const Operator display = rotation_operator(sys, Vec3::UnitX(), -std::atan2(n.z(), n.y()));

  json panels = json::object();
  json d_h2 = json::object();
  for (const auto& [name, readout] :
       {std::pair{std::string("trivial"), Readout::none()}, {"echo", Readout::echo(cfg.t1)}}) {
    std::vector<ProbDist> clean_p, noisy_p;
    for (int k = 0; k < 2; ++k) {
      const double phi = k == 0 ? 0.0 : dphi;
      const CVector psi = runner.encode(phi, readout).state;
      const std::string tag = name + (k == 0 ? "_phi0" : "_dphi");
      out.qgrid("fig3_q_" + tag, husimi_q(StateVector(sys, display.matrix() * psi), cfg.q_grid));
      const RVector p = outcome_probs(sx, psi);
      clean_p.emplace_back(sys.spin(), clean.apply(p), 0.0);
      noisy_p.emplace_back(sys.spin(), noisy.apply(p), cfg.sigma);
      Table probs;
      probs.columns = {"m", "p", "p_noisy"};
      for (int i = 0; i < sys.dim(); ++i) {
        probs.add_row({sys.m(i), clean_p[k][i], noisy_p[k][i]});
      }
      out.table("fig3_p_" + tag, probs);
      panels["fig3_q_" + tag] = {{"phi", phi}, {"readout", name}};
      panels["fig3_p_" + tag] = {{"phi", phi}, {"readout", name}, {"sigma", cfg.sigma}};
    }
    d_h2[name] = {{"noiseless", hellinger(clean_p[0], clean_p[1])},
                  {"noisy", hellinger(noisy_p[0], noisy_p[1])}};
  }
  out.json("fig3_hellinger", {{"N", sys.n_atoms()},
                              {"chi_t", cfg.t1},
                              {"phi", dphi},
                              {"sigma", cfg.sigma},
                              {"basis", "sx"},
                              {"d_h2", d_h2}});
  return panels;
}

json fig4(const RunConfig& cfg, OutputSet& out) {
  const SweepSettings settings = sweep_settings_of(cfg);
  json panels = json::object();
  json thresholds = json::object();
  for (double t1 : cfg.t1_values) {
    const SweepResult r = noise_sweep(settings, t1, cfg.sigmas);
    const std::string stem = "fig4_t1_" + label(t1);
    const std::vector<std::string> names{"fc_trivial", "fc_echo", "fc_asym", "fc_pseudo"};

    Table table;
    table.columns = {"sigma", "fc_trivial", "fc_echo", "fc_asym", "fc_pseudo", "qcrb", "snl"};
    Table detail;
    detail.columns = {"sigma", "asym_ratio"};
    for (const auto& name : names) {
      detail.columns.push_back("plane_" + name.substr(3));
      detail.columns.push_back("angle_" + name.substr(3));
    }
    for (std::size_t i = 0; i < r.axis.size(); ++i) {
      std::vector<double> row{r.axis[i]};
      std::vector<double> extra{r.axis[i], r.at("fc_asym").ratio[i]};
      for (const auto& name : names) {
        const SweepSeries& s = r.at(name);
        row.push_back(s.fc[i]);
        extra.push_back(s.plane[i]);
        extra.push_back(s.angle[i]);
      }
      row.push_back(r.qcrb[i]);
      row.push_back(r.snl);
      table.add_row(std::move(row));
      detail.add_row(std::move(extra));
    }
    out.table(stem, table);
    out.table(stem + "_basis", detail);
    panels[stem] = {{"t1", t1}, {"basis", to_string(cfg.basis)}};
    panels[stem + "_basis"] = {{"t1", t1}};

    json crossing = json::object();
    for (const auto& name : names) {
      crossing[name.substr(3)] = optional_number(snl_crossing(r.axis, r.at(name).fc, r.snl));
    }
    thresholds[label(t1)] = crossing;
  }
  out.json("fig4_thresholds", {{"snl", cfg.n_atoms}, {"sigma_star", thresholds}});
  return panels;
}

json fig5(const RunConfig& cfg, OutputSet& out) {
  const SweepSettings settings = sweep_settings_of(cfg);
  json panels = json::object();
  for (double t1 : cfg.t1_values) {
    std::vector<SweepResult> results;
    for (double s : cfg.sigmas) results.push_back(echo_time_sweep(settings, t1, cfg.ratios, NoiseModel{s}));
    Table table;
    table.columns = {"ratio"};
    for (double s : cfg.sigmas) table.columns.push_back("fc_sigma_" + label(s));
    table.columns.insert(table.columns.end(), {"qcrb", "snl"});
    for (std::size_t i = 0; i < cfg.ratios.size(); ++i) {
      std::vector<double> row{cfg.ratios[i]};
      for (const auto& r : results) row.push_back(r.at("fc").fc[i]);
      row.push_back(results.front().qcrb[i]);
      row.push_back(results.front().snl);
      table.add_row(std::move(row));
    }
    const std::string stem = "fig5_t1_" + label(t1);
    out.table(stem, table);
    panels[stem] = {{"t1", t1}, {"basis", to_string(cfg.basis)}};
  }
  return panels;
}

json fig6(const RunConfig& cfg, OutputSet& out) {
  const SweepSettings settings = sweep_settings_of(cfg);
  std::vector<SweepResult> results;
  for (double s : cfg.sigmas) {
    results.push_back(budget_sweep(settings, cfg.total_time, cfg.t1_grid, NoiseModel{s}));
  }
  Table table;
  table.columns = {"t1"};
  for (double s : cfg.sigmas) table.columns.push_back("fc_sigma_" + label(s));
  table.columns.insert(table.columns.end(), {"qcrb", "snl"});
  for (std::size_t i = 0; i < cfg.t1_grid.size(); ++i) {
    std::vector<double> row{cfg.t1_grid[i]};
    for (const auto& r : results) row.push_back(r.at("fc").fc[i]);
    row.push_back(results.front().qcrb[i]);
    row.push_back(results.front().snl);
    table.add_row(std::move(row));
  }
  out.table("fig6", table);
  return json{{"fig6", {{"total_time", cfg.total_time}, {"basis", to_string(cfg.basis)}}}};
}

}  // namespace

json cmd_fig(const RunConfig& cfg, OutputSet& out) {
  if (cfg.preset == "fig1") return fig1(cfg, out);
  if (cfg.preset == "fig2") return fig2(cfg, out);
  if (cfg.preset == "fig3") return fig3(cfg, out);
  if (cfg.preset == "fig4") return fig4(cfg, out);
  if (cfg.preset == "fig5") return fig5(cfg, out);
  if (cfg.preset == "fig6") return fig6(cfg, out);
  throw ConfigError("unknown preset '" + cfg.preset + "'");
}

json cmd_run(const RunConfig& cfg, OutputSet& out) {
  const ProtocolSpec spec = protocol_of(cfg, readout_of(cfg));
  const Model model(spec.hamiltonian);
  const SpinSystem& sys = model.system();
  const ProtocolRunner runner(model, spec, initial_state(sys));
  const NoiseKernel kernel(sys.dim(), cfg.sigma);

  json basis_info;
  CMatrix basis;
  if (cfg.measurement == "optimized") {
    const BasisOptimizer optimizer(sys, runner.generator_direction());
    const BasisOptimum best =
        optimizer.optimize(optimizer.prepare(runner.encode(cfg.phi_eval)), kernel, cfg.search);
    basis = basis_matrix(sys, best.basis);
    basis_info = {{"kind", "optimized"},
                  {"direction", {best.direction.x(), best.direction.y(), best.direction.z()}},
                  {"plane", best.winner},
                  {"angle", best.planes[best.winner].angle}};
  } else {
    basis = basis_matrix(sys, cfg.measurement == "sz" ? BasisSpec::sz() : BasisSpec::sx());
    basis_info = {{"kind", cfg.measurement}};
  }

  const FisherResult analytic = classical_fisher(runner, basis, kernel, cfg.phi_eval);
  const FisherResult fd =
      classical_fisher(runner, basis, kernel, cfg.phi_eval, FisherMethod::finite_difference);
  const StateVector& prepared = runner.prepared();
  const Vec3 mean = mean_spin(prepared);
  const Vec3 n = runner.generator_direction();

  json squeezing = nullptr;
  try {
    const SqueezingResult sq = squeezing_gain(prepared);
    squeezing = {{"xi2", sq.xi2}, {"gain", sq.gain}};
  } catch (const std::domain_error&) {
  }

  const double phi = spec.phi;
  const RVector p = outcome_probs(basis, runner.encode(phi).state);
  Table probs;
  probs.columns = {"m", "p", "p_noisy"};
  const RVector noisy = kernel.apply(p);
  for (int k = 0; k < sys.dim(); ++k) probs.add_row({sys.m(k), p(k), noisy(k)});
  out.table("run_probs", probs);

  if (cfg.husimi) out.qgrid("run_q", husimi_q(runner.final_state(phi), cfg.q_grid));

  out.json("run_summary", {{"N", sys.n_atoms()},
                           {"t1", cfg.t1},
                           {"readout", cfg.readout},
                           {"sigma", cfg.sigma},
                           {"phi", phi},
                           {"phi_eval", cfg.phi_eval},
                           {"generator", {n.x(), n.y(), n.z()}},
                           {"qfi", qfi_along(prepared, n)},
                           {"fc_analytic", analytic.value},
                           {"fc_finite_difference", fd.value},
                           {"dropped_terms", analytic.dropped_terms},
                           {"dropped_mass", analytic.dropped_mass},
                           {"near_parity_zero", analytic.near_parity_zero()},
                           {"squeezing", squeezing},
                           {"mean_spin", {mean.x(), mean.y(), mean.z()}},
                           {"measurement", basis_info}});
  return json::object();
}

bool cmd_certify(const RunConfig& cfg, std::ostream& report) {
  if (cfg.measurement == "optimized") {
    throw ConfigError("config key 'measurement': certify needs sx or sz");
  }
  const ProtocolSpec spec = protocol_of(cfg, readout_of(cfg));
  const Model model(spec.hamiltonian);
  const SpinSystem& sys = model.system();
  const ProtocolRunner runner(model, spec, initial_state(sys));
  const BasisSpec basis = cfg.measurement == "sz" ? BasisSpec::sz() : BasisSpec::sx();
  const ParityReport r = check_parity_conditions(runner.prepared(), runner.generator(),
                                                 runner.readout_operator(), basis);
  auto line = [&](const char* name, const ParityCheck& c) {
    report << std::left << std::setw(40) << name << (c.holds ? "PASS" : "FAIL")
           << "  residual=" << std::scientific << std::setprecision(3) << c.residual << '\n';
  };
  line("condition 1: state has parity", r.state_parity);
  line("condition 2: generator flips parity", r.generator_flip);
  line("condition 3: readout conserves parity", r.readout_conserves);
  report << (r.all() ? "certified" : "not certified") << '\n';
  return r.all();
}

json manifest(const std::string& command, const RunConfig& cfg, const OutputSet& out,
              const json& panels) {
  return {{"tool", "tntsim"},
          {"version", TNT_VERSION},
          {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION)},
          {"command", command},
          {"config", to_json(cfg)},
          {"config_hash", out.hash()},
          {"files", out.files()},
          {"panels", panels}};
}

namespace {

struct Flags {
  std::string preset;
  std::string config;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<std::string> basis;
  std::optional<int> threads;
  std::optional<int> n_atoms;
  std::optional<std::string> lambda;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--basis", f.basis, "measurement basis")
      ->check(CLI::IsMember({"fixed", "optimized"}));
  cmd->add_option("--threads", f.threads, "OpenMP threads (0: default)");
  cmd->add_option("--N", f.n_atoms, "number of atoms");
  cmd->add_option("--lambda", f.lambda, "Lambda = N chi / J (or inf)");
}

RunConfig resolve(const std::string& command, const Flags& f) {
  RunConfig cfg;
  if (command == "fig") {
    if (f.preset.empty()) throw ConfigError("fig needs a preset (fig1..fig6)");
    apply_json(cfg, preset_defaults(f.preset));
  } else if (f.config.empty()) {
    throw ConfigError(command + " needs --config <path>");
  }
  if (!f.config.empty()) apply_json(cfg, load_config_file(f.config));
  if (command == "fig" && cfg.preset != f.preset) {
    throw ConfigError("config key 'preset': conflicts with the requested preset");
  }
  json flags = json::object();
  if (f.out) flags["out"] = *f.out;
  if (f.format) flags["format"] = *f.format;
  if (f.threads) flags["threads"] = *f.threads;
  if (f.n_atoms) flags["N"] = *f.n_atoms;
  if (f.lambda) {
    if (*f.lambda == "inf") {
      flags["lambda"] = "inf";
    } else {
      try {
        flags["lambda"] = std::stod(*f.lambda);
      } catch (const std::exception&) {
        throw ConfigError("--lambda: expected a number or inf");
      }
    }
  }
  if (f.basis) {
    if (command == "fig") {
      flags["basis"] = *f.basis;
    } else {
      flags["measurement"] = *f.basis == "fixed" ? "sx" : "optimized";
    }
  }
  apply_json(cfg, flags);
  if (command != "fig" && !cfg.preset.empty()) {
    throw ConfigError("config key 'preset': only valid for the fig command");
  }
  validate(cfg);
  return cfg;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Twist-and-turn interferometry simulator", "tntsim"};
  app.require_subcommand(1);
  Flags fig_flags, run_flags, certify_flags;
  CLI::App* fig = app.add_subcommand("fig", "reproduce a figure preset");
  fig->add_option("preset,--preset", fig_flags.preset, "fig1..fig6");
  add_common(fig, fig_flags);
  CLI::App* run = app.add_subcommand("run", "evaluate a single protocol");
  add_common(run, run_flags);
  CLI::App* certify = app.add_subcommand("certify", "check the parity conditions");
  add_common(certify, certify_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kConfigError;
  }

  const std::string command = fig->parsed() ? "fig" : run->parsed() ? "run" : "certify";
  const Flags& flags = fig->parsed() ? fig_flags : run->parsed() ? run_flags : certify_flags;

  RunConfig cfg;
  try {
    cfg = resolve(command, flags);
  } catch (const ConfigError& e) {
    err << "tntsim: " << e.what() << '\n';
    return kConfigError;
  }
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);

  if (command == "certify") {
    try {
      return cmd_certify(cfg, out) ? kSuccess : kComputationFailure;
    } catch (const ConfigError& e) {
      err << "tntsim: " << e.what() << '\n';
      return kConfigError;
    } catch (const std::exception& e) {
      err << "tntsim: certify failed: " << e.what() << '\n';
      return kComputationFailure;
    }
  }

  std::optional<OutputSet> outputs;
  try {
    outputs.emplace(cfg.out, cfg.format, config_hash(cfg));
    const json panels = command == "fig" ? cmd_fig(cfg, *outputs) : cmd_run(cfg, *outputs);
    const json m = manifest(command, cfg, *outputs, panels);
    outputs->json("manifest", m);
  } catch (const std::exception& e) {
    if (outputs) outputs->rollback();
    const bool config = dynamic_cast<const ConfigError*>(&e) != nullptr;
    err << "tntsim: " << (config ? "" : "computation failed: ") << e.what() << '\n';
    return config ? kConfigError : kComputationFailure;
  }
  out << "wrote " << outputs->files().size() << " files to " << outputs->dir().string() << '\n';
  return kSuccess;
}

}  // namespace tnt::cli
