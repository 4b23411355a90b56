// epiwb: command-line front end for the epidemic workbench.
#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "epi/baselines/abm.hpp"
#include "epi/baselines/gsir.hpp"
#include "epi/calibration/calibration.hpp"
#include "epi/core/io.hpp"
#include "epi/data/dataset.hpp"
#include "epi/env/environment.hpp"
#include "epi/env/scenario_io.hpp"
#include "epi/pareto/pareto.hpp"
#include "epi/pcn/agent.hpp"
#include "epi/service/http.hpp"
#include "epi/service/replay.hpp"

// after Eigen: the resolver header defines a macro that collides with Eigen parameter names
#include <httplib.h>

using namespace epi;
using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

InterventionLevels parse_levels(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 3) throw CLI::ValidationError("--action", "expected c,v,q");
  InterventionLevels a{std::stoi(parts[0]), std::stoi(parts[1]), std::stoi(parts[2])};
  if (!a.valid()) throw CLI::ValidationError("--action", "levels must be in 0..10");
  return a;
}

// Writes to a file, or to stdout when the path is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  std::cerr << "wrote " << path << '\n';
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

httplib::Server* g_server = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Epidemic intervention workbench: simulator, calibration, Pareto fronts, PCN agents, service"};
  app.require_subcommand(1);

  // ingest
  std::string policy_path, outcomes_path, stats_path, mapping_path, dataset_out = "dataset.csv.gz";
  auto* ingest = app.add_subcommand("ingest", "Merge policy, outcome and country tables into one dataset");
  ingest->add_option("--policy", policy_path, "OxCGRT-style policy CSV (optionally .gz)")->required();
  ingest->add_option("--outcomes", outcomes_path, "OWID-style outcomes CSV (optionally .gz)")->required();
  ingest->add_option("--stats", stats_path, "Country table with land area and population")->required();
  ingest->add_option("--mapping", mapping_path, "Column mapping JSON (default: built-in OxCGRT/OWID layout)");
  ingest->add_option("-o,--out", dataset_out, "Output dataset (.csv.gz)");

  // calibrate sigma
  std::string dataset_path, grid_text = "0.010:0.029:0.001", out_path;
  int runs = 10;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  auto* calibrate = app.add_subcommand("calibrate", "Fit model parameters to data");
  calibrate->require_subcommand(1);
  auto* sigma = calibrate->add_subcommand("sigma", "K-S grid search for the transmission rate");
  sigma->add_option("--dataset", dataset_path, "Merged dataset from `ingest`")->required();
  sigma->add_option("--grid", grid_text, "lo:hi:step");
  sigma->add_option("--runs", runs, "Simulated epidemics per grid value");
  sigma->add_option("--seed", seed);
  sigma->add_option("--threads", threads, "0 = all cores");
  sigma->add_option("-o,--out", out_path, "CSV output (default stdout)");

  // validate
  std::string simulators_text = "sde", countries_text = "UK,US,IT";
  int replay_days = 100;
  auto* validate = app.add_subcommand("validate", "Relative AUC error of replayed country trajectories");
  validate->add_option("--dataset", dataset_path)->required();
  validate->add_option("--simulator", simulators_text, "Comma list of sde, abm, gsir");
  validate->add_option("--countries", countries_text, "Comma list of names or ISO-3 codes");
  validate->add_option("--runs", runs);
  validate->add_option("--seed", seed);
  validate->add_option("--days", replay_days, "Replay length from the first case");
  validate->add_option("-o,--out", out_path);

  // replay
  std::string country = "UK", simulator_text = "sde";
  auto* replay = app.add_subcommand("replay", "Overlay series of one country (observed plus every run) as JSON");
  replay->add_option("--dataset", dataset_path)->required();
  replay->add_option("--country", country);
  replay->add_option("--simulator", simulator_text);
  replay->add_option("--runs", runs);
  replay->add_option("--seed", seed);
  replay->add_option("--days", replay_days);
  replay->add_option("-o,--out", out_path);

  // sensitivity
  std::string table = "params";
  auto* sensitivity = app.add_subcommand("sensitivity", "One-at-a-time parameter and intervention sweeps");
  sensitivity->add_option("--dataset", dataset_path)->required();
  sensitivity->add_option("--country", country, "Reference trajectory");
  sensitivity->add_option("--table", table, "params | strengths | all")
      ->check(CLI::IsMember({"params", "strengths", "all"}));
  sensitivity->add_option("--runs", runs);
  sensitivity->add_option("--seed", seed);
  sensitivity->add_option("--days", replay_days);
  sensitivity->add_option("-o,--out", out_path);

  // baseline
  int horizon = 50, grid_length = 50;
  std::string lengths_text = "10,20,30,40,50,60,70,80,90,100";
  double beta1 = 0.3;
  auto* baseline = app.add_subcommand("baseline", "Run the comparison simulators");
  baseline->require_subcommand(1);
  auto* gsir = baseline->add_subcommand("gsir", "Generalized SIR series (CSV)");
  gsir->add_option("--beta1", beta1);
  gsir->add_option("--horizon", horizon);
  gsir->add_option("--seed", seed);
  gsir->add_option("-o,--out", out_path);
  auto* abm = baseline->add_subcommand("abm", "Agent-based grid series (CSV), or init runtime with --runtime");
  bool runtime = false;
  abm->add_option("--length", grid_length, "Grid side L");
  abm->add_option("--horizon", horizon);
  abm->add_option("--seed", seed);
  abm->add_flag("--runtime", runtime, "Time world initialization over --lengths instead");
  abm->add_option("--lengths", lengths_text);
  abm->add_option("-o,--out", out_path);

  // simulate
  std::string scenario = "covid_uk", action_text = "0,0,0";
  bool deterministic = false;
  auto* simulate_cmd = app.add_subcommand("simulate", "Roll out a constant intervention (CSV)");
  simulate_cmd->add_option("--scenario", scenario, "Preset id or scenario JSON file");
  simulate_cmd->add_option("--action", action_text, "c,v,q");
  simulate_cmd->add_option("--seed", seed);
  simulate_cmd->add_flag("--deterministic", deterministic);
  simulate_cmd->add_option("-o,--out", out_path);

  // presets
  std::string presets_dir = "presets";
  auto* presets_cmd = app.add_subcommand("presets", "Write the built-in scenarios, model config and column mapping as JSON");
  presets_cmd->add_option("-o,--out", presets_dir, "Output directory");

  // front
  std::string format = "json";
  int levels = kLevelsPerChannel, seeds = 5;
  auto* front = app.add_subcommand("front", "Reference Pareto front of constant policies");
  front->add_option("--scenario", scenario, "Preset id or scenario JSON file");
  front->add_flag("--deterministic", deterministic, "Zero diffusion (default averages --seeds episodes)");
  front->add_option("--seeds", seeds);
  front->add_option("--levels", levels, "Levels per channel (2..11)");
  front->add_option("--seed", seed);
  front->add_option("--format", format)->check(CLI::IsMember({"json", "csv"}));
  front->add_option("-o,--out", out_path);

  // train
  std::string checkpoints = "checkpoints", log_path;
  auto train_cfg = service::experiment_train_config();
  auto* train = app.add_subcommand("train", "Train a PCN agent and store its checkpoint");
  train->add_option("--scenario", scenario, "Preset id or scenario JSON file");
  train->add_option("--checkpoints", checkpoints, "Checkpoint directory");
  train->add_option("--iterations", train_cfg.iterations);
  train->add_option("--lr", train_cfg.learning_rate);
  train->add_option("--batch", train_cfg.batch_size);
  train->add_option("--buffer", train_cfg.buffer_capacity);
  train->add_option("--seed", train_cfg.seed);
  train->add_option("--log", log_path, "Training log CSV");
  train->add_flag("-v,--verbose", train_cfg.verbose);

  // experiment
  std::string experiment_id, artifacts = "artifacts", params_text = "{}";
  bool no_train = false;
  auto* experiment = app.add_subcommand("experiment", "Run a named experiment and write its artifact bundle");
  experiment->add_option("id", experiment_id, "Experiment id")->required()->check(CLI::IsMember(service::experiment_ids()));
  experiment->add_option("--seed", seed);
  experiment->add_option("--checkpoints", checkpoints);
  experiment->add_option("--out", artifacts, "Artifact root; the bundle goes to <out>/<id>");
  experiment->add_option("--params", params_text, "JSON object, e.g. {\"runs\": 10}");
  experiment->add_flag("--no-train", no_train, "Fail instead of training missing agents");

  // serve
  int port = 8080;
  std::string host = "127.0.0.1", sessions_dir;
  bool allow_train = false;
  auto* serve = app.add_subcommand("serve", "HTTP/JSON service for sessions, fronts and experiments");
  serve->add_option("--port", port);
  serve->add_option("--host", host);
  serve->add_option("--checkpoints", checkpoints);
  serve->add_option("--sessions", sessions_dir, "Session log directory (enables restart recovery)");
  serve->add_option("--artifacts", artifacts);
  serve->add_flag("--allow-train", allow_train, "Train missing agents on demand");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) {
      const auto mapping = mapping_path.empty() ? data::Mapping::oxcgrt_owid()
                                                : data::Mapping::from_json(json::parse(std::ifstream(mapping_path)));
      const auto ds = data::load_merge(policy_path, outcomes_path, stats_path, mapping);
      for (const auto& w : ds.warnings) std::cerr << "warning: " << w << '\n';
      data::write_dataset(dataset_out, ds);
      std::cerr << "merged " << ds.rows.size() << " rows for " << ds.countries().size() << " countries into "
                << dataset_out << '\n';
    } else if (sigma->parsed()) {
      const auto g = split(grid_text, ':');
      if (g.size() != 3) throw CLI::ValidationError("--grid", "expected lo:hi:step");
      const auto grid = calibration::make_grid(std::stod(g[0]), std::stod(g[1]), std::stod(g[2]));
      const auto ds = data::read_dataset(dataset_path);
      const auto real = data::growth_rate_distribution(data::extract_growth_windows(ds));
      calibration::GrowthSimConfig cfg;
      cfg.runs = runs;
      cfg.seed = seed;
      const auto result = calibration::sigma_grid_search(real, grid, cfg, presets::covid(), threads);
      std::ostringstream csv;
      csv << "sigma,D,p_value,n_sim,n_real\n";
      for (const auto& r : result.rows)
        csv << fmt(r.sigma) << ',' << fmt(r.ks.statistic) << ',' << fmt(r.ks.p_value) << ',' << r.ks.n_a << ','
            << r.ks.n_b << '\n';
      emit(out_path, csv.str());
      std::cerr << "best sigma " << result.best_sigma << " (" << real.size() << " real growth rates)\n";
    } else if (validate->parsed()) {
      const auto ds = data::read_dataset(dataset_path);
      std::vector<calibration::SimulatorId> sims;
      for (const auto& s : split(simulators_text, ',')) sims.push_back(calibration::simulator_from_name(s));
      std::vector<std::string> codes;
      for (const auto& c : split(countries_text, ',')) codes.push_back(service::country_code(c));
      calibration::ReplayOptions opts;
      opts.days = replay_days;
      const auto rows = calibration::validate_countries(ds, sims, codes, runs, seed, opts);
      std::ostringstream csv;
      csv << "country,simulator,mean_relative_auc_error,runs,flagged,note\n";
      for (const auto& r : rows)
        csv << r.country << ',' << calibration::simulator_name(r.simulator) << ',' << fmt(r.mean_error) << ','
            << r.runs << ',' << (r.flagged ? 1 : 0) << ',' << data::csv_escape(r.note) << '\n';
      emit(out_path, csv.str());
    } else if (replay->parsed()) {
      const auto ds = data::read_dataset(dataset_path);
      calibration::ReplayOptions opts;
      opts.days = replay_days;
      const auto j = service::replay_country(ds, country, calibration::simulator_from_name(simulator_text), runs,
                                             seed, opts);
      emit(out_path, j.dump(2) + "\n");
    } else if (sensitivity->parsed()) {
      const auto ds = data::read_dataset(dataset_path);
      calibration::ReplayOptions opts;
      opts.days = replay_days;
      const auto input = calibration::make_replay_input(ds, service::country_code(country), opts);
      const auto rows =
          calibration::sensitivity_sweep(calibration::sensitivity_base_profile(), input, {}, runs, seed, opts);
      const bool params_only = table == "params", strengths_only = table == "strengths";
      std::ostringstream csv;
      csv << "name,value,mean_relative_auc_error\n";
      for (const auto& r : rows) {
        const bool is_param = r.name == "mu" || r.name == "beta" || r.name == "delta" || r.name == "phi" ||
                              r.name == "rho";
        if ((params_only && !is_param) || (strengths_only && is_param)) continue;
        csv << r.name << ',' << fmt(r.value) << ',' << fmt(r.mean_error) << '\n';
      }
      emit(out_path, csv.str());
    } else if (gsir->parsed()) {
      const auto p = baselines::GsirParams::linear(beta1);
      Rng rng(seed);
      const auto series =
          baselines::gsir_simulate(p, [](int) { return 1; }, horizon, baselines::GsirState::initial(68000, 1000), rng);
      std::ostringstream csv;
      csv << "t,s,i,r,new_infections\n";
      for (std::size_t t = 0; t < series.states.size(); ++t) {
        const auto& s = series.states[t];
        csv << t << ',' << s.s << ',' << s.i << ',' << s.r << ','
            << (t == 0 ? 0 : series.new_infections[t - 1]) << '\n';
      }
      emit(out_path, csv.str());
    } else if (abm->parsed()) {
      baselines::AbmConfig cfg;
      std::ostringstream csv;
      if (runtime) {
        std::vector<int> lengths;
        for (const auto& l : split(lengths_text, ',')) lengths.push_back(std::stoi(l));
        const auto fit = baselines::abm_init_runtime(cfg, lengths, 3, seed);
        csv << "length,population,seconds\n";
        for (std::size_t k = 0; k < fit.lengths.size(); ++k) {
          auto c = cfg;
          c.grid_length = fit.lengths[k];
          csv << fit.lengths[k] << ',' << c.population() << ',' << fmt(fit.seconds[k]) << '\n';
        }
        std::cerr << "power-law exponent " << fit.power_exponent << "; quadratic " << fit.quadratic[0] << " + "
                  << fit.quadratic[1] << " L + " << fit.quadratic[2] << " L^2\n";
      } else {
        cfg.grid_length = grid_length;
        const auto r = baselines::abm_run(cfg, [](int) { return InterventionLevels{}; }, horizon, seed);
        csv << "day,new_infections,new_cases,susceptible,incubating,infectious,recovered,dead\n";
        int day = 1;
        for (const auto& d : r.days)
          csv << day++ << ',' << d.new_infections << ',' << d.new_cases << ',' << d.susceptible << ','
              << d.incubating << ',' << d.infectious << ',' << d.recovered << ',' << d.dead << '\n';
      }
      emit(out_path, csv.str());
    } else if (simulate_cmd->parsed()) {
      auto spec = env::load_scenario(scenario);
      spec.deterministic = spec.deterministic || deterministic;
      const auto traj = env::rollout(spec, constant_policy(parse_levels(action_text)), seed);
      std::ostringstream csv;
      write_trajectory_csv(csv, traj);
      emit(out_path, csv.str());
    } else if (presets_cmd->parsed()) {
      std::filesystem::create_directories(presets_dir);
      const std::filesystem::path dir(presets_dir);
      for (const auto& id : env::scenarios::ids())
        std::ofstream(dir / (id + ".json")) << json(env::scenarios::by_id(id)).dump(2) << '\n';
      std::ofstream(dir / "model_covid.json") << model_config_to_json({presets::covid(), SimConfig{}}).dump(2) << '\n';
      std::ofstream(dir / "mapping_oxcgrt_owid.json") << data::Mapping::oxcgrt_owid().to_json().dump(2) << '\n';
      std::cerr << "wrote " << env::scenarios::ids().size() + 2 << " files to " << presets_dir << '\n';
    } else if (front->parsed()) {
      const auto spec = env::load_scenario(scenario);
      pareto::ReferenceFrontOptions opts;
      opts.deterministic = deterministic;
      opts.seeds = seeds;
      opts.base_seed = seed;
      opts.levels_per_channel = levels;
      const auto f = pareto::reference_front(spec, opts);
      emit(out_path, format == "csv" ? pareto::front_to_csv(f) : pareto::front_to_json(f).dump(2) + "\n");
    } else if (train->parsed()) {
      const auto spec = env::load_scenario(scenario);
      const auto f = pareto::reference_front(spec, service::seeding_front_options(train_cfg.seed));
      const auto result = pcn::train(spec, train_cfg, f);
      std::filesystem::create_directories(checkpoints);
      result.agent.save(service::AgentStore::agent_path(checkpoints, spec.id).string());
      std::ofstream(service::AgentStore::front_path(checkpoints, spec.id)) << pareto::front_to_json(f).dump(2)
                                                                            << '\n';
      if (!log_path.empty()) emit(log_path, pcn::train_log_csv(result.log));
      std::cerr << "saved " << service::AgentStore::agent_path(checkpoints, spec.id).string() << " (final loss "
                << (result.log.empty() ? 0.0 : result.log.back().loss) << ")\n";
    } else if (experiment->parsed()) {
      service::AgentStore store(std::filesystem::path(checkpoints), service::experiment_train_config(), !no_train);
      const auto bundle = service::run_experiment({experiment_id, seed, json::parse(params_text)}, store);
      const auto dir = std::filesystem::path(artifacts) / experiment_id;
      bundle.write(dir);
      std::cout << bundle.summary.dump(2) << '\n';
      std::cerr << "artifacts in " << dir.string() << '\n';
    } else if (serve->parsed()) {
      service::ServiceOptions opts;
      opts.checkpoint_dir = checkpoints;
      if (!sessions_dir.empty()) opts.session_log_dir = sessions_dir;
      opts.artifact_dir = artifacts;
      opts.allow_train = allow_train;
      service::Service svc(opts);
      httplib::Server server;
      svc.mount(server);
      g_server = &server;
      std::signal(SIGINT, [](int) {
        if (g_server) g_server->stop();
      });
      std::cerr << "listening on http://" << host << ':' << port << " (" << svc.sessions().size()
                << " sessions restored)\n";
      if (!server.listen(host, port)) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
