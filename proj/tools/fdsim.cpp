// fdsim: scenario generation, single runs, capacity-reduction sweeps and reports.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fdsim/corpus.hpp"
#include "fdsim/experiment.hpp"
#include "fdsim/report.hpp"
#include "fdsim/results.hpp"
#include "fdsim/scenario_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct EngineFlags {
  std::string rs_mode = "stable";
  std::string capacity_mode = "uniform";
  std::string failure_norm = "rule-slots";
};

void add_engine_flags(CLI::App* app, fdsim::ExperimentConfig& c, EngineFlags& f) {
  app->add_option("--horizon", c.horizon, "Slots per decision horizon")->capture_default_str();
  app->add_option("--w-table", c.weights.table, "Cost weight of table overhead")->capture_default_str();
  app->add_option("--w-link", c.weights.link, "Cost weight of link overhead")->capture_default_str();
  app->add_option("--w-ctrl", c.weights.ctrl, "Cost weight of control overhead")->capture_default_str();
  app->add_flag("--normalize-weights", c.weights.normalize, "Divide each cost class by its largest coefficient");
  app->add_option("--greedy-upper", c.greedy.upper, "Greedy selection threshold, fraction of capacity")
      ->capture_default_str();
  app->add_option("--greedy-lower", c.greedy.lower, "Greedy release threshold, fraction of capacity")
      ->capture_default_str();
  app->add_option("--rs-mode", f.rs_mode, "Remote assignment mode")
      ->check(CLI::IsMember({"stable", "full"}))
      ->capture_default_str();
  app->add_option("--capacity-mode", f.capacity_mode, "How a reduction sets switch capacities")
      ->check(CLI::IsMember({"uniform", "per-switch"}))
      ->capture_default_str();
  app->add_option("--failure-norm", f.failure_norm, "Failure-rate normalization")
      ->check(CLI::IsMember({"rule-slots", "rule-count"}))
      ->capture_default_str();
  app->add_flag("--verify", c.verify, "Check rule census and capacities every slot");
}

void apply_engine_flags(fdsim::ExperimentConfig& c, const EngineFlags& f) {
  c.rs_mode = fdsim::parse_assignment_mode(f.rs_mode);
  c.capacity_mode = fdsim::parse_capacity_mode(f.capacity_mode);
  c.failure_normalization = fdsim::parse_failure_normalization(f.failure_norm);
}

std::vector<fdsim::Algorithm> parse_algorithms(const std::vector<std::string>& names) {
  std::vector<fdsim::Algorithm> out;
  for (const auto& n : names) out.push_back(fdsim::parse_algorithm(n));
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- generate

struct GenerateArgs {
  std::string out;
  int count = 1;
  std::uint64_t seed = 1;
  std::string params;  // optional JSON {"topology": {...}, "params": {...}}, merged over defaults
  bool print_config = false;
};

int cmd_generate(const GenerateArgs& a) {
  if (a.count < 0) throw std::invalid_argument("count must be >= 0");
  json fixed;
  if (!a.params.empty()) {
    const json user = json::parse(slurp(a.params));
    fixed = {{"topology", fdsim::io::to_json(fdsim::TopologyParams{})},
             {"params", fdsim::io::to_json(fdsim::ScenarioParams{})}};
    fixed.merge_patch(user);
  }
  if (a.print_config) {
    json cfg = {{"out", a.out}, {"count", a.count}, {"seed", a.seed}, {"params_file", a.params}};
    if (!fixed.is_null()) cfg["fixed"] = fixed;
    std::cout << cfg.dump(2) << "\n";
    return 0;
  }
  if (a.out.empty()) throw std::invalid_argument("--out is required");
  fs::create_directories(a.out);
  const fdsim::CorpusRanges ranges;
  for (int i = 0; i < a.count; ++i) {
    fdsim::Scenario sc;
    if (fixed.is_null()) {
      sc = fdsim::generate_corpus_scenario(ranges, a.seed, i);
    } else {
      const auto seed = fdsim::derive_seed(a.seed, 1000 + static_cast<std::uint64_t>(i));
      sc = fdsim::generate_scenario(fdsim::io::topology_params_from_json(fixed.at("topology")),
                                    fdsim::io::params_from_json(fixed.at("params")), seed);
    }
    char name[32];
    std::snprintf(name, sizeof name, "scenario-%05d.json", i);
    fdsim::save_scenario(sc, (fs::path(a.out) / name).string());
    std::cout << name << " seed=" << sc.seed << " switches=" << sc.topology.num_switches()
              << " rules=" << sc.rules.size() << "\n";
  }
  return 0;
}

// ---- run

struct RunArgs {
  std::string scenario;
  std::string algorithm = "heuristic";
  double reduction = -1.0;  // keep the file's capacities when negative
  bool print_config = false;
};

int cmd_run(fdsim::ExperimentConfig c, const EngineFlags& f, const RunArgs& a) {
  apply_engine_flags(c, f);
  c.scenarios = {a.scenario};
  c.algorithms = {fdsim::parse_algorithm(a.algorithm)};
  if (a.reduction >= 0.0) c.grid = {a.reduction};
  if (a.print_config) {
    std::cout << fdsim::config_to_json(c).dump(2) << "\n";
    return 0;
  }
  c.validate();
  if (!fs::exists(a.scenario)) throw std::runtime_error("scenario file '" + a.scenario + "' does not exist");
  fdsim::Scenario sc = fdsim::load_scenario(a.scenario);
  if (a.reduction >= 0.0) fdsim::apply_capacity_reduction(sc, a.reduction, c.capacity_mode);
  auto ecfg = c.engine_config(c.algorithms[0]);
  ecfg.record_timeseries = true;
  const fdsim::RunResult r = fdsim::run_experiment(sc, ecfg);

  const fs::path dir(c.out_dir);
  fs::create_directories(dir);
  const fdsim::ExperimentKey key{0, fs::path(a.scenario).stem().string(), sc.seed, std::max(0.0, a.reduction)};
  std::ostringstream runs, ts, tm;
  fdsim::write_runs_csv(runs, {key}, {r.report});
  fdsim::write_timeseries_csv(ts, r.timeseries);
  fdsim::write_timings_header(tm);
  fdsim::write_timings_rows(tm, 0, r.report.algorithm, r.timings);
  fdsim::write_text(dir / "runs.csv", runs.str());
  fdsim::write_text(dir / "timeseries.csv", ts.str());
  fdsim::write_text(dir / "timings.csv", tm.str());

  const auto& rep = r.report;
  std::cout << "algorithm " << fdsim::to_string(rep.algorithm) << "  capacity reduction "
            << fdsim::fmt_num(rep.capacity_reduction) << "%\n"
            << "failure rate " << fdsim::fmt_num(rep.failure_rate) << "%  table " << fdsim::fmt_num(rep.table_overhead)
            << "  link " << fdsim::fmt_num(rep.link_overhead) << " bit/s  ctrl " << fdsim::fmt_num(rep.ctrl_overhead)
            << " msg/slot\n"
            << "bottlenecked switches " << rep.bottlenecked_switches << "  dt-select calls " << rep.dt_select_calls
            << "  rs-alloc calls " << rep.rs_alloc_calls << "\n"
            << "wrote " << (dir / "runs.csv").string() << ", timeseries.csv, timings.csv\n";
  return 0;
}

// ---- sweep

int cmd_sweep(fdsim::ExperimentConfig c, const EngineFlags& f, const std::vector<std::string>& algos, bool print) {
  apply_engine_flags(c, f);
  c.algorithms = parse_algorithms(algos);
  if (print) {
    std::cout << fdsim::config_to_json(c).dump(2) << "\n";
    return 0;
  }
  c.validate();
  for (const auto& p : c.scenarios)
    if (!fs::exists(p)) throw std::runtime_error("scenario file '" + p + "' does not exist");
  const auto r = fdsim::run_sweep(c, [](int done, int total) {
    std::cerr << "\rscenarios " << done << "/" << total << std::flush;
    if (done == total) std::cerr << "\n";
  });
  fdsim::write_sweep(c.out_dir, c, r);
  std::cout << r.reports.size() << " experiments written to " << c.out_dir << "\n";
  return 0;
}

// ---- report

void print_percentiles(const std::vector<fdsim::PercentileRow>& rows) {
  std::printf("%-10s %9s %6s %10s %10s %10s\n", "algorithm", "reduction", "n", "p50 fail%", "p90 fail%", "mean");
  for (const auto& r : rows)
    std::printf("%-10s %9.4g %6d %10.4g %10.4g %10.4g\n", r.algorithm.c_str(), r.reduction, r.n, r.p50, r.p90,
                r.mean);
}

void print_runtime(const std::vector<fdsim::RuntimeRow>& rows) {
  std::printf("%-10s %-10s %8s %9s %9s %9s %9s %9s\n", "algorithm", "step", "n", "p50 ms", "p90 ms", "p99 ms",
              "max ms", "<128ms");
  for (const auto& r : rows)
    std::printf("%-10s %-10s %8d %9.3f %9.3f %9.3f %9.3f %9.4f\n", r.algorithm.c_str(), r.step.c_str(), r.n, r.p50,
                r.p90, r.p99, r.max, r.below_128ms);
}

int cmd_report(const std::string& in, std::string out, bool print) {
  if (out.empty()) out = in;
  if (print) {
    std::cout << json{{"in", in}, {"out", out}}.dump(2) << "\n";
    return 0;
  }
  const auto runs = fdsim::CsvTable::load((fs::path(in) / "runs.csv").string());
  fs::create_directories(out);
  const auto pct = fdsim::percentile_table(runs);
  const auto ecdf = fdsim::ecdf_table(runs, fdsim::default_ecdf_metrics());
  std::ostringstream p, e;
  fdsim::write_percentile_csv(p, pct);
  fdsim::write_ecdf_csv(e, ecdf);
  fdsim::write_text(fs::path(out) / "percentiles.csv", p.str());
  fdsim::write_text(fs::path(out) / "ecdf.csv", e.str());
  print_percentiles(pct);

  const fs::path timings = fs::path(in) / "timings.csv";
  if (fs::exists(timings)) {
    const auto rt = fdsim::runtime_table(fdsim::CsvTable::load(timings.string()));
    std::ostringstream r;
    fdsim::write_runtime_csv(r, rt);
    fdsim::write_text(fs::path(out) / "runtime.csv", r.str());
    std::printf("\n");
    print_runtime(rt);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flow delegation simulator"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write scenario files");
  g->add_option("--out", gen.out, "Output directory");
  g->add_option("--count", gen.count, "Number of scenarios")->capture_default_str();
  g->add_option("--seed", gen.seed, "Master seed")->capture_default_str();
  g->add_option("--params", gen.params, "JSON with fixed topology/params (default: corpus ranges)");
  g->add_flag("--print-config", gen.print_config, "Print the effective configuration and exit");

  fdsim::ExperimentConfig run_cfg;
  run_cfg.out_dir = "run-out";
  EngineFlags run_flags;
  RunArgs run;
  auto* r = app.add_subcommand("run", "Simulate one scenario");
  r->add_option("--scenario", run.scenario, "Scenario file")->required();
  r->add_option("--algorithm", run.algorithm, "heuristic | exact | greedy")->capture_default_str();
  r->add_option("--reduction", run.reduction, "Capacity reduction in percent (default: capacities from file)");
  r->add_option("--out", run_cfg.out_dir, "Output directory")->capture_default_str();
  r->add_flag("--print-config", run.print_config, "Print the effective configuration and exit");
  add_engine_flags(r, run_cfg, run_flags);

  fdsim::ExperimentConfig sweep_cfg;
  EngineFlags sweep_flags;
  std::vector<std::string> sweep_algos{"heuristic"};
  bool sweep_print = false;
  auto* s = app.add_subcommand("sweep", "Run scenarios across a capacity-reduction grid");
  s->add_option("--scenarios", sweep_cfg.scenarios, "Scenario files");
  s->add_option("--generate", sweep_cfg.generate_count, "Also build this many corpus scenarios in memory")
      ->capture_default_str();
  s->add_option("--seed", sweep_cfg.seed, "Master seed of the generated corpus")->capture_default_str();
  s->add_option("--grid", sweep_cfg.grid, "Capacity reductions in percent, e.g. 5,10,20")->delimiter(',')->required();
  s->add_option("--algorithms", sweep_algos, "heuristic,exact,greedy")->delimiter(',')->capture_default_str();
  s->add_option("--jobs", sweep_cfg.jobs, "Worker threads")->capture_default_str();
  s->add_option("--out", sweep_cfg.out_dir, "Output directory")->capture_default_str();
  s->add_flag("--print-config", sweep_print, "Print the effective configuration and exit");
  add_engine_flags(s, sweep_cfg, sweep_flags);

  std::string report_in, report_out;
  bool report_print = false;
  auto* rep = app.add_subcommand("report", "Percentile, ECDF and runtime tables from a results directory");
  rep->add_option("--in", report_in, "Directory holding runs.csv and timings.csv")->required();
  rep->add_option("--out", report_out, "Output directory (default: --in)");
  rep->add_flag("--print-config", report_print, "Print the effective configuration and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (g->parsed()) return cmd_generate(gen);
    if (r->parsed()) return cmd_run(run_cfg, run_flags, run);
    if (s->parsed()) return cmd_sweep(sweep_cfg, sweep_flags, sweep_algos, sweep_print);
    if (rep->parsed()) return cmd_report(report_in, report_out, report_print);
  } catch (const std::exception& e) {
    std::cerr << "fdsim: error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
