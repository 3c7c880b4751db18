#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "acdcopf/gbd.hpp"
#include "acdcopf/robustness.hpp"
#include "acdcopf/scenarios.hpp"
#include "acdcopf/sla.hpp"

using namespace acdc;
using nlohmann::json;

namespace {

OpfMode parse_mode(const std::string& m) {
  if (m == "dopf") return OpfMode::Dopf;
  if (m == "ropf") return OpfMode::Ropf;
  if (m == "eropf") return OpfMode::Eropf;
  throw CLI::ValidationError("--mode", "expected dopf, ropf or eropf");
}

std::vector<std::vector<double>> mode_scenarios(const NetworkCase& net, OpfMode mode) {
  if (mode == OpfMode::Dopf) {
    std::vector<double> s;
    for (const auto& r : net.res_units) s.push_back(r.p_avail_max);
    return {s};
  }
  return enumerate_extremes(net).extremes;
}

void check_backend() {
  const char* b = std::getenv("ACDCOPF_BACKEND");
  if (b && std::string(b) != "internal")
    throw std::runtime_error(std::string("unknown solver backend '") + b +
                             "' (only 'internal' is built in)");
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

json solution_json(const ConicProgram& prog, const Solution& s) {
  json j;
  const char* names[] = {"optimal", "infeasible", "unbounded", "gap_limit",
                         "numerical_error"};
  j["status"] = names[static_cast<int>(s.status)];
  j["objective"] = s.objective;
  j["mip_gap"] = s.mip_gap;
  j["bb_nodes"] = s.bb_nodes;
  j["max_cone_violation"] = s.max_cone_violation;
  json vars = json::object();
  for (size_t i = 0; i < prog.vars.size(); ++i)
    vars[prog.vars[i].name] = s.x.size() ? s.x(static_cast<Eigen::Index>(i)) : 0.0;
  j["variables"] = std::move(vars);
  return j;
}

json topology_json(const NetworkCase& net, const OpfProgram& m, const Solution& s) {
  json lines = json::array();
  for (size_t k = 0; k < net.dc_lines.size(); ++k) {
    json l;
    l["from"] = net.dc_lines[k].from;
    l["to"] = net.dc_lines[k].to;
    l["default_closed"] = net.dc_lines[k].closed;
    l["closed"] = s.x.size() ? s.x(m.info.alpha[k]) > 0.5 : net.dc_lines[k].closed;
    lines.push_back(std::move(l));
  }
  return lines;
}

int cmd_validate(const std::string& case_path) {
  NetworkCase net = load_case(case_path);
  ValidationReport rep = validate_case(net);
  std::cout << rep.to_json();
  return rep.ok() ? 0 : 1;
}

int cmd_solve(const std::string& case_path, const std::string& mode_s, bool switching,
              int envelope, const std::string& out_dir) {
  check_backend();
  NetworkCase net = load_case(case_path);
  OpfMode mode = parse_mode(mode_s);
  OperatingPoint op = base_operating_point(net);
  FormulationOptions fo;
  fo.switching = switching;
  fo.envelope_segments = envelope;
  OpfProgram m = assemble_opf(net, op, mode, mode_scenarios(net, mode), fo);
  EsmValidity esm = esm_validity_check(m.prog);
  if (!esm.ok) {
    for (const auto& i : esm.issues) std::cerr << "esm check: " << i << "\n";
    return 3;
  }
  Solution s = solve_mixed(m.prog);

  json summary;
  summary["case"] = case_path;
  summary["mode"] = mode_s;
  summary["path"] = "centralized";
  summary["scenarios"] = m.info.scenario_count;
  summary["topology"] = topology_json(net, m, s);
  summary["objective"] = s.objective;
  const char* names[] = {"optimal", "infeasible", "unbounded", "gap_limit",
                         "numerical_error"};
  summary["status"] = names[static_cast<int>(s.status)];

  std::filesystem::path out(out_dir);
  write_file(out / "solution.json", solution_json(m.prog, s).dump(2) + "\n");
  if (s.x.size())
    write_file(out / "cone_residuals.json", check_cone_residuals(s.x, m.prog).to_json());
  write_file(out / "summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  return s.status == SolveStatus::Optimal || s.status == SolveStatus::GapLimit ? 0 : 1;
}

int cmd_gbd(const std::string& case_path, const std::string& mode_s, bool single_cut,
            bool async, int situation, int n_min, int staleness,
            std::vector<double> latencies, unsigned long long seed, int max_iter,
            const std::string& out_dir) {
  check_backend();
  NetworkCase net = load_case(case_path);
  OpfMode mode = parse_mode(mode_s);
  OperatingPoint op = base_operating_point(net);
  Decomposition dec = decompose(net, op, mode, mode_scenarios(net, mode));
  const int S = static_cast<int>(dec.sps.size());

  GbdOptions go;
  go.multi_cut = !single_cut;
  go.async = async;
  go.n_min = n_min;
  go.staleness = staleness;
  go.seed = seed;
  go.max_iterations = max_iter;
  if (!latencies.empty()) go.latencies = std::move(latencies);
  if (situation) {
    go.async = true;
    if (S != 3)
      throw std::runtime_error("--situation presets assume 3 subproblems");
    if (situation == 1) {
      go.latencies = {1, 1, 1};
      go.n_min = 3;
    } else if (situation == 2) {
      go.latencies = {1, 1, 2};
      go.n_min = 2;
    } else {
      go.latencies = {1, 2, 4};
      go.n_min = 2;
    }
  }

  GbdResult r = run_gbd(dec, go);

  json summary;
  summary["case"] = case_path;
  summary["mode"] = mode_s;
  summary["cuts"] = single_cut ? "single" : "multi";
  summary["schedule"] = go.async ? "async" : "sync";
  summary["seed"] = go.seed;
  summary["converged"] = r.converged;
  summary["iterations"] = r.iterations;
  summary["upper_bound"] = r.upper_bound;
  summary["lower_bound"] = r.lower_bound;
  summary["gap"] = (r.upper_bound - r.lower_bound) / std::abs(r.lower_bound);
  if (situation == 3)
    summary["note"] =
        "asynchronous schedule with unequal delays; objective may deviate from "
        "the synchronous result";

  std::filesystem::path out(out_dir);
  write_file(out / "trace.csv", r.trace.to_csv());
  write_file(out / "summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  return r.converged ? 0 : 1;
}

int cmd_evaluate(const std::string& case_path, const std::string& mode_s, int samples,
                 unsigned long long seed, const std::string& out_dir) {
  check_backend();
  if (samples < 1) throw std::runtime_error("--samples must be at least 1");
  NetworkCase net = load_case(case_path);
  OpfMode mode = parse_mode(mode_s);
  OperatingPoint op = base_operating_point(net);
  OpfProgram m = assemble_opf(net, op, mode, mode_scenarios(net, mode));
  Solution s = solve_mixed(m.prog);
  if (s.status != SolveStatus::Optimal && s.status != SolveStatus::GapLimit)
    throw std::runtime_error("first-stage solve failed");

  FirstStageDecision dec =
      extract_first_stage(m, s, net, mode == OpfMode::Eropf);
  auto draws = sample_scenarios(net, samples, seed);
  RobustnessReport rep = evaluate_robustness(net, op, dec, draws);

  json summary;
  summary["case"] = case_path;
  summary["mode"] = mode_s;
  summary["samples"] = samples;
  summary["seed"] = seed;
  summary["feasible_ratio"] = rep.ratio;
  summary["first_stage_objective"] = s.objective;
  summary["objective_min"] = rep.obj_min;
  summary["objective_max"] = rep.obj_max;
  summary["objective_mean"] = rep.obj_mean;
  summary["infeasible_scenarios"] = rep.infeasible_scenarios;

  std::filesystem::path out(out_dir);
  write_file(out / "robustness.json", rep.to_json());
  write_file(out / "summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_accuracy(const std::string& case_path, const std::string& mode_s, int rounds,
                 const std::string& out_dir) {
  check_backend();
  NetworkCase net = load_case(case_path);
  OpfMode mode = parse_mode(mode_s);
  SlaResult r = run_sla(net, mode, mode_scenarios(net, mode), rounds);

  std::ostringstream rounds_csv;
  rounds_csv << "round,objective,max_u_error\n";
  rounds_csv.precision(12);
  for (const auto& row : r.rounds)
    rounds_csv << row.round << ',' << row.objective << ',' << row.max_u_error << '\n';

  const SlaRound& last = r.rounds.back();
  std::ostringstream nodes_csv;
  nodes_csv << "node,u_lin,u_nonlinear,abs_error\n";
  nodes_csv.precision(12);
  for (size_t i = 0; i < net.ac_nodes.size(); ++i)
    nodes_csv << net.ac_nodes[i].id << ',' << last.u_lin(static_cast<Eigen::Index>(i))
              << ',' << last.u_nonlinear(static_cast<Eigen::Index>(i)) << ','
              << std::abs(last.u_lin(static_cast<Eigen::Index>(i)) -
                          last.u_nonlinear(static_cast<Eigen::Index>(i)))
              << '\n';

  std::filesystem::path out(out_dir);
  write_file(out / "sla_rounds.csv", rounds_csv.str());
  write_file(out / "voltage_accuracy.csv", nodes_csv.str());
  std::cout << "rounds=" << rounds << " max_u_error=" << last.max_u_error << "\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixed-integer convex AC/DC optimal power flow"};
  app.require_subcommand(1);

  std::string case_path, mode = "dopf", out_dir = "out", path = "centralized";
  bool no_switching = false, single_cut = false, async = false;
  int envelope = 4, samples = 100, rounds = 3, situation = 0, n_min = -1,
      staleness = 3, max_iter = 200;
  unsigned long long seed = 1;
  std::vector<double> latencies;

  auto* validate = app.add_subcommand("validate", "check a case file");
  validate->add_option("--case", case_path, "case file")->required();

  auto* solve = app.add_subcommand("solve", "centralized or distributed solve");
  solve->add_option("--case", case_path)->required();
  solve->add_option("--mode", mode, "dopf|ropf|eropf");
  solve->add_option("--path", path, "centralized|gbd");
  solve->add_flag("--no-switching", no_switching, "freeze DC line statuses");
  solve->add_option("--envelope", envelope, "converter current segments");
  solve->add_flag("--async", async, "asynchronous GBD schedule");
  solve->add_flag("--single-cut", single_cut);
  solve->add_option("--seed", seed);
  solve->add_option("--out", out_dir);

  auto* gbd = app.add_subcommand("gbd", "distributed solve with trace");
  gbd->add_option("--case", case_path)->required();
  gbd->add_option("--mode", mode);
  gbd->add_flag("--single-cut", single_cut);
  gbd->add_flag("--async", async);
  gbd->add_option("--situation", situation, "delay preset 1|2|3")
      ->check(CLI::Range(1, 3));
  gbd->add_option("--n-min", n_min, "results required per master step");
  gbd->add_option("--staleness", staleness, "max iterations a subproblem may lag");
  gbd->add_option("--latency", latencies, "per-subproblem virtual delay");
  gbd->add_option("--seed", seed);
  gbd->add_option("--max-iterations", max_iter);
  gbd->add_option("--out", out_dir);

  auto* eval = app.add_subcommand("evaluate", "Monte-Carlo robustness replay");
  eval->add_option("--case", case_path)->required();
  eval->add_option("--mode", mode);
  eval->add_option("--samples", samples);
  eval->add_option("--seed", seed);
  eval->add_option("--out", out_dir);

  auto* acc = app.add_subcommand("accuracy", "SLA voltage accuracy report");
  acc->add_option("--case", case_path)->required();
  acc->add_option("--mode", mode);
  acc->add_option("--rounds", rounds);
  acc->add_option("--out", out_dir);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(validate)) return cmd_validate(case_path);
    if (app.got_subcommand(solve)) {
      if (path == "centralized") {
        if (async || single_cut) {
          std::cerr << "--async/--single-cut require --path gbd\n";
          return 2;
        }
        return cmd_solve(case_path, mode, !no_switching, envelope, out_dir);
      }
      if (path != "gbd") {
        std::cerr << "--path must be centralized or gbd\n";
        return 2;
      }
      return cmd_gbd(case_path, mode, single_cut, async, situation, n_min, staleness,
                     latencies, seed, max_iter, out_dir);
    }
    if (app.got_subcommand(gbd))
      return cmd_gbd(case_path, mode, single_cut, async, situation, n_min, staleness,
                     latencies, seed, max_iter, out_dir);
    if (app.got_subcommand(eval))
      return cmd_evaluate(case_path, mode, samples, seed, out_dir);
    if (app.got_subcommand(acc)) return cmd_accuracy(case_path, mode, rounds, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
