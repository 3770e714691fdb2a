#include "pcor/harness.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

namespace pcor {

using nlohmann::json;

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct KeyValue {
  std::string section, key, value;
  int line = 0;
};

std::vector<KeyValue> tokenize_config(std::istream& in, const std::string& origin) {
  std::vector<KeyValue> out;
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r\n");
    line = line.substr(first, last - first + 1);
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    KeyValue kv;
    kv.section = section;
    kv.key = trim(line.substr(0, eq));
    kv.value = trim(line.substr(eq + 1));
    kv.line = lineno;
    if (kv.section.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": key outside any [section]");
    if (kv.key.empty() || kv.value.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key or value");
    out.push_back(std::move(kv));
  }
  return out;
}

double parse_double(const KeyValue& kv, const std::string& origin) {
  try {
    size_t pos = 0;
    const double v = std::stod(kv.value, &pos);
    if (pos != kv.value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw ConfigError(origin + ":" + std::to_string(kv.line) + ": field " + kv.section + "." +
                      kv.key + " expects a number, got '" + kv.value + "'");
  }
}

long parse_long(const KeyValue& kv, const std::string& origin) {
  try {
    size_t pos = 0;
    const long v = std::stol(kv.value, &pos);
    if (pos != kv.value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw ConfigError(origin + ":" + std::to_string(kv.line) + ": field " + kv.section + "." +
                      kv.key + " expects an integer, got '" + kv.value + "'");
  }
}

std::uint64_t parse_seed(const KeyValue& kv, const std::string& origin) {
  try {
    size_t pos = 0;
    const unsigned long long v = std::stoull(kv.value, &pos);
    if (pos != kv.value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw ConfigError(origin + ":" + std::to_string(kv.line) + ": field " + kv.section + "." +
                      kv.key + " expects a seed, got '" + kv.value + "'");
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(std::istream& in, const std::string& origin) {
  ExperimentConfig cfg;
  for (const KeyValue& kv : tokenize_config(in, origin)) {
    const std::string where = origin + ":" + std::to_string(kv.line);
    const std::string field = kv.section + "." + kv.key;
    if (kv.section == "problem") {
      if (kv.key == "kind") cfg.problem_kind = kv.value;
      else if (kv.key == "num_agents") cfg.num_agents = static_cast<int>(parse_long(kv, origin));
      else if (kv.key == "seed") cfg.problem_seed = parse_seed(kv, origin);
      else if (kv.key == "p") cfg.qp_p = static_cast<int>(parse_long(kv, origin));
      else if (kv.key == "q") cfg.qp_q = static_cast<int>(parse_long(kv, origin));
      else if (kv.key == "path") cfg.problem_path = kv.value;
      else throw ConfigError(where + ": unknown field " + field);
    } else if (kv.section == "graph") {
      if (kv.key == "kind") cfg.graph_kind = kv.value;
      else if (kv.key == "seed") cfg.graph_seed = parse_seed(kv, origin);
      else if (kv.key == "path") cfg.graph_path = kv.value;
      else throw ConfigError(where + ": unknown field " + field);
    } else if (kv.section == "algorithm") {
      if (kv.key == "method") cfg.method = kv.value;
      else if (kv.key == "alpha") cfg.alpha = parse_double(kv, origin);
      else if (kv.key == "dppa_alpha0") cfg.dppa_alpha0 = parse_double(kv, origin);
      else if (kv.key == "dppa_exponent") cfg.dppa_exponent = parse_double(kv, origin);
      else if (kv.key == "max_iterations") cfg.max_iterations = parse_long(kv, origin);
      else if (kv.key == "error_target") cfg.error_target = parse_double(kv, origin);
      else if (kv.key == "init_seed") cfg.init_seed = parse_seed(kv, origin);
      else if (kv.key == "exact_certificate") cfg.exact_certificate = parse_double(kv, origin);
      else if (kv.key == "solver_max_iterations") cfg.solver_max_iterations = parse_long(kv, origin);
      else throw ConfigError(where + ": unknown field " + field);
    } else if (kv.section == "criterion") {
      if (kv.key == "mode") cfg.criterion_mode = kv.value;
      else if (kv.key == "family") cfg.schedule_family = kv.value;
      else if (kv.key == "scale") cfg.schedule_scale = parse_double(kv, origin);
      else if (kv.key == "exponent") cfg.schedule_exponent = parse_double(kv, origin);
      else throw ConfigError(where + ": unknown field " + field);
    } else if (kv.section == "output") {
      if (kv.key == "csv") cfg.csv_path = kv.value;
      else if (kv.key == "summary") cfg.summary_path = kv.value;
      else throw ConfigError(where + ": unknown field " + field);
    } else if (kv.section == "sweep") {
      if (kv.key == "parameter") cfg.sweep_parameter = kv.value;
      else if (kv.key == "values") {
        std::istringstream vs(kv.value);
        double v = 0;
        cfg.sweep_values.clear();
        while (vs >> v) cfg.sweep_values.push_back(v);
        if (!vs.eof())
          throw ConfigError(where + ": field sweep.values expects a space-separated number list");
      } else {
        throw ConfigError(where + ": unknown field " + field);
      }
    } else {
      throw ConfigError(where + ": unknown section [" + kv.section + "]");
    }
  }

  // Field-level validation that does not need materialization.
  if (cfg.problem_kind != "log_allocation" && cfg.problem_kind != "coupled_qp" &&
      cfg.problem_kind != "file")
    throw ConfigError(origin + ": field problem.kind has unknown value '" + cfg.problem_kind + "'");
  if (cfg.graph_kind != "geometric" && cfg.graph_kind != "edge_list" && cfg.graph_kind != "path" &&
      cfg.graph_kind != "complete")
    throw ConfigError(origin + ": field graph.kind has unknown value '" + cfg.graph_kind + "'");
  if (cfg.method != "pc" && cfg.method != "pc_zy" && cfg.method != "dppa")
    throw ConfigError(origin + ": field algorithm.method has unknown value '" + cfg.method + "'");
  if (cfg.criterion_mode != "exact" && cfg.criterion_mode != "absolute" &&
      cfg.criterion_mode != "relative")
    throw ConfigError(origin + ": field criterion.mode has unknown value '" + cfg.criterion_mode + "'");
  if (cfg.schedule_family != "power" && cfg.schedule_family != "geometric")
    throw ConfigError(origin + ": field criterion.family has unknown value '" + cfg.schedule_family + "'");
  if (!cfg.sweep_parameter.empty() && cfg.sweep_parameter != "alpha" &&
      cfg.sweep_parameter != "precision_exponent")
    throw ConfigError(origin + ": field sweep.parameter has unknown value '" + cfg.sweep_parameter + "'");
  {
    std::vector<double> sorted = cfg.sweep_values;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ConfigError(origin + ": field sweep.values must be distinct");
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  ExperimentConfig cfg = parse(in, path);
  cfg.label = std::filesystem::path(path).stem().string();
  return cfg;
}

std::string ExperimentConfig::canonical_text() const {
  std::ostringstream out;
  out << "[problem]\nkind = " << problem_kind << "\n";
  if (problem_kind == "file") out << "path = " << problem_path << "\n";
  else out << "num_agents = " << num_agents << "\n";
  if (problem_kind == "coupled_qp")
    out << "seed = " << problem_seed << "\np = " << qp_p << "\nq = " << qp_q << "\n";
  out << "[graph]\nkind = " << graph_kind << "\n";
  if (graph_kind == "edge_list") out << "path = " << graph_path << "\n";
  if (graph_kind == "geometric") out << "seed = " << graph_seed << "\n";
  out << "[algorithm]\nmethod = " << method << "\n";
  if (method == "dppa")
    out << "dppa_alpha0 = " << fmt17(dppa_alpha0) << "\ndppa_exponent = " << fmt17(dppa_exponent) << "\n";
  else
    out << "alpha = " << fmt17(alpha) << "\n";
  out << "max_iterations = " << max_iterations << "\nerror_target = " << fmt17(error_target)
      << "\ninit_seed = " << init_seed << "\nexact_certificate = " << fmt17(exact_certificate) << "\n";
  out << "[criterion]\nmode = " << criterion_mode << "\n";
  if (criterion_mode != "exact")
    out << "family = " << schedule_family << "\nscale = " << fmt17(schedule_scale)
        << "\nexponent = " << fmt17(schedule_exponent) << "\n";
  return out.str();
}

std::string ExperimentConfig::fairness_key() const {
  std::ostringstream out;
  out << problem_kind << "|" << num_agents << "|" << problem_seed << "|" << qp_p << "|" << qp_q
      << "|" << problem_path << "|" << graph_kind << "|" << graph_seed << "|" << graph_path << "|"
      << init_seed;
  return out.str();
}

MaterializedExperiment materialize(const ExperimentConfig& cfg, const CliOverrides& overrides) {
  ExperimentConfig c = cfg;
  if (overrides.seed) {
    c.graph_seed = *overrides.seed;
    c.problem_seed = *overrides.seed;
    c.init_seed = *overrides.seed;
  }
  if (overrides.max_iterations) c.max_iterations = *overrides.max_iterations;

  ProblemInstance problem = [&] {
    if (c.problem_kind == "log_allocation") return ProblemInstance::log_allocation(c.num_agents);
    if (c.problem_kind == "coupled_qp")
      return ProblemInstance::coupled_qp(c.problem_seed, c.num_agents, c.qp_p, c.qp_q);
    return ProblemInstance::from_json_file(c.problem_path);
  }();

  NetworkGraph graph = [&] {
    const int n = problem.num_agents();
    if (c.graph_kind == "geometric") return NetworkGraph::random_geometric(n, c.graph_seed);
    if (c.graph_kind == "path") return NetworkGraph::path(n);
    if (c.graph_kind == "complete") return NetworkGraph::complete(n);
    NetworkGraph g = NetworkGraph::load_edge_list(c.graph_path);
    if (g.num_agents != n)
      throw ConfigError("graph file has " + std::to_string(g.num_agents) + " agents, problem has " +
                        std::to_string(n));
    return g;
  }();

  MaterializedExperiment m{std::move(problem), std::move(graph), {}, {}, {}};
  m.mixing = build_metropolis_weights(m.graph);
  m.reference = m.problem.reference();

  RunConfig& rc = m.config;
  rc.mixing = m.mixing;
  rc.operators = m.problem.operators();
  rc.alpha = c.alpha;
  rc.max_iterations = c.max_iterations;
  rc.error_target = c.error_target;
  rc.initial_z = m.problem.initial_iterate(c.init_seed);
  rc.solver.max_iterations = c.solver_max_iterations;
  if (c.method == "pc") rc.method = Method::ProximalCorrection;
  else if (c.method == "pc_zy") rc.method = Method::ProximalCorrectionZY;
  else rc.method = Method::Dppa;
  rc.dppa.alpha0 = c.dppa_alpha0;
  rc.dppa.exponent = c.dppa_exponent;

  if (c.criterion_mode == "exact") {
    rc.criterion = InexactnessCriterion::exact(c.exact_certificate);
  } else {
    PrecisionSchedule sched = c.schedule_family == "power"
                                  ? PrecisionSchedule::power(c.schedule_scale, c.schedule_exponent)
                                  : PrecisionSchedule::geometric(c.schedule_scale, c.schedule_exponent);
    rc.criterion = c.criterion_mode == "absolute"
                       ? InexactnessCriterion::absolute_summable(sched)
                       : InexactnessCriterion::relative_summable(sched);
    rc.criterion.exact_certificate = c.exact_certificate;
  }
  rc.validate();
  return m;
}

std::string metrics_csv_text(const std::vector<IterationMetrics>& rows) {
  std::ostringstream out;
  out << "k,solution_error,consensus_violation,constraint_violation,lyapunov,omega_norm,"
         "max_certificate,inner_iterations_total\n";
  for (const auto& m : rows) {
    out << m.k << ',' << fmt17(m.solution_error) << ',' << fmt17(m.consensus_violation) << ','
        << fmt17(m.constraint_violation) << ',' << fmt17(m.lyapunov) << ',' << fmt17(m.omega_norm)
        << ',' << fmt17(m.max_certificate) << ',' << m.inner_iterations_total << '\n';
  }
  return out.str();
}

void write_metrics_csv(const std::string& path, const std::vector<IterationMetrics>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write CSV: " + path);
  out << metrics_csv_text(rows);
}

namespace {

std::string output_stem(const ExperimentConfig& cfg, const CliOverrides& overrides) {
  std::filesystem::create_directories(overrides.out_dir);
  const std::string stem = cfg.label.empty() ? "experiment" : cfg.label;
  return overrides.out_dir + "/" + stem;
}

json run_summary(const ExperimentConfig& cfg, const RunResult& result, double wall_seconds) {
  json j;
  j["config"] = cfg.canonical_text();
  if (cfg.criterion_mode != "exact") {
    const PrecisionSchedule sched =
        cfg.schedule_family == "power"
            ? PrecisionSchedule::power(cfg.schedule_scale, cfg.schedule_exponent)
            : PrecisionSchedule::geometric(cfg.schedule_scale, cfg.schedule_exponent);
    if (sched.summable() != PrecisionSchedule::Summability::Yes)
      j["warning"] = "precision schedule " + sched.describe() +
                     " is not summable; convergence is not guaranteed";
  }
  j["completed"] = result.completed;
  j["reached_target"] = result.reached_target;
  j["iterations_to_target"] = result.iterations_to_target;
  j["iterations"] = result.trajectory.empty() ? 0 : result.trajectory.back().k;
  j["wall_seconds"] = wall_seconds;
  if (!result.failure.empty()) {
    j["failure"] = result.failure;
    j["failed_agent"] = result.failed_agent + 1;
  }
  if (!result.trajectory.empty()) {
    const auto& last = result.trajectory.back();
    j["final"] = {{"k", last.k},
                  {"solution_error", last.solution_error},
                  {"consensus_violation", last.consensus_violation},
                  {"constraint_violation", last.constraint_violation}};
  }
  return j;
}

RunResult execute(const MaterializedExperiment& m) {
  RunHooks hooks;
  hooks.problem = &m.problem;
  hooks.reference = &m.reference;
  return run(m.config, hooks);
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const CliOverrides& overrides) {
  ExperimentOutcome outcome;
  MaterializedExperiment m = materialize(cfg, overrides);
  if (overrides.dry_run) {
    outcome.message = "config ok: " + std::to_string(m.problem.num_agents()) + " agents, " +
                      std::to_string(m.graph.edges.size()) + " edges";
    return outcome;
  }
  const auto t0 = std::chrono::steady_clock::now();
  const RunResult result = execute(m);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::string stem = output_stem(cfg, overrides);
  const std::string csv = cfg.csv_path.empty() ? stem + ".csv" : overrides.out_dir + "/" + cfg.csv_path;
  const std::string summary =
      cfg.summary_path.empty() ? stem + ".json" : overrides.out_dir + "/" + cfg.summary_path;
  write_metrics_csv(csv, result.trajectory);
  {
    std::ofstream out(summary);
    out << run_summary(cfg, result, wall).dump(2) << "\n";
  }
  outcome.artifacts = {csv, summary};
  if (!result.failure.empty()) {
    outcome.exit_code = 3;
    outcome.message = result.failure + " (partial trajectory written)";
  } else {
    outcome.message = "wrote " + csv;
  }
  return outcome;
}

ExperimentOutcome run_sweep(const ExperimentConfig& cfg, const CliOverrides& overrides) {
  if (cfg.sweep_parameter.empty() || cfg.sweep_values.empty())
    throw ConfigError("sweep requires [sweep] parameter and a non-empty values list");
  ExperimentOutcome outcome;
  if (overrides.dry_run) {
    materialize(cfg, overrides);
    outcome.message = "sweep config ok (" + std::to_string(cfg.sweep_values.size()) + " members)";
    return outcome;
  }

  struct Member {
    double value;
    ExperimentConfig cfg;
    RunResult result;
    std::string error;
  };
  std::vector<Member> members;
  for (double v : cfg.sweep_values) {
    Member mm;
    mm.value = v;
    mm.cfg = cfg;
    if (cfg.sweep_parameter == "alpha") mm.cfg.alpha = v;
    else mm.cfg.schedule_exponent = v;
    members.push_back(std::move(mm));
  }

  // Members are independent; fan them out across worker threads.
  std::vector<std::future<void>> futures;
  futures.reserve(members.size());
  for (auto& mm : members) {
    futures.push_back(std::async(std::launch::async, [&mm, &overrides] {
      try {
        mm.result = execute(materialize(mm.cfg, overrides));
        if (!mm.result.failure.empty()) mm.error = mm.result.failure;
      } catch (const std::exception& e) {
        mm.error = e.what();
      }
    }));
  }
  for (auto& f : futures) f.get();

  const std::string stem = output_stem(cfg, overrides);
  long max_k = 0;
  for (auto& mm : members) {
    std::ostringstream tag;
    tag << cfg.sweep_parameter << "_" << mm.value;
    const std::string path = stem + "_" + tag.str() + ".csv";
    write_metrics_csv(path, mm.result.trajectory);
    outcome.artifacts.push_back(path);
    if (!mm.result.trajectory.empty())
      max_k = std::max(max_k, mm.result.trajectory.back().k);
  }

  // Wide comparison table keyed by iteration.
  std::ostringstream table;
  table << "k";
  for (auto& mm : members) table << ",solution_error_" << mm.value << ",constraint_violation_" << mm.value;
  table << "\n";
  for (long k = 0; k <= max_k; ++k) {
    table << k;
    for (auto& mm : members) {
      if (k < static_cast<long>(mm.result.trajectory.size())) {
        const auto& row = mm.result.trajectory[static_cast<size_t>(k)];
        table << ',' << fmt17(row.solution_error) << ',' << fmt17(row.constraint_violation);
      } else {
        table << ",,";
      }
    }
    table << "\n";
  }
  const std::string table_path = stem + "_comparison.csv";
  {
    std::ofstream out(table_path, std::ios::binary);
    out << table.str();
  }
  outcome.artifacts.push_back(table_path);

  json j;
  j["config"] = cfg.canonical_text();
  j["sweep_parameter"] = cfg.sweep_parameter;
  for (auto& mm : members) {
    json member;
    member["value"] = mm.value;
    member["completed"] = mm.result.completed;
    if (!mm.error.empty()) member["failure"] = mm.error;
    if (!mm.result.trajectory.empty()) {
      member["final_solution_error"] = mm.result.trajectory.back().solution_error;
      member["iterations"] = mm.result.trajectory.back().k;
    }
    j["members"].push_back(member);
  }
  const std::string summary_path = stem + "_sweep.json";
  {
    std::ofstream out(summary_path);
    out << j.dump(2) << "\n";
  }
  outcome.artifacts.push_back(summary_path);

  int failures = 0;
  for (auto& mm : members)
    if (!mm.error.empty()) ++failures;
  if (failures) {
    outcome.exit_code = 3;
    outcome.message = std::to_string(failures) + " sweep member(s) failed; artifacts written";
  } else {
    outcome.message = "sweep complete (" + std::to_string(members.size()) + " members)";
  }
  return outcome;
}

ExperimentOutcome compare_algorithms(const std::vector<ExperimentConfig>& cfgs,
                                     const CliOverrides& overrides) {
  if (cfgs.size() < 2) throw ConfigError("compare needs at least two configs");
  for (size_t i = 1; i < cfgs.size(); ++i)
    if (cfgs[i].fairness_key() != cfgs[0].fairness_key())
      throw ConfigError("compare: config '" + cfgs[i].label +
                        "' does not share problem/graph/initial iterate with '" + cfgs[0].label +
                        "'");
  ExperimentOutcome outcome;
  if (overrides.dry_run) {
    for (const auto& c : cfgs) materialize(c, overrides);
    outcome.message = "compare config ok";
    return outcome;
  }

  std::vector<RunResult> results(cfgs.size());
  std::vector<std::string> errors(cfgs.size());
  std::vector<std::future<void>> futures;
  for (size_t i = 0; i < cfgs.size(); ++i) {
    futures.push_back(std::async(std::launch::async, [&, i] {
      try {
        results[i] = execute(materialize(cfgs[i], overrides));
        if (!results[i].failure.empty()) errors[i] = results[i].failure;
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }));
  }
  for (auto& f : futures) f.get();

  std::filesystem::create_directories(overrides.out_dir);
  const std::string table_path = overrides.out_dir + "/comparison.csv";
  long max_k = 0;
  for (const auto& r : results)
    if (!r.trajectory.empty()) max_k = std::max(max_k, r.trajectory.back().k);
  std::ofstream out(table_path, std::ios::binary);
  out << "k";
  for (const auto& c : cfgs) out << ",solution_error_" << c.label << ",constraint_violation_" << c.label;
  out << "\n";
  for (long k = 0; k <= max_k; ++k) {
    out << k;
    for (const auto& r : results) {
      if (k < static_cast<long>(r.trajectory.size())) {
        const auto& row = r.trajectory[static_cast<size_t>(k)];
        out << ',' << fmt17(row.solution_error) << ',' << fmt17(row.constraint_violation);
      } else {
        out << ",,";
      }
    }
    out << "\n";
  }
  outcome.artifacts.push_back(table_path);

  int failures = 0;
  for (const auto& e : errors)
    if (!e.empty()) ++failures;
  if (failures) {
    outcome.exit_code = 3;
    outcome.message = std::to_string(failures) + " member run(s) failed";
  } else {
    outcome.message = "wrote " + table_path;
  }
  return outcome;
}

ExperimentOutcome run_audit(const ExperimentConfig& cfg, const CliOverrides& overrides,
                            int transitions, double e_norm) {
  MaterializedExperiment m = materialize(cfg, overrides);
  ExperimentOutcome outcome;
  if (overrides.dry_run) {
    outcome.message = "audit config ok";
    return outcome;
  }

  RunConfig rc = m.config;
  rc.criterion = InexactnessCriterion::exact(1e-12);
  rc.method = Method::ProximalCorrectionZY;
  rc.max_iterations = transitions + 1;
  rc.error_target = 0.0;

  json j;
  j["config"] = cfg.canonical_text();
  j["transitions"] = transitions;
  j["injected_norm"] = e_norm;
  bool all_pass = true;

  // phi residual of the lifted reference.
  const XiPoint xi_star = lift_solution(m.reference.z_star, m.reference.v_star, m.mixing, rc.alpha);
  const double phi_res = phi_distance(xi_star, rc.operators, m.mixing, rc.alpha);
  j["reference_phi_distance"] = phi_res;
  all_pass = all_pass && phi_res <= 1e-8;

  AlgorithmState state = pc_init(rc);
  if (!state.step_ok) throw NumericalError("audit: " + state.failure);
  for (int t = 0; t < transitions; ++t) {
    const XiPoint xi_prev{state.Z, state.Y};
    const StepAuditReport report =
        audit_perturbed_step(rc.operators, m.mixing, rc.alpha, xi_prev, e_norm,
                             cfg.init_seed + static_cast<std::uint64_t>(t), rc.solver);
    json checks;
    for (const auto& c : report.checks)
      checks.push_back({{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"pass", c.pass}});
    j["audits"].push_back({{"k", state.k}, {"checks", checks}, {"all_pass", report.all_pass()}});
    all_pass = all_pass && report.all_pass();
    state = pc_step_zy(state, rc);
    if (!state.step_ok) throw NumericalError("audit: " + state.failure);
  }
  j["all_pass"] = all_pass;

  const std::string path = output_stem(cfg, overrides) + "_audit.json";
  {
    std::ofstream out(path);
    out << j.dump(2) << "\n";
  }
  outcome.artifacts.push_back(path);
  outcome.exit_code = all_pass ? 0 : 3;
  outcome.message = all_pass ? "audit passed" : "audit found failing checks";
  return outcome;
}

}  // namespace pcor
