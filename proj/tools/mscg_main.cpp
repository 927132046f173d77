#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "mscg/blending.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kReportFormat = "mscg-run-report";

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw mscg::Error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw mscg::Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json finite_or_null(double v) {
  return std::isfinite(v) ? json(v) : json(nullptr);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("MSCG_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::string convergence_csv(const std::vector<mscg::IterationRecord>& log) {
  std::string out = "iter,z_rm,lb,gap,cols_added,cols_shared,cols_discarded,"
                    "t_master_ms,t_pricing_ms,t_sharing_ms\n";
  for (const auto& r : log) {
    out += std::to_string(r.iter) + ',' + format_double(r.z_rm) + ',' + format_double(r.lb) +
           ',' + format_double(r.gap) + ',' + std::to_string(r.cols_added) + ',' +
           std::to_string(r.cols_shared) + ',' + std::to_string(r.cols_discarded) + ',' +
           std::to_string(r.det_master) + ',' + std::to_string(r.det_pricing) + ',' +
           std::to_string(r.det_sharing) + '\n';
  }
  return out;
}

json iteration_log_json(const std::vector<mscg::IterationRecord>& log) {
  json arr = json::array();
  for (const auto& r : log) {
    arr.push_back(json{{"iter", r.iter},
                       {"z_rm", r.z_rm},
                       {"lb", finite_or_null(r.lb)},
                       {"gap", finite_or_null(r.gap)},
                       {"cols_added", r.cols_added},
                       {"cols_shared", r.cols_shared},
                       {"cols_discarded", r.cols_discarded},
                       {"t_master_ms", r.t_master_ms},
                       {"t_pricing_ms", r.t_pricing_ms},
                       {"t_sharing_ms", r.t_sharing_ms},
                       {"t_pricing_max_ms", r.t_pricing_max_ms},
                       {"t_sharing_max_ms", r.t_sharing_max_ms},
                       {"det_master", r.det_master},
                       {"det_pricing", r.det_pricing},
                       {"det_sharing", r.det_sharing},
                       {"artificial_mass", r.artificial_mass},
                       {"exact_round", r.exact_round}});
  }
  return arr;
}

struct SolveArgs {
  std::string method;
  std::string instance_path;
  double eps = 1e-4;
  double time_limit_s = mscg::kInf;
  int threads_flag = 0;
  int max_iterations = 500;
  std::string pricing = "exact";
  std::string log_path;
  std::string csv_path;
};

int run_solve(const SolveArgs& args) {
  const mscg::BlendingInstance inst = mscg::instance_from_json(read_file(args.instance_path));
  const int threads = resolve_threads(args.threads_flag);
  const std::string instance_id = fs::path(args.instance_path).stem().string();
  const fs::path log_path = args.log_path.empty()
                                ? fs::path(args.instance_path + "." + args.method + ".report.json")
                                : fs::path(args.log_path);
  const fs::path csv_path = args.csv_path.empty()
                                ? fs::path(args.instance_path + "." + args.method + ".csv")
                                : fs::path(args.csv_path);

  json rep;
  rep["format"] = kReportFormat;
  rep["version"] = 1;
  rep["method"] = args.method;
  rep["instance"] = json{{"path", args.instance_path},
                         {"id", instance_id},
                         {"seed", inst.seed},
                         {"tanks", inst.tanks},
                         {"outputs", inst.outputs},
                         {"periods", inst.periods}};
  rep["eps"] = args.eps;
  rep["threads"] = threads;
  rep["objective_sense"] = "max";

  int exit_code = 0;
  if (args.method == "fullspace") {
    const mscg::FactorableModel model = mscg::build_fullspace(inst);
    mscg::GlobalOptions opts;
    opts.rel_tol = args.eps;
    opts.abs_tol = 1e-9;
    opts.time_limit_s = args.time_limit_s;
    const auto t0 = std::chrono::steady_clock::now();
    const mscg::GlobalResult res = mscg::solve_global(model, opts);
    const double wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    const double gap = res.upper_bound < mscg::kInf && res.lower_bound > -mscg::kInf &&
                               res.status != mscg::GlobalStatus::Infeasible
                           ? std::abs(res.upper_bound - res.lower_bound) /
                                 std::max(std::abs(res.upper_bound), 1e-10)
                           : mscg::kInf;
    rep["status"] = to_string(res.status);
    rep["objective"] = res.upper_bound < mscg::kInf ? json(-res.upper_bound) : json(nullptr);
    rep["bounds_min_sense"] =
        json{{"lb", finite_or_null(res.lower_bound)}, {"ub", finite_or_null(res.upper_bound)}};
    rep["relative_gap"] = finite_or_null(gap);
    rep["solved"] = gap <= args.eps;
    rep["iterations"] = 0;
    rep["wall_ms"] = wall_ms;
    rep["perfect_parallel_ms"] = nullptr;
    rep["nodes"] = res.nodes;
    rep["work"] = res.work;
    rep["iteration_log"] = json::array();
    write_atomic(csv_path, convergence_csv({}));
    if (res.status == mscg::GlobalStatus::Infeasible)
      exit_code = 5;
    else if (res.status == mscg::GlobalStatus::TimeOut)
      exit_code = 4;
    else
      exit_code = gap <= args.eps ? 0 : 4;
  } else {
    mscg::MasterModel master = mscg::build_master(inst);
    const mscg::BlendingOracle oracle(inst);
    const mscg::BlendingShareEvaluator evaluator(inst);
    mscg::EngineConfig config;
    config.eps = args.eps;
    config.max_iterations = args.max_iterations;
    config.wall_time_limit_s = args.time_limit_s;
    config.sharing_enabled = args.method == "cgcs";
    config.pricing_mode =
        args.pricing == "first-improving" ? mscg::SolveMode::FirstImproving : mscg::SolveMode::Exact;
    config.worker_count = threads;
    config.seed = inst.seed;
    mscg::RunResult res;
    try {
      res = mscg::run(inst.tree, master, oracle, &evaluator, config);
    } catch (const mscg::InfeasibleError& e) {
      std::fprintf(stderr, "infeasible: %s\n", e.what());
      return 5;
    }
    rep["status"] = to_string(res.status);
    rep["objective"] =
        res.incumbent_objective < mscg::kInf ? json(-res.incumbent_objective) : json(nullptr);
    rep["bounds_min_sense"] = json{{"lb", finite_or_null(res.lb)},
                                   {"ub_incumbent", finite_or_null(res.incumbent_objective)},
                                   {"z_rm_final", finite_or_null(res.z_rm_final)}};
    rep["relative_gap"] = finite_or_null(res.final_gap);
    rep["cg_gap"] = finite_or_null(res.cg_gap);
    rep["solved"] = res.final_gap <= args.eps;
    rep["iterations"] = static_cast<int>(res.log.size());
    rep["wall_ms"] = res.wall_ms;
    rep["perfect_parallel_ms"] = res.perfect_parallel_ms;
    rep["columns"] = json{
        {"initial", res.columns_initial},
        {"priced", res.columns_priced},
        {"shared", res.columns_shared},
        {"discarded", res.columns_discarded},
        {"additional_columns_pct",
         res.columns_priced > 0 ? json(100.0 * res.columns_shared / res.columns_priced)
                                : json(nullptr)},
        {"sharing_time_pct", res.sharing_time_pct}};
    rep["iteration_log"] = iteration_log_json(res.log);
    write_atomic(csv_path, convergence_csv(res.log));
    switch (res.status) {
      case mscg::RunStatus::Converged:
        exit_code = res.final_gap <= args.eps ? 0 : 4;
        break;
      case mscg::RunStatus::StalledInfeasible:
        exit_code = 5;
        break;
      default:
        exit_code = 4;
        break;
    }
  }
  write_atomic(log_path, rep.dump(2) + "\n");
  return exit_code;
}

int run_report(const std::vector<std::string>& log_files, const std::string& out_path) {
  std::string method;
  int n_runs = 0, n_unsolved = 0;
  double gap_unsolved = 0.0, time_solved = 0.0, pp_solved = 0.0;
  int n_solved_time = 0, n_solved_pp = 0;
  for (const auto& file : log_files) {
    json j;
    try {
      j = json::parse(read_file(file));
    } catch (const json::exception& e) {
      std::fprintf(stderr, "report schema: %s is not valid JSON\n", file.c_str());
      return 2;
    }
    if (j.value("format", std::string{}) != kReportFormat) {
      std::fprintf(stderr, "report schema: %s is not a run report\n", file.c_str());
      return 2;
    }
    const std::string m = j.value("method", std::string{});
    if (method.empty()) method = m;
    if (m != method) {
      std::fprintf(stderr, "report schema: mixed methods (%s vs %s); aggregate separately\n",
                   method.c_str(), m.c_str());
      return 2;
    }
    ++n_runs;
    const bool solved = j.value("solved", false);
    if (!solved) {
      ++n_unsolved;
      if (j.contains("relative_gap") && j["relative_gap"].is_number())
        gap_unsolved += j["relative_gap"].get<double>();
    } else {
      time_solved += j.value("wall_ms", 0.0);
      ++n_solved_time;
      if (j.contains("perfect_parallel_ms") && j["perfect_parallel_ms"].is_number()) {
        pp_solved += j["perfect_parallel_ms"].get<double>();
        ++n_solved_pp;
      }
    }
  }
  json out;
  out["format"] = "mscg-aggregate-report";
  out["method"] = method;
  out["runs"] = n_runs;
  out["ns"] = n_unsolved;
  out["mean_gap_unsolved_pct"] =
      n_unsolved > 0 ? json(100.0 * gap_unsolved / n_unsolved) : json(nullptr);
  out["mean_time_solved_s"] =
      n_solved_time > 0 ? json(time_solved / n_solved_time / 1000.0) : json(nullptr);
  out["mean_perfect_parallel_s"] =
      n_solved_pp > 0 ? json(pp_solved / n_solved_pp / 1000.0) : json(nullptr);
  const std::string text = out.dump(2) + "\n";
  if (!out_path.empty()) write_atomic(out_path, text);
  std::fputs(text.c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Column generation with column sharing for multistage stochastic blending"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Sample a blending instance and write it as JSON");
  int g_tanks = 0, g_outputs = 0, g_periods = 0;
  std::uint64_t g_seed = 1;
  std::string g_out;
  gen->add_option("--tanks", g_tanks, "Number of input tanks")->required()->check(CLI::PositiveNumber);
  gen->add_option("--outputs", g_outputs, "Number of output tanks")
      ->required()
      ->check(CLI::PositiveNumber);
  gen->add_option("--periods", g_periods, "Number of time periods")
      ->required()
      ->check(CLI::PositiveNumber);
  gen->add_option("--seed", g_seed, "Generator seed");
  gen->add_option("--out", g_out, "Output file")->required();

  // solve
  auto* solve = app.add_subcommand("solve", "Solve an instance (fullspace | cg | cgcs)");
  SolveArgs s;
  solve->add_option("--method", s.method, "Solution method")
      ->required()
      ->check(CLI::IsMember({"fullspace", "cg", "cgcs"}));
  solve->add_option("--instance", s.instance_path, "Instance JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  solve->add_option("--eps", s.eps, "Relative optimality gap tolerance")->check(CLI::PositiveNumber);
  solve->add_option("--time-limit", s.time_limit_s, "Wall time limit in seconds");
  solve->add_option("--threads", s.threads_flag,
                    "Worker threads (overrides MSCG_THREADS; 0 = auto)");
  solve->add_option("--max-iters", s.max_iterations, "Iteration cap for column generation");
  solve->add_option("--pricing", s.pricing, "Pricing mode")
      ->check(CLI::IsMember({"exact", "first-improving"}));
  solve->add_option("--log", s.log_path, "Run report JSON path");
  solve->add_option("--csv", s.csv_path, "Convergence CSV path");

  // report
  auto* report = app.add_subcommand("report", "Aggregate run reports of one method");
  std::vector<std::string> r_logs;
  std::string r_out;
  report->add_option("--logs", r_logs, "Run report JSON files")->required()->expected(-1);
  report->add_option("--out", r_out, "Aggregate JSON output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) {
      mscg::BlendingInstance inst;
      try {
        inst = mscg::sample_instance(g_tanks, g_outputs, g_periods, g_seed);
      } catch (const mscg::InfeasibleError& e) {
        std::fprintf(stderr, "generator: %s\n", e.what());
        return 3;
      }
      write_atomic(g_out, mscg::instance_to_json(inst));
      return 0;
    }
    if (solve->parsed()) return run_solve(s);
    if (report->parsed()) return run_report(r_logs, r_out);
  } catch (const mscg::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
