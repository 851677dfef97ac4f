// bspsparse: scenario generation, planning sessions, benchmarks and bounds.

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "bsp/report_io.hpp"
#include "bsp/session.hpp"

namespace fs = std::filesystem;
using namespace bsp;

namespace {

constexpr int kExitTheorem1 = 2;
constexpr int kExitBounds = 3;
constexpr double kTheorem1Tol = 1e-6;

void add_generation_flags(CLI::App* app, ScenarioConfig& cfg) {
  app->add_option("--seed", cfg.seed, "RNG seed");
  app->add_option("--n-poses", cfg.n_prior_poses, "Prior trajectory length")->check(CLI::PositiveNumber);
  app->add_option("--candidates", cfg.n_candidates, "Number of candidate paths")->check(CLI::PositiveNumber);
  app->add_option("--length", cfg.candidate_length, "Poses per candidate path")->check(CLI::PositiveNumber);
  app->add_option("--loop-radius", cfg.loop_closure_radius, "Loop-closure radius [m]")->check(CLI::PositiveNumber);
  app->add_option("--extent", cfg.world_extent, "Workspace side [m]")->check(CLI::PositiveNumber);
  app->add_option("--pos-std", cfg.position_std, "Position noise std [m]")->check(CLI::PositiveNumber);
  app->add_option("--ang-std", cfg.angular_std, "Angular noise std [rad]")->check(CLI::PositiveNumber);
  app->add_option("--min-loop-gap", cfg.min_loop_gap, "Index gap for loop closures")->check(CLI::PositiveNumber);
  app->add_option("--turn-std", cfg.turn_std, "Heading random-walk std [rad]")->check(CLI::NonNegativeNumber);
}

struct SessionArgs {
  std::vector<std::string> modes{"uninvolved", "full"};
  std::vector<int> blocks;
  std::vector<double> ratios{0.01, 0.25, 0.85};
  unsigned workers = 0;
  int repetitions = 5;
};

void add_session_flags(CLI::App* app, SessionArgs& a) {
  app->add_option("--mode", a.modes, "Sparsification modes: none,uninvolved,full,custom")->delimiter(',');
  app->add_option("--blocks", a.blocks, "Block ids for custom mode")->delimiter(',');
  app->add_option("--ratios", a.ratios, "Angular:position variance ratios for the loss bound")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  app->add_option("--workers", a.workers, "Evaluation threads (0 = hardware)")->envname("BSP_WORKERS");
  app->add_option("--repetitions", a.repetitions, "Timing repetitions per phase")->check(CLI::PositiveNumber);
}

SessionOptions to_options(const SessionArgs& a) {
  SessionOptions o;
  o.modes.clear();
  for (const auto& name : a.modes) {
    SparsificationSpec spec{parse_mode(name), {}};
    if (spec.mode == SparsificationMode::Custom) {
      if (a.blocks.empty()) throw InvalidSpec("custom mode needs --blocks");
      spec.custom_blocks = a.blocks;
    }
    o.modes.push_back(spec);
  }
  o.ratios = a.ratios;
  o.workers = a.workers;
  o.repetitions = a.repetitions;
  return o;
}

int exit_code_for(const SessionReport& rep, std::ostream& log) {
  int code = 0;
  if (rep.top_violations + rep.det_violations + rep.loss_bound_violations > 0) {
    log << "bound violation: topological " << rep.top_violations << ", determinant " << rep.det_violations
        << ", loss " << rep.loss_bound_violations << "\n";
    code = kExitBounds;
  }
  if (const ModeResult* m = rep.find(SparsificationMode::Uninvolved)) {
    const double d = rep.theorem1Discrepancy().value_or(0.0);
    if (d > kTheorem1Tol || m->loss.value_or(0.0) > kTheorem1Tol) {
      log << "uninvolved-mode discrepancy " << d << " exceeds " << kTheorem1Tol << "\n";
      code = kExitTheorem1;
    }
  }
  return code;
}

void print_session(const SessionReport& rep, std::ostream& os) {
  os << "seed " << rep.seed << ", dim " << rep.dim << ", candidates " << rep.candidate_ids.size()
     << ", never-involved blocks " << rep.n_never_involved << "/" << rep.n_blocks << "\n";
  os << std::left << std::setw(12) << "mode" << std::right << std::setw(6) << "best" << std::setw(10) << "root nnz"
     << std::setw(12) << "sparsify s" << std::setw(12) << "evaluate s" << std::setw(12) << "loss" << std::setw(8)
     << "rho" << "\n";
  for (const auto& m : rep.modes) {
    std::ostringstream loss, rho;
    loss << (m.loss ? std::to_string(*m.loss) : "-");
    rho << (m.rho ? std::to_string(*m.rho) : "-");
    os << std::left << std::setw(12) << m.spec.name() << std::right << std::setw(6) << m.best_index << std::setw(10)
       << m.root_nnz << std::setw(12) << std::setprecision(4) << m.sparsify_seconds << std::setw(12)
       << m.evaluate_seconds << std::setw(12) << loss.str() << std::setw(8) << rho.str().substr(0, 6) << "\n";
  }
}

int cmd_generate(const ScenarioConfig& cfg, const fs::path& out) {
  const Scenario s = generate(cfg);
  save_scenario(out, s);
  const auto nnz = nnz_report(s.prior);
  std::cout << "wrote " << out.string() << ": dim " << s.prior.dim() << ", poses " << s.poses.size()
            << ", root nnz " << nnz.root_nnz << ", info nnz " << nnz.info_nnz << ", candidates "
            << s.candidates.size() << "\n";
  return 0;
}

int cmd_solve(const fs::path& scenario_path, const SessionArgs& args, const fs::path& out_dir) {
  const Scenario s = load_scenario(scenario_path);
  const SessionReport rep = run_session(s, to_options(args));
  std::ostringstream csv, cand;
  write_session_csv(csv, {rep});
  write_candidates_csv(cand, rep);
  write_text_file(out_dir / "session.csv", csv.str());
  write_text_file(out_dir / "candidates.csv", cand.str());
  write_text_file(out_dir / "summary.json", session_summary_json(rep));
  print_session(rep, std::cout);
  return exit_code_for(rep, std::cerr);
}

int cmd_bench(ScenarioConfig cfg, int n_seeds, const SessionArgs& args, const fs::path& out_dir) {
  const SessionOptions opts = to_options(args);
  std::vector<SessionReport> reports;
  const auto first = cfg.seed;
  int code = 0;
  for (int k = 0; k < n_seeds; ++k) {
    cfg.seed = first + static_cast<std::uint64_t>(k);
    reports.push_back(run_session(generate(cfg), opts));
    code = std::max(code, exit_code_for(reports.back(), std::cerr));
  }
  const auto rows = aggregate(reports);
  std::ostringstream sessions, bench;
  write_session_csv(sessions, reports);
  write_bench_csv(bench, rows);
  write_text_file(out_dir / "bench_sessions.csv", sessions.str());
  write_text_file(out_dir / "bench.csv", bench.str());
  write_bench_table(std::cout, rows);
  return code;
}

int cmd_bounds(const fs::path& scenario_path, const std::vector<double>& ratios, const fs::path& out_dir) {
  const Scenario s = load_scenario(scenario_path);
  std::ostringstream csv;
  csv << "candidate_id,J,lb_det,ub_det,lb_top,ub_top";
  for (double r : ratios) csv << ",lb_top_r" << r << ",ub_top_r" << r;
  csv << "\n" << std::setprecision(12);
  std::cout << std::left << std::setw(6) << "id" << std::right << std::setw(16) << "J" << std::setw(16) << "lb_det"
            << std::setw(16) << "ub_det" << std::setw(16) << "lb_top" << std::setw(16) << "ub_top" << "\n"
            << std::fixed << std::setprecision(4);
  int code = 0;
  for (std::size_t c = 0; c < s.actions.size(); ++c) {
    const auto& a = s.actions[c];
    const double j = objective(s.prior, a);
    const BoundPair det = determinant_bounds(s.prior, a);
    const PoseGraph g = posterior_pose_graph(s, c);
    const Index dim = s.prior.dim() + a.n_new_vars;
    const BoundPair top =
        to_objective_scale(topological_bounds(g, topological_noise(s, c, s.config.noiseRatio())), dim);
    csv << a.id << ',' << j << ',' << det.lb << ',' << det.ub << ',' << top.lb << ',' << top.ub;
    for (double r : ratios) {
      auto cfg = topological_noise(s, c, r);
      cfg.mu = 0.0;
      const BoundPair tr = to_objective_scale(topological_bounds(g, cfg), dim);
      csv << ',' << tr.lb << ',' << tr.ub;
    }
    csv << "\n";
    std::cout << std::left << std::setw(6) << a.id << std::right << std::setw(16) << j << std::setw(16) << det.lb
              << std::setw(16) << det.ub << std::setw(16) << top.lb << std::setw(16) << top.ub << "\n";
    const double tol = 1e-9 * (1.0 + std::abs(j));
    if (det.lb > j + tol || j > det.ub + tol || top.lb > j + tol || j > top.ub + tol) code = kExitBounds;
  }
  write_text_file(out_dir / "bounds.csv", csv.str());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Belief-space planning with belief sparsification"};
  app.require_subcommand(1);
  std::string out_dir = "bsp_out";
  auto add_output_dir = [&](CLI::App* sub) {
    sub->add_option("--output-dir", out_dir, "Directory for reports")->envname("BSP_OUTPUT_DIR");
  };

  ScenarioConfig gen_cfg;
  std::string gen_out = "scenario.json";
  auto* gen = app.add_subcommand("generate", "Sample a synthetic pose-SLAM scenario");
  add_generation_flags(gen, gen_cfg);
  gen->add_option("-o,--output", gen_out, "Scenario file to write");

  std::string solve_in;
  SessionArgs solve_args;
  auto* solve = app.add_subcommand("solve", "Run one planning session on a scenario file");
  solve->add_option("scenario", solve_in, "Scenario JSON")->required()->check(CLI::ExistingFile);
  add_session_flags(solve, solve_args);
  add_output_dir(solve);

  ScenarioConfig bench_cfg;
  SessionArgs bench_args;
  int n_seeds = 20;
  auto* bench = app.add_subcommand("bench", "Run seeded sessions and aggregate medians");
  add_generation_flags(bench, bench_cfg);
  add_session_flags(bench, bench_args);
  add_output_dir(bench);
  bench->add_option("--seeds", n_seeds, "Number of consecutive seeds")->check(CLI::PositiveNumber);

  std::string bounds_in;
  std::vector<double> bounds_ratios{0.01, 0.25, 0.85};
  auto* bounds = app.add_subcommand("bounds", "Evaluate determinant and topological bounds per candidate");
  bounds->add_option("scenario", bounds_in, "Scenario JSON")->required()->check(CLI::ExistingFile);
  bounds->add_option("--ratios", bounds_ratios, "Variance ratios")->delimiter(',')->check(CLI::PositiveNumber);
  add_output_dir(bounds);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_generate(gen_cfg, gen_out);
    if (*solve) return cmd_solve(solve_in, solve_args, out_dir);
    if (*bench) return cmd_bench(bench_cfg, n_seeds, bench_args, out_dir);
    if (*bounds) return cmd_bounds(bounds_in, bounds_ratios, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
