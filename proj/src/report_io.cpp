#include "bsp/report_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "bsp/matrix_market.hpp"
#include "json.hpp"

namespace bsp {

using nlohmann::json;

namespace {

json pose_to_json(int id, const Pose2& p) { return {{"id", id}, {"x", p.x}, {"y", p.y}, {"theta", p.theta}}; }

Pose2 pose_from_json(const json& j) { return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("theta").get<double>()}; }

json factor_to_json(const PoseFactor& f) {
  json info = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) info.push_back(f.sqrt_info(r, c));
  return {{"type", to_string(f.type)}, {"i", f.i}, {"j", f.j}, {"sqrt_info", info}};
}

PoseFactor factor_from_json(const json& j) {
  PoseFactor f;
  f.type = factor_type_from_string(j.at("type").get<std::string>());
  f.i = j.at("i").get<int>();
  f.j = j.at("j").get<int>();
  const auto& info = j.at("sqrt_info");
  if (!info.is_array() || info.size() != 9) throw SchemaError("sqrt_info must hold 9 row-major values");
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) f.sqrt_info(r, c) = info.at(static_cast<std::size_t>(3 * r + c)).get<double>();
  return f;
}

json config_to_json(const ScenarioConfig& c) {
  return {{"seed", c.seed},
          {"n_prior_poses", c.n_prior_poses},
          {"world_extent", c.world_extent},
          {"position_std", c.position_std},
          {"angular_std", c.angular_std},
          {"loop_closure_radius", c.loop_closure_radius},
          {"n_candidates", c.n_candidates},
          {"candidate_length", c.candidate_length},
          {"min_loop_gap", c.min_loop_gap},
          {"step_length", c.step_length},
          {"turn_std", c.turn_std}};
}

ScenarioConfig config_from_json(const json& j) {
  ScenarioConfig c;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.n_prior_poses = j.at("n_prior_poses").get<int>();
  c.world_extent = j.at("world_extent").get<double>();
  c.position_std = j.at("position_std").get<double>();
  c.angular_std = j.at("angular_std").get<double>();
  c.loop_closure_radius = j.at("loop_closure_radius").get<double>();
  c.n_candidates = j.at("n_candidates").get<int>();
  c.candidate_length = j.at("candidate_length").get<int>();
  c.min_loop_gap = j.at("min_loop_gap").get<int>();
  c.step_length = j.at("step_length").get<double>();
  c.turn_std = j.at("turn_std").get<double>();
  return c;
}

template <typename F>
auto parse_guarded(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw SchemaError(what + ": " + e.what());
  }
}

std::string num(double v) {
  if (!std::isfinite(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

std::string ratio_label(double r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

/// Column name used in the side-by-side candidate table.
std::string objective_column(const SparsificationSpec& spec) {
  switch (spec.mode) {
    case SparsificationMode::None:
      return "J_original";
    case SparsificationMode::Uninvolved:
      return "J_involved";
    case SparsificationMode::Full:
      return "J_diagonal";
    case SparsificationMode::Custom:
      return "J_custom";
  }
  return "J";
}

template <typename T>
std::string opt_num(const std::optional<T>& v) {
  if (!v) return "";
  if constexpr (std::is_same_v<T, bool>)
    return *v ? "1" : "0";
  else
    return num(*v);
}

}  // namespace

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["format"] = "bsp-scenario";
  j["version"] = 1;
  j["seed"] = s.config.seed;
  j["config"] = config_to_json(s.config);
  json poses = json::array();
  for (std::size_t k = 0; k < s.poses.size(); ++k) poses.push_back(pose_to_json(static_cast<int>(k), s.poses[k]));
  j["poses"] = poses;
  json factors = json::array();
  for (const auto& f : s.factors) factors.push_back(factor_to_json(f));
  j["factors"] = factors;
  json cands = json::array();
  const auto n = static_cast<int>(s.poses.size());
  for (const auto& c : s.candidates) {
    json np = json::array();
    for (std::size_t k = 0; k < c.new_poses.size(); ++k)
      np.push_back(pose_to_json(n + static_cast<int>(k), c.new_poses[k]));
    json cf = json::array();
    for (const auto& f : c.factors) cf.push_back(factor_to_json(f));
    cands.push_back({{"id", c.id}, {"new_poses", np}, {"factors", cf}});
  }
  j["candidates"] = cands;
  return j.dump(1) + "\n";
}

Scenario scenario_from_json(const std::string& text) {
  return parse_guarded("scenario", [&] {
    const json j = json::parse(text);
    if (j.value("format", std::string{}) != "bsp-scenario") throw SchemaError("not a scenario file");
    ScenarioConfig cfg = config_from_json(j.at("config"));
    cfg.seed = j.at("seed").get<std::uint64_t>();
    std::vector<Pose2> poses;
    for (const auto& p : j.at("poses")) {
      if (p.at("id").get<int>() != static_cast<int>(poses.size())) throw SchemaError("pose ids must be 0..n-1");
      poses.push_back(pose_from_json(p));
    }
    std::vector<PoseFactor> factors;
    for (const auto& f : j.at("factors")) factors.push_back(factor_from_json(f));
    std::vector<CandidatePath> cands;
    for (const auto& c : j.at("candidates")) {
      CandidatePath path;
      path.id = c.at("id").get<int>();
      for (const auto& p : c.at("new_poses")) path.new_poses.push_back(pose_from_json(p));
      for (const auto& f : c.at("factors")) path.factors.push_back(factor_from_json(f));
      cands.push_back(std::move(path));
    }
    return assemble_scenario(cfg, std::move(poses), std::move(factors), std::move(cands));
  });
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void save_scenario(const std::filesystem::path& path, const Scenario& s) { write_text_file(path, scenario_to_json(s)); }

Scenario load_scenario(const std::filesystem::path& path) { return scenario_from_json(read_text_file(path)); }

std::string belief_to_json(const GaussianBelief& b) {
  json layout = json::array();
  for (const auto& blk : b.layout().blocks())
    layout.push_back({{"id", blk.id}, {"kind", to_string(blk.kind)}, {"size", blk.size}});
  json mean = json::array();
  for (Index i = 0; i < b.mean().size(); ++i) mean.push_back(b.mean()[i]);
  std::ostringstream mtx;
  write_matrix_market(mtx, b.root());
  json j{{"format", "bsp-belief"}, {"version", 1}, {"layout", layout}, {"mean", mean}, {"root", mtx.str()}};
  return j.dump(1) + "\n";
}

GaussianBelief belief_from_json(const std::string& text) {
  return parse_guarded("belief", [&] {
    const json j = json::parse(text);
    if (j.value("format", std::string{}) != "bsp-belief") throw SchemaError("not a belief file");
    VariableLayout layout;
    for (const auto& blk : j.at("layout"))
      layout.append(blk.at("id").get<int>(), block_kind_from_string(blk.at("kind").get<std::string>()),
                    blk.at("size").get<Index>());
    const auto& m = j.at("mean");
    Eigen::VectorXd mean(static_cast<Index>(m.size()));
    for (std::size_t i = 0; i < m.size(); ++i) mean[static_cast<Index>(i)] = m[i].get<double>();
    std::istringstream mtx(j.at("root").get<std::string>());
    return GaussianBelief(std::move(mean), to_triangular(read_matrix_market(mtx)), std::move(layout));
  });
}

void write_session_csv(std::ostream& os, const std::vector<SessionReport>& reports, const CsvOptions& opts) {
  const std::vector<double> ratios = reports.empty() ? std::vector<double>{} : reports.front().ratios;
  os << "schema_version,seed,mode,candidate_id,J,J_baseline,abs_diff,selected,loss,lb_det,ub_det,lb_top,ub_top,"
        "det_loss_bound,top_loss_bound";
  for (double r : ratios) {
    const auto l = ratio_label(r);
    os << ",lb_top_r" << l << ",ub_top_r" << l << ",loss_bound_r" << l;
  }
  os << ",root_nnz,info_nnz,sparsified_blocks,sparsify_s,evaluate_s\n";
  for (const auto& rep : reports) {
    if (rep.ratios != ratios) throw LengthMismatch("sessions use different ratio sweeps");
    const auto& base = rep.baseline();
    for (const auto& m : rep.modes) {
      for (std::size_t c = 0; c < m.values.size(); ++c) {
        os << kCsvSchemaVersion << ',' << rep.seed << ',' << m.spec.name() << ',' << rep.candidate_ids[c] << ','
           << num(m.values[c]) << ',' << num(base.values[c]) << ',' << num(std::abs(m.values[c] - base.values[c]))
           << ',' << (c == m.best_index ? 1 : 0) << ',' << opt_num(m.loss) << ',' << num(m.det_bounds[c].lb) << ','
           << num(m.det_bounds[c].ub) << ',' << num(rep.top_bounds[c].lb) << ',' << num(rep.top_bounds[c].ub) << ','
           << opt_num(m.det_loss_bound) << ',' << opt_num(m.top_loss_bound);
        for (std::size_t k = 0; k < ratios.size(); ++k)
          os << ',' << num(rep.ratio_top_bounds[k][c].lb) << ',' << num(rep.ratio_top_bounds[k][c].ub) << ','
             << num(m.ratio_loss_bounds[k]);
        os << ',' << m.root_nnz << ',' << m.info_nnz << ',' << m.sparsified_blocks << ','
           << num(opts.timings ? m.sparsify_seconds : 0.0) << ',' << num(opts.timings ? m.evaluate_seconds : 0.0)
           << '\n';
      }
    }
  }
}

void write_candidates_csv(std::ostream& os, const SessionReport& report, const CsvOptions& opts) {
  os << "candidate_id";
  for (const auto& m : report.modes) os << ',' << objective_column(m.spec);
  for (const auto& m : report.modes) os << ",evaluate_s_" << m.spec.name();
  os << '\n';
  for (std::size_t c = 0; c < report.candidate_ids.size(); ++c) {
    os << report.candidate_ids[c];
    for (const auto& m : report.modes) os << ',' << num(m.values[c]);
    for (const auto& m : report.modes) os << ',' << num(opts.timings ? m.evaluate_seconds : 0.0);
    os << '\n';
  }
}

std::string session_summary_json(const SessionReport& rep, const CsvOptions& opts) {
  json modes = json::array();
  for (const auto& m : rep.modes) {
    const double max_value = *std::max_element(m.values.begin(), m.values.end());
    json jm{{"mode", m.spec.name()},
            {"best_index", m.best_index},
            {"best_candidate_id", rep.candidate_ids[m.best_index]},
            {"values", m.values},
            {"root_nnz", m.root_nnz},
            {"info_nnz", m.info_nnz},
            {"sparsified_blocks", m.sparsified_blocks},
            {"sparsify_s", opts.timings ? m.sparsify_seconds : 0.0},
            {"evaluate_s", opts.timings ? m.evaluate_seconds : 0.0},
            {"ratio_loss_bounds", m.ratio_loss_bounds}};
    json pct = json::array();
    for (double b : m.ratio_loss_bounds) pct.push_back(100.0 * b / std::abs(max_value));
    jm["ratio_loss_bounds_pct"] = pct;
    if (m.det_loss_bound) jm["det_loss_bound"] = *m.det_loss_bound;
    if (m.top_loss_bound) jm["top_loss_bound"] = *m.top_loss_bound;
    if (m.loss) jm["loss"] = *m.loss;
    if (m.offset) jm["offset"] = *m.offset;
    if (m.balanced_offset_upper) jm["balanced_offset_upper"] = *m.balanced_offset_upper;
    if (m.rho) jm["rho"] = *m.rho;
    if (m.consistent) jm["action_consistent"] = *m.consistent;
    if (m.consistent_tol) jm["action_consistent_tol"] = *m.consistent_tol;
    modes.push_back(jm);
  }
  json j{{"schema_version", kCsvSchemaVersion},
         {"seed", rep.seed},
         {"dim", rep.dim},
         {"n_blocks", rep.n_blocks},
         {"n_never_involved", rep.n_never_involved},
         {"never_involved_ratio", rep.neverInvolvedRatio()},
         {"candidate_ids", rep.candidate_ids},
         {"ratios", rep.ratios},
         {"actual_ratio", rep.actual_ratio},
         {"top_violations", rep.top_violations},
         {"det_violations", rep.det_violations},
         {"loss_bound_violations", rep.loss_bound_violations},
         {"modes", modes}};
  if (auto d = rep.theorem1Discrepancy()) j["theorem1_max_discrepancy"] = *d;
  return j.dump(2) + "\n";
}

void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << "schema_version,mode,sessions,median_dim,never_involved_ratio,runtime_delta,sparsify_share,nnz_delta,"
        "rho_median,rho_min,loss_max\n";
  for (const auto& r : rows)
    os << kCsvSchemaVersion << ',' << r.mode << ',' << r.sessions << ',' << num(r.median_dim) << ','
       << num(r.never_involved_ratio) << ',' << num(r.runtime_delta) << ',' << num(r.sparsify_share) << ','
       << num(r.nnz_delta) << ',' << num(r.rho_median) << ',' << num(r.rho_min) << ',' << num(r.loss_max) << '\n';
}

void write_bench_table(std::ostream& os, const std::vector<BenchRow>& rows) {
  auto pct = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(1) << 100.0 * v << '%';
    return s.str();
  };
  os << std::left << std::setw(12) << "mode" << std::right << std::setw(9) << "sessions" << std::setw(10) << "dim"
     << std::setw(14) << "uninvolved" << std::setw(11) << "run-time" << std::setw(13) << "sparsify" << std::setw(12)
     << "non zeros" << std::setw(8) << "rho" << std::setw(12) << "max loss" << '\n';
  for (const auto& r : rows) {
    std::ostringstream rho, loss;
    rho << std::fixed << std::setprecision(3) << r.rho_median;
    loss << std::setprecision(3) << r.loss_max;
    os << std::left << std::setw(12) << r.mode << std::right << std::setw(9) << r.sessions << std::setw(10)
       << r.median_dim << std::setw(14) << pct(r.never_involved_ratio) << std::setw(11) << pct(r.runtime_delta)
       << std::setw(13) << pct(r.sparsify_share) << std::setw(12) << pct(r.nnz_delta) << std::setw(8) << rho.str()
       << std::setw(12) << loss.str() << '\n';
  }
}

}  // namespace bsp
