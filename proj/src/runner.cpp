#include "ljchain/runner.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "ljchain/homogenize.hpp"
#include "ljchain/minimize.hpp"

namespace ljchain {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string artifact_path(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.experiment.output);
  return (fs::path(cfg.experiment.output) / name).string();
}

std::string csv_header(const RunConfig& cfg, const std::string& what) {
  return "# ljchain " + std::string(to_string(cfg.experiment.mode)) + " " + what +
         "\n# ensemble: " + cfg.ensemble_label + "\n";
}

RunOutcome run_validate(const RunConfig& cfg) {
  RunOutcome out;
  nlohmann::ordered_json all = nlohmann::ordered_json::array();
  bool ok = true;
  for (const auto& spec : cfg.potentials) {
    const CertReport rep = validate_class(spec, cfg.class_params);
    all.push_back(nlohmann::ordered_json::parse(rep.to_json()));
    out.summary += spec.label + ": " + (rep.all_pass() ? "pass" : "FAIL");
    if (!rep.all_pass()) {
      ok = false;
      for (const auto& c : rep.conditions)
        if (!c.pass) out.summary += " [" + c.condition + "]";
    }
    out.summary += "\n";
  }
  const std::string path = artifact_path(cfg, "certs.json");
  write_file_atomic(path, all.dump(2) + "\n");
  out.artifacts.push_back(path);
  out.exit_code = ok ? 0 : 3;
  return out;
}

RunOutcome run_predict(const RunConfig& cfg) {
  RunOutcome out;
  const auto ensemble = cfg.build_ensemble();
  const LimitPrediction pred = predict_limit(*ensemble, cfg.experiment.gamma);
  const std::string path = artifact_path(cfg, "prediction.json");
  write_file_atomic(path, pred.to_json() + "\n");
  out.artifacts.push_back(path);
  out.summary = pred.to_json() + "\n";
  return out;
}

RunOutcome run_minimize(const RunConfig& cfg) {
  RunOutcome out;
  const ExperimentConfig& e = cfg.experiment;
  if (e.n == 0) throw ConfigError(ConfigError::Kind::range, "minimize: n must be >= 1");
  const auto ensemble = cfg.build_ensemble();
  ChainRealization chain = sample_realization(ensemble, e.n, e.seed);
  const double gn = BoundaryProgram{e.gamma}.boundary_value(chain);
  const MinimizationResult res =
      minimize_global(chain, gn, e.k_max, CandidateRule{e.weakest_count});
  const JumpReport jumps = detect_jumps(res);

  nlohmann::ordered_json j = nlohmann::ordered_json::parse(res.to_json());
  j["gamma_n"] = gn;
  j["jump_count"] = jumps.count;
  j["jump_locations"] = jumps.jump_locations;
  const std::string jpath = artifact_path(cfg, "result.json");
  write_file_atomic(jpath, j.dump(2) + "\n");
  out.artifacts.push_back(jpath);

  std::string bonds = csv_header(cfg, "per-bond breakdown") + "i,strain,summand\n";
  const auto breakdown = energy_rescaled_breakdown(chain, res.v_star);
  for (std::size_t i = 0; i < breakdown.size(); ++i) {
    bonds += std::to_string(i) + "," + fmt(breakdown[i].strain) + "," +
             fmt(breakdown[i].summand) + "\n";
  }
  const std::string bpath = artifact_path(cfg, "bonds.csv");
  write_file_atomic(bpath, bonds);
  out.artifacts.push_back(bpath);

  std::string disp = csv_header(cfg, "displacement") + "i,x,v\n";
  for (std::uint64_t i = 0; i <= chain.n; ++i) {
    disp += std::to_string(i) + "," + fmt(static_cast<double>(i) / static_cast<double>(chain.n)) +
            "," + fmt(res.v_star.values[i]) + "\n";
  }
  const std::string dpath = artifact_path(cfg, "displacement.csv");
  write_file_atomic(dpath, disp);
  out.artifacts.push_back(dpath);

  std::string real = csv_header(cfg, "realization") + "i,bond_label\n";
  for (std::uint64_t i = 0; i < chain.n; ++i) {
    real += std::to_string(i) + "," +
            ensemble->support()[chain.bond_index[i]].spec.label + "\n";
  }
  const std::string rpath = artifact_path(cfg, "realization.csv");
  write_file_atomic(rpath, real);
  out.artifacts.push_back(rpath);

  out.summary = "energy " + fmt(res.energy) + " status " + to_string(res.status) + " jumps " +
                std::to_string(jumps.count) + "\n";
  return out;
}

RunOutcome run_sweep(const RunConfig& cfg) {
  RunOutcome out;
  const ExperimentConfig& e = cfg.experiment;
  const auto ensemble = cfg.build_ensemble();
  std::vector<double> gammas = e.gamma_list.empty() ? std::vector<double>{e.gamma} : e.gamma_list;

  std::string csv = csv_header(cfg, "sweep");
  bool first = true;
  for (double gamma : gammas) {
    StudyOptions opt;
    opt.mode = StudyMode::global_min;
    opt.k_max = e.k_max;
    opt.rule.weakest_count = e.weakest_count;
    opt.workers = e.workers;
    const ConvergenceTable table = convergence_study(ensemble, gamma, e.n_list, e.seeds, opt);
    std::string body = table.to_csv();
    if (!first) body = body.substr(body.find('\n') + 1);  // keep one header row
    csv += body;
    first = false;

    for (std::uint64_t n : e.n_list) {
      double mean = 0.0, count = 0.0;
      for (const auto& c : table.cells)
        if (c.n == n) {
          mean += c.gap;
          count += 1.0;
        }
      out.summary += "gamma " + fmt(gamma) + " n " + std::to_string(n) + " mean gap " +
                     fmt(mean / count) + "\n";
    }
  }
  const std::string path = artifact_path(cfg, "sweep.csv");
  write_file_atomic(path, csv);
  out.artifacts.push_back(path);
  return out;
}

RunOutcome run_recover(const RunConfig& cfg) {
  RunOutcome out;
  const ExperimentConfig& e = cfg.experiment;
  const auto ensemble = cfg.build_ensemble();
  StudyOptions opt;
  opt.mode = StudyMode::recovery;
  opt.target = StepTarget{e.gamma, e.slope, e.rho, e.jump_x};
  opt.mu_list = e.mu_list;
  opt.workers = e.workers;
  const ConvergenceTable table = convergence_study(ensemble, e.gamma, e.n_list, e.seeds, opt);
  const std::string path = artifact_path(cfg, "recover.csv");
  write_file_atomic(path, csv_header(cfg, "recovery") + table.to_csv());
  out.artifacts.push_back(path);
  for (const auto& c : table.cells) {
    out.summary += "n " + std::to_string(c.n) + " seed " + std::to_string(c.seed) + " gap " +
                   fmt(c.energy - c.predicted) + " l1 " + fmt(c.l1_distance) + "\n";
  }
  return out;
}

RunOutcome run_ergodic(const RunConfig& cfg) {
  RunOutcome out;
  const ExperimentConfig& e = cfg.experiment;
  const auto ensemble = cfg.build_ensemble();
  const Quantity q = e.quantity == "inverse_alpha" ? Quantity::inverse_alpha()
                                                   : Quantity::ckappa(e.kappa);
  const double expected = expectation(*ensemble, q);

  struct Row {
    std::uint64_t n, seed;
    double value;
  };
  std::vector<Row> rows(e.n_list.size() * e.seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto work = [&]() {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= rows.size()) return;
      try {
        const std::uint64_t n = e.n_list[idx / e.seeds.size()];
        const std::uint64_t seed = e.seeds[idx % e.seeds.size()];
        const ChainRealization chain = sample_realization(ensemble, n, seed);
        rows[idx] = {n, seed, empirical_average(chain, q, e.window_a, e.window_b)};
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  const std::size_t workers = std::min<std::size_t>(std::max(1, e.workers), rows.size());
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::string csv = csv_header(cfg, "ergodic averages") +
                    "n,seed,a,b,quantity,value,expected,abs_error\n";
  for (const Row& r : rows) {
    csv += std::to_string(r.n) + "," + std::to_string(r.seed) + "," + fmt(e.window_a) + "," +
           fmt(e.window_b) + "," + e.quantity + "," + fmt(r.value) + "," + fmt(expected) + "," +
           fmt(std::abs(r.value - expected)) + "\n";
  }
  const std::string path = artifact_path(cfg, "ergodic.csv");
  write_file_atomic(path, csv);
  out.artifacts.push_back(path);

  for (std::uint64_t n : e.n_list) {
    double rms = 0.0, count = 0.0;
    for (const Row& r : rows)
      if (r.n == n) {
        rms += (r.value - expected) * (r.value - expected);
        count += 1.0;
      }
    out.summary += "n " + std::to_string(n) + " rms error " + fmt(std::sqrt(rms / count)) + "\n";
  }
  return out;
}

}  // namespace

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + tmp + "'");
    f << content;
    f.flush();
    if (!f) throw std::runtime_error("short write to '" + tmp + "'");
  }
  fs::rename(tmp, path);
}

RunOutcome run(const RunConfig& config) {
  switch (config.experiment.mode) {
    case ExperimentMode::validate: return run_validate(config);
    case ExperimentMode::predict: return run_predict(config);
    case ExperimentMode::minimize: return run_minimize(config);
    case ExperimentMode::sweep: return run_sweep(config);
    case ExperimentMode::recover: return run_recover(config);
    case ExperimentMode::ergodic: return run_ergodic(config);
  }
  return {};
}

}  // namespace ljchain
