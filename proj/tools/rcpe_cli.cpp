// Command-line harness: closed-loop runs, permutation and filter-sign sweeps,
// and the gradient-descent baseline, all emitting CSV.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <string>

#include "rcpe/baselines.hpp"
#include "rcpe/harness/config_file.hpp"
#include "rcpe/harness/csv.hpp"
#include "rcpe/harness/experiment.hpp"
#include "rcpe/models/burgers.hpp"
#include "rcpe/models/low_order.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonOptions {
  std::string plant;
  std::string config_path;
  std::string out_path;
  long horizon = -1;
  long seed = 0;  // reserved; every experiment is deterministic
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--plant", opts.plant, "Plant: low_order or burgers");
  cmd->add_option("--config", opts.config_path, "Key = value configuration file");
  cmd->add_option("--out", opts.out_path, "Output CSV path");
  cmd->add_option("--horizon", opts.horizon, "Number of closed-loop steps");
  cmd->add_option("--seed", opts.seed, "Reserved; runs are deterministic");
}

rcpe::ExperimentConfig assemble(const CommonOptions& opts) {
  std::map<std::string, std::string> settings;
  if (!opts.config_path.empty()) settings = rcpe::read_key_values(opts.config_path);
  if (!opts.plant.empty()) settings["plant"] = opts.plant;
  rcpe::ExperimentConfig cfg = rcpe::build_experiment(settings);
  if (opts.horizon >= 0) cfg.horizon = opts.horizon;
  if (!opts.out_path.empty()) cfg.out_path = opts.out_path;
  return cfg;
}

std::string default_out(const rcpe::ExperimentConfig& cfg, const std::string& stem) {
  if (!cfg.out_path.empty()) return cfg.out_path;
  return stem + ".csv";
}

int run_single(const CommonOptions& opts) {
  const rcpe::ExperimentConfig cfg = assemble(opts);
  const rcpe::RunResult result = rcpe::run_closed_loop(cfg);
  const std::string path = default_out(cfg, "rcpe_run");
  rcpe::export_csv(result.records, cfg.estimator.output_dim, cfg.estimator.param_dim, path);
  if (!cfg.field_out_path.empty() && cfg.plant == rcpe::PlantId::Burgers) {
    rcpe::export_burgers_field_csv(cfg.burgers, cfg.mu_true, cfg.horizon, cfg.field_out_stride,
                                   cfg.field_out_path);
    std::printf("wrote %s\n", cfg.field_out_path.c_str());
  }
  std::printf("steps: %zu\n", result.records.size());
  if (result.diverged) std::printf("diverged at step %ld\n", result.diverge_step);
  if (result.final_mu_hat.size()) {
    std::printf("final estimate:");
    for (rcpe::Index i = 0; i < result.final_mu_hat.size(); ++i)
      std::printf(" %.6g", result.final_mu_hat[i]);
    std::printf("\nfinal parameter error: %.6g\n", result.final_mu_err);
  }
  std::printf("wrote %s\n", path.c_str());
  return kExitOk;
}

int run_sweep(const CommonOptions& opts, bool filter_signs) {
  const rcpe::ExperimentConfig cfg = assemble(opts);
  const rcpe::SweepReport report =
      filter_signs ? rcpe::filter_sign_sweep(cfg) : rcpe::permutation_sweep(cfg);
  const std::string path = default_out(cfg, filter_signs ? "rcpe_filter_sweep" : "rcpe_perm_sweep");
  rcpe::export_csv(report, path);
  for (const auto& c : report.cases)
    std::printf("%-12s %-12s err %.6g\n", c.id.c_str(), rcpe::to_string(c.verdict),
                c.final_mu_err);
  std::printf("wrote %s\n", path.c_str());
  return kExitOk;
}

int run_baseline(const CommonOptions& opts) {
  const rcpe::ExperimentConfig cfg = assemble(opts);
  std::unique_ptr<rcpe::SystemModel> model;
  if (cfg.plant == rcpe::PlantId::LowOrder)
    model = std::make_unique<rcpe::LowOrderPlant>();
  else
    model = std::make_unique<rcpe::BurgersPlant>(cfg.burgers.grid_size, cfg.burgers.dt,
                                                 cfg.burgers.c_max);

  // Truth data for the batch cost.
  const long n = cfg.baseline.data_horizon;
  std::vector<rcpe::Vector<double>> u_seq, y_seq;
  u_seq.reserve(static_cast<size_t>(n));
  y_seq.reserve(static_cast<size_t>(n));
  rcpe::Vector<double> x = cfg.plant == rcpe::PlantId::LowOrder
                               ? cfg.x0_truth
                               : rcpe::Vector<double>::Zero(model->state_dim());
  for (long k = 0; k < n; ++k) {
    const rcpe::Vector<double> u =
        cfg.plant == rcpe::PlantId::LowOrder
            ? rcpe::Vector<double>::Constant(1, rcpe::multisine_input(k))
            : rcpe::Vector<double>(0);
    u_seq.push_back(u);
    y_seq.push_back(model->output(x, u, cfg.mu_true));
    x = model->step(x, u, cfg.mu_true);
  }

  const rcpe::Vector<double> x0 = cfg.plant == rcpe::PlantId::LowOrder
                                      ? cfg.x0_truth
                                      : rcpe::Vector<double>::Zero(model->state_dim());
  const auto cost = rcpe::make_batch_cost(*model, x0, u_seq, y_seq);
  const rcpe::Vector<double> mu0 =
      cfg.baseline.mu0.size() ? cfg.baseline.mu0 : (0.8 * cfg.mu_true).eval();
  const rcpe::GradientDescentResult gd = rcpe::gradient_descent(
      cost, mu0, cfg.baseline.gamma, cfg.baseline.iters, cfg.baseline.delta,
      cfg.baseline.step_tol);

  // Reuse the run record schema: one row per iteration, znorm carrying the
  // RMS output error of the iterate; estimator-only columns stay zero.
  std::vector<rcpe::TimeSeriesRecord> records;
  records.reserve(gd.trajectory.size());
  for (size_t j = 0; j < gd.trajectory.size(); ++j) {
    rcpe::TimeSeriesRecord rec;
    rec.k = static_cast<long>(j);
    rec.z = rcpe::Vector<double>::Zero(model->output_dim());
    rec.z_norm = std::sqrt(gd.costs[j] / static_cast<double>(n));
    rec.nu = rcpe::Vector<double>::Zero(model->param_dim());
    rec.mu_hat = gd.trajectory[j];
    rec.mu_err = (gd.trajectory[j] - cfg.mu_true).norm();
    rec.theta = rcpe::Vector<double>::Zero(model->param_dim() * model->output_dim());
    rec.diverged = gd.aborted && j + 1 == gd.trajectory.size();
    records.push_back(std::move(rec));
  }
  const std::string path = default_out(cfg, "rcpe_baseline");
  rcpe::export_csv(records, model->output_dim(), model->param_dim(), path);
  std::printf("iterations: %zu%s\n", gd.trajectory.size(), gd.aborted ? " (aborted)" : "");
  std::printf("final parameter error: %.6g\n", records.back().mu_err);
  std::printf("wrote %s\n", path.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retrospective cost parameter estimation harness"};
  app.require_subcommand(1);

  CommonOptions opts;
  CLI::App* cmd_run = app.add_subcommand("run", "Single closed-loop estimation run");
  CLI::App* cmd_perms = app.add_subcommand("sweep-perms", "One run per output permutation");
  CLI::App* cmd_filters =
      app.add_subcommand("sweep-filters", "Tap assignments crossed with sign patterns");
  CLI::App* cmd_baseline = app.add_subcommand("baseline", "Finite-difference gradient descent");
  for (CLI::App* cmd : {cmd_run, cmd_perms, cmd_filters, cmd_baseline}) add_common(cmd, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) return run_single(opts);
    if (cmd_perms->parsed()) return run_sweep(opts, false);
    if (cmd_filters->parsed()) return run_sweep(opts, true);
    if (cmd_baseline->parsed()) return run_baseline(opts);
  } catch (const rcpe::InvalidConfig& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfig;
  } catch (const rcpe::DimensionMismatch& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfig;
  } catch (const rcpe::IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  }
  return kExitOk;
}
