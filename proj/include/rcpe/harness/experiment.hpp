#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rcpe/estimator.hpp"
#include "rcpe/models/system_model.hpp"
#include "rcpe/types.hpp"

namespace rcpe {

enum class PlantId { LowOrder, Burgers };
enum class SweepMode { Single, Permutations, FilterSigns };
enum class Verdict { Converged, Diverged };

const char* to_string(Verdict v);

struct BurgersParams {
  Index grid_size = 100;
  double dt = 1e-4;
  double c_max = 0.25;
};

/// Gradient-descent settings for the baseline comparison runs.
struct BaselineParams {
  double gamma = 2e-4;
  int iters = 200;
  double delta = 1e-6;
  double step_tol = 0.0;
  long data_horizon = 200;
  Vector<double> mu0;  // empty: 0.8 * true parameters
};

struct ExperimentConfig {
  PlantId plant = PlantId::LowOrder;
  Vector<double> mu_true;
  Vector<double> x0_truth;     // low-order plant only; Burgers always starts from the zero field
  Vector<double> x0_estimate;  // empty means zeros
  long horizon = 0;
  long estimator_stride = 1;  // estimator update cadence in plant steps
  EstimatorConfig<double> estimator;
  SweepMode sweep = SweepMode::Single;
  double z_max = 1e6;     // output-error norm beyond which a run is declared diverged
  double eps_conv = 0.0;  // parameter-error norm under which a run is declared converged
  BurgersParams burgers;
  BaselineParams baseline;
  std::string out_path;
  std::string field_out_path;   // Burgers only: write truth field snapshots here
  long field_out_stride = 100;  // steps between snapshot rows
  bool keep_state_trace = false;  // retain model states for replay checks

  void validate() const;
};

/// One log row per closed-loop step; values are those in effect at step k
/// (the estimate that drove the estimation model at k, the coefficients
/// before the update for k).
struct TimeSeriesRecord {
  long k = 0;
  Vector<double> z;
  double z_norm = 0.0;
  Vector<double> nu;
  Vector<double> mu_hat;
  double mu_err = 0.0;
  Vector<double> theta;
  bool diverged = false;
  bool saturated = false;
};

struct StateTraceEntry {
  Vector<double> x_truth;
  Vector<double> x_estimate;
  Vector<double> u;
};

struct RunResult {
  std::vector<TimeSeriesRecord> records;
  bool diverged = false;
  long diverge_step = -1;
  Vector<double> final_mu_hat;
  Vector<double> final_nu;
  double final_mu_err = 0.0;
  std::vector<StateTraceEntry> state_trace;  // filled only when keep_state_trace
};

/// Truth model and estimation model in closed loop with the estimator: both
/// see the same input, the output error drives the estimator, and the updated
/// estimate enters the estimation model at the next step. Halts early, with
/// the last record flagged, when the error norm passes z_max, a non-finite
/// value appears, or the estimation side fails numerically. Truth-model
/// failures propagate: without valid data there is no experiment.
RunResult run_closed_loop(const ExperimentConfig& cfg);

struct SweepCase {
  std::string id;
  std::vector<int> permutation;
  std::vector<int> signs;  // filter sweep only: the tap sign pattern
  Verdict verdict = Verdict::Diverged;
  double final_mu_err = 0.0;
  long diverge_step = -1;  // -1 when the run was not halted early
  Vector<double> nu_limit;
  double target_set_distance = 0.0;  // distance of nu_limit to the output-map preimage of mu
};

struct SweepReport {
  std::vector<SweepCase> cases;
};

/// One closed-loop run per permutation of (1..param_dim), in lexicographic
/// order. Cases are independent and may execute concurrently.
SweepReport permutation_sweep(const ExperimentConfig& cfg, bool parallel = true);

/// The 6 canonical unit-row tap assignments (each with its converging
/// permutation) crossed with the 8 tap sign patterns: 48 runs. Requires
/// param_dim = 3 and output_dim = 1.
SweepReport filter_sign_sweep(const ExperimentConfig& cfg, bool parallel = true);

/// Distance from nu to the nearest vector the output map sends to mu_true,
/// i.e. to {s : offset + O_p |diag(scaling) s| = mu_true}.
double target_set_distance(const Vector<double>& nu, const EstimatorConfig<double>& estimator,
                           const Vector<double>& mu_true);

/// Reference experiment for the low-order plant: multisine input, unit-row
/// taps, permutation (2,1,3).
ExperimentConfig default_low_order_experiment();

/// Reference experiment for the Burgers plant: scalar mid-domain measurement,
/// offset start [1, 0.01], permutation (2,1).
ExperimentConfig default_burgers_experiment();

}  // namespace rcpe
