#pragma once

#include <string>
#include <vector>

#include "rcpe/harness/experiment.hpp"

namespace rcpe {

/// Records serialized as
///   k,z_1..z_ly,znorm,nu_1..nu_lmu,muhat_1..muhat_lmu,muerr,theta_1..theta_ltheta,diverged
/// with floating point at 17 significant digits for exact round-trips.
std::string to_csv(const std::vector<TimeSeriesRecord>& records, Index output_dim,
                   Index param_dim);

/// Sweep report serialized as
///   case_id,permutation,signs,verdict,final_muerr,diverge_step
std::string to_csv(const SweepReport& report);

void export_csv(const std::vector<TimeSeriesRecord>& records, Index output_dim, Index param_dim,
                const std::string& path);
void export_csv(const SweepReport& report, const std::string& path);

/// Burgers field snapshots, one row per sampled step: k,t,u_1..u_N. Simulates
/// the truth grid for the given horizon and keeps every stride-th step.
std::string burgers_field_csv(const BurgersParams& params, const Vector<double>& mu,
                              long horizon, long stride);
void export_burgers_field_csv(const BurgersParams& params, const Vector<double>& mu,
                              long horizon, long stride, const std::string& path);

}  // namespace rcpe
