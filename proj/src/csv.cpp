#include "rcpe/harness/csv.hpp"

#include <cstdio>
#include <fstream>

#include "rcpe/errors.hpp"
#include "rcpe/models/burgers.hpp"

namespace rcpe {

namespace {

void append_double(std::string& out, double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  out += buffer;
}

void append_vector(std::string& out, const Vector<double>& v) {
  for (Index i = 0; i < v.size(); ++i) {
    out += ',';
    append_double(out, v[i]);
  }
}

void write_file(const std::string& text, const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open " + path + " for writing");
  file.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!file) throw IoError("write failed for " + path);
}

}  // namespace

std::string to_csv(const std::vector<TimeSeriesRecord>& records, Index output_dim,
                   Index param_dim) {
  const Index coeff_dim = output_dim * param_dim;
  std::string out = "k";
  for (Index i = 1; i <= output_dim; ++i) out += ",z_" + std::to_string(i);
  out += ",znorm";
  for (Index i = 1; i <= param_dim; ++i) out += ",nu_" + std::to_string(i);
  for (Index i = 1; i <= param_dim; ++i) out += ",muhat_" + std::to_string(i);
  out += ",muerr";
  for (Index i = 1; i <= coeff_dim; ++i) out += ",theta_" + std::to_string(i);
  out += ",diverged\n";

  for (const auto& r : records) {
    out += std::to_string(r.k);
    append_vector(out, r.z);
    out += ',';
    append_double(out, r.z_norm);
    append_vector(out, r.nu);
    append_vector(out, r.mu_hat);
    out += ',';
    append_double(out, r.mu_err);
    append_vector(out, r.theta);
    out += r.diverged ? ",1\n" : ",0\n";
  }
  return out;
}

std::string to_csv(const SweepReport& report) {
  std::string out = "case_id,permutation,signs,verdict,final_muerr,diverge_step\n";
  for (const auto& c : report.cases) {
    out += c.id;
    out += ',';
    for (size_t i = 0; i < c.permutation.size(); ++i) {
      if (i) out += '-';
      out += std::to_string(c.permutation[i]);
    }
    out += ',';
    for (int s : c.signs) out += s >= 0 ? '+' : '-';
    out += ',';
    out += to_string(c.verdict);
    out += ',';
    append_double(out, c.final_mu_err);
    out += ',' + std::to_string(c.diverge_step) + '\n';
  }
  return out;
}

void export_csv(const std::vector<TimeSeriesRecord>& records, Index output_dim, Index param_dim,
                const std::string& path) {
  write_file(to_csv(records, output_dim, param_dim), path);
}

void export_csv(const SweepReport& report, const std::string& path) {
  write_file(to_csv(report), path);
}

std::string burgers_field_csv(const BurgersParams& params, const Vector<double>& mu,
                              long horizon, long stride) {
  if (mu.size() != 2) throw InvalidConfig("Burgers field export expects two parameters");
  if (stride < 1) throw InvalidConfig("field snapshot stride must be at least 1");
  auto grid = make_burgers_grid<double>(params.grid_size, params.dt, params.c_max, mu[0], mu[1]);

  std::string out = "k,t";
  for (Index j = 1; j <= grid.size(); ++j) out += ",u_" + std::to_string(j);
  out += '\n';
  const auto append_row = [&out](const BurgersGrid<double>& g) {
    out += std::to_string(g.step);
    out += ',';
    append_double(out, g.dt * static_cast<double>(g.step));
    append_vector(out, g.u);
    out += '\n';
  };
  append_row(grid);
  for (long k = 1; k <= horizon; ++k) {
    grid = burgers_step(std::move(grid));
    if (k % stride == 0) append_row(grid);
  }
  return out;
}

void export_burgers_field_csv(const BurgersParams& params, const Vector<double>& mu,
                              long horizon, long stride, const std::string& path) {
  write_file(burgers_field_csv(params, mu, horizon, stride), path);
}

}  // namespace rcpe
