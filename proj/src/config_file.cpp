#include "rcpe/harness/config_file.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rcpe/errors.hpp"

namespace rcpe {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double parsed = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0')
    throw InvalidConfig(key + ": cannot parse '" + value + "' as a number");
  return parsed;
}

long parse_long(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const long parsed = std::strtol(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0')
    throw InvalidConfig(key + ": cannot parse '" + value + "' as an integer");
  return parsed;
}

std::vector<std::string> split(const std::string& value, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream stream(value);
  while (std::getline(stream, part, sep)) parts.push_back(trim(part));
  return parts;
}

Vector<double> parse_vector(const std::string& key, const std::string& value) {
  const auto parts = split(value, ',');
  Vector<double> v(static_cast<Index>(parts.size()));
  for (size_t i = 0; i < parts.size(); ++i) v[static_cast<Index>(i)] = parse_double(key, parts[i]);
  return v;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  const auto parts = split(value, ',');
  std::vector<int> v(parts.size());
  for (size_t i = 0; i < parts.size(); ++i) v[i] = static_cast<int>(parse_long(key, parts[i]));
  return v;
}

// Rows separated by ';', entries by ','.
Matrix<double> parse_matrix(const std::string& key, const std::string& value) {
  const auto rows = split(value, ';');
  if (rows.empty()) throw InvalidConfig(key + ": empty matrix");
  std::vector<Vector<double>> parsed;
  parsed.reserve(rows.size());
  for (const auto& row : rows) parsed.push_back(parse_vector(key, row));
  Matrix<double> m(static_cast<Index>(parsed.size()), parsed.front().size());
  for (size_t r = 0; r < parsed.size(); ++r) {
    if (parsed[r].size() != m.cols()) throw InvalidConfig(key + ": ragged matrix rows");
    m.row(static_cast<Index>(r)) = parsed[r].transpose();
  }
  return m;
}

PlantId parse_plant(const std::string& value) {
  if (value == "low_order") return PlantId::LowOrder;
  if (value == "burgers") return PlantId::Burgers;
  throw InvalidConfig("plant must be 'low_order' or 'burgers', got '" + value + "'");
}

}  // namespace

std::map<std::string, std::string> read_key_values(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw IoError("cannot open config file " + path);
  std::map<std::string, std::string> settings;
  std::string line;
  long line_no = 0;
  while (std::getline(file, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line.erase(comment);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos)
      throw InvalidConfig(path + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));
    if (key.empty()) throw InvalidConfig(path + ":" + std::to_string(line_no) + ": empty key");
    settings[key] = value;
  }
  return settings;
}

ExperimentConfig make_default_experiment(PlantId plant) {
  return plant == PlantId::LowOrder ? default_low_order_experiment()
                                    : default_burgers_experiment();
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "plant") {
    // Handled up front by build_experiment; accept silently so override maps
    // can be applied wholesale.
    parse_plant(value);
  } else if (key == "mu") {
    cfg.mu_true = parse_vector(key, value);
  } else if (key == "x0") {
    cfg.x0_truth = parse_vector(key, value);
  } else if (key == "x0_hat") {
    cfg.x0_estimate = parse_vector(key, value);
  } else if (key == "horizon") {
    cfg.horizon = parse_long(key, value);
  } else if (key == "estimator_stride") {
    cfg.estimator_stride = parse_long(key, value);
  } else if (key == "lambda") {
    cfg.estimator.forgetting = parse_double(key, value);
  } else if (key == "beta") {
    cfg.estimator.regularization_scale = parse_double(key, value);
  } else if (key == "permutation") {
    cfg.estimator.permutation = PermutationMatrix(parse_int_list(key, value));
  } else if (key.rfind("filter_", 0) == 0) {
    const long tap = parse_long(key, key.substr(7));
    if (tap < 1) throw InvalidConfig(key + ": tap index must be >= 1");
    if (static_cast<size_t>(tap) > cfg.estimator.filter_coeffs.size())
      cfg.estimator.filter_coeffs.resize(static_cast<size_t>(tap));
    cfg.estimator.filter_coeffs[static_cast<size_t>(tap - 1)] = parse_matrix(key, value);
  } else if (key == "mu_bar") {
    cfg.estimator.offset = parse_vector(key, value);
  } else if (key == "scaling") {
    cfg.estimator.scaling = parse_vector(key, value);
  } else if (key == "mu_upper") {
    cfg.estimator.upper_bound = parse_vector(key, value);
  } else if (key == "z_max") {
    cfg.z_max = parse_double(key, value);
  } else if (key == "eps_conv") {
    cfg.eps_conv = parse_double(key, value);
  } else if (key == "out") {
    cfg.out_path = value;
  } else if (key == "field_out") {
    cfg.field_out_path = value;
  } else if (key == "field_out_stride") {
    cfg.field_out_stride = parse_long(key, value);
  } else if (key == "sweep") {
    if (value == "single")
      cfg.sweep = SweepMode::Single;
    else if (value == "permutations")
      cfg.sweep = SweepMode::Permutations;
    else if (value == "filter_signs")
      cfg.sweep = SweepMode::FilterSigns;
    else
      throw InvalidConfig("sweep must be single, permutations, or filter_signs");
  } else if (key == "burgers_n") {
    cfg.burgers.grid_size = parse_long(key, value);
  } else if (key == "burgers_dt") {
    cfg.burgers.dt = parse_double(key, value);
  } else if (key == "burgers_cmax") {
    cfg.burgers.c_max = parse_double(key, value);
  } else if (key == "gd_gamma") {
    cfg.baseline.gamma = parse_double(key, value);
  } else if (key == "gd_iters") {
    cfg.baseline.iters = static_cast<int>(parse_long(key, value));
  } else if (key == "gd_delta") {
    cfg.baseline.delta = parse_double(key, value);
  } else if (key == "gd_step_tol") {
    cfg.baseline.step_tol = parse_double(key, value);
  } else if (key == "gd_data_horizon") {
    cfg.baseline.data_horizon = parse_long(key, value);
  } else if (key == "gd_mu0") {
    cfg.baseline.mu0 = parse_vector(key, value);
  } else {
    throw InvalidConfig("unknown configuration key '" + key + "'");
  }
}

ExperimentConfig build_experiment(const std::map<std::string, std::string>& settings) {
  PlantId plant = PlantId::LowOrder;
  if (auto it = settings.find("plant"); it != settings.end()) plant = parse_plant(it->second);
  ExperimentConfig cfg = make_default_experiment(plant);
  for (const auto& [key, value] : settings) apply_setting(cfg, key, value);
  return cfg;
}

}  // namespace rcpe
