// Command line front end. All numerics go through the C API in selinf.h; this
// file owns ingestion (CSV), the output files, and exit codes:
//   0 success, 1 solver/internal error, 2 empty selection, 64 usage error.
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "selinf.h"

namespace {

constexpr int kExitUsage = 64;
constexpr int kExitEmpty = 2;
constexpr int kExitInternal = 1;

int exit_code_for(int status) {
  switch (status) {
    case SELINF_OK:
      return 0;
    case SELINF_ERR_INVALID:
      return kExitUsage;
    case SELINF_ERR_EMPTY_SELECTION:
      return kExitEmpty;
    default:
      return kExitInternal;
  }
}

struct Table {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;  // column major
  std::size_t rows = 0;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

Table read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  Table table;
  table.names = split_csv_line(line);
  if (table.names.empty()) throw std::runtime_error(path + ": empty header");
  table.columns.resize(table.names.size());

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != table.names.size())
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": ragged row");
    for (std::size_t j = 0; j < cells.size(); ++j) {
      std::size_t used = 0;
      double value = 0.0;
      try {
        value = std::stod(cells[j], &used);
      } catch (...) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": non-numeric cell '" +
                                 cells[j] + "'");
      }
      if (used != cells[j].size() || !std::isfinite(value))
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad cell '" +
                                 cells[j] + "'");
      table.columns[j].push_back(value);
    }
    ++table.rows;
  }
  if (table.rows == 0) throw std::runtime_error(path + ": no data rows");
  return table;
}

void standardize_columns(std::vector<std::vector<double>>& cols) {
  for (auto& col : cols) {
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= static_cast<double>(col.size());
    double ss = 0.0;
    for (double v : col) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(col.size() - 1));
    if (!(sd > 0.0)) throw std::runtime_error("constant column cannot be standardized");
    for (double& v : col) v = (v - mean) / sd;
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

int emit(const selinf_result* result, const std::string& json_path, const std::string& csv_path) {
  const char* json = selinf_result_json(result);
  if (json_path.empty()) std::cout << json;
  else write_text(json_path, json);
  const char* csv = selinf_result_csv(result);
  if (csv && !csv_path.empty()) write_text(csv_path, csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Approximate maximum-likelihood inference after randomized convex selection"};
  app.require_subcommand(1);

  // --- infer ---------------------------------------------------------------
  auto* infer = app.add_subcommand("infer", "Selective inference on a CSV dataset");
  std::string csv_path, response, query = "lasso", lambda = "theory", target = "partial";
  std::string out_path;
  double rand_ratio = 0.5, level = 0.90, sigma2 = 0.0, ms_alpha = 0.20, slope_scale = 1.0;
  std::uint64_t seed = 0;
  bool no_standardize = false;
  infer->add_option("--csv", csv_path, "input CSV with a header row")->required();
  infer->add_option("--response", response, "name of the response column")->required();
  infer->add_option("--query", query, "lasso|screening|slope|lasso2|ms-slope");
  infer->add_option("--lambda", lambda, "theory|cv.min|cv.1se|VALUE");
  infer->add_option("--rand-ratio", rand_ratio, "randomization variance / noise variance");
  infer->add_option("--level", level, "nominal interval coverage (default 0.90)");
  infer->add_option("--target", target, "partial|full");
  infer->add_option("--seed", seed, "RNG seed");
  infer->add_option("--sigma2", sigma2, "known noise variance; omit to estimate");
  infer->add_option("--ms-alpha", ms_alpha, "marginal screening level");
  infer->add_option("--slope-scale", slope_scale, "multiplier on the SLOPE weight ramp");
  infer->add_flag("--no-standardize", no_standardize, "skip column standardization");
  infer->add_option("--out", out_path, "write the JSON report here (default stdout)");

  // --- simulate ------------------------------------------------------------
  auto* simulate = app.add_subcommand("simulate", "Coverage/length/power experiment harness");
  std::string config_path, out_prefix = "selinf_summary";
  std::string sim_method = "lasso", sim_lambda = "theory", sim_target = "partial",
              sim_signal = "type4";
  long long sim_n = 200, sim_p = 50, sim_flat_s = 20;
  double sim_rho = 0.35, sim_ratio = 0.5, sim_level = 0.90, sim_amplitude = 1.0;
  int sim_reps = 500;
  std::uint64_t sim_seed = 1;
  std::vector<double> sim_snr;
  simulate->add_option("--config", config_path, "JSON config file (flags override nothing)");
  simulate->add_option("--n", sim_n);
  simulate->add_option("--p", sim_p);
  simulate->add_option("--rho", sim_rho);
  simulate->add_option("--snr", sim_snr, "SNR grid values");
  simulate->add_option("--reps", sim_reps);
  simulate->add_option("--seed", sim_seed);
  simulate->add_option("--method", sim_method, "lasso|lasso2|ms-slope");
  simulate->add_option("--lambda", sim_lambda, "theory|cv.min|cv.1se|VALUE");
  simulate->add_option("--target", sim_target, "partial|full");
  simulate->add_option("--signal", sim_signal, "type4|flat");
  simulate->add_option("--flat-s", sim_flat_s, "sparsity of the flat signal");
  simulate->add_option("--amplitude", sim_amplitude, "amplitude of the flat signal");
  simulate->add_option("--rand-ratio", sim_ratio);
  simulate->add_option("--level", sim_level);
  simulate->add_option("--out-prefix", out_prefix, "writes <prefix>.json and <prefix>.csv");

  // --- pivot-check ----------------------------------------------------------
  auto* pivot = app.add_subcommand("pivot-check", "ECDF + KS uniformity of file-drawer pivots");
  double pv_beta = 0.0, pv_tau = 0.0, pv_eta2 = 1.0;
  int pv_draws = 10000;
  std::uint64_t pv_seed = 0;
  std::string pv_out;
  pivot->add_option("--beta", pv_beta)->required();
  pivot->add_option("--tau", pv_tau);
  pivot->add_option("--eta2", pv_eta2);
  pivot->add_option("--draws", pv_draws);
  pivot->add_option("--seed", pv_seed);
  pivot->add_option("--out", pv_out, "write the ECDF CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (infer->parsed()) {
      Table table = read_csv(csv_path);
      std::ptrdiff_t response_idx = -1;
      for (std::size_t j = 0; j < table.names.size(); ++j)
        if (table.names[j] == response) response_idx = static_cast<std::ptrdiff_t>(j);
      if (response_idx < 0) {
        std::cerr << "selinf: response column '" << response << "' not found\n";
        return kExitUsage;
      }
      if (table.names.size() < 2) {
        std::cerr << "selinf: need at least one predictor column\n";
        return kExitUsage;
      }

      std::vector<double> y = table.columns[static_cast<std::size_t>(response_idx)];
      std::vector<std::vector<double>> xcols;
      std::vector<std::string> xnames;
      for (std::size_t j = 0; j < table.names.size(); ++j) {
        if (static_cast<std::ptrdiff_t>(j) == response_idx) continue;
        xcols.push_back(table.columns[j]);
        xnames.push_back(table.names[j]);
      }
      if (!no_standardize) {
        standardize_columns(xcols);
        double mean = 0.0;
        for (double v : y) mean += v;
        mean /= static_cast<double>(y.size());
        for (double& v : y) v -= mean;
      }

      const int64_t n = static_cast<int64_t>(table.rows);
      const int64_t p = static_cast<int64_t>(xcols.size());
      std::vector<double> xdata(static_cast<std::size_t>(n * p));
      for (int64_t j = 0; j < p; ++j)
        for (int64_t i = 0; i < n; ++i) xdata[j * n + i] = xcols[j][i];
      std::vector<const char*> name_ptrs;
      for (const auto& name : xnames) name_ptrs.push_back(name.c_str());

      selinf_infer_options opts;
      selinf_infer_options_init(&opts);
      opts.query = query.c_str();
      opts.lambda = lambda.c_str();
      opts.rand_ratio = rand_ratio;
      opts.level = level;
      opts.target = target.c_str();
      opts.seed = seed;
      opts.standardize = no_standardize ? 0 : 1;
      opts.sigma2 = sigma2;
      opts.ms_alpha = ms_alpha;
      opts.slope_lam_scale = slope_scale;

      selinf_result* result = nullptr;
      const int status =
          selinf_infer(xdata.data(), n, p, y.data(), name_ptrs.data(), &opts, &result);
      if (status != SELINF_OK) {
        std::cerr << "selinf: " << selinf_last_error() << "\n";
        return exit_code_for(status);
      }
      emit(result, out_path, "");
      selinf_result_free(result);
      return 0;
    }

    if (simulate->parsed()) {
      std::string config_json;
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
          std::cerr << "selinf: cannot open " << config_path << "\n";
          return kExitUsage;
        }
        std::stringstream buffer;
        buffer << in.rdbuf();
        config_json = buffer.str();
      } else {
        std::ostringstream cfg;
        cfg << "{\"n\":" << sim_n << ",\"p\":" << sim_p << ",\"rho\":" << sim_rho
            << ",\"reps\":" << sim_reps << ",\"seed\":" << sim_seed << ",\"method\":\""
            << sim_method << "\",\"lambda\":\"" << sim_lambda << "\",\"target\":\"" << sim_target
            << "\",\"signal\":\"" << sim_signal << "\",\"flat_s\":" << sim_flat_s
            << ",\"flat_amplitude\":" << sim_amplitude << ",\"rand_ratio\":" << sim_ratio
            << ",\"level\":" << sim_level;
        if (!sim_snr.empty()) {
          cfg << ",\"snr_grid\":[";
          for (std::size_t i = 0; i < sim_snr.size(); ++i)
            cfg << (i ? "," : "") << sim_snr[i];
          cfg << "]";
        }
        cfg << "}";
        config_json = cfg.str();
      }

      selinf_result* result = nullptr;
      const int status = selinf_simulate(config_json.c_str(), &result);
      if (status != SELINF_OK) {
        std::cerr << "selinf: " << selinf_last_error() << "\n";
        return exit_code_for(status);
      }
      emit(result, out_prefix + ".json", out_prefix + ".csv");
      std::cout << "wrote " << out_prefix << ".json and " << out_prefix << ".csv\n";
      selinf_result_free(result);
      return 0;
    }

    if (pivot->parsed()) {
      if (pv_draws <= 0) {
        std::cerr << "selinf: --draws must be positive\n";
        return kExitUsage;
      }
      selinf_result* result = nullptr;
      const int status = selinf_pivot_check(pv_beta, pv_tau, pv_eta2, pv_draws, pv_seed, &result);
      if (status != SELINF_OK) {
        std::cerr << "selinf: " << selinf_last_error() << "\n";
        return exit_code_for(status);
      }
      emit(result, "", pv_out);
      selinf_result_free(result);
      return 0;
    }
  } catch (const std::exception& err) {
    std::cerr << "selinf: " << err.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
