#pragma once

#include <CLI11.hpp>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "topo/persistence.hpp"

namespace topo::cli {

/// --jobs default: $TOPO_JOBS if set, else the hardware concurrency.
unsigned default_jobs();
void add_jobs_option(CLI::App* app, unsigned& jobs);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first
/// failure (lowest index) after all workers finish.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

/// Provenance record written next to an output file as `<path>.json`, or
/// inside an output directory as `run.json`.
nlohmann::json run_record(const std::string& command, const nlohmann::json& params);
void write_sidecar(const std::filesystem::path& output, const std::string& command, const nlohmann::json& params);
void write_run_file(const std::filesystem::path& dir, const std::string& command, const nlohmann::json& params);

/// Expands directories to their sorted `*.csv` entries; files are kept as given.
std::vector<std::filesystem::path> expand_csv_inputs(const std::vector<std::string>& inputs);

PersistenceDiagram read_dim(const std::filesystem::path& path, int dim);

/// Prints a double with full precision on its own line.
void print_value(double value);

void register_data_commands(CLI::App& app);
void register_analysis_commands(CLI::App& app);
void register_model_commands(CLI::App& app);

}  // namespace topo::cli
