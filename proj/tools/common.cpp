#include "common.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <thread>

#include "topo/error.hpp"
#include "topo/io.hpp"

namespace topo::cli {

unsigned default_jobs() {
  if (const char* env = std::getenv("TOPO_JOBS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring invalid TOPO_JOBS='" << env << "'\n";
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void add_jobs_option(CLI::App* app, unsigned& jobs) {
  jobs = default_jobs();
  app->add_option("-j,--jobs", jobs, "worker threads (default: $TOPO_JOBS or all cores)")
      ->check(CLI::PositiveNumber);
}

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const auto threads = std::min<std::size_t>(std::max(jobs, 1u), std::max<std::size_t>(n, 1));
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

nlohmann::json run_record(const std::string& command, const nlohmann::json& params) {
  return {{"tool", "topo"}, {"version", "0.1.0"}, {"command", command}, {"params", params}};
}

void write_sidecar(const std::filesystem::path& output, const std::string& command, const nlohmann::json& params) {
  auto path = output;
  path += ".json";
  auto out = open_output(path);
  out << run_record(command, params).dump(1) << '\n';
}

void write_run_file(const std::filesystem::path& dir, const std::string& command, const nlohmann::json& params) {
  auto out = open_output(dir / "run.json");
  out << run_record(command, params).dump(1) << '\n';
}

std::vector<std::filesystem::path> expand_csv_inputs(const std::vector<std::string>& inputs) {
  std::vector<std::filesystem::path> out;
  for (const auto& s : inputs) {
    const std::filesystem::path p(s);
    if (std::filesystem::is_directory(p)) {
      std::vector<std::filesystem::path> found;
      for (const auto& e : std::filesystem::directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ".csv") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      if (!std::filesystem::exists(p)) fail(Errc::io_error, "no such file: '" + s + "'");
      out.push_back(p);
    }
  }
  return out;
}

PersistenceDiagram read_dim(const std::filesystem::path& path, int dim) { return read_diagram_csv(path, dim); }

void print_value(double value) { std::cout << format_double(value) << '\n'; }

}  // namespace topo::cli
