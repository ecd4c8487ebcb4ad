#include <iostream>

#include "common.hpp"
#include "topo/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic topology datasets, persistent homology and FILTR-style diagram prediction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "topo 0.1.0");
  topo::cli::register_data_commands(app);
  topo::cli::register_analysis_commands(app);
  topo::cli::register_model_commands(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const topo::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
