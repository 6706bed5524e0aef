#include <cstdio>
#include <exception>
#include <string>

#include "hwnas/errors.hpp"
#include "hwnas/pipeline.hpp"
#include "hwnas/version.hpp"
#include "vendor/CLI11.hpp"

namespace {

int run(int argc, char** argv) {
  CLI::App app{"hardware-aware MLP architecture search and compression"};
  app.set_version_flag("--version", std::string(hwnas::kToolVersion));
  app.require_subcommand(1);

  std::string config_path;
  CLI::App* search = app.add_subcommand("search", "evolve architectures against a dataset");
  search->add_option("--config", config_path, "run config JSON")->required();

  std::string ls_config, ls_genome, ls_from;
  double ls_target = 0.0, ls_min_acc = 0.0;
  CLI::App* localsearch =
      app.add_subcommand("localsearch", "prune and quantize one architecture");
  localsearch->add_option("--config", ls_config, "run config JSON")->required();
  localsearch
      ->add_option("--genome", ls_genome, "genome key from a search run, or a model JSON file")
      ->required();
  localsearch->add_option("--from", ls_from, "search run directory for genome key lookup");
  CLI::Option* target_opt =
      localsearch->add_option("--target-sparsity", ls_target, "override the config target");
  CLI::Option* min_acc_opt =
      localsearch->add_option("--min-accuracy", ls_min_acc, "override the config floor");

  std::string report_dir;
  CLI::App* report = app.add_subcommand("report", "tabulate a finished run");
  report->add_option("run", report_dir, "run directory")->required();

  std::string plot_dir;
  hwnas::PlotRequest plot_req;
  CLI::App* plot = app.add_subcommand("plot", "scatter two trial metrics as CSV + SVG");
  plot->add_option("run", plot_dir, "search run directory")->required();
  plot->add_option("--x", plot_req.x_metric, "x metric column")->required();
  plot->add_option("--y", plot_req.y_metric, "y metric column")->required();
  plot->add_flag("--logx", plot_req.log_x, "log10 x axis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (search->parsed()) {
    hwnas::cmd_search(hwnas::load_run_config(config_path));
  } else if (localsearch->parsed()) {
    hwnas::LocalSearchRequest request;
    request.genome = ls_genome;
    request.from_run = ls_from;
    if (target_opt->count() > 0) request.target_sparsity = ls_target;
    if (min_acc_opt->count() > 0) request.min_accuracy = ls_min_acc;
    hwnas::cmd_localsearch(hwnas::load_run_config(ls_config), request);
  } else if (report->parsed()) {
    hwnas::cmd_report(report_dir);
  } else if (plot->parsed()) {
    hwnas::cmd_plot(plot_dir, plot_req);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const hwnas::ConfigError& e) {
    std::fprintf(stderr, "hwnas: %s\n", e.what());
    return 1;
  } catch (const hwnas::IoError& e) {
    std::fprintf(stderr, "hwnas: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "hwnas: internal error: %s\n", e.what());
    return 2;
  }
}
