#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fusereg/fusereg.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::string out = ".";
  std::uint64_t seed = 1;
  bool verbose = false;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config, "flat key=value config file");
  sub->add_option("--out", args.out, "output directory for reports and artifacts");
  sub->add_option("--seed", args.seed, "master seed for synthetic draws");
  sub->add_flag("--verbose", args.verbose, "include timing in the report and print progress");
}

int run(const std::string& command, const CommonArgs& args) {
  fusereg::ConfigMap cfg;
  if (!args.config.empty()) cfg = fusereg::ConfigMap::parse_file(args.config);

  fusereg::CliContext ctx;
  ctx.out_dir = args.out != "." ? args.out : cfg.get_or("out.dir", ".");
  ctx.seed = args.seed;
  ctx.verbose = args.verbose;

  const nlohmann::json report = fusereg::harness::run_command(command, cfg, ctx);
  if (!report.contains("metric") || report["metric"].is_null()) {
    std::cout << command << " ok (report in " << (ctx.out_dir / "report.json").string() << ")\n";
  } else {
    std::cout << command << " ok: " << report["metric"]["name"].get<std::string>() << " = "
              << fusereg::format_double(report["metric"]["value"].get<double>())
              << " (report in " << (ctx.out_dir / "report.json").string() << ")\n";
  }
  if (args.verbose && report.contains("wall_seconds"))
    std::cerr << "wall seconds: " << report["wall_seconds"].get<double>() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"regression fusion across partially observed domains"};
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"fit", "fit a single-domain regression"},
      {"fuse", "fit the fused two-domain estimator"},
      {"project", "project the fused estimator onto domain 1"},
      {"shared-rep", "one-domain predictor from domain-2 labels only"},
      {"cross-domain", "domain-1 fit reused when the second class is degenerate"},
      {"side-info", "linear correction of a nonlinear domain-2 fit"},
      {"synth", "draw a synthetic training corpus to CSV"},
      {"pca", "principal components of a CSV table"},
      {"oracle-check", "run the exact-oracle property suite"},
      {"evaluate", "score a stored predictor on a test CSV"}};

  CommonArgs args;
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), args);

  try {
    app.parse(argc, argv);
    return run(app.get_subcommands().front()->get_name(), args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const fusereg::config_error& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const fusereg::data_error& e) {
    std::cerr << "error: data: " << e.what() << "\n";
    return 3;
  } catch (const fusereg::numeric_error& e) {
    std::cerr << "error: numerical: " << e.what() << "\n";
    return 4;
  } catch (const fusereg::property_error& e) {
    std::cerr << "error: property: " << e.what() << "\n";
    return 5;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: data: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 4;
  }
}
