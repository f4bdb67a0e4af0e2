#include <CLI11.hpp>
#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

#include "cli/commands.hpp"
#include "cli/io.hpp"
#include "esbmix/partitions.hpp"
#include "esbmix/sticks.hpp"

namespace {

using esbmix::cli::json;
using esbmix::cli::RunOptions;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("esbmix");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  spdlog::set_pattern("[%l] %v");
  if (const char* levels = std::getenv("ESBMIX_LOG")) spdlog::cfg::helpers::load_levels(levels);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Exchangeable stick-breaking priors: prior analytics and mixture fitting"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out = ".";
  unsigned threads = 1;
  bool mc_fallback = false;
  bool header = false;
  std::string data;
  std::string fault;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    if (config_required) opt->required();
    sub->add_option("--seed", seed, "Random seed (overrides the config)");
    sub->add_option("--out", out, "Output directory")->capture_default_str();
    sub->add_option("--threads", threads, "Worker threads")->check(CLI::Range(1u, 1024u))->capture_default_str();
  };

  auto* prior_kn = app.add_subcommand("prior-kn", "Monte Carlo pmf of K_n for a list of priors");
  add_common(prior_kn, true);
  auto* prior_ekn = app.add_subcommand("prior-ekn", "Monte Carlo curve n -> E[K_n] for a list of priors");
  add_common(prior_ekn, true);
  auto* order_prob = app.add_subcommand("order-prob", "P[w_j >= w_{j+1}]: closed form and Monte Carlo");
  add_common(order_prob, true);
  auto* alloc_prob = app.add_subcommand("alloc-prob", "Allocation probabilities by partition sums");
  add_common(alloc_prob, true);
  alloc_prob->add_flag("--mc-fallback", mc_fallback, "Use Monte Carlo only when max d exceeds the enumeration cap");
  auto* fit = app.add_subcommand("fit", "Slice-within-Gibbs mixture fit");
  add_common(fit, true);
  fit->add_option("--data", data, "Data CSV (1 or 2 numeric columns)")->check(CLI::ExistingFile);
  fit->add_flag("--header", header, "The data file starts with a header line");
  auto* verify = app.add_subcommand("verify", "Run the oracle suite and write a pass/fail report");
  add_common(verify, false);
  verify->add_option("--inject-fault", fault, "Deliberately break one formula (ordering_sign)");

  CLI11_PARSE(app, argc, argv);

  RunOptions options;
  options.out = out;
  options.threads = threads;
  options.mc_fallback = mc_fallback;
  auto* active = app.get_subcommands().front();
  if (active->count("--seed") > 0) options.seed = seed;
  if (fit->parsed()) {
    if (fit->count("--header") > 0) options.header = header;
    if (fit->count("--data") > 0) options.data = data;
  }
  if (verify->parsed() && verify->count("--inject-fault") > 0) options.inject_fault = fault;

  try {
    const json config = config_path.empty() ? json() : esbmix::cli::load_json_file(config_path);
    const std::string name = active->get_name();
    if (name == "prior-kn") return esbmix::cli::cmd_prior_kn(config, options);
    if (name == "prior-ekn") return esbmix::cli::cmd_prior_ekn(config, options);
    if (name == "order-prob") return esbmix::cli::cmd_order_prob(config, options);
    if (name == "alloc-prob") return esbmix::cli::cmd_alloc_prob(config, options);
    if (name == "fit") return esbmix::cli::cmd_fit(config, options);
    return esbmix::cli::cmd_verify(config, options);
  } catch (const esbmix::cli::ConfigError& e) {
    spdlog::error("configuration: {}", e.what());
    return 2;
  } catch (const esbmix::cli::DataError& e) {
    spdlog::error("data: {}", e.what());
    return 2;
  } catch (const esbmix::ExtensionCapExceeded& e) {
    spdlog::error("{}", e.what());
    return 3;
  } catch (const esbmix::PartitionCapExceeded& e) {
    spdlog::error("{}", e.what());
    return 3;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 4;
  }
}
