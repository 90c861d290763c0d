// hypsep: command-line driver for the collusive-user separation pipeline.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "hypsep/config.hpp"
#include "hypsep/error.hpp"
#include "hypsep/pipeline.hpp"
#include "hypsep/synth.hpp"

namespace {

using hypsep::config::PipelineConfig;

struct Stage {
  const char* name;
  const char* help;
};

constexpr Stage kStages[] = {
    {"synth", "generate a synthetic corpus into --out"},
    {"ingest", "validate inputs and write canonical corpus files"},
    {"influencers", "rank accounts by distinct retweeters and keep the top p"},
    {"curves", "cumulative engaged users as a function of p"},
    {"features", "interaction (F) and user-level (U) feature matrices"},
    {"embed", "HypHC embedding of the interaction features"},
    {"reduce", "baseline reductions (PCA, FA, SE) of the interaction features"},
    {"classify", "random-forest F1 for every separation and feature set"},
    {"evaluate", "classify plus inter-class centroid distances"},
};

void run(const std::string& stage, const PipelineConfig& cfg) {
  if (stage == "synth") {
    auto sc = cfg.synth;
    sc.seed = cfg.experiment.seed;
    hypsep::synth::write(hypsep::synth::generate(sc), cfg.out);
    return;
  }
  hypsep::pipeline::Pipeline p(cfg);
  if (stage == "ingest") p.ingest(true);
  else if (stage == "influencers") p.influencers(true);
  else if (stage == "curves") p.curves(true);
  else if (stage == "features") p.features(true);
  else if (stage == "embed") p.embed(true);
  else if (stage == "reduce") p.reduce_selected(true);
  else if (stage == "classify") p.classify(true);
  else if (stage == "evaluate") p.evaluate(true);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collusive-user separation with retweet interaction features and hyperbolic clustering"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  std::size_t threads = 1;
  std::map<std::string, std::string> flags;
  app.add_option("--config", config_path, "flat key = value configuration file");
  app.add_option("--threads", threads, "worker threads; output does not depend on it")->check(CLI::PositiveNumber);
  for (const auto& key : hypsep::config::Registry::instance().keys())
    app.add_option_function<std::string>(
        "--" + key.name, [&flags, name = key.name](const std::string& v) { flags[name] = v; }, key.help)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  for (const auto& s : kStages) app.add_subcommand(s.name, s.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return 1;
  }

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    PipelineConfig cfg;
    if (!config_path.empty())
      hypsep::config::apply(cfg, hypsep::config::parse_text(hypsep::csv::read_text(config_path), config_path));
    hypsep::config::apply(cfg, flags);
    cfg.threads = threads;
    hypsep::config::validate(cfg);
    std::cerr << "# resolved config\n" << hypsep::config::resolved(cfg) << "threads = " << threads << "\n";
    run(stage, cfg);
  } catch (const hypsep::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return 1;
  } catch (const hypsep::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const hypsep::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
