#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sccdr/pipeline.hpp"

namespace fs = std::filesystem;
using namespace sccdr;

namespace {

std::string config_keys_help() {
  std::ostringstream out;
  out << "\nConfig file keys (`key = value`, '#' starts a comment):\n";
  for (const auto& k : config_keys())
    out << "  " << k.name << " (default: " << k.default_value << ")  " << k.help << '\n';
  return out.str();
}

std::vector<int> parse_cutoffs(const std::string& text) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(part, &used);
    } catch (const std::exception&) {
      throw ConfigError("--topn: cannot parse '" + part + "'");
    }
    if (used != part.size()) throw ConfigError("--topn: cannot parse '" + part + "'");
    if (v <= 0) throw ConfigError("--topn: cutoffs must be positive, got " + part);
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("--topn: no cutoffs given");
  return out;
}

RunConfig base_config(const std::optional<std::string>& file) {
  RunConfig cfg;
  if (file) apply_config_file(cfg, *file);
  return cfg;
}

void apply_seed(RunConfig& cfg, const std::optional<std::uint64_t>& seed) {
  if (seed) set_key(cfg, "seed", std::to_string(*seed));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sccdr: separated-stage contrastive cross-domain recommendation"};
  app.footer(config_keys_help());
  app.require_subcommand(1);

  std::optional<std::string> config_file;
  std::optional<std::uint64_t> seed;
  std::string out_dir, data_dir, model_dir, mode = "full", topn = "50,100";
  bool include_train = false, dot_product = false;
  unsigned threads = 0;
  int num_seeds = 3;

  auto* synth = app.add_subcommand("synth", "generate a planted-cluster cross-domain dataset");
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--config", config_file, "config file with `key = value` lines");
  synth->add_option("--seed", seed, "overrides the `seed` key (default: 42)");

  auto* prep = app.add_subcommand("prepare", "build the dataset and write both centrality tables");
  prep->add_option("--data", data_dir, "dataset directory (source.tsv, target.tsv, overlap.tsv)")->required();
  prep->add_option("--config", config_file, "config file with `key = value` lines");
  prep->add_option("--seed", seed, "overrides the `seed` key (default: 42)");

  auto* tr = app.add_subcommand("train", "train both encoders");
  tr->add_option("--data", data_dir, "prepared dataset directory")->required();
  tr->add_option("--mode", mode, "full | no-curriculum | no-stopgrad | mixed")
      ->capture_default_str()
      ->check(CLI::IsMember({"full", "no-curriculum", "no-stopgrad", "mixed"}));
  tr->add_option("--out", out_dir, "model directory")->required();
  tr->add_option("--config", config_file, "config file applied after DATA/train.conf");
  tr->add_option("--seed", seed, "overrides the `seed` key (default: 42)");

  auto* ev = app.add_subcommand("eval", "HIT@N of a trained model on the test rows");
  ev->add_option("--model", model_dir, "model directory written by train")->required();
  ev->add_option("--data", data_dir, "dataset directory")->required();
  ev->add_option("--topn", topn, "comma-separated cutoffs")->capture_default_str();
  ev->add_flag("--include-train-items", include_train, "keep the user's training items as candidates (default: false)");
  ev->add_flag("--dot-product", dot_product, "score by dot product instead of cosine (default: false)");
  ev->add_option("--threads", threads, "scoring threads, 0 = SCCDR_THREADS or all cores")->capture_default_str();

  auto* diag = app.add_subcommand("diag", "diagnostics");
  diag->require_subcommand(1);
  auto* stab = diag->add_subcommand("stability", "train full and mixed per seed, write stability.tsv");
  stab->add_option("--data", data_dir, "prepared dataset directory")->required();
  stab->add_option("--seeds", num_seeds, "number of seeds (1..K)")->capture_default_str()->check(CLI::PositiveNumber);
  stab->add_option("--out", out_dir, "output directory")->required();
  stab->add_option("--config", config_file, "config file applied after DATA/train.conf");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*synth) {
      auto cfg = base_config(config_file);
      apply_seed(cfg, seed);
      generate(cfg.synth, out_dir);
      write_effective_config(fs::path(out_dir) / "effective_config.txt", cfg);
    } else if (*prep) {
      auto cfg = base_config(config_file);
      apply_seed(cfg, seed);
      prepare(data_dir, cfg);
    } else if (*tr) {
      auto cfg = training_config(data_dir, config_file ? std::optional<fs::path>(*config_file) : std::nullopt);
      apply_seed(cfg, seed);
      set_key(cfg, "mode", mode);
      run_training(load_prepared(data_dir, cfg), cfg, out_dir);
    } else if (*ev) {
      const auto cutoffs = parse_cutoffs(topn);
      EvalOptions opts;
      opts.include_train_items = include_train;
      opts.dot_product = dot_product;
      opts.threads = threads;
      const auto rep = run_eval(model_dir, data_dir, cutoffs, opts);
      for (const auto& [n, v] : rep.hit_at) std::cout << "hit@" << n << '\t' << v << '\n';
    } else if (*stab) {
      auto cfg = training_config(data_dir, config_file ? std::optional<fs::path>(*config_file) : std::nullopt);
      std::vector<std::uint64_t> seeds;
      for (int s = 1; s <= num_seeds; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
      const auto rep = run_stability(data_dir, cfg, seeds, out_dir);
      for (const auto& r : rep.rows) std::cout << r.mode << '\t' << r.loss << '\t' << r.std_final_half << '\n';
    }
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n(run with --help for usage)\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
