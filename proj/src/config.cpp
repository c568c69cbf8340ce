#include "sccdr/config.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace sccdr {

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end)
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + text + "'");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Shortest form that still round-trips.
  for (int prec = 1; prec <= 17; ++prec) {
    char s[32];
    std::snprintf(s, sizeof s, "%.*g", prec, v);
    if (std::strtod(s, nullptr) == v) return s;
  }
  return buf;
}
std::string fmt(bool v) { return v ? "true" : "false"; }
template <typename T>
std::string fmt(T v) requires std::is_integral_v<T> { return std::to_string(v); }

struct Binding {
  ConfigKey key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define SCCDR_FIELD(NAME, HELP, EXPR, TYPE)                                                    \
  Binding {                                                                                    \
    ConfigKey{NAME, HELP, ""},                                                                 \
        [](RunConfig& c, const std::string& v) { EXPR = parse_value<TYPE>(NAME, v); },         \
        [](const RunConfig& c) { return fmt(static_cast<TYPE>(EXPR)); }                        \
  }

template <typename T>
T parse_value(const std::string& key, const std::string& v) {
  if constexpr (std::is_same_v<T, bool>)
    return parse_bool(key, v);
  else
    return parse_number<T>(key, v);
}

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = [] {
    std::vector<Binding> t = {
        SCCDR_FIELD("seed", "master seed (synthesis, sampling, initialization)", c.train.seed, std::uint64_t),
        SCCDR_FIELD("clusters", "synth: planted clusters K", c.synth.clusters, int),
        SCCDR_FIELD("users_source", "synth: users in the source domain", c.synth.users_source, int),
        SCCDR_FIELD("users_target", "synth: users in the target domain", c.synth.users_target, int),
        SCCDR_FIELD("overlap", "synth: users present in both domains", c.synth.overlap, int),
        SCCDR_FIELD("items_source", "synth: source items", c.synth.items_source, int),
        SCCDR_FIELD("items_target", "synth: target items", c.synth.items_target, int),
        SCCDR_FIELD("degree_source", "synth: interactions per source user", c.synth.degree_source, int),
        SCCDR_FIELD("degree_target", "synth: interactions per target user", c.synth.degree_target, int),
        SCCDR_FIELD("p_in", "synth: probability an edge stays in the user's cluster", c.synth.p_in, double),
        SCCDR_FIELD("katz_alpha", "Katz attenuation factor", c.katz.alpha, double),
        SCCDR_FIELD("katz_beta", "Katz initial centrality", c.katz.beta, double),
        SCCDR_FIELD("katz_tol", "Katz convergence threshold (L1 of iterate delta)", c.katz.tol, double),
        SCCDR_FIELD("katz_max_iter", "Katz iteration cap", c.katz.max_iter, int),
        SCCDR_FIELD("katz_normalize", "L2-normalize centrality vectors", c.katz.normalize, bool),
        SCCDR_FIELD("katz_alpha_auto", "clamp alpha to 0.9/lambda_max when it would diverge", c.katz_alpha_auto, bool),
        SCCDR_FIELD("fanout", "sampled neighbors per node per encoder layer", c.train.sampler.fanout, std::uint32_t),
        SCCDR_FIELD("tau", "InfoNCE temperature", c.train.loss.tau, double),
        SCCDR_FIELD("n_pos_intra", "sampled neighbors per intra anchor", c.train.loss.n_pos_intra, int),
        SCCDR_FIELD("n_neg_intra", "sampled non-neighbors per intra anchor", c.train.loss.n_neg_intra, int),
        SCCDR_FIELD("n_neg_inter", "negative pool size per overlapping user (even)", c.train.loss.n_neg_inter, int),
        SCCDR_FIELD("lambda_intra", "weight of the intra losses", c.train.loss.lambda_intra, double),
        SCCDR_FIELD("lambda_inter", "weight of the inter losses", c.train.loss.lambda_inter, double),
        SCCDR_FIELD("denominator_negatives_only", "drop the positive from InfoNCE denominators", c.train.loss.denominator_negatives_only, bool),
        SCCDR_FIELD("epochs_intra", "epochs of the intra stage", c.train.epochs_intra, int),
        SCCDR_FIELD("epochs_inter", "epochs of the inter stage", c.train.epochs_inter, int),
        SCCDR_FIELD("batch_size", "anchors per batch", c.train.batch_size, int),
        SCCDR_FIELD("lr", "Adam learning rate", c.train.lr, double),
        SCCDR_FIELD("weight_decay", "L2 term added to gradients", c.train.weight_decay, double),
        SCCDR_FIELD("dim", "embedding and layer width", c.train.dim, int),
        SCCDR_FIELD("jk_include_input", "also concatenate the layer-0 embedding", c.train.jk_include_input, bool),
        SCCDR_FIELD("monitor_anchors", "anchors used to log the losses of the idle stage", c.train.monitor_anchors, int),
    };
    t.push_back({ConfigKey{"mode", "full | no-curriculum | no-stopgrad | mixed", ""},
                 [](RunConfig& c, const std::string& v) { c.train.mode = parse_mode(v); },
                 [](const RunConfig& c) { return std::string(mode_name(c.train.mode)); }});
    const RunConfig defaults;
    for (auto& b : t) b.key.default_value = b.get(defaults);
    return t;
  }();
  return table;
}

#undef SCCDR_FIELD

const Binding& find(const std::string& key) {
  for (const auto& b : bindings())
    if (b.key.name == key) return b;
  throw ConfigError("unknown config key '" + key + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const auto& b : bindings()) k.push_back(b.key);
    return k;
  }();
  return keys;
}

void set_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  find(key).set(cfg, value);
  if (key == "seed") {
    cfg.synth.seed = cfg.train.seed;
    cfg.train.sampler.seed = cfg.train.seed;
  }
}

std::string get_key(const RunConfig& cfg, const std::string& key) { return find(key).get(cfg); }

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    try {
      set_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
}

std::string render_config(const RunConfig& cfg) {
  std::ostringstream out;
  for (const auto& b : bindings()) out << b.key.name << " = " << b.get(cfg) << '\n';
  return out.str();
}

void write_effective_config(const std::filesystem::path& path, const RunConfig& cfg) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << render_config(cfg);
}

}  // namespace sccdr
