#include "sccdr/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace sccdr {

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kShuffleTag = 0x73687566;
constexpr std::uint64_t kIntraTag = 0x696e7472;
constexpr std::uint64_t kInterShuffleTag = 0x69736875;
constexpr std::uint64_t kMonitorTag = 0x6d6f6e69;
constexpr std::uint32_t kPositiveLayer = 3;

struct Batch {
  NodeBatch nodes;
  std::vector<int> row_of;  // slot -> row in nodes.anchors, -1 if absent

  int add(std::uint32_t slot) {
    int& r = row_of[slot];
    if (r < 0) {
      r = static_cast<int>(nodes.anchors.size());
      nodes.anchors.push_back(slot);
    }
    return r;
  }
};

struct IntraPlan {
  NodeBatch batch;
  IntraTerms terms;
};

IntraPlan plan_intra(const DomainGraph& g, std::span<const std::uint32_t> anchors,
                     const TrainConfig& cfg, std::uint64_t epoch, SplitMix64& rng) {
  Batch b{{}, std::vector<int>(g.num_nodes(), -1)};
  IntraTerms terms;
  SamplerConfig pos_cfg{static_cast<std::uint32_t>(cfg.loss.n_pos_intra), cfg.sampler.seed};
  const std::uint32_t opposite_users = g.num_users(), opposite_items = g.num_items();
  for (auto a : anchors) {
    if (g.degree(a) == 0) continue;
    const std::size_t partition = g.is_user_slot(a) ? opposite_items : opposite_users;
    terms.anchor.push_back(b.add(a));
    auto& pos = terms.positives.emplace_back();
    for (auto p : sample_neighbors(g, a, pos_cfg, epoch, kPositiveLayer)) pos.push_back(b.add(p));
    auto& neg = terms.negatives.emplace_back();
    if (g.degree(a) >= partition) continue;  // nothing to contrast against
    for (int k = 0; k < cfg.loss.n_neg_intra; ++k) neg.push_back(b.add(sample_non_neighbor(g, a, rng)));
  }
  IntraPlan plan;
  plan.batch = make_batch(g, std::move(b.nodes.anchors), cfg.sampler, epoch);
  plan.terms = std::move(terms);
  return plan;
}

struct InterPlan {
  NodeBatch source;
  NodeBatch target;
  InterTerms terms;
};

InterPlan plan_inter(const CrossDomainDataset& ds, const CurriculumState& cur,
                     std::span<const std::size_t> anchor_idx, int k_active, const TrainConfig& cfg,
                     std::uint64_t epoch) {
  Batch src{{}, std::vector<int>(ds.source.num_nodes(), -1)};
  Batch tgt{{}, std::vector<int>(ds.target.num_nodes(), -1)};
  InterTerms terms;
  for (auto i : anchor_idx) {
    const auto& pair = cur.anchors[i];
    terms.source_row.push_back(src.add(pair.source_user));
    terms.target_self.push_back(tgt.add(pair.target_user));
    auto& pos = terms.positives.emplace_back();
    for (auto p : ds.target.neighbors(pair.target_user)) pos.push_back(tgt.add(p));
    auto& neg = terms.negatives.emplace_back();
    for (int k = 0; k < k_active; ++k) neg.push_back(tgt.add(cur.pools[i][static_cast<std::size_t>(k)].slot));
  }
  InterPlan plan;
  plan.source = make_batch(ds.source, std::move(src.nodes.anchors), cfg.sampler, epoch);
  plan.target = make_batch(ds.target, std::move(tgt.nodes.anchors), cfg.sampler, epoch);
  plan.terms = std::move(terms);
  return plan;
}

std::vector<std::uint32_t> shuffled_slots(std::uint32_t n, std::uint64_t key) {
  std::vector<std::uint32_t> v(n);
  std::iota(v.begin(), v.end(), 0u);
  SplitMix64 rng(key);
  for (std::size_t i = n; i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
  return v;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t key) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  SplitMix64 rng(key);
  for (std::size_t i = n; i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
  return v;
}

template <typename T>
std::span<const T> chunk(const std::vector<T>& v, std::size_t b, std::size_t nb) {
  const std::size_t lo = v.size() * b / nb, hi = v.size() * (b + 1) / nb;
  return std::span<const T>(v.data() + lo, hi - lo);
}

struct Mean {
  double sum = 0;
  int n = 0;
  void add(Var v) {
    if (v.id < 0) return;
    sum += v.scalar();
    ++n;
  }
  double value() const { return n == 0 ? 0.0 : sum / n; }
};

Var sum_present(Var a, Var b) {
  if (a.id < 0) return b;
  if (b.id < 0) return a;
  return add(a, b);
}

void apply_step(const Tape& tape, Var loss, DomainModel* a, const EncoderVars* va, DomainModel* b,
                const EncoderVars* vb) {
  std::vector<Var> leaves;
  for (const auto* v : {va, vb})
    if (v) leaves.insert(leaves.end(), {v->embedding, v->w1, v->w2});
  auto grads = gradient(tape, loss, leaves);
  std::size_t k = 0;
  for (auto* m : {a, b}) {
    if (!m) continue;
    Tensor* params[] = {&m->params.embedding, &m->params.w1, &m->params.w2};
    adam_update(m->adam, params, std::span<const Tensor>(grads.data() + k, 3));
    k += 3;
  }
}

void check_finite(double v, const char* what, std::uint64_t epoch) {
  if (!std::isfinite(v))
    throw NumericError(std::string(what) + " is non-finite at epoch " + std::to_string(epoch));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::size_t intra_batch_count(const CrossDomainDataset& ds, const TrainConfig& cfg) {
  const std::size_t n = std::max(ds.source.num_nodes(), ds.target.num_nodes());
  return std::max<std::size_t>(1, (n + static_cast<std::size_t>(cfg.batch_size) - 1) /
                                      static_cast<std::size_t>(cfg.batch_size));
}

// Forward-only intra losses on a random anchor subset of each domain.
std::pair<double, double> monitor_intra(const CrossDomainDataset& ds, const TrainerState& st,
                                        const TrainConfig& cfg, std::uint64_t epoch) {
  double out[2];
  const DomainGraph* graphs[] = {&ds.source, &ds.target};
  const DomainModel* models[] = {&st.source, &st.target};
  for (int d = 0; d < 2; ++d) {
    const auto& g = *graphs[d];
    auto order = shuffled_slots(g.num_nodes(), derive_seed(cfg.seed, kMonitorTag, d, epoch));
    order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(cfg.monitor_anchors)));
    SplitMix64 rng(derive_seed(cfg.seed, kMonitorTag, d, epoch, 1));
    auto plan = plan_intra(g, order, cfg, epoch, rng);
    Tape tape;
    auto vars = record_params(tape, models[d]->params);
    Var loss = intra_bce_loss(encode(models[d]->params, vars, plan.batch), plan.terms);
    out[d] = loss.id < 0 ? 0.0 : loss.scalar();
  }
  return {out[0], out[1]};
}

// Forward-only inter losses on a random subset of overlapping users with
// every pool negative active.
std::pair<double, double> monitor_inter(const CrossDomainDataset& ds, const TrainerState& st,
                                        const CurriculumState& cur, const TrainConfig& cfg,
                                        std::uint64_t epoch) {
  auto order = shuffled_indices(cur.anchors.size(), derive_seed(cfg.seed, kMonitorTag, 2, epoch));
  order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(cfg.monitor_anchors)));
  auto plan = plan_inter(ds, cur, order, cur.n_neg, cfg, epoch);
  Tape tape;
  auto vs = record_params(tape, st.source.params);
  auto vt = record_params(tape, st.target.params);
  Var zs = encode(st.source.params, vs, plan.source);
  Var zt = encode(st.target.params, vt, plan.target);
  Var lu = inter_user_infonce(zs, zt, plan.terms, cur.n_neg, cfg.loss);
  Var ln = inter_neighbor_infonce(zs, zt, plan.terms, cur.n_neg, cfg.loss);
  return {lu.scalar(), ln.id < 0 ? 0.0 : ln.scalar()};
}

struct IntraBatchResult {
  Var loss_s;
  Var loss_t;
};

IntraBatchResult intra_batch_losses(const CrossDomainDataset& ds, const TrainerState& st,
                                    const EncoderVars& vs, const EncoderVars& vt,
                                    const std::vector<std::uint32_t>& order_s,
                                    const std::vector<std::uint32_t>& order_t, std::size_t b,
                                    std::size_t nb, const TrainConfig& cfg, std::uint64_t epoch) {
  SplitMix64 rng_s(derive_seed(cfg.seed, kIntraTag, 0, epoch, b));
  SplitMix64 rng_t(derive_seed(cfg.seed, kIntraTag, 1, epoch, b));
  auto plan_s = plan_intra(ds.source, chunk(order_s, b, nb), cfg, epoch, rng_s);
  auto plan_t = plan_intra(ds.target, chunk(order_t, b, nb), cfg, epoch, rng_t);
  Var ls = intra_bce_loss(encode(st.source.params, vs, plan_s.batch), plan_s.terms);
  Var lt = intra_bce_loss(encode(st.target.params, vt, plan_t.batch), plan_t.terms);
  return {ls, lt};
}

}  // namespace

std::string_view mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::Full: return "full";
    case TrainMode::NoCurriculum: return "no-curriculum";
    case TrainMode::NoStopgrad: return "no-stopgrad";
    case TrainMode::Mixed: return "mixed";
  }
  return "?";
}

TrainMode parse_mode(std::string_view name) {
  for (auto m : {TrainMode::Full, TrainMode::NoCurriculum, TrainMode::NoStopgrad, TrainMode::Mixed})
    if (mode_name(m) == name) return m;
  throw ConfigError("unknown mode '" + std::string(name) +
                    "' (expected full, no-curriculum, no-stopgrad or mixed)");
}

void validate(const TrainConfig& cfg) {
  validate(cfg.loss);
  if (cfg.epochs_intra < 1 || cfg.epochs_inter < 1) throw ConfigError("epoch counts must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(cfg.lr > 0)) throw ConfigError("lr must be > 0");
  if (cfg.weight_decay < 0) throw ConfigError("weight_decay must be >= 0");
  if (cfg.dim < 1) throw ConfigError("dim must be >= 1");
  if (cfg.sampler.fanout < 1) throw ConfigError("fanout must be >= 1");
  if (cfg.monitor_anchors < 1) throw ConfigError("monitor_anchors must be >= 1");
}

TrainerState init_trainer(const CrossDomainDataset& ds, const TrainConfig& cfg) {
  validate(cfg);
#if defined(__GLIBC__)
  // Per-step tensors are a few MB; keep them on the heap instead of
  // mapping and unmapping fresh pages every batch.
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
  TrainerState st;
  st.source.params = init_params(ds.source.num_nodes(), derive_seed(cfg.seed, 0), cfg.dim, cfg.dim, cfg.dim);
  st.target.params = init_params(ds.target.num_nodes(), derive_seed(cfg.seed, 1), cfg.dim, cfg.dim, cfg.dim);
  st.source.params.jk_include_input = st.target.params.jk_include_input = cfg.jk_include_input;
  const AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay};
  for (auto* m : {&st.source, &st.target}) {
    const Tensor* ps[] = {&m->params.embedding, &m->params.w1, &m->params.w2};
    m->adam = make_adam(adam, ps);
  }
  return st;
}

void train_stage_intra(const CrossDomainDataset& ds, TrainerState& st,
                       const CurriculumState& curriculum, const TrainConfig& cfg, TrainLog& log) {
  validate(cfg);
  const std::size_t nb = intra_batch_count(ds, cfg);
  for (int e = 0; e < cfg.epochs_intra; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t epoch = st.epoch;
    const auto order_s = shuffled_slots(ds.source.num_nodes(), derive_seed(cfg.seed, kShuffleTag, 0, epoch));
    const auto order_t = shuffled_slots(ds.target.num_nodes(), derive_seed(cfg.seed, kShuffleTag, 1, epoch));
    Mean ms, mt;
    for (std::size_t b = 0; b < nb; ++b) {
      Tape tape;
      auto vs = record_params(tape, st.source.params);
      auto vt = record_params(tape, st.target.params);
      auto [ls, lt] = intra_batch_losses(ds, st, vs, vt, order_s, order_t, b, nb, cfg, epoch);
      ms.add(ls);
      mt.add(lt);
      Var total = sum_present(ls, lt);
      if (total.id < 0) continue;
      apply_step(tape, scale(total, cfg.loss.lambda_intra), &st.source, &vs, &st.target, &vt);
    }
    auto [lu, ln] = monitor_inter(ds, st, curriculum, cfg, epoch);
    EpochRecord rec{static_cast<int>(epoch), "intra", ms.value(), mt.value(), lu, ln, seconds_since(t0)};
    check_finite(rec.intra_s + rec.intra_t, "intra loss", epoch);
    log.records.push_back(std::move(rec));
    ++st.epoch;
  }
}

void train_stage_inter(const CrossDomainDataset& ds, TrainerState& st,
                       const CurriculumState& curriculum, const TrainConfig& cfg, TrainLog& log) {
  validate(cfg);
  if (curriculum.anchors.empty()) throw DataError("train_stage_inter: empty overlap set");
  const bool stopgrad = cfg.mode != TrainMode::NoStopgrad;
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  for (int e = 0; e < cfg.epochs_inter; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t epoch = st.epoch;
    const int k = active_count(curriculum, std::min(e, curriculum.n_epoch - 1));
    const auto order = shuffled_indices(curriculum.anchors.size(), derive_seed(cfg.seed, kInterShuffleTag, epoch));
    Mean mu, mn;
    for (std::size_t lo = 0; lo < order.size(); lo += bs) {
      std::span<const std::size_t> idx(order.data() + lo, std::min(bs, order.size() - lo));
      auto plan = plan_inter(ds, curriculum, idx, k, cfg, epoch);
      Tape tape;
      auto vs = record_params(tape, st.source.params);
      auto vt = record_params(tape, st.target.params);
      Var zs = encode(st.source.params, vs, plan.source);
      if (stopgrad) zs = stop_gradient(zs);
      Var zt = encode(st.target.params, vt, plan.target);
      Var lu = inter_user_infonce(zs, zt, plan.terms, k, cfg.loss);
      Var ln = inter_neighbor_infonce(zs, zt, plan.terms, k, cfg.loss);
      mu.add(lu);
      mn.add(ln);
      Var total = scale(sum_present(lu, ln), cfg.loss.lambda_inter);
      if (stopgrad)
        apply_step(tape, total, &st.target, &vt, nullptr, nullptr);
      else
        apply_step(tape, total, &st.source, &vs, &st.target, &vt);
    }
    auto [is, it] = monitor_intra(ds, st, cfg, epoch);
    EpochRecord rec{static_cast<int>(epoch), "inter", is, it, mu.value(), mn.value(), seconds_since(t0)};
    check_finite(rec.inter_u + rec.inter_n, "inter loss", epoch);
    log.records.push_back(std::move(rec));
    ++st.epoch;
  }
}

void train_mixed(const CrossDomainDataset& ds, TrainerState& st, const CurriculumState& curriculum,
                 const TrainConfig& cfg, TrainLog& log) {
  validate(cfg);
  if (curriculum.anchors.empty()) throw DataError("train_mixed: empty overlap set");
  const std::size_t nb = intra_batch_count(ds, cfg);
  const int k = curriculum.n_neg;
  const int total_epochs = cfg.epochs_intra + cfg.epochs_inter;
  for (int e = 0; e < total_epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t epoch = st.epoch;
    const auto order_s = shuffled_slots(ds.source.num_nodes(), derive_seed(cfg.seed, kShuffleTag, 0, epoch));
    const auto order_t = shuffled_slots(ds.target.num_nodes(), derive_seed(cfg.seed, kShuffleTag, 1, epoch));
    const auto order_o = shuffled_indices(curriculum.anchors.size(), derive_seed(cfg.seed, kInterShuffleTag, epoch));
    Mean ms, mt, mu, mn;
    for (std::size_t b = 0; b < nb; ++b) {
      Tape tape;
      auto vs = record_params(tape, st.source.params);
      auto vt = record_params(tape, st.target.params);
      auto [ls, lt] = intra_batch_losses(ds, st, vs, vt, order_s, order_t, b, nb, cfg, epoch);
      ms.add(ls);
      mt.add(lt);
      Var intra = sum_present(ls, lt);
      Var inter{};
      const auto idx = chunk(order_o, b, nb);
      if (!idx.empty()) {
        auto plan = plan_inter(ds, curriculum, idx, k, cfg, epoch);
        Var zs = encode(st.source.params, vs, plan.source);
        Var zt = encode(st.target.params, vt, plan.target);
        Var lu = inter_user_infonce(zs, zt, plan.terms, k, cfg.loss);
        Var ln = inter_neighbor_infonce(zs, zt, plan.terms, k, cfg.loss);
        mu.add(lu);
        mn.add(ln);
        inter = sum_present(lu, ln);
      }
      Var total{};
      if (intra.id >= 0) total = scale(intra, cfg.loss.lambda_intra);
      if (inter.id >= 0) total = sum_present(total, scale(inter, cfg.loss.lambda_inter));
      if (total.id < 0) continue;
      apply_step(tape, total, &st.source, &vs, &st.target, &vt);
    }
    EpochRecord rec{static_cast<int>(epoch), "mixed", ms.value(), mt.value(), mu.value(), mn.value(),
                    seconds_since(t0)};
    check_finite(rec.intra_s + rec.intra_t + rec.inter_u + rec.inter_n, "mixed loss", epoch);
    log.records.push_back(std::move(rec));
    ++st.epoch;
  }
}

TrainResult train(const CrossDomainDataset& ds, const CentralityTable& source_centrality,
                  const CentralityTable& target_centrality, const TrainConfig& cfg) {
  validate(cfg);
  TrainResult r;
  r.curriculum = build_curriculum(ds, source_centrality, target_centrality, cfg.loss.n_neg_inter,
                                  cfg.epochs_inter, cfg.seed, cfg.mode == TrainMode::Full);
  r.state = init_trainer(ds, cfg);
  if (cfg.mode == TrainMode::Mixed) {
    train_mixed(ds, r.state, r.curriculum, cfg, r.log);
  } else {
    train_stage_intra(ds, r.state, r.curriculum, cfg, r.log);
    train_stage_inter(ds, r.state, r.curriculum, cfg, r.log);
  }
  return r;
}

void save_checkpoint(const std::filesystem::path& dir, const TrainerState& state,
                     const CrossDomainDataset& ds) {
  std::filesystem::create_directories(dir / "source");
  std::filesystem::create_directories(dir / "target");
  save_encoder(dir / "source" / "encoder.txt", state.source.params, ds.source);
  save_encoder(dir / "target" / "encoder.txt", state.target.params, ds.target);
}

std::pair<EncoderParams, EncoderParams> load_checkpoint(const std::filesystem::path& dir,
                                                        const CrossDomainDataset& ds) {
  return {load_encoder(dir / "source" / "encoder.txt", ds.source),
          load_encoder(dir / "target" / "encoder.txt", ds.target)};
}

void write_trainlog(const std::filesystem::path& path, const TrainLog& log) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch\tstage\tL_intra_s\tL_intra_t\tL_inter_u\tL_inter_n\tseconds\n";
  char buf[256];
  for (const auto& r : log.records) {
    std::snprintf(buf, sizeof buf, "%d\t%s\t%.9g\t%.9g\t%.9g\t%.9g\t%.3f\n", r.epoch, r.stage.c_str(),
                  r.intra_s, r.intra_t, r.inter_u, r.inter_n, r.seconds);
    out << buf;
  }
}

TrainLog read_trainlog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("epoch\tstage\t", 0) != 0) throw DataError(path.string() + ":1: not a trainlog");
  TrainLog log;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream row(line);
    EpochRecord r;
    if (!(row >> r.epoch >> r.stage >> r.intra_s >> r.intra_t >> r.inter_u >> r.inter_n >> r.seconds))
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed trainlog row");
    log.records.push_back(std::move(r));
  }
  return log;
}

}  // namespace sccdr
