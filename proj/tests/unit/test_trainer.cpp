#include <fstream>
#include <sstream>

#include "../support/fixtures.hpp"
#include "doctest.h"
#include "sccdr/pipeline.hpp"

using namespace sccdr;
using namespace sccdr::testing;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  fs::path dir;
  Prepared prepared;
  TrainConfig cfg;
};

Fixture fixture(const std::string& name, std::uint64_t seed = 21) {
  Fixture f;
  f.dir = fs::temp_directory_path() / ("sccdr_trainer_" + name);
  fs::remove_all(f.dir);
  generate(small_synth(seed), f.dir);
  RunConfig rc;
  set_key(rc, "seed", std::to_string(seed));
  f.prepared = prepare(f.dir, rc);
  f.cfg = rc.train;
  f.cfg.batch_size = 64;
  f.cfg.epochs_intra = 2;
  f.cfg.epochs_inter = 2;
  f.cfg.dim = 16;
  f.cfg.monitor_anchors = 32;
  f.cfg.sampler.seed = seed;
  return f;
}

CurriculumState curriculum(const Fixture& f, bool enabled = true) {
  return build_curriculum(f.prepared.dataset, f.prepared.source_centrality, f.prepared.target_centrality,
                          f.cfg.loss.n_neg_inter, f.cfg.epochs_inter, f.cfg.seed, enabled);
}

bool same(const EncoderParams& a, const EncoderParams& b) {
  return a.embedding == b.embedding && a.w1 == b.w1 && a.w2 == b.w2;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void check_same_losses(const TrainLog& a, const TrainLog& b) {
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].intra_s == b.records[i].intra_s);
    CHECK(a.records[i].intra_t == b.records[i].intra_t);
    CHECK(a.records[i].inter_u == b.records[i].inter_u);
    CHECK(a.records[i].inter_n == b.records[i].inter_n);
  }
}

}  // namespace

TEST_CASE("lambda_intra = 0 without weight decay leaves parameters unchanged") {
  auto f = fixture("lambda0");
  f.cfg.loss.lambda_intra = 0;
  f.cfg.weight_decay = 0;
  auto st = init_trainer(f.prepared.dataset, f.cfg);
  const auto before = st;
  TrainLog log;
  train_stage_intra(f.prepared.dataset, st, curriculum(f), f.cfg, log);
  CHECK(same(st.source.params, before.source.params));
  CHECK(same(st.target.params, before.target.params));
  CHECK(log.records.size() == 2);
}

TEST_CASE("training is deterministic") {
  auto f = fixture("determinism");
  const auto a = train(f.prepared.dataset, f.prepared.source_centrality, f.prepared.target_centrality, f.cfg);
  const auto b = train(f.prepared.dataset, f.prepared.source_centrality, f.prepared.target_centrality, f.cfg);
  check_same_losses(a.log, b.log);
  CHECK(same(a.state.target.params, b.state.target.params));
  CHECK(same(a.state.source.params, b.state.source.params));
}

TEST_CASE("intra training lowers the intra loss") {
  auto f = fixture("descent");
  f.cfg.epochs_intra = 8;
  f.cfg.lr = 1e-2;
  auto st = init_trainer(f.prepared.dataset, f.cfg);
  TrainLog log;
  train_stage_intra(f.prepared.dataset, st, curriculum(f), f.cfg, log);
  CHECK(log.records.back().intra_t < log.records.front().intra_t);
  CHECK(log.records.back().intra_s < log.records.front().intra_s);
}

TEST_CASE("stop-gradient freezes the source; no-stopgrad moves it") {
  auto f = fixture("freeze");
  auto cur = curriculum(f);
  auto st = init_trainer(f.prepared.dataset, f.cfg);
  TrainLog log;
  train_stage_intra(f.prepared.dataset, st, cur, f.cfg, log);
  for (auto mode : {TrainMode::Full, TrainMode::NoCurriculum, TrainMode::NoStopgrad}) {
    auto copy = st;
    f.cfg.mode = mode;
    cur.enabled = mode == TrainMode::Full;
    train_stage_inter(f.prepared.dataset, copy, cur, f.cfg, log);
    CHECK(same(copy.source.params, st.source.params) == (mode != TrainMode::NoStopgrad));
    CHECK_FALSE(same(copy.target.params, st.target.params));
  }
}

TEST_CASE("shared stage 1 matches an end-to-end run") {
  auto f = fixture("shared");
  f.cfg.mode = TrainMode::NoCurriculum;
  const auto direct = train(f.prepared.dataset, f.prepared.source_centrality, f.prepared.target_centrality, f.cfg);
  auto cur = curriculum(f, true);
  auto st = init_trainer(f.prepared.dataset, f.cfg);
  TrainLog log;
  train_stage_intra(f.prepared.dataset, st, cur, f.cfg, log);
  cur.enabled = false;
  train_stage_inter(f.prepared.dataset, st, cur, f.cfg, log);
  check_same_losses(direct.log, log);
  CHECK(same(direct.state.target.params, st.target.params));
}

TEST_CASE("disabled curriculum activates every negative") {
  auto f = fixture("curriculum_off");
  auto on = curriculum(f, true);
  auto off = curriculum(f, false);
  CHECK(active_count(on, 0) == 10);
  CHECK(active_count(off, 0) == 20);
  auto a = init_trainer(f.prepared.dataset, f.cfg), b = a;
  TrainLog la, lb;
  f.cfg.epochs_inter = 1;
  f.cfg.mode = TrainMode::NoCurriculum;
  train_stage_inter(f.prepared.dataset, a, off, f.cfg, la);
  auto forced = on;
  forced.enabled = false;
  train_stage_inter(f.prepared.dataset, b, forced, f.cfg, lb);
  check_same_losses(la, lb);
}

TEST_CASE("mixed run length depends only on the epoch total") {
  auto f = fixture("mixed_len");
  f.cfg.mode = TrainMode::Mixed;
  f.cfg.epochs_intra = 1;
  f.cfg.epochs_inter = 2;
  auto a = train(f.prepared.dataset, f.prepared.source_centrality, f.prepared.target_centrality, f.cfg);
  f.cfg.epochs_intra = 2;
  f.cfg.epochs_inter = 1;
  auto b = train(f.prepared.dataset, f.prepared.source_centrality, f.prepared.target_centrality, f.cfg);
  CHECK(a.log.records.size() == 3);
  CHECK(b.log.records.size() == 3);
  for (const auto& r : a.log.records) CHECK(r.stage == "mixed");
}

TEST_CASE("mixed with lambda_inter = 0 reproduces the intra stage") {
  auto f = fixture("mixed_eq");
  f.cfg.loss.lambda_inter = 0;
  auto cur = curriculum(f, false);
  auto a = init_trainer(f.prepared.dataset, f.cfg), b = a;
  TrainLog la, lb;
  f.cfg.epochs_intra = 3;
  train_stage_intra(f.prepared.dataset, a, cur, f.cfg, la);
  f.cfg.mode = TrainMode::Mixed;
  f.cfg.epochs_intra = 2;
  f.cfg.epochs_inter = 1;
  train_mixed(f.prepared.dataset, b, cur, f.cfg, lb);
  REQUIRE(la.records.size() == lb.records.size());
  for (std::size_t i = 0; i < la.records.size(); ++i) {
    CHECK(la.records[i].intra_s == lb.records[i].intra_s);
    CHECK(la.records[i].intra_t == lb.records[i].intra_t);
  }
  CHECK(same(a.target.params, b.target.params));
  CHECK(same(a.source.params, b.source.params));
}

TEST_CASE("checkpoint save -> load -> save is byte identical") {
  auto f = fixture("ckpt");
  auto result = train(f.prepared.dataset, f.prepared.source_centrality, f.prepared.target_centrality, f.cfg);
  const auto d1 = f.dir / "ck1", d2 = f.dir / "ck2";
  save_checkpoint(d1, result.state, f.prepared.dataset);
  auto [s, t] = load_checkpoint(d1, f.prepared.dataset);
  TrainerState st = result.state;
  st.source.params = s;
  st.target.params = t;
  save_checkpoint(d2, st, f.prepared.dataset);
  CHECK(slurp(d1 / "source" / "encoder.txt") == slurp(d2 / "source" / "encoder.txt"));
  CHECK(slurp(d1 / "target" / "encoder.txt") == slurp(d2 / "target" / "encoder.txt"));
  CHECK(same(t, result.state.target.params));
}

TEST_CASE("checkpoint with a wrong dimension header is rejected") {
  auto f = fixture("ckpt_bad");
  auto result = train(f.prepared.dataset, f.prepared.source_centrality, f.prepared.target_centrality, f.cfg);
  save_checkpoint(f.dir / "ck", result.state, f.prepared.dataset);
  const auto path = f.dir / "ck" / "target" / "encoder.txt";
  auto text = slurp(path);
  const auto eol = text.find('\n');
  auto header = text.substr(0, eol);
  header.replace(header.rfind(' ') + 1, std::string::npos, "32");
  std::ofstream(path, std::ios::binary | std::ios::trunc) << header << text.substr(eol);
  try {
    load_checkpoint(f.dir / "ck", f.prepared.dataset);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("32") != std::string::npos);
    CHECK(msg.find("16") != std::string::npos);
  }
}

TEST_CASE("trainlog round trip") {
  TrainLog log;
  log.records.push_back({0, "intra", 1.5, 1.25, 3.0, 3.125, 0.5});
  log.records.push_back({1, "inter", 1.0, 0.75, 2.5, 2.0, 0.25});
  const auto path = fs::temp_directory_path() / "sccdr_trainlog.tsv";
  write_trainlog(path, log);
  auto back = read_trainlog(path);
  check_same_losses(log, back);
  CHECK(back.records[1].stage == "inter");
  fs::remove(path);
}

TEST_CASE("invalid training configs are rejected") {
  TrainConfig cfg;
  cfg.loss.n_neg_inter = 7;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = TrainConfig{};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  CHECK_THROWS_AS(parse_mode("fast"), ConfigError);
  CHECK(parse_mode("no-stopgrad") == TrainMode::NoStopgrad);
}
