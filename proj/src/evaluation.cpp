#include "sccdr/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <thread>

#include "json.hpp"

namespace sccdr {

std::size_t rank_of(std::span<const double> scores, std::uint32_t truth,
                    std::span<const std::uint32_t> excluded) {
  const double s = scores[truth];
  std::size_t ahead = 0;
  std::size_t ex = 0;  // excluded is sorted
  for (std::uint32_t i = 0; i < scores.size(); ++i) {
    while (ex < excluded.size() && excluded[ex] < i) ++ex;
    if (ex < excluded.size() && excluded[ex] == i) continue;
    if (i == truth) continue;
    if (scores[i] > s || (scores[i] == s && i < truth)) ++ahead;
  }
  return ahead + 1;
}

namespace {

unsigned eval_threads(const EvalOptions& opts) {
  if (opts.threads > 0) return opts.threads;
  if (const char* env = std::getenv("SCCDR_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

EvalReport hit_at_n(const Tensor& emb, const CrossDomainDataset& ds, const std::vector<int>& cutoffs,
                    const EvalOptions& opts) {
  if (cutoffs.empty()) throw ConfigError("hit_at_n: no cutoffs");
  for (int c : cutoffs)
    if (c <= 0) throw ConfigError("hit_at_n: cutoff must be > 0, got " + std::to_string(c));
  if (ds.splits.empty()) throw DataError("hit_at_n: dataset has no test rows");
  const auto& g = ds.target;
  if (static_cast<std::uint32_t>(emb.rows()) != g.num_nodes())
    throw DataError("hit_at_n: embedding rows do not match the target graph");

  const std::uint32_t nu = g.num_users(), ni = g.num_items();
  Tensor items = emb.bottomRows(ni);
  if (!opts.dot_product) {
    for (Eigen::Index r = 0; r < items.rows(); ++r) items.row(r) /= items.row(r).norm() + kCosineEps;
  }

  std::vector<std::size_t> ranks(ds.splits.size());
  auto work = [&](std::size_t lo, std::size_t hi) {
    std::vector<double> scores(ni);
    std::vector<std::uint32_t> excluded;
    for (std::size_t r = lo; r < hi; ++r) {
      const auto& row = ds.splits[r];
      Eigen::RowVectorXd u = emb.row(row.user);
      if (!opts.dot_product) u /= u.norm() + kCosineEps;
      Eigen::Map<Eigen::VectorXd>(scores.data(), ni) = items * u.transpose();
      excluded.clear();
      if (!opts.include_train_items)
        for (auto s : g.neighbors(row.user)) excluded.push_back(s - nu);
      ranks[r] = rank_of(scores, row.test_item, excluded);
    }
  };
  const unsigned nt = std::min<unsigned>(eval_threads(opts), static_cast<unsigned>(ds.splits.size()));
  if (nt <= 1) {
    work(0, ds.splits.size());
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < nt; ++t)
      pool.emplace_back(work, ds.splits.size() * t / nt, ds.splits.size() * (t + 1) / nt);
  }

  EvalReport rep;
  rep.num_test_rows = ds.splits.size();
  for (int c : cutoffs) {
    std::size_t hits = 0;
    for (auto rk : ranks) hits += rk <= static_cast<std::size_t>(c);
    rep.hit_at[c] = static_cast<double>(hits) / static_cast<double>(ranks.size());
  }
  return rep;
}

EvalReport hit_at_n(const EncoderParams& target_params, const CrossDomainDataset& ds,
                    const std::vector<int>& cutoffs, const EvalOptions& opts) {
  return hit_at_n(encode_all(target_params, ds.target), ds, cutoffs, opts);
}

void write_metrics(const std::filesystem::path& path, const EvalReport& report) {
  nlohmann::ordered_json j;
  for (const auto& [n, v] : report.hit_at) j["hit@" + std::to_string(n)] = v;
  j["num_test_rows"] = report.num_test_rows;
  j["mode"] = report.mode;
  j["seed"] = report.seed;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

double std_final_half(std::span<const double> series) {
  const auto window = series.subspan(series.size() / 2);
  if (window.size() < 2) return 0.0;
  double mean = 0;
  for (double v : window) mean += v;
  mean /= static_cast<double>(window.size());
  double ss = 0;
  for (double v : window) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(window.size() - 1));
}

namespace {

const char* const kLossNames[] = {"L_intra_s", "L_intra_t", "L_inter_u", "L_inter_n", "L_inter"};

std::vector<double> series(const TrainLog& log, int which) {
  std::vector<double> out;
  out.reserve(log.records.size());
  for (const auto& r : log.records) {
    switch (which) {
      case 0: out.push_back(r.intra_s); break;
      case 1: out.push_back(r.intra_t); break;
      case 2: out.push_back(r.inter_u); break;
      case 3: out.push_back(r.inter_n); break;
      default: out.push_back(r.inter_total()); break;
    }
  }
  return out;
}

}  // namespace

StabilityReport stability_report(const std::vector<TaggedLog>& logs) {
  StabilityReport rep;
  if (logs.empty()) return rep;
  const auto epochs = logs.front().log.records.size();
  for (const auto& l : logs)
    if (l.log.records.size() != epochs)
      throw DataError("stability_report: mismatched epoch counts (" + std::to_string(epochs) +
                      " vs " + std::to_string(l.log.records.size()) + " for mode " + l.mode + ")");

  std::vector<std::string> modes;
  for (const auto& l : logs)
    if (std::find(modes.begin(), modes.end(), l.mode) == modes.end()) modes.push_back(l.mode);
  for (const auto& mode : modes) {
    for (int k = 0; k < 5; ++k) {
      double acc = 0;
      int n = 0;
      for (const auto& l : logs) {
        if (l.mode != mode) continue;
        acc += std_final_half(series(l.log, k));
        ++n;
      }
      rep.rows.push_back({mode, kLossNames[k], acc / n});
    }
  }

  std::set<std::uint64_t> seeds;
  for (const auto& l : logs) seeds.insert(l.seed);
  for (auto seed : seeds) {
    const TaggedLog* full = nullptr;
    const TaggedLog* mixed = nullptr;
    for (const auto& l : logs) {
      if (l.seed != seed) continue;
      if (l.mode == "full") full = &l;
      if (l.mode == "mixed") mixed = &l;
    }
    if (!full || !mixed) continue;
    for (int k = 2; k < 5; ++k)
      rep.pairs.push_back({seed, kLossNames[k], std_final_half(series(full->log, k)),
                           std_final_half(series(mixed->log, k))});
  }
  return rep;
}

void write_stability(const std::filesystem::path& dir, const StabilityReport& report) {
  std::filesystem::create_directories(dir);
  char buf[64];
  {
    std::ofstream out(dir / "stability.tsv", std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write stability.tsv");
    out << "mode\tloss\tstd_final_half\n";
    for (const auto& r : report.rows) {
      std::snprintf(buf, sizeof buf, "%.9g", r.std_final_half);
      out << r.mode << '\t' << r.loss << '\t' << buf << '\n';
    }
  }
  std::ofstream out(dir / "stability_pairs.tsv", std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write stability_pairs.tsv");
  out << "seed\tloss\tstd_full\tstd_mixed\tseparated_lower\n";
  for (const auto& p : report.pairs) {
    out << p.seed << '\t' << p.loss << '\t';
    std::snprintf(buf, sizeof buf, "%.9g", p.full);
    out << buf << '\t';
    std::snprintf(buf, sizeof buf, "%.9g", p.mixed);
    out << buf << '\t' << (p.full < p.mixed ? 1 : 0) << '\n';
  }
}

}  // namespace sccdr
