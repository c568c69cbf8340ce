#include "sccdr/encoder.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace sccdr {

namespace {

Tensor uniform_tensor(Eigen::Index rows, Eigen::Index cols, double bound, SplitMix64& rng) {
  Tensor t(rows, cols);
  for (Eigen::Index k = 0; k < t.size(); ++k) t.data()[k] = (2.0 * rng.uniform() - 1.0) * bound;
  return t;
}

// Dense slot -> row position map, reset per call.
class PositionMap {
 public:
  explicit PositionMap(std::size_t n) : pos_(n, -1) {}

  int insert(std::uint32_t slot, std::vector<int>& order_rows, std::vector<std::uint32_t>& order) {
    int& p = pos_.at(slot);
    if (p < 0) {
      p = static_cast<int>(order.size());
      order.push_back(slot);
      order_rows.push_back(static_cast<int>(slot));
    }
    return p;
  }
  int at(std::uint32_t slot) const { return pos_.at(slot); }

 private:
  std::vector<int> pos_;
};

}  // namespace

EncoderParams init_params(std::uint32_t num_nodes, std::uint64_t seed, int d0, int d1, int d2) {
  if (d0 < 1 || d1 < 1 || d2 < 1) throw ConfigError("init_params: dimensions must be >= 1");
  EncoderParams p;
  SplitMix64 emb_rng(derive_seed(seed, 0x656d62));
  p.embedding = uniform_tensor(num_nodes, d0, 1.0 / std::sqrt(static_cast<double>(d0)), emb_rng);
  SplitMix64 w_rng(derive_seed(seed, 0x77));
  p.w1 = uniform_tensor(d0, d1, std::sqrt(6.0 / (d0 + d1)), w_rng);
  p.w2 = uniform_tensor(d1, d2, std::sqrt(6.0 / (d1 + d2)), w_rng);
  return p;
}

NodeBatch make_batch(const DomainGraph& g, std::vector<std::uint32_t> anchors,
                     const SamplerConfig& cfg, std::uint64_t epoch) {
  auto draw = [&](std::uint32_t slot, std::uint32_t layer) {
    if (cfg.fanout == 0) {
      auto n = g.neighbors(slot);
      return std::vector<std::uint32_t>(n.begin(), n.end());
    }
    return sample_neighbors(g, slot, cfg, epoch, layer);
  };

  NodeBatch b;
  b.anchors = std::move(anchors);
  std::vector<char> in_hidden(g.num_nodes(), 0);
  auto add_hidden = [&](std::uint32_t s) {
    if (!in_hidden[s]) {
      in_hidden[s] = 1;
      b.hidden.push_back(s);
    }
  };
  b.layer2.reserve(b.anchors.size());
  for (auto a : b.anchors) {
    if (a >= g.num_nodes()) throw DataError("make_batch: anchor out of range");
    add_hidden(a);
  }
  for (auto a : b.anchors) {
    b.layer2.push_back(draw(a, 2));
    for (auto n : b.layer2.back()) add_hidden(n);
  }
  b.layer1.reserve(b.hidden.size());
  for (auto h : b.hidden) b.layer1.push_back(draw(h, 1));
  return b;
}

EncoderVars record_params(Tape& tape, const EncoderParams& params) {
  return {tape.leaf(params.embedding), tape.leaf(params.w1), tape.leaf(params.w2)};
}

Var encode(const EncoderParams& params, const EncoderVars& vars, const NodeBatch& batch) {
  if (batch.layer2.size() != batch.anchors.size() || batch.layer1.size() != batch.hidden.size())
    throw std::invalid_argument("encode: batch neighborhoods missing");
  const auto num_nodes = static_cast<std::size_t>(params.embedding.rows());

  // Layer-0 rows: every hidden node and its layer-1 sample.
  PositionMap pos0(num_nodes);
  std::vector<std::uint32_t> order0;
  std::vector<int> rows0;
  for (auto h : batch.hidden) pos0.insert(h, rows0, order0);
  for (const auto& list : batch.layer1)
    for (auto n : list) pos0.insert(n, rows0, order0);

  RowGroups groups1;
  std::vector<int> self1;
  self1.reserve(batch.hidden.size());
  std::vector<int> scratch;
  for (std::size_t k = 0; k < batch.hidden.size(); ++k) {
    self1.push_back(pos0.at(batch.hidden[k]));
    scratch.clear();
    for (auto n : batch.layer1[k]) scratch.push_back(pos0.at(n));
    groups1.add(scratch);
  }

  PositionMap pos1(num_nodes);
  std::vector<std::uint32_t> order1;
  std::vector<int> unused;
  for (auto h : batch.hidden) pos1.insert(h, unused, order1);

  RowGroups groups2;
  std::vector<int> self2;
  self2.reserve(batch.anchors.size());
  for (std::size_t k = 0; k < batch.anchors.size(); ++k) {
    self2.push_back(pos1.at(batch.anchors[k]));
    scratch.clear();
    for (auto n : batch.layer2[k]) {
      const int p = pos1.at(n);
      if (p < 0) throw std::invalid_argument("encode: layer-2 neighbor missing from hidden set");
      scratch.push_back(p);
    }
    groups2.add(scratch);
  }

  Var h0 = gather_rows(vars.embedding, std::move(rows0));
  Var agg1 = add(mean_rows(h0, std::move(groups1)), gather_rows(h0, self1));
  Var h1 = relu(matmul(agg1, vars.w1));
  Var agg2 = add(mean_rows(h1, std::move(groups2)), gather_rows(h1, self2));
  Var h2 = relu(matmul(agg2, vars.w2));
  Var out = concat_cols(gather_rows(h1, self2), h2);
  if (params.jk_include_input) {
    std::vector<int> anchor_rows0;
    anchor_rows0.reserve(batch.anchors.size());
    for (auto a : batch.anchors) anchor_rows0.push_back(pos0.at(a));
    out = concat_cols(gather_rows(h0, std::move(anchor_rows0)), out);
  }
  return out;
}

Tensor encode_all(const EncoderParams& params, const DomainGraph& g) {
  if (static_cast<std::uint32_t>(params.embedding.rows()) != g.num_nodes())
    throw DataError("encode_all: parameter rows do not match graph size");
  std::vector<std::uint32_t> all(g.num_nodes());
  for (std::uint32_t s = 0; s < g.num_nodes(); ++s) all[s] = s;
  const auto batch = make_batch(g, std::move(all), SamplerConfig{0, 0}, 0);
  Tape tape;
  EncoderVars vars{tape.constant(params.embedding), tape.constant(params.w1),
                   tape.constant(params.w2)};
  return encode(params, vars, batch).value();
}

namespace {

void write_row(std::ostream& out, const auto& row) {
  // Shortest representation that parses back to the same double.
  char buf[32];
  for (Eigen::Index c = 0; c < row.size(); ++c) {
    if (c) out.put(' ');
    const auto res = std::to_chars(buf, buf + sizeof buf, row(c));
    out.write(buf, res.ptr - buf);
  }
}

std::vector<double> read_values(std::istringstream& in, Eigen::Index n, const std::string& where) {
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(n));
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      vals.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw DataError(where + ": bad number '" + tok + "'");
    }
  }
  if (static_cast<Eigen::Index>(vals.size()) != n)
    throw DataError(where + ": expected " + std::to_string(n) + " values, got " +
                    std::to_string(vals.size()));
  return vals;
}

Tensor read_matrix(std::istream& in, const std::string& name, const std::string& path,
                   std::size_t& line_no) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": truncated checkpoint (missing " + name + ")");
  ++line_no;
  std::istringstream head(line);
  std::string tag;
  Eigen::Index rows = 0, cols = 0;
  if (!(head >> tag >> rows >> cols) || tag != name || rows < 1 || cols < 1)
    throw DataError(path + ":" + std::to_string(line_no) + ": expected '" + name + " <rows> <cols>'");
  Tensor m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) throw DataError(path + ": truncated checkpoint in " + name);
    ++line_no;
    std::istringstream row(line);
    auto vals = read_values(row, cols, path + ":" + std::to_string(line_no));
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = vals[static_cast<std::size_t>(c)];
  }
  return m;
}

}  // namespace

void save_encoder(const std::filesystem::path& path, const EncoderParams& params,
                  const DomainGraph& g) {
  if (static_cast<std::uint32_t>(params.embedding.rows()) != g.num_nodes())
    throw DataError("save_encoder: parameter rows do not match graph size");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "SCCDR-EMB v1 " << domain_name(g.domain()) << ' ' << g.num_nodes() << ' '
      << params.embedding.cols() << '\n';
  for (std::uint32_t s = 0; s < g.num_nodes(); ++s) {
    const auto node = g.node_at(s);
    out << node_label(node.kind, node.index) << ' ';
    write_row(out, params.embedding.row(s));
    out << '\n';
  }
  out << "SCCDR-W v1\n";
  const std::pair<const char*, const Tensor*> mats[] = {{"W1", &params.w1}, {"W2", &params.w2}};
  for (const auto& [name, m] : mats) {
    out << name << ' ' << m->rows() << ' ' << m->cols() << '\n';
    for (Eigen::Index r = 0; r < m->rows(); ++r) {
      write_row(out, m->row(r));
      out << '\n';
    }
  }
  if (!out) throw DataError("write failed: " + path.string());
}

EncoderParams load_encoder(const std::filesystem::path& path, const DomainGraph& g) {
  std::ifstream in(path);
  const auto p = path.string();
  if (!in) throw DataError("cannot open checkpoint " + p);
  std::string line;
  if (!std::getline(in, line)) throw DataError(p + ": empty checkpoint");
  std::istringstream head(line);
  std::string magic, version, domain;
  long long num_nodes = -1, dim = -1;
  if (!(head >> magic >> version >> domain >> num_nodes >> dim) || magic != "SCCDR-EMB")
    throw DataError(p + ":1: not an SCCDR-EMB checkpoint");
  if (version != "v1") throw DataError(p + ":1: unsupported version '" + version + "' (expected v1)");
  if (domain != domain_name(g.domain()))
    throw DataError(p + ":1: domain mismatch: expected " + std::string(domain_name(g.domain())) +
                    ", found " + domain);
  if (num_nodes != g.num_nodes())
    throw DataError(p + ":1: node count mismatch: expected " + std::to_string(g.num_nodes()) +
                    ", found " + std::to_string(num_nodes));
  if (dim < 1) throw DataError(p + ":1: bad embedding dimension " + std::to_string(dim));

  EncoderParams params;
  params.embedding.resize(num_nodes, dim);
  std::size_t line_no = 1;
  for (std::uint32_t s = 0; s < g.num_nodes(); ++s) {
    if (!std::getline(in, line)) throw DataError(p + ": truncated checkpoint (embedding rows)");
    ++line_no;
    std::istringstream row(line);
    std::string label;
    row >> label;
    const auto node = g.node_at(s);
    if (label != node_label(node.kind, node.index))
      throw DataError(p + ":" + std::to_string(line_no) + ": expected node " +
                      node_label(node.kind, node.index) + ", found '" + label + "'");
    auto vals = read_values(row, dim, p + ":" + std::to_string(line_no));
    for (Eigen::Index c = 0; c < dim; ++c) params.embedding(s, c) = vals[static_cast<std::size_t>(c)];
  }
  if (!std::getline(in, line)) throw DataError(p + ": truncated checkpoint (missing SCCDR-W section)");
  ++line_no;
  if (line.rfind("SCCDR-W ", 0) != 0) throw DataError(p + ":" + std::to_string(line_no) + ": expected SCCDR-W header");
  if (line != "SCCDR-W v1") throw DataError(p + ":" + std::to_string(line_no) + ": unsupported weight section version");
  params.w1 = read_matrix(in, "W1", p, line_no);
  params.w2 = read_matrix(in, "W2", p, line_no);
  if (params.w1.rows() != dim)
    throw DataError(p + ": W1 rows " + std::to_string(params.w1.rows()) +
                    " do not match embedding dimension " + std::to_string(dim));
  if (params.w2.rows() != params.w1.cols())
    throw DataError(p + ": W2 rows " + std::to_string(params.w2.rows()) + " do not match W1 cols " +
                    std::to_string(params.w1.cols()));
  return params;
}

}  // namespace sccdr
