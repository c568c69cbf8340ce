#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "sccdr/common.hpp"

namespace sccdr {

// Dense row-major matrix of doubles; vectors are (n, 1).
using Tensor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Op : std::uint8_t {
  Leaf,
  Constant,
  MatMul,
  Add,
  Sub,
  Scale,
  ConcatCols,
  MeanRows,
  Relu,
  Sigmoid,
  LogSigmoid,
  Log,
  Exp,
  RowDot,
  RowCosine,
  RowLogSumExp,
  GatherRows,
  Reshape,
  WeightedSum,
  StopGradient,
};

class Tape;

// Handle to a recorded value.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;
};

// Row groups in CSR layout: group g covers members[offsets[g] .. offsets[g+1]).
struct RowGroups {
  std::vector<int> offsets{0};
  std::vector<int> members;

  void add(std::span<const int> rows) {
    members.insert(members.end(), rows.begin(), rows.end());
    offsets.push_back(static_cast<int>(members.size()));
  }
  std::size_t size() const { return offsets.size() - 1; }
};

// Eagerly evaluated computation record. Values are computed when an op is
// recorded; gradient() replays the record in reverse.
class Tape {
 public:
  struct Node {
    Op op = Op::Constant;
    int a = -1;
    int b = -1;
    Tensor value;
    double scalar = 0;
    std::vector<int> index;  // GatherRows
    RowGroups groups;        // MeanRows
    Tensor weights;          // WeightedSum
    bool requires_grad = false;
    bool barrier = false;
  };

  Var leaf(Tensor value);
  Var constant(Tensor value);

  Var record(Op op, Var a, Var b = {}, double scalar = 0);
  Var record_gather(Var x, std::vector<int> index);
  Var record_mean_rows(Var x, RowGroups groups);
  Var record_reshape(Var x, Eigen::Index rows, Eigen::Index cols);
  Var record_weighted_sum(Var x, Tensor weights);

  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return nodes_.size(); }

 private:
  Var push(Node node);

  std::vector<Node> nodes_;
};

// Primitives. Shapes must conform; mismatches throw std::invalid_argument.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
Var concat_cols(Var a, Var b);
Var mean_rows(Var x, RowGroups groups);  // empty group -> zero row
Var relu(Var x);                         // derivative at 0 is 0
Var sigmoid(Var x);
Var log_sigmoid(Var x);  // log(sigmoid(x)) without underflow
Var log(Var x);
Var exp(Var x);
Var row_dot(Var a, Var b);                // (n, d) x (n, d) -> (n, 1)
Var row_cosine(Var a, Var b);             // norms guarded by kCosineEps
Var row_logsumexp(Var x);                 // (n, k) -> (n, 1)
Var gather_rows(Var x, std::vector<int> index);  // embedding lookup
Var reshape(Var x, Eigen::Index rows, Eigen::Index cols);
Var weighted_sum(Var x, Tensor weights);  // -> (1, 1)
Var mean_all(Var x);
Var stop_gradient(Var x);

inline constexpr double kCosineEps = 1e-12;

// Reverse accumulation from a scalar output. Entries of `params` that do
// not influence `output` receive zero tensors.
std::vector<Tensor> gradient(const Tape& tape, Var output, std::span<const Var> params);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // added to the raw gradient as wd * param
};

struct AdamState {
  AdamConfig cfg;
  std::int64_t t = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

AdamState make_adam(const AdamConfig& cfg, std::span<const Tensor* const> params);

// One Adam step over all params. Throws NumericError on a non-finite gradient.
void adam_update(AdamState& state, std::span<Tensor* const> params, std::span<const Tensor> grads);

}  // namespace sccdr
