#include "sccdr/diffmath.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sccdr {

namespace {

const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Constant: return "constant";
    case Op::MatMul: return "matmul";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Scale: return "scale";
    case Op::ConcatCols: return "concat_cols";
    case Op::MeanRows: return "mean_rows";
    case Op::Relu: return "relu";
    case Op::Sigmoid: return "sigmoid";
    case Op::LogSigmoid: return "log_sigmoid";
    case Op::Log: return "log";
    case Op::Exp: return "exp";
    case Op::RowDot: return "row_dot";
    case Op::RowCosine: return "row_cosine";
    case Op::RowLogSumExp: return "row_logsumexp";
    case Op::GatherRows: return "gather_rows";
    case Op::Reshape: return "reshape";
    case Op::WeightedSum: return "weighted_sum";
    case Op::StopGradient: return "stop_gradient";
  }
  return "?";
}

[[noreturn]] void shape_error(Op op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op_name(op)) + ": shape mismatch (" +
                              std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                              std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
}

void require_same_tape(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape)
    throw std::invalid_argument("operands recorded on different tapes");
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor eval(Op op, const Tensor& a, const Tensor* b, double s) {
  switch (op) {
    case Op::MatMul:
      if (a.cols() != b->rows()) shape_error(op, a, *b);
      return a * *b;
    case Op::Add:
      if (a.rows() != b->rows() || a.cols() != b->cols()) shape_error(op, a, *b);
      return a + *b;
    case Op::Sub:
      if (a.rows() != b->rows() || a.cols() != b->cols()) shape_error(op, a, *b);
      return a - *b;
    case Op::Scale: return a * s;
    case Op::ConcatCols: {
      if (a.rows() != b->rows()) shape_error(op, a, *b);
      Tensor out(a.rows(), a.cols() + b->cols());
      out << a, *b;
      return out;
    }
    case Op::Relu: return a.cwiseMax(0.0);
    case Op::Sigmoid: return a.unaryExpr([](double x) { return logistic(x); });
    case Op::LogSigmoid: return a.unaryExpr([](double x) { return -softplus(-x); });
    case Op::Log:
      if ((a.array() <= 0.0).any()) throw NumericError("log: non-positive input");
      return a.array().log().matrix();
    case Op::Exp: return a.array().exp().matrix();
    case Op::RowDot:
      if (a.rows() != b->rows() || a.cols() != b->cols()) shape_error(op, a, *b);
      return a.cwiseProduct(*b).rowwise().sum();
    case Op::RowCosine: {
      if (a.rows() != b->rows() || a.cols() != b->cols()) shape_error(op, a, *b);
      Tensor out(a.rows(), 1);
      for (Eigen::Index r = 0; r < a.rows(); ++r) {
        const double na = a.row(r).norm() + kCosineEps;
        const double nb = b->row(r).norm() + kCosineEps;
        out(r, 0) = a.row(r).dot(b->row(r)) / (na * nb);
      }
      return out;
    }
    case Op::RowLogSumExp: {
      Tensor out(a.rows(), 1);
      for (Eigen::Index r = 0; r < a.rows(); ++r) {
        const double m = a.row(r).maxCoeff();
        out(r, 0) = m + std::log((a.row(r).array() - m).exp().sum());
      }
      return out;
    }
    case Op::StopGradient: return a;
    default: throw std::logic_error(std::string("eval: unsupported op ") + op_name(op));
  }
}

}  // namespace

const Tensor& Var::value() const {
  if (tape == nullptr) throw std::invalid_argument("Var has no tape");
  return tape->node(id).value;
}

double Var::scalar() const {
  const auto& v = value();
  if (v.size() != 1) throw std::invalid_argument("Var::scalar on non-scalar value");
  return v(0, 0);
}

Var Tape::push(Node node) {
  if (!node.value.allFinite())
    throw NumericError(std::string(op_name(node.op)) + ": non-finite value");
  nodes_.push_back(std::move(node));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Tensor value) {
  Node n;
  n.op = Op::Leaf;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::constant(Tensor value) {
  Node n;
  n.op = Op::Constant;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::record(Op op, Var a, Var b, double scalar) {
  const bool binary = op == Op::MatMul || op == Op::Add || op == Op::Sub || op == Op::ConcatCols ||
                      op == Op::RowDot || op == Op::RowCosine;
  if (a.tape != this) throw std::invalid_argument("operand recorded on a different tape");
  if (binary) require_same_tape(a, b);
  Node n;
  n.op = op;
  n.a = a.id;
  n.b = binary ? b.id : -1;
  n.scalar = scalar;
  n.value = eval(op, node(a.id).value, binary ? &node(b.id).value : nullptr, scalar);
  if (op == Op::StopGradient) {
    n.barrier = true;
  } else {
    n.requires_grad = node(a.id).requires_grad || (binary && node(b.id).requires_grad);
  }
  return push(std::move(n));
}

Var Tape::record_gather(Var x, std::vector<int> index) {
  if (x.tape != this) throw std::invalid_argument("operand recorded on a different tape");
  const auto& src = node(x.id).value;
  Node n;
  n.op = Op::GatherRows;
  n.a = x.id;
  n.value.resize(static_cast<Eigen::Index>(index.size()), src.cols());
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] < 0 || index[r] >= src.rows())
      throw std::invalid_argument("gather_rows: index out of range");
    n.value.row(static_cast<Eigen::Index>(r)) = src.row(index[r]);
  }
  n.index = std::move(index);
  n.requires_grad = node(x.id).requires_grad;
  return push(std::move(n));
}

Var Tape::record_mean_rows(Var x, RowGroups groups) {
  if (x.tape != this) throw std::invalid_argument("operand recorded on a different tape");
  const auto& src = node(x.id).value;
  Node n;
  n.op = Op::MeanRows;
  n.a = x.id;
  n.value = Tensor::Zero(static_cast<Eigen::Index>(groups.size()), src.cols());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const int begin = groups.offsets[g], end = groups.offsets[g + 1];
    if (begin == end) continue;
    auto row = n.value.row(static_cast<Eigen::Index>(g));
    for (int k = begin; k < end; ++k) {
      const int m = groups.members[static_cast<std::size_t>(k)];
      if (m < 0 || m >= src.rows()) throw std::invalid_argument("mean_rows: index out of range");
      row += src.row(m);
    }
    row /= static_cast<double>(end - begin);
  }
  n.groups = std::move(groups);
  n.requires_grad = node(x.id).requires_grad;
  return push(std::move(n));
}

Var Tape::record_reshape(Var x, Eigen::Index rows, Eigen::Index cols) {
  if (x.tape != this) throw std::invalid_argument("operand recorded on a different tape");
  const auto& src = node(x.id).value;
  if (rows * cols != src.size()) throw std::invalid_argument("reshape: size mismatch");
  Node n;
  n.op = Op::Reshape;
  n.a = x.id;
  n.value = Eigen::Map<const Tensor>(src.data(), rows, cols);
  n.requires_grad = node(x.id).requires_grad;
  return push(std::move(n));
}

Var Tape::record_weighted_sum(Var x, Tensor weights) {
  if (x.tape != this) throw std::invalid_argument("operand recorded on a different tape");
  const auto& src = node(x.id).value;
  if (weights.rows() != src.rows() || weights.cols() != src.cols())
    shape_error(Op::WeightedSum, src, weights);
  Node n;
  n.op = Op::WeightedSum;
  n.a = x.id;
  n.value = Tensor::Constant(1, 1, src.cwiseProduct(weights).sum());
  n.weights = std::move(weights);
  n.requires_grad = node(x.id).requires_grad;
  return push(std::move(n));
}

Var matmul(Var a, Var b) { return a.tape->record(Op::MatMul, a, b); }
Var add(Var a, Var b) { return a.tape->record(Op::Add, a, b); }
Var sub(Var a, Var b) { return a.tape->record(Op::Sub, a, b); }
Var scale(Var a, double s) { return a.tape->record(Op::Scale, a, {}, s); }
Var concat_cols(Var a, Var b) { return a.tape->record(Op::ConcatCols, a, b); }
Var mean_rows(Var x, RowGroups groups) { return x.tape->record_mean_rows(x, std::move(groups)); }
Var relu(Var x) { return x.tape->record(Op::Relu, x); }
Var sigmoid(Var x) { return x.tape->record(Op::Sigmoid, x); }
Var log_sigmoid(Var x) { return x.tape->record(Op::LogSigmoid, x); }
Var log(Var x) { return x.tape->record(Op::Log, x); }
Var exp(Var x) { return x.tape->record(Op::Exp, x); }
Var row_dot(Var a, Var b) { return a.tape->record(Op::RowDot, a, b); }
Var row_cosine(Var a, Var b) { return a.tape->record(Op::RowCosine, a, b); }
Var row_logsumexp(Var x) { return x.tape->record(Op::RowLogSumExp, x); }
Var gather_rows(Var x, std::vector<int> index) { return x.tape->record_gather(x, std::move(index)); }
Var reshape(Var x, Eigen::Index rows, Eigen::Index cols) {
  return x.tape->record_reshape(x, rows, cols);
}
Var weighted_sum(Var x, Tensor weights) { return x.tape->record_weighted_sum(x, std::move(weights)); }
Var mean_all(Var x) {
  const auto& v = x.value();
  if (v.size() == 0) throw std::invalid_argument("mean_all: empty tensor");
  return weighted_sum(x, Tensor::Constant(v.rows(), v.cols(), 1.0 / static_cast<double>(v.size())));
}
Var stop_gradient(Var x) { return x.tape->record(Op::StopGradient, x); }

std::vector<Tensor> gradient(const Tape& tape, Var output, std::span<const Var> params) {
  if (output.tape != &tape) throw std::invalid_argument("gradient: output from another tape");
  const auto& out_val = tape.node(output.id).value;
  if (out_val.size() != 1) throw std::invalid_argument("gradient: output must be scalar");

  std::vector<Tensor> grads(tape.size());
  auto accumulate = [&](int id, const auto& g) {
    auto& slot = grads[static_cast<std::size_t>(id)];
    if (slot.size() == 0)
      slot = g;
    else
      slot += g;
  };
  auto grad_of = [&](int id) -> Tensor& {
    auto& slot = grads[static_cast<std::size_t>(id)];
    if (slot.size() == 0) {
      const auto& v = tape.node(id).value;
      slot = Tensor::Zero(v.rows(), v.cols());
    }
    return slot;
  };

  grads[static_cast<std::size_t>(output.id)] = Tensor::Ones(1, 1);
  for (int id = output.id; id >= 0; --id) {
    const auto& n = tape.node(id);
    const Tensor& g = grads[static_cast<std::size_t>(id)];
    if (g.size() == 0 || !n.requires_grad || n.barrier) continue;
    const bool ga = n.a >= 0 && tape.node(n.a).requires_grad;
    const bool gb = n.b >= 0 && tape.node(n.b).requires_grad;
    const Tensor* va = n.a >= 0 ? &tape.node(n.a).value : nullptr;
    const Tensor* vb = n.b >= 0 ? &tape.node(n.b).value : nullptr;

    switch (n.op) {
      case Op::Leaf:
      case Op::Constant:
      case Op::StopGradient: break;
      case Op::MatMul:
        if (ga) accumulate(n.a, g * vb->transpose());
        if (gb) accumulate(n.b, va->transpose() * g);
        break;
      case Op::Add:
        if (ga) accumulate(n.a, g);
        if (gb) accumulate(n.b, g);
        break;
      case Op::Sub:
        if (ga) accumulate(n.a, g);
        if (gb) accumulate(n.b, -g);
        break;
      case Op::Scale:
        if (ga) accumulate(n.a, g * n.scalar);
        break;
      case Op::ConcatCols:
        if (ga) accumulate(n.a, g.leftCols(va->cols()));
        if (gb) accumulate(n.b, g.rightCols(vb->cols()));
        break;
      case Op::MeanRows:
        if (ga) {
          Tensor& dst = grad_of(n.a);
          for (std::size_t r = 0; r < n.groups.size(); ++r) {
            const int begin = n.groups.offsets[r], end = n.groups.offsets[r + 1];
            if (begin == end) continue;
            const double w = 1.0 / static_cast<double>(end - begin);
            for (int k = begin; k < end; ++k)
              dst.row(n.groups.members[static_cast<std::size_t>(k)]) += w * g.row(static_cast<Eigen::Index>(r));
          }
        }
        break;
      case Op::Relu:
        if (ga) accumulate(n.a, g.cwiseProduct((va->array() > 0.0).cast<double>().matrix()));
        break;
      case Op::Sigmoid:
        if (ga) accumulate(n.a, g.cwiseProduct(n.value.cwiseProduct((1.0 - n.value.array()).matrix())));
        break;
      case Op::LogSigmoid:
        if (ga) accumulate(n.a, g.cwiseProduct(va->unaryExpr([](double x) { return logistic(-x); })));
        break;
      case Op::Log:
        if (ga) accumulate(n.a, g.cwiseQuotient(*va));
        break;
      case Op::Exp:
        if (ga) accumulate(n.a, g.cwiseProduct(n.value));
        break;
      case Op::RowDot:
        if (ga) accumulate(n.a, (vb->array().colwise() * g.col(0).array()).matrix());
        if (gb) accumulate(n.b, (va->array().colwise() * g.col(0).array()).matrix());
        break;
      case Op::RowCosine: {
        Tensor da, db;
        if (ga) da.resize(va->rows(), va->cols());
        if (gb) db.resize(vb->rows(), vb->cols());
        for (Eigen::Index r = 0; r < va->rows(); ++r) {
          const double na = va->row(r).norm(), nb = vb->row(r).norm();
          const double nae = na + kCosineEps, nbe = nb + kCosineEps;
          const double c = n.value(r, 0);
          const double up = g(r, 0);
          if (ga) {
            da.row(r) = vb->row(r) / (nae * nbe);
            if (na > 0) da.row(r) -= (c / (na * nae)) * va->row(r);
            da.row(r) *= up;
          }
          if (gb) {
            db.row(r) = va->row(r) / (nae * nbe);
            if (nb > 0) db.row(r) -= (c / (nb * nbe)) * vb->row(r);
            db.row(r) *= up;
          }
        }
        if (ga) accumulate(n.a, da);
        if (gb) accumulate(n.b, db);
        break;
      }
      case Op::RowLogSumExp:
        if (ga) {
          Tensor soft = (va->colwise() - n.value.col(0)).array().exp().matrix();
          accumulate(n.a, (soft.array().colwise() * g.col(0).array()).matrix());
        }
        break;
      case Op::GatherRows:
        if (ga) {
          Tensor& dst = grad_of(n.a);
          for (std::size_t r = 0; r < n.index.size(); ++r)
            dst.row(n.index[r]) += g.row(static_cast<Eigen::Index>(r));
        }
        break;
      case Op::Reshape:
        if (ga) accumulate(n.a, Eigen::Map<const Tensor>(g.data(), va->rows(), va->cols()));
        break;
      case Op::WeightedSum:
        if (ga) accumulate(n.a, n.weights * g(0, 0));
        break;
    }
  }

  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const auto& p : params) {
    if (p.tape != &tape) throw std::invalid_argument("gradient: parameter from another tape");
    const auto& slot = grads[static_cast<std::size_t>(p.id)];
    if (slot.size() == 0) {
      const auto& v = tape.node(p.id).value;
      out.push_back(Tensor::Zero(v.rows(), v.cols()));
    } else {
      out.push_back(slot);
    }
  }
  return out;
}

AdamState make_adam(const AdamConfig& cfg, std::span<const Tensor* const> params) {
  AdamState s;
  s.cfg = cfg;
  for (const auto* p : params) {
    s.m.push_back(Tensor::Zero(p->rows(), p->cols()));
    s.v.push_back(Tensor::Zero(p->rows(), p->cols()));
  }
  return s;
}

void adam_update(AdamState& state, std::span<Tensor* const> params, std::span<const Tensor> grads) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_update: parameter/gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->rows() != grads[i].rows() || params[i]->cols() != grads[i].cols() ||
        state.m[i].rows() != grads[i].rows() || state.m[i].cols() != grads[i].cols())
      throw std::invalid_argument("adam_update: shape mismatch");
    if (!grads[i].allFinite()) throw NumericError("adam_update: non-finite gradient");
  }
  const auto& c = state.cfg;
  ++state.t;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    auto m = state.m[i].array();
    auto v = state.v[i].array();
    auto pa = p.array();
    const auto ga = grads[i].array();
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const double g = ga(k) + c.weight_decay * pa(k);
      m(k) = c.beta1 * m(k) + (1.0 - c.beta1) * g;
      v(k) = c.beta2 * v(k) + (1.0 - c.beta2) * g * g;
      const double mhat = m(k) / bc1;
      const double vhat = v(k) / bc2;
      pa(k) -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

}  // namespace sccdr
