#include "slothbench/tape.hpp"

#include <algorithm>
#include <cmath>

namespace sloth {

namespace {

void require_2d(const Tensor& t, const char* prim) {
  if (t.shape.size() != 2)
    throw Error(ErrorKind::InvalidShape,
                std::string(prim) + ": expected rank-2 tensor, got " + shape_str(t));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* prim) {
  if (!a.same_shape(b))
    throw Error(ErrorKind::InvalidShape, std::string(prim) + ": shape mismatch " + shape_str(a) +
                                             " vs " + shape_str(b));
}

// C += A * B, all row-major dense; inner products accumulate in double so
// finite-difference noise stays near the float32 storage precision. The i-p-j
// loop order keeps every inner pass contiguous; the per-row double buffer is
// order-independent, so the result matches a per-element double dot product.
void matmul_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  const int m = a.shape[0], k = a.shape[1], n = b.shape[1];
  std::vector<double> acc(n);
  for (int i = 0; i < m; ++i) {
    const float* arow = a.data.data() + static_cast<std::size_t>(i) * k;
    float* crow = c.data.data() + static_cast<std::size_t>(i) * n;
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int p = 0; p < k; ++p) {
      const double ap = arow[p];
      const float* brow = b.data.data() + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) acc[j] += ap * brow[j];
    }
    for (int j = 0; j < n; ++j) crow[j] += static_cast<float>(acc[j]);
  }
}

// C += A * B^T without materializing the transpose; rows of both operands are
// read contiguously.
void matmul_acc_bt(const Tensor& a, const Tensor& b, Tensor& c) {
  const int m = a.shape[0], k = a.shape[1], n = b.shape[0];
  for (int i = 0; i < m; ++i) {
    const float* arow = a.data.data() + static_cast<std::size_t>(i) * k;
    float* crow = c.data.data() + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const float* brow = b.data.data() + static_cast<std::size_t>(j) * k;
      double sum = 0.0;
      for (int p = 0; p < k; ++p) sum += static_cast<double>(arow[p]) * brow[p];
      crow[j] += static_cast<float>(sum);
    }
  }
}

// C += A^T * B without materializing the transpose; for the common single-row
// operands this is a plain outer-product accumulation.
void matmul_acc_at(const Tensor& a, const Tensor& b, Tensor& c) {
  const int k = a.shape[0], m = a.shape[1], n = b.shape[1];
  for (int p = 0; p < k; ++p) {
    const float* arow = a.data.data() + static_cast<std::size_t>(p) * m;
    const float* brow = b.data.data() + static_cast<std::size_t>(p) * n;
    for (int i = 0; i < m; ++i) {
      const float ai = arow[i];
      if (ai == 0.f) continue;
      float* crow = c.data.data() + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) crow[j] += ai * brow[j];
    }
  }
}

Tensor transposed(const Tensor& t) {
  Tensor out = Tensor::zeros({t.shape[1], t.shape[0]});
  for (int i = 0; i < t.shape[0]; ++i)
    for (int j = 0; j < t.shape[1]; ++j) out.at(j, i) = t.at(i, j);
  return out;
}

}  // namespace

Tape::NodeId Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return static_cast<NodeId>(nodes_.size() - 1);
}

bool Tape::is_leaf(NodeId id) const { return nodes_[id].op == Op::Leaf; }

Tape::NodeId Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.op = Op::Leaf;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
  const Tensor& ta = nodes_[a].value;
  const Tensor& tb = nodes_[b].value;
  require_2d(ta, "matmul");
  require_2d(tb, "matmul");
  if (ta.shape[1] != tb.shape[0])
    throw Error(ErrorKind::InvalidShape,
                "matmul: shape mismatch " + shape_str(ta) + " vs " + shape_str(tb));
  Node n;
  n.op = Op::MatMul;
  n.inputs = {a, b};
  n.value = Tensor::zeros({ta.shape[0], tb.shape[1]});
  matmul_acc(ta, tb, n.value);
  return push(std::move(n));
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
  const Tensor& ta = nodes_[a].value;
  const Tensor& tb = nodes_[b].value;
  require_same_shape(ta, tb, "add");
  Node n;
  n.op = Op::Add;
  n.inputs = {a, b};
  n.value = ta;
  for (std::size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] += tb.data[i];
  return push(std::move(n));
}

Tape::NodeId Tape::sub(NodeId a, NodeId b) {
  const Tensor& ta = nodes_[a].value;
  const Tensor& tb = nodes_[b].value;
  require_same_shape(ta, tb, "sub");
  Node n;
  n.op = Op::Sub;
  n.inputs = {a, b};
  n.value = ta;
  for (std::size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] -= tb.data[i];
  return push(std::move(n));
}

Tape::NodeId Tape::mul(NodeId a, NodeId b) {
  const Tensor& ta = nodes_[a].value;
  const Tensor& tb = nodes_[b].value;
  require_same_shape(ta, tb, "mul");
  Node n;
  n.op = Op::Mul;
  n.inputs = {a, b};
  n.value = ta;
  for (std::size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] *= tb.data[i];
  return push(std::move(n));
}

Tape::NodeId Tape::scale(NodeId a, float c) {
  Node n;
  n.op = Op::Scale;
  n.inputs = {a};
  n.faux = c;
  n.value = nodes_[a].value;
  for (float& v : n.value.data) v *= c;
  return push(std::move(n));
}

Tape::NodeId Tape::tanh(NodeId a) {
  Node n;
  n.op = Op::Tanh;
  n.inputs = {a};
  n.value = nodes_[a].value;
  for (float& v : n.value.data) v = std::tanh(v);
  return push(std::move(n));
}

Tape::NodeId Tape::sigmoid(NodeId a) {
  Node n;
  n.op = Op::Sigmoid;
  n.inputs = {a};
  n.value = nodes_[a].value;
  for (float& v : n.value.data) v = 1.f / (1.f + std::exp(-v));
  return push(std::move(n));
}

Tape::NodeId Tape::softmax_rows(NodeId a) {
  const Tensor& ta = nodes_[a].value;
  Node n;
  n.op = Op::SoftmaxRows;
  n.inputs = {a};
  n.value = ta;
  const int cols = ta.cols();
  const int rows = static_cast<int>(ta.size()) / cols;
  for (int r = 0; r < rows; ++r) {
    float* row = n.value.data.data() + static_cast<std::size_t>(r) * cols;
    float mx = row[0];
    for (int j = 1; j < cols; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    std::vector<double> e(cols);
    for (int j = 0; j < cols; ++j) {
      e[j] = std::exp(static_cast<double>(row[j]) - mx);
      sum += e[j];
    }
    for (int j = 0; j < cols; ++j) row[j] = static_cast<float>(e[j] / sum);
  }
  return push(std::move(n));
}

Tape::NodeId Tape::log(NodeId a) {
  Node n;
  n.op = Op::Log;
  n.inputs = {a};
  n.value = nodes_[a].value;
  for (float& v : n.value.data) v = std::log(v + kLogEpsilon);
  return push(std::move(n));
}

Tape::NodeId Tape::mean_all(NodeId a) {
  const Tensor& ta = nodes_[a].value;
  double sum = 0.0;
  for (float v : ta.data) sum += v;
  Node n;
  n.op = Op::MeanAll;
  n.inputs = {a};
  n.value = Tensor::scalar(static_cast<float>(sum / static_cast<double>(ta.size())));
  return push(std::move(n));
}

Tape::NodeId Tape::concat_cols(NodeId a, NodeId b) {
  const Tensor& ta = nodes_[a].value;
  const Tensor& tb = nodes_[b].value;
  require_2d(ta, "concat_cols");
  require_2d(tb, "concat_cols");
  if (ta.shape[0] != tb.shape[0])
    throw Error(ErrorKind::InvalidShape,
                "concat_cols: shape mismatch " + shape_str(ta) + " vs " + shape_str(tb));
  Node n;
  n.op = Op::ConcatCols;
  n.inputs = {a, b};
  n.value = Tensor::zeros({ta.shape[0], ta.shape[1] + tb.shape[1]});
  for (int r = 0; r < ta.shape[0]; ++r) {
    for (int j = 0; j < ta.shape[1]; ++j) n.value.at(r, j) = ta.at(r, j);
    for (int j = 0; j < tb.shape[1]; ++j) n.value.at(r, ta.shape[1] + j) = tb.at(r, j);
  }
  return push(std::move(n));
}

Tape::NodeId Tape::concat_rows(const std::vector<NodeId>& parts) {
  if (parts.empty()) throw Error(ErrorKind::InvalidShape, "concat_rows: no inputs");
  const int cols = nodes_[parts[0]].value.cols();
  int rows = 0;
  for (NodeId p : parts) {
    const Tensor& t = nodes_[p].value;
    require_2d(t, "concat_rows");
    if (t.shape[1] != cols)
      throw Error(ErrorKind::InvalidShape, "concat_rows: column mismatch " + shape_str(t));
    rows += t.shape[0];
  }
  Node n;
  n.op = Op::ConcatRows;
  n.inputs = parts;
  n.value = Tensor::zeros({rows, cols});
  std::size_t off = 0;
  for (NodeId p : parts) {
    const Tensor& t = nodes_[p].value;
    std::copy(t.data.begin(), t.data.end(), n.value.data.begin() + off);
    off += t.data.size();
  }
  return push(std::move(n));
}

Tape::NodeId Tape::transpose(NodeId a) {
  const Tensor& ta = nodes_[a].value;
  require_2d(ta, "transpose");
  Node n;
  n.op = Op::Transpose;
  n.inputs = {a};
  n.value = transposed(ta);
  return push(std::move(n));
}

Tape::NodeId Tape::gather_rows(NodeId table, const std::vector<int>& ids) {
  const Tensor& tt = nodes_[table].value;
  require_2d(tt, "embedding-gather");
  for (int id : ids)
    if (id < 0 || id >= tt.shape[0])
      throw Error(ErrorKind::InvalidTokenId,
                  "embedding-gather: id " + std::to_string(id) + " out of range for " +
                      shape_str(tt));
  Node n;
  n.op = Op::GatherRows;
  n.inputs = {table};
  n.iaux = ids;
  n.value = Tensor::zeros({static_cast<int>(ids.size()), tt.shape[1]});
  for (std::size_t r = 0; r < ids.size(); ++r)
    for (int j = 0; j < tt.shape[1]; ++j) n.value.at(static_cast<int>(r), j) = tt.at(ids[r], j);
  return push(std::move(n));
}

Tape::NodeId Tape::select(NodeId a, int row, int col) {
  const Tensor& ta = nodes_[a].value;
  require_2d(ta, "select");
  if (row < 0 || row >= ta.shape[0] || col < 0 || col >= ta.shape[1])
    throw Error(ErrorKind::InvalidShape, "select: index out of range for " + shape_str(ta));
  Node n;
  n.op = Op::Select;
  n.inputs = {a};
  n.iaux = {row, col};
  n.value = Tensor::scalar(ta.at(row, col));
  return push(std::move(n));
}

void Tape::backward(NodeId scalar_output) {
  if (nodes_[scalar_output].value.size() != 1)
    throw Error(ErrorKind::ContractViolation,
                "backward: output must be scalar, got " + shape_str(nodes_[scalar_output].value));
  grads_.assign(nodes_.size(), Tensor());
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    grads_[i] = Tensor::zeros(nodes_[i].value.shape);
  grads_[scalar_output].data[0] = 1.f;

  for (NodeId id = scalar_output; id >= 0; --id) {
    const Node& n = nodes_[id];
    const Tensor& g = grads_[id];
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::MatMul: {
        // dA += dC * B^T, dB += A^T * dC
        matmul_acc_bt(g, nodes_[n.inputs[1]].value, grads_[n.inputs[0]]);
        matmul_acc_at(nodes_[n.inputs[0]].value, g, grads_[n.inputs[1]]);
        break;
      }
      case Op::Add:
        for (std::size_t i = 0; i < g.data.size(); ++i) {
          grads_[n.inputs[0]].data[i] += g.data[i];
          grads_[n.inputs[1]].data[i] += g.data[i];
        }
        break;
      case Op::Sub:
        for (std::size_t i = 0; i < g.data.size(); ++i) {
          grads_[n.inputs[0]].data[i] += g.data[i];
          grads_[n.inputs[1]].data[i] -= g.data[i];
        }
        break;
      case Op::Mul: {
        const Tensor& a = nodes_[n.inputs[0]].value;
        const Tensor& b = nodes_[n.inputs[1]].value;
        for (std::size_t i = 0; i < g.data.size(); ++i) {
          grads_[n.inputs[0]].data[i] += g.data[i] * b.data[i];
          grads_[n.inputs[1]].data[i] += g.data[i] * a.data[i];
        }
        break;
      }
      case Op::Scale:
        for (std::size_t i = 0; i < g.data.size(); ++i)
          grads_[n.inputs[0]].data[i] += g.data[i] * n.faux;
        break;
      case Op::Tanh:
        for (std::size_t i = 0; i < g.data.size(); ++i) {
          const float y = n.value.data[i];
          grads_[n.inputs[0]].data[i] += g.data[i] * (1.f - y * y);
        }
        break;
      case Op::Sigmoid:
        for (std::size_t i = 0; i < g.data.size(); ++i) {
          const float y = n.value.data[i];
          grads_[n.inputs[0]].data[i] += g.data[i] * y * (1.f - y);
        }
        break;
      case Op::SoftmaxRows: {
        const int cols = n.value.cols();
        const int rows = static_cast<int>(n.value.size()) / cols;
        for (int r = 0; r < rows; ++r) {
          const float* y = n.value.data.data() + static_cast<std::size_t>(r) * cols;
          const float* gy = g.data.data() + static_cast<std::size_t>(r) * cols;
          float dot = 0.f;
          for (int j = 0; j < cols; ++j) dot += gy[j] * y[j];
          float* gx = grads_[n.inputs[0]].data.data() + static_cast<std::size_t>(r) * cols;
          for (int j = 0; j < cols; ++j) gx[j] += (gy[j] - dot) * y[j];
        }
        break;
      }
      case Op::Log: {
        const Tensor& x = nodes_[n.inputs[0]].value;
        for (std::size_t i = 0; i < g.data.size(); ++i)
          grads_[n.inputs[0]].data[i] += g.data[i] / (x.data[i] + kLogEpsilon);
        break;
      }
      case Op::MeanAll: {
        const float inv = 1.f / static_cast<float>(nodes_[n.inputs[0]].value.size());
        for (float& v : grads_[n.inputs[0]].data) v += g.data[0] * inv;
        break;
      }
      case Op::ConcatCols: {
        const Tensor& a = nodes_[n.inputs[0]].value;
        const Tensor& b = nodes_[n.inputs[1]].value;
        for (int r = 0; r < a.shape[0]; ++r) {
          for (int j = 0; j < a.shape[1]; ++j) grads_[n.inputs[0]].at(r, j) += g.at(r, j);
          for (int j = 0; j < b.shape[1]; ++j)
            grads_[n.inputs[1]].at(r, j) += g.at(r, a.shape[1] + j);
        }
        break;
      }
      case Op::ConcatRows: {
        std::size_t off = 0;
        for (NodeId p : n.inputs) {
          Tensor& gp = grads_[p];
          for (std::size_t i = 0; i < gp.data.size(); ++i) gp.data[i] += g.data[off + i];
          off += gp.data.size();
        }
        break;
      }
      case Op::Transpose: {
        const Tensor& x = nodes_[n.inputs[0]].value;
        for (int i = 0; i < x.shape[0]; ++i)
          for (int j = 0; j < x.shape[1]; ++j) grads_[n.inputs[0]].at(i, j) += g.at(j, i);
        break;
      }
      case Op::GatherRows: {
        Tensor& gt = grads_[n.inputs[0]];
        const int cols = gt.shape[1];
        for (std::size_t r = 0; r < n.iaux.size(); ++r)
          for (int j = 0; j < cols; ++j)
            gt.at(n.iaux[r], j) += g.at(static_cast<int>(r), j);
        break;
      }
      case Op::Select:
        grads_[n.inputs[0]].at(n.iaux[0], n.iaux[1]) += g.data[0];
        break;
    }
  }
}

}  // namespace sloth
