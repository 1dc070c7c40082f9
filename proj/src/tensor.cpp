#include "mmlogic/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace mmlogic {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

ECMap map_of(const std::vector<double>& buf, int rows, int cols) {
  return ECMap(buf.data(), rows, cols);
}

EMap map_of(std::vector<double>& buf, int rows, int cols) {
  return EMap(buf.data(), rows, cols);
}

std::string dims(int r, int c) {
  return "(" + std::to_string(r) + "x" + std::to_string(c) + ")";
}

Tensor make_node(int rows, int cols,
                 std::vector<std::shared_ptr<TensorNode>> parents,
                 std::function<void(const TensorNode&)> bwd) {
  auto node = std::make_shared<TensorNode>();
  node->rows = rows;
  node->cols = cols;
  node->value.assign(static_cast<std::size_t>(rows) * cols, 0.0);
  for (const auto& p : parents) {
    if (p->requires_grad) node->requires_grad = true;
  }
  if (node->requires_grad) {
    node->parents = std::move(parents);
    node->backward_fn = std::move(bwd);
  }
  return Tensor(node);
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     dims(a.rows(), a.cols()) + " vs " + dims(b.rows(), b.cols()));
  }
}

// Applies fn to each line of the matrix along the given axis. A line is
// (start offset, length, stride) into the flat buffer.
template <typename Fn>
void for_each_line(int rows, int cols, Axis axis, Fn&& fn) {
  if (axis == Axis::PerRow) {
    for (int i = 0; i < rows; ++i) fn(static_cast<std::size_t>(i) * cols, cols, 1);
  } else {
    for (int j = 0; j < cols; ++j) fn(static_cast<std::size_t>(j), rows, cols);
  }
}

}  // namespace

std::string shape_str(const Tensor& t) { return dims(t.rows(), t.cols()); }

Tensor::Tensor(int rows, int cols, double fill, bool requires_grad) {
  if (rows <= 0 || cols <= 0) {
    throw ShapeError("tensor dimensions must be positive, got " + dims(rows, cols));
  }
  node_ = std::make_shared<TensorNode>();
  node_->rows = rows;
  node_->cols = cols;
  node_->value.assign(static_cast<std::size_t>(rows) * cols, fill);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows, bool requires_grad) {
  if (rows.empty() || rows.front().empty()) {
    throw ShapeError("from_rows: empty input");
  }
  Tensor t(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()), 0.0, requires_grad);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) {
      throw ShapeError("from_rows: ragged row " + std::to_string(i));
    }
    std::copy(rows[i].begin(), rows[i].end(), t.values().begin() + i * rows.front().size());
  }
  return t;
}

Tensor Tensor::row(const std::vector<double>& v, bool requires_grad) {
  Tensor t(1, static_cast<int>(v.size()), 0.0, requires_grad);
  t.values() = v;
  return t;
}

Tensor Tensor::column(const std::vector<double>& v, bool requires_grad) {
  Tensor t(static_cast<int>(v.size()), 1, 0.0, requires_grad);
  t.values() = v;
  return t;
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  Tensor t(1, 1, v, requires_grad);
  return t;
}

double Tensor::item() const {
  if (rows() != 1 || cols() != 1) {
    throw ShapeError("item: tensor is not scalar, shape " + dims(rows(), cols()));
  }
  return node_->value[0];
}

double Tensor::grad_item() const {
  if (rows() != 1 || cols() != 1) {
    throw ShapeError("grad_item: tensor is not scalar, shape " + dims(rows(), cols()));
  }
  node_->ensure_grad();
  return node_->grad[0];
}

void Tensor::zero_grad() {
  node_->grad.assign(node_->value.size(), 0.0);
}

// -- primitives ---------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ, " + shape_str(a) + " * " + shape_str(b));
  }
  auto an = a.node();
  auto bn = b.node();
  Tensor out = make_node(a.rows(), b.cols(), {an, bn},
                         [an, bn](const TensorNode& self) {
    ECMap g(self.grad.data(), self.rows, self.cols);
    if (an->requires_grad) {
      an->ensure_grad();
      EMap(an->grad.data(), an->rows, an->cols).noalias() +=
          g * map_of(bn->value, bn->rows, bn->cols).transpose();
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      EMap(bn->grad.data(), bn->rows, bn->cols).noalias() +=
          map_of(an->value, an->rows, an->cols).transpose() * g;
    }
  });
  map_of(out.values(), out.rows(), out.cols()).noalias() =
      map_of(a.values(), a.rows(), a.cols()) * map_of(b.values(), b.rows(), b.cols());
  return out;
}

Tensor transpose(const Tensor& a) {
  auto an = a.node();
  Tensor out = make_node(a.cols(), a.rows(), {an}, [an](const TensorNode& self) {
    an->ensure_grad();
    for (int i = 0; i < self.rows; ++i)
      for (int j = 0; j < self.cols; ++j)
        an->grad[static_cast<std::size_t>(j) * an->cols + i] +=
            self.grad[static_cast<std::size_t>(i) * self.cols + j];
  });
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.values()[static_cast<std::size_t>(j) * a.rows() + i] = a(i, j);
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  auto an = a.node();
  auto bn = b.node();
  Tensor out = make_node(a.rows(), a.cols(), {an, bn}, [an, bn](const TensorNode& self) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] += self.grad[i];
    }
  });
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = a.values()[i] + b.values()[i];
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  auto an = a.node();
  auto bn = b.node();
  Tensor out = make_node(a.rows(), a.cols(), {an, bn}, [an, bn](const TensorNode& self) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] -= self.grad[i];
    }
  });
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = a.values()[i] - b.values()[i];
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  auto an = a.node();
  auto bn = b.node();
  Tensor out = make_node(a.rows(), a.cols(), {an, bn}, [an, bn](const TensorNode& self) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i] * bn->value[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] += self.grad[i] * an->value[i];
    }
  });
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = a.values()[i] * b.values()[i];
  return out;
}

Tensor add_rowvec(const Tensor& a, const Tensor& bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols()) {
    throw ShapeError("add_rowvec: bias must be 1x" + std::to_string(a.cols()) +
                     ", got " + shape_str(bias));
  }
  auto an = a.node();
  auto bn = bias.node();
  Tensor out = make_node(a.rows(), a.cols(), {an, bn}, [an, bn](const TensorNode& self) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (int i = 0; i < self.rows; ++i)
        for (int j = 0; j < self.cols; ++j)
          bn->grad[j] += self.grad[static_cast<std::size_t>(i) * self.cols + j];
    }
  });
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.mut(i, j) = a(i, j) + bias(0, j);
  return out;
}

Tensor affine(const Tensor& a, double scale, double shift) {
  auto an = a.node();
  Tensor out = make_node(a.rows(), a.cols(), {an}, [an, scale](const TensorNode& self) {
    an->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += scale * self.grad[i];
  });
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = scale * a.values()[i] + shift;
  return out;
}

Tensor relu(const Tensor& a) {
  auto an = a.node();
  Tensor out = make_node(a.rows(), a.cols(), {an}, [an](const TensorNode& self) {
    an->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (an->value[i] > 0.0) an->grad[i] += self.grad[i];
  });
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = std::max(a.values()[i], 0.0);
  return out;
}

Tensor sigmoid(const Tensor& a) {
  auto an = a.node();
  Tensor out = make_node(a.rows(), a.cols(), {an}, [an](const TensorNode& self) {
    an->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double s = self.value[i];
      an->grad[i] += self.grad[i] * s * (1.0 - s);
    }
  });
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = a.values()[i];
    if (x >= 0.0) {
      out.values()[i] = 1.0 / (1.0 + std::exp(-x));
    } else {
      const double e = std::exp(x);
      out.values()[i] = e / (1.0 + e);
    }
  }
  return out;
}

Tensor elem_log(const Tensor& a) {
  auto an = a.node();
  Tensor out = make_node(a.rows(), a.cols(), {an}, [an](const TensorNode& self) {
    an->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i] / an->value[i];
  });
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = std::log(a.values()[i]);
  return out;
}

Tensor softmax(const Tensor& a, Axis axis) {
  auto an = a.node();
  Tensor out = make_node(a.rows(), a.cols(), {an}, [an, axis](const TensorNode& self) {
    an->ensure_grad();
    for_each_line(self.rows, self.cols, axis, [&](std::size_t start, int n, int stride) {
      double dot = 0.0;
      for (int t = 0; t < n; ++t) {
        const std::size_t at = start + static_cast<std::size_t>(t) * stride;
        dot += self.grad[at] * self.value[at];
      }
      for (int t = 0; t < n; ++t) {
        const std::size_t at = start + static_cast<std::size_t>(t) * stride;
        an->grad[at] += self.value[at] * (self.grad[at] - dot);
      }
    });
  });
  for_each_line(a.rows(), a.cols(), axis, [&](std::size_t start, int n, int stride) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < n; ++t) mx = std::max(mx, a.values()[start + static_cast<std::size_t>(t) * stride]);
    double sum = 0.0;
    for (int t = 0; t < n; ++t) {
      const std::size_t at = start + static_cast<std::size_t>(t) * stride;
      out.values()[at] = std::exp(a.values()[at] - mx);
      sum += out.values()[at];
    }
    for (int t = 0; t < n; ++t) {
      const std::size_t at = start + static_cast<std::size_t>(t) * stride;
      out.values()[at] /= sum;
    }
  });
  return out;
}

std::vector<double> sparsemax_vec(const std::vector<double>& z) {
  if (z.empty()) throw std::invalid_argument("sparsemax: empty input");
  for (double v : z) {
    if (!std::isfinite(v)) throw std::invalid_argument("sparsemax: non-finite entry");
  }
  const int n = static_cast<int>(z.size());
  std::vector<double> sorted(z);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  // largest k with 1 + k*z_(k) > sum of the top k entries
  double cumsum = 0.0;
  double tau = 0.0;
  for (int k = 1; k <= n; ++k) {
    cumsum += sorted[k - 1];
    if (1.0 + k * sorted[k - 1] > cumsum) {
      tau = (cumsum - 1.0) / k;
    }
  }
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = std::max(z[i] - tau, 0.0);
  return out;
}

Tensor sparsemax(const Tensor& a, Axis axis) {
  auto an = a.node();
  Tensor out = make_node(a.rows(), a.cols(), {an}, [an, axis](const TensorNode& self) {
    an->ensure_grad();
    for_each_line(self.rows, self.cols, axis, [&](std::size_t start, int n, int stride) {
      // Support-set Jacobian: grad passes on the support, recentered by the
      // support mean; entries exactly at 0 are treated as off-support.
      double gsum = 0.0;
      int nsup = 0;
      for (int t = 0; t < n; ++t) {
        const std::size_t at = start + static_cast<std::size_t>(t) * stride;
        if (self.value[at] > 0.0) {
          gsum += self.grad[at];
          ++nsup;
        }
      }
      if (nsup == 0) return;
      const double gmean = gsum / nsup;
      for (int t = 0; t < n; ++t) {
        const std::size_t at = start + static_cast<std::size_t>(t) * stride;
        if (self.value[at] > 0.0) an->grad[at] += self.grad[at] - gmean;
      }
    });
  });
  for_each_line(a.rows(), a.cols(), axis, [&](std::size_t start, int n, int stride) {
    std::vector<double> line(n);
    for (int t = 0; t < n; ++t) line[t] = a.values()[start + static_cast<std::size_t>(t) * stride];
    const std::vector<double> proj = sparsemax_vec(line);
    for (int t = 0; t < n; ++t) out.values()[start + static_cast<std::size_t>(t) * stride] = proj[t];
  });
  return out;
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no parts");
  int total = 0;
  const int cols = parts.front().cols();
  std::vector<std::shared_ptr<TensorNode>> parents;
  for (const auto& p : parts) {
    if (p.cols() != cols) {
      throw ShapeError("concat_rows: column mismatch " + shape_str(parts.front()) +
                       " vs " + shape_str(p));
    }
    total += p.rows();
    parents.push_back(p.node());
  }
  auto parents_copy = parents;
  Tensor out = make_node(total, cols, std::move(parents),
                         [parents_copy, cols](const TensorNode& self) {
    std::size_t offset = 0;
    for (const auto& p : parents_copy) {
      const std::size_t count = p->value.size();
      if (p->requires_grad) {
        p->ensure_grad();
        for (std::size_t i = 0; i < count; ++i) p->grad[i] += self.grad[offset + i];
      }
      offset += count;
    }
  });
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::copy(p.values().begin(), p.values().end(), out.values().begin() + offset);
    offset += p.size();
  }
  return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no parts");
  const int rows = parts.front().rows();
  int total = 0;
  std::vector<std::shared_ptr<TensorNode>> parents;
  for (const auto& p : parts) {
    if (p.rows() != rows) {
      throw ShapeError("concat_cols: row mismatch " + shape_str(parts.front()) +
                       " vs " + shape_str(p));
    }
    total += p.cols();
    parents.push_back(p.node());
  }
  auto parents_copy = parents;
  Tensor out = make_node(rows, total, std::move(parents),
                         [parents_copy](const TensorNode& self) {
    int col0 = 0;
    for (const auto& p : parents_copy) {
      if (p->requires_grad) {
        p->ensure_grad();
        for (int i = 0; i < p->rows; ++i)
          for (int j = 0; j < p->cols; ++j)
            p->grad[static_cast<std::size_t>(i) * p->cols + j] +=
                self.grad[static_cast<std::size_t>(i) * self.cols + col0 + j];
      }
      col0 += p->cols;
    }
  });
  int col0 = 0;
  for (const auto& p : parts) {
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < p.cols(); ++j)
        out.mut(i, col0 + j) = p(i, j);
    col0 += p.cols();
  }
  return out;
}

Tensor slice_rows(const Tensor& a, int begin, int end) {
  if (begin < 0 || end > a.rows() || begin >= end) {
    throw ShapeError("slice_rows: range [" + std::to_string(begin) + "," +
                     std::to_string(end) + ") invalid for " + shape_str(a));
  }
  auto an = a.node();
  Tensor out = make_node(end - begin, a.cols(), {an}, [an, begin](const TensorNode& self) {
    an->ensure_grad();
    const std::size_t offset = static_cast<std::size_t>(begin) * an->cols;
    for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[offset + i] += self.grad[i];
  });
  const std::size_t offset = static_cast<std::size_t>(begin) * a.cols();
  std::copy(a.values().begin() + offset, a.values().begin() + offset + out.size(),
            out.values().begin());
  return out;
}

Tensor gather_rows(const Tensor& a, std::vector<int> idx) {
  if (idx.empty()) throw ShapeError("gather_rows: empty index list");
  for (int i : idx) {
    if (i < 0 || i >= a.rows()) {
      throw ShapeError("gather_rows: index " + std::to_string(i) + " out of range for " +
                       shape_str(a));
    }
  }
  auto an = a.node();
  auto idx_copy = idx;
  Tensor out = make_node(static_cast<int>(idx.size()), a.cols(), {an},
                         [an, idx_copy](const TensorNode& self) {
    an->ensure_grad();
    for (std::size_t r = 0; r < idx_copy.size(); ++r) {
      const std::size_t src = r * self.cols;
      const std::size_t dst = static_cast<std::size_t>(idx_copy[r]) * an->cols;
      for (int j = 0; j < self.cols; ++j) an->grad[dst + j] += self.grad[src + j];
    }
  });
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const std::size_t src = static_cast<std::size_t>(idx[r]) * a.cols();
    std::copy(a.values().begin() + src, a.values().begin() + src + a.cols(),
              out.values().begin() + r * a.cols());
  }
  return out;
}

Tensor broadcast_row(const Tensor& a, int n) {
  if (a.rows() != 1) throw ShapeError("broadcast_row: expected 1-row tensor, got " + shape_str(a));
  auto an = a.node();
  Tensor out = make_node(n, a.cols(), {an}, [an](const TensorNode& self) {
    an->ensure_grad();
    for (int i = 0; i < self.rows; ++i)
      for (int j = 0; j < self.cols; ++j)
        an->grad[j] += self.grad[static_cast<std::size_t>(i) * self.cols + j];
  });
  for (int i = 0; i < n; ++i)
    std::copy(a.values().begin(), a.values().end(), out.values().begin() + static_cast<std::size_t>(i) * a.cols());
  return out;
}

Tensor broadcast_col(const Tensor& a, int m) {
  if (a.cols() != 1) throw ShapeError("broadcast_col: expected 1-column tensor, got " + shape_str(a));
  auto an = a.node();
  Tensor out = make_node(a.rows(), m, {an}, [an](const TensorNode& self) {
    an->ensure_grad();
    for (int i = 0; i < self.rows; ++i) {
      double s = 0.0;
      for (int j = 0; j < self.cols; ++j) s += self.grad[static_cast<std::size_t>(i) * self.cols + j];
      an->grad[i] += s;
    }
  });
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < m; ++j)
      out.mut(i, j) = a(i, 0);
  return out;
}

Tensor row_sum(const Tensor& a) {
  auto an = a.node();
  Tensor out = make_node(a.rows(), 1, {an}, [an](const TensorNode& self) {
    an->ensure_grad();
    for (int i = 0; i < an->rows; ++i)
      for (int j = 0; j < an->cols; ++j)
        an->grad[static_cast<std::size_t>(i) * an->cols + j] += self.grad[i];
  });
  for (int i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < a.cols(); ++j) s += a(i, j);
    out.mut(i, 0) = s;
  }
  return out;
}

Tensor sum_all(const Tensor& a) {
  auto an = a.node();
  Tensor out = make_node(1, 1, {an}, [an](const TensorNode& self) {
    an->ensure_grad();
    for (std::size_t i = 0; i < an->grad.size(); ++i) an->grad[i] += self.grad[0];
  });
  out.values()[0] = std::accumulate(a.values().begin(), a.values().end(), 0.0);
  return out;
}

Tensor mean_all(const Tensor& a) {
  auto an = a.node();
  const double inv = 1.0 / static_cast<double>(a.size());
  Tensor out = make_node(1, 1, {an}, [an, inv](const TensorNode& self) {
    an->ensure_grad();
    for (std::size_t i = 0; i < an->grad.size(); ++i) an->grad[i] += self.grad[0] * inv;
  });
  out.values()[0] = std::accumulate(a.values().begin(), a.values().end(), 0.0) * inv;
  return out;
}

void backward(const Tensor& output) {
  if (output.rows() != 1 || output.cols() != 1) {
    throw ShapeError("backward: seed must be scalar, got " + shape_str(output));
  }
  // Iterative post-order DFS over parents.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited;
  std::vector<std::pair<TensorNode*, std::size_t>> stack;
  stack.emplace_back(output.node().get(), 0);
  visited.insert(output.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorNode* parent = node->parents[next].get();
      ++next;
      if (visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (TensorNode* node : order) node->ensure_grad();
  output.node()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* node = *it;
    if (node->backward_fn) node->backward_fn(*node);
  }
}

}  // namespace mmlogic
