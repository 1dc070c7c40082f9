#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmlogic {

// Thrown when operand shapes do not conform; the message names both shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Axis {
  PerRow,  // normalize each row (across columns)
  PerCol,  // normalize each column (down rows)
};

struct TensorNode {
  int rows = 0;
  int cols = 0;
  std::vector<double> value;
  std::vector<double> grad;  // allocated on first use, same size as value
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(const TensorNode&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

// Dense row-major matrix participating in reverse-mode differentiation.
// Copying a Tensor copies the handle; the underlying node is shared.
// Vectors are (n,1) or (1,n); scalars are (1,1).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}
  Tensor(int rows, int cols, double fill = 0.0, bool requires_grad = false);

  static Tensor from_rows(const std::vector<std::vector<double>>& rows,
                          bool requires_grad = false);
  static Tensor row(const std::vector<double>& v, bool requires_grad = false);
  static Tensor column(const std::vector<double>& v, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  int rows() const { return node_->rows; }
  int cols() const { return node_->cols; }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  double operator()(int i, int j) const { return node_->value[static_cast<std::size_t>(i) * node_->cols + j]; }
  double& mut(int i, int j) { return node_->value[static_cast<std::size_t>(i) * node_->cols + j]; }

  std::vector<double>& values() { return node_->value; }
  const std::vector<double>& values() const { return node_->value; }

  // Gradient buffer; allocated (zero) on demand so constants read as zero grad.
  std::vector<double>& grad() { node_->ensure_grad(); return node_->grad; }
  const std::vector<double>& grad() const { node_->ensure_grad(); return node_->grad; }

  double item() const;
  double grad_item() const;
  void zero_grad();

  std::shared_ptr<TensorNode> node() const { return node_; }

 private:
  std::shared_ptr<TensorNode> node_;
};

// -- primitives ---------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor add_rowvec(const Tensor& a, const Tensor& bias);  // bias is 1 x cols
Tensor affine(const Tensor& a, double scale, double shift);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor elem_log(const Tensor& a);
Tensor softmax(const Tensor& a, Axis axis);
Tensor sparsemax(const Tensor& a, Axis axis);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& a, int begin, int end);
Tensor gather_rows(const Tensor& a, std::vector<int> idx);
Tensor broadcast_row(const Tensor& a, int n);  // 1 x d -> n x d
Tensor broadcast_col(const Tensor& a, int m);  // n x 1 -> n x m
Tensor row_sum(const Tensor& a);               // n x m -> n x 1
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);

// Euclidean projection of z onto the probability simplex. Rejects empty or
// non-finite input.
std::vector<double> sparsemax_vec(const std::vector<double>& z);

// Accumulates d(output)/d(node) into every reachable node's grad buffer.
// output must be scalar (1 x 1); repeated calls without zeroing accumulate.
void backward(const Tensor& output);

std::string shape_str(const Tensor& t);

}  // namespace mmlogic
