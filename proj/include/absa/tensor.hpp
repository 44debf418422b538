#ifndef ABSA_TENSOR_HPP_
#define ABSA_TENSOR_HPP_

// Dense tensors over Eigen storage with a reverse-mode gradient tape.
//
// Every tensor is backed by a row-major matrix. A rank-1 tensor of shape [n]
// is stored as an n x 1 column, a rank-2 tensor as itself, and higher ranks
// as shape[0] x (product of the remaining dimensions), so the flat data is
// always row-major in the logical shape.
//
// Ops are free functions taking the tape first. An op whose inputs all have
// requires_grad() == false records nothing and returns a constant.

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace absa {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Shape = std::vector<Index>;
using Rng = std::mt19937_64;

std::string shape_string(const Shape& shape);

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::span<const double> values,
                            bool requires_grad = false);
  /// Rank-2 tensor with the matrix's own shape.
  static Tensor from_matrix(Matrix value, bool requires_grad = false);
  /// Rank-1 tensor.
  static Tensor from_vector(const Vector& value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  /// Tensor with an explicit logical shape over matching 2-D storage.
  static Tensor with_shape(Shape shape, Matrix storage, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  Index rank() const { return static_cast<Index>(shape().size()); }
  Index size() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }

  const Matrix& value() const;
  /// Flat row-major view of the data.
  Eigen::Map<const Vector> flat() const;
  double item() const;
  /// Element at flat row-major position.
  double at(Index flat_index) const;

  bool requires_grad() const;
  void set_requires_grad(bool on);
  bool has_grad() const;
  /// Accumulated gradient; zeros when nothing has been accumulated yet.
  const Matrix& grad() const;
  void zero_grad();

  /// In-place mutation reserved for optimizers, loaders and gradient checks.
  Matrix& mutable_value();
  Matrix& mutable_grad();

  /// Deep copy detached from any tape.
  Tensor clone() const;

  friend bool same_storage(const Tensor& a, const Tensor& b) { return a.impl_ == b.impl_; }

 private:
  struct Impl;
  explicit Tensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}

  std::shared_ptr<Impl> impl_;

  friend class Tape;
};

/// Ordered record of executed ops. Backward replays it in reverse.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  /// Registers an op result. `backward` receives the output gradient and
  /// value and must accumulate into the inputs through `accumulate`. Nothing
  /// is recorded when no input requires a gradient.
  using BackwardFn = std::function<void(const Matrix& output_grad, const Matrix& output_value)>;
  Tensor record(Shape shape, Matrix value, std::span<const Tensor> inputs,
                BackwardFn backward);

  /// Adds `delta` into the gradient of `t` if it requires one.
  static void accumulate(const Tensor& t, const Matrix& delta);

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    std::shared_ptr<Tensor::Impl> output;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;

  friend void backward(Tape& tape, const Tensor& loss);
};

/// Propagates d(loss)/d(t) into every requires_grad tensor reachable from
/// `loss`; leaf gradients accumulate across calls until zero_grad(). The
/// tape is consumed.
void backward(Tape& tape, const Tensor& loss);

// Linear algebra.
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
/// a * b^T without materialising the transpose. A rank-3 b is read through
/// its 2-D storage.
Tensor matmul_nt(Tape& tape, const Tensor& a, const Tensor& b);
Tensor transpose(Tape& tape, const Tensor& a);

// Elementwise.
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
/// alpha * x + beta.
Tensor affine(Tape& tape, const Tensor& x, double alpha, double beta);
Tensor sigmoid(Tape& tape, const Tensor& x);
Tensor tanh_act(Tape& tape, const Tensor& x);

/// Adds a one-element tensor to every entry of x.
Tensor add_scalar(Tape& tape, const Tensor& x, const Tensor& s);
/// Adds a length-cols vector to every row of a matrix.
Tensor add_row_broadcast(Tape& tape, const Tensor& m, const Tensor& v);

// Normalisation along an axis of a rank-1 or rank-2 tensor.
Tensor softmax(Tape& tape, const Tensor& x, int axis = 0);
Tensor log_softmax(Tape& tape, const Tensor& x, int axis = 0);

// Reductions.
Tensor sum(Tape& tape, const Tensor& x);
Tensor mean(Tape& tape, const Tensor& x);
Tensor sum_squares(Tape& tape, const Tensor& x);
/// Element at a flat index, as a scalar.
Tensor pick(Tape& tape, const Tensor& x, Index flat_index);
/// Column-wise mean over the rows of a matrix: [T x n] -> [n].
Tensor mean_rows(Tape& tape, const Tensor& m);
/// Column-wise max over rows; the first maximal row receives the gradient.
Tensor max_rows(Tape& tape, const Tensor& m);

// Structure.
/// Concatenates rank-1 tensors.
Tensor concat(Tape& tape, std::span<const Tensor> parts);
/// Stacks rank-1 tensors of equal length as matrix rows.
Tensor stack_rows(Tape& tape, std::span<const Tensor> rows);
/// Row t of a matrix as a rank-1 tensor.
Tensor row(Tape& tape, const Tensor& m, Index t);
/// Selected rows of a table: [V x d] -> [k x d].
Tensor gather_rows(Tape& tape, const Tensor& table, std::span<const Index> indices);
/// Row of a table as a rank-1 tensor.
Tensor embedding_row(Tape& tape, const Tensor& table, Index index);
/// Sliding windows over rows: [n x d] -> [(n - w + 1) x (w * d)], each output
/// row the concatenation of w consecutive input rows.
Tensor unfold_windows(Tape& tape, const Tensor& m, Index window);

/// Inverted dropout; identity when !training or rate == 0.
Tensor dropout(Tape& tape, const Tensor& x, double rate, bool training, Rng& rng);

/// Scales every gradient by max_norm / norm when the global L2 norm of the
/// concatenated gradients exceeds max_norm. Returns the pre-clip norm.
double clip_global_norm(std::span<const Tensor> params, double max_norm);
double global_grad_norm(std::span<const Tensor> params);

}  // namespace absa

#endif  // ABSA_TENSOR_HPP_
