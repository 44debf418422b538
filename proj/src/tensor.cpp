#include "absa/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "absa/errors.hpp"

namespace absa {

struct Tensor::Impl {
  Shape shape;
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
};

namespace {

std::pair<Index, Index> storage_dims(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
  for (Index d : shape) {
    if (d <= 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape));
  }
  Index cols = 1;
  for (std::size_t i = 1; i < shape.size(); ++i) cols *= shape[i];
  return {shape[0], cols};
}

Shape vector_shape(Index n) { return Shape{n}; }

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()) + " differ");
  }
}

void require_rank(const char* op, const Tensor& t, Index rank) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(t.shape()));
  }
}

void require_vector(const char* op, const Tensor& t) { require_rank(op, t, 1); }

bool is_matrix_like(const Tensor& t) { return t.rank() == 1 || t.rank() == 2; }

}  // namespace

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << " x ";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

// ---------------------------------------------------------------------------
// Tensor

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto [r, c] = storage_dims(shape);
  return with_shape(std::move(shape), Matrix::Zero(r, c), requires_grad);
}

Tensor Tensor::from_values(Shape shape, std::span<const double> values, bool requires_grad) {
  auto [r, c] = storage_dims(shape);
  if (static_cast<Index>(values.size()) != r * c) {
    throw ShapeError("from_values: " + std::to_string(values.size()) + " values for shape " +
                     shape_string(shape));
  }
  Matrix m = Eigen::Map<const Matrix>(values.data(), r, c);
  return with_shape(std::move(shape), std::move(m), requires_grad);
}

Tensor Tensor::from_matrix(Matrix value, bool requires_grad) {
  Shape shape{value.rows(), value.cols()};
  return with_shape(std::move(shape), std::move(value), requires_grad);
}

Tensor Tensor::from_vector(const Vector& value, bool requires_grad) {
  Matrix m = value;
  return with_shape(vector_shape(value.size()), std::move(m), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  Matrix m(1, 1);
  m(0, 0) = value;
  return with_shape(Shape{1}, std::move(m), requires_grad);
}

Tensor Tensor::with_shape(Shape shape, Matrix storage, bool requires_grad) {
  auto [r, c] = storage_dims(shape);
  if (storage.rows() != r || storage.cols() != c) {
    throw ShapeError("storage " + std::to_string(storage.rows()) + "x" +
                     std::to_string(storage.cols()) + " does not match shape " +
                     shape_string(shape));
  }
  auto impl = std::make_shared<Impl>();
  impl->shape = std::move(shape);
  impl->value = std::move(storage);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

const Shape& Tensor::shape() const { return impl_->shape; }

Index Tensor::size() const { return impl_->value.size(); }

const Matrix& Tensor::value() const { return impl_->value; }

Eigen::Map<const Vector> Tensor::flat() const {
  return Eigen::Map<const Vector>(impl_->value.data(), impl_->value.size());
}

double Tensor::item() const {
  if (size() != 1) throw ContractError("item() on tensor of shape " + shape_string(shape()));
  return impl_->value(0, 0);
}

double Tensor::at(Index flat_index) const { return impl_->value.data()[flat_index]; }

bool Tensor::requires_grad() const { return impl_->requires_grad; }

void Tensor::set_requires_grad(bool on) { impl_->requires_grad = on; }

bool Tensor::has_grad() const { return impl_->grad.size() != 0; }

const Matrix& Tensor::grad() const {
  if (impl_->grad.size() == 0) impl_->grad = Matrix::Zero(rows(), cols());
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (impl_->grad.size() != 0) impl_->grad.setZero();
}

Matrix& Tensor::mutable_value() { return impl_->value; }

Matrix& Tensor::mutable_grad() {
  if (impl_->grad.size() == 0) impl_->grad = Matrix::Zero(rows(), cols());
  return impl_->grad;
}

Tensor Tensor::clone() const {
  auto impl = std::make_shared<Impl>(*impl_);
  return Tensor(std::move(impl));
}

// ---------------------------------------------------------------------------
// Tape

Tensor Tape::record(Shape shape, Matrix value, std::span<const Tensor> inputs,
                    BackwardFn backward_fn) {
  bool needs_grad = std::any_of(inputs.begin(), inputs.end(),
                                [](const Tensor& t) { return t.requires_grad(); });
  Tensor out = Tensor::with_shape(std::move(shape), std::move(value), needs_grad);
  if (needs_grad) nodes_.push_back(Node{out.impl_, std::move(backward_fn)});
  return out;
}

void Tape::accumulate(const Tensor& t, const Matrix& delta) {
  if (!t.requires_grad()) return;
  Matrix& g = t.impl_->grad;
  if (g.size() == 0) {
    g = delta;
  } else {
    g += delta;
  }
}

void backward(Tape& tape, const Tensor& loss) {
  if (loss.size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " +
                        shape_string(loss.shape()));
  }
  Tape::accumulate(loss, Matrix::Ones(1, 1));
  for (auto it = tape.nodes_.rbegin(); it != tape.nodes_.rend(); ++it) {
    const auto& out = *it->output;
    if (out.grad.size() == 0) continue;
    it->backward(out.grad, out.value);
  }
  tape.clear();
}

// ---------------------------------------------------------------------------
// Linear algebra

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || !is_matrix_like(b) || a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + shape_string(a.shape()) + " by " +
                     shape_string(b.shape()));
  }
  Matrix value = a.value() * b.value();
  Shape shape = b.rank() == 1 ? Shape{a.rows()} : Shape{a.rows(), b.cols()};
  Tensor inputs[] = {a, b};
  return tape.record(std::move(shape), std::move(value), inputs,
                     [a, b](const Matrix& g, const Matrix&) {
                       if (a.requires_grad()) Tape::accumulate(a, g * b.value().transpose());
                       if (b.requires_grad()) Tape::accumulate(b, a.value().transpose() * g);
                     });
}

Tensor matmul_nt(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() < 2 || a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: cannot multiply " + shape_string(a.shape()) +
                     " by the transpose of " + shape_string(b.shape()));
  }
  Matrix value = a.value() * b.value().transpose();
  Tensor inputs[] = {a, b};
  return tape.record(Shape{a.rows(), b.rows()}, std::move(value), inputs,
                     [a, b](const Matrix& g, const Matrix&) {
                       if (a.requires_grad()) Tape::accumulate(a, g * b.value());
                       if (b.requires_grad()) Tape::accumulate(b, g.transpose() * a.value());
                     });
}

Tensor transpose(Tape& tape, const Tensor& a) {
  require_rank("transpose", a, 2);
  Matrix value = a.value().transpose();
  Tensor inputs[] = {a};
  return tape.record(Shape{a.cols(), a.rows()}, std::move(value), inputs,
                     [a](const Matrix& g, const Matrix&) {
                       Tape::accumulate(a, g.transpose());
                     });
}

// ---------------------------------------------------------------------------
// Elementwise

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  Matrix value = a.value() + b.value();
  Tensor inputs[] = {a, b};
  return tape.record(a.shape(), std::move(value), inputs, [a, b](const Matrix& g, const Matrix&) {
    Tape::accumulate(a, g);
    Tape::accumulate(b, g);
  });
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  Matrix value = a.value() - b.value();
  Tensor inputs[] = {a, b};
  return tape.record(a.shape(), std::move(value), inputs, [a, b](const Matrix& g, const Matrix&) {
    Tape::accumulate(a, g);
    if (b.requires_grad()) Tape::accumulate(b, -g);
  });
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  Matrix value = a.value().cwiseProduct(b.value());
  Tensor inputs[] = {a, b};
  return tape.record(a.shape(), std::move(value), inputs, [a, b](const Matrix& g, const Matrix&) {
    if (a.requires_grad()) Tape::accumulate(a, g.cwiseProduct(b.value()));
    if (b.requires_grad()) Tape::accumulate(b, g.cwiseProduct(a.value()));
  });
}

Tensor affine(Tape& tape, const Tensor& x, double alpha, double beta) {
  Matrix value = (alpha * x.value().array() + beta).matrix();
  Tensor inputs[] = {x};
  return tape.record(x.shape(), std::move(value), inputs,
                     [x, alpha](const Matrix& g, const Matrix&) {
                       Tape::accumulate(x, alpha * g);
                     });
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
  // Split by sign so exp never overflows.
  Matrix value = x.value().unaryExpr([](double v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    double e = std::exp(v);
    return e / (1.0 + e);
  });
  Tensor inputs[] = {x};
  return tape.record(x.shape(), std::move(value), inputs, [x](const Matrix& g, const Matrix& y) {
    Tape::accumulate(x, (g.array() * y.array() * (1.0 - y.array())).matrix());
  });
}

Tensor tanh_act(Tape& tape, const Tensor& x) {
  Matrix value = x.value().array().tanh().matrix();
  Tensor inputs[] = {x};
  return tape.record(x.shape(), std::move(value), inputs, [x](const Matrix& g, const Matrix& y) {
    Tape::accumulate(x, (g.array() * (1.0 - y.array().square())).matrix());
  });
}

Tensor add_scalar(Tape& tape, const Tensor& x, const Tensor& s) {
  if (s.size() != 1) throw ShapeError("add_scalar: expected one-element tensor, got " +
                                      shape_string(s.shape()));
  Matrix value = (x.value().array() + s.value()(0, 0)).matrix();
  Tensor inputs[] = {x, s};
  return tape.record(x.shape(), std::move(value), inputs, [x, s](const Matrix& g, const Matrix&) {
    Tape::accumulate(x, g);
    if (s.requires_grad()) Tape::accumulate(s, Matrix::Constant(1, 1, g.sum()));
  });
}

Tensor add_row_broadcast(Tape& tape, const Tensor& m, const Tensor& v) {
  require_rank("add_row_broadcast", m, 2);
  require_vector("add_row_broadcast", v);
  if (v.size() != m.cols()) {
    throw ShapeError("add_row_broadcast: " + shape_string(v.shape()) + " onto rows of " +
                     shape_string(m.shape()));
  }
  Matrix value = m.value().rowwise() + v.value().col(0).transpose();
  Tensor inputs[] = {m, v};
  return tape.record(m.shape(), std::move(value), inputs, [m, v](const Matrix& g, const Matrix&) {
    Tape::accumulate(m, g);
    if (v.requires_grad()) Tape::accumulate(v, g.colwise().sum().transpose());
  });
}

// ---------------------------------------------------------------------------
// Softmax family

namespace {

// Applies `fn` to each slice along `axis`: columns for axis 0, rows for axis 1.
template <typename Fn>
void for_each_slice(Matrix& m, int axis, Fn&& fn) {
  if (axis == 0) {
    for (Index c = 0; c < m.cols(); ++c) fn(m.col(c));
  } else {
    for (Index r = 0; r < m.rows(); ++r) fn(m.row(r));
  }
}

void check_axis(const char* op, const Tensor& x, int axis) {
  if (!is_matrix_like(x) || axis < 0 || axis >= x.rank()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " invalid for shape " +
                     shape_string(x.shape()));
  }
}

}  // namespace

Tensor softmax(Tape& tape, const Tensor& x, int axis) {
  check_axis("softmax", x, axis);
  Matrix value = x.value();
  for_each_slice(value, axis, [](auto slice) {
    double mx = slice.maxCoeff();
    slice = (slice.array() - mx).exp().matrix();
    slice /= slice.sum();
  });
  Tensor inputs[] = {x};
  return tape.record(x.shape(), std::move(value), inputs,
                     [x, axis](const Matrix& g, const Matrix& y) {
                       Matrix dx = g.cwiseProduct(y);
                       if (axis == 0) {
                         const Matrix sums = dx.colwise().sum();
                         dx -= y * sums.row(0).asDiagonal();
                       } else {
                         const Matrix sums = dx.rowwise().sum();
                         dx -= sums.col(0).asDiagonal() * y;
                       }
                       Tape::accumulate(x, dx);
                     });
}

Tensor log_softmax(Tape& tape, const Tensor& x, int axis) {
  check_axis("log_softmax", x, axis);
  Matrix value = x.value();
  for_each_slice(value, axis, [](auto slice) {
    double mx = slice.maxCoeff();
    double lse = mx + std::log((slice.array() - mx).exp().sum());
    slice = (slice.array() - lse).matrix();
  });
  Tensor inputs[] = {x};
  return tape.record(x.shape(), std::move(value), inputs,
                     [x, axis](const Matrix& g, const Matrix& y) {
                       Matrix p = y.array().exp().matrix();
                       Matrix dx = g;
                       if (axis == 0) {
                         dx -= p * g.colwise().sum().asDiagonal();
                       } else {
                         dx -= g.rowwise().sum().asDiagonal() * p;
                       }
                       Tape::accumulate(x, dx);
                     });
}

// ---------------------------------------------------------------------------
// Reductions

Tensor sum(Tape& tape, const Tensor& x) {
  Matrix value = Matrix::Constant(1, 1, x.value().sum());
  Tensor inputs[] = {x};
  return tape.record(Shape{1}, std::move(value), inputs, [x](const Matrix& g, const Matrix&) {
    Tape::accumulate(x, Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
  });
}

Tensor mean(Tape& tape, const Tensor& x) {
  double n = static_cast<double>(x.size());
  Matrix value = Matrix::Constant(1, 1, x.value().sum() / n);
  Tensor inputs[] = {x};
  return tape.record(Shape{1}, std::move(value), inputs, [x, n](const Matrix& g, const Matrix&) {
    Tape::accumulate(x, Matrix::Constant(x.rows(), x.cols(), g(0, 0) / n));
  });
}

Tensor sum_squares(Tape& tape, const Tensor& x) {
  Matrix value = Matrix::Constant(1, 1, x.value().squaredNorm());
  Tensor inputs[] = {x};
  return tape.record(Shape{1}, std::move(value), inputs, [x](const Matrix& g, const Matrix&) {
    Tape::accumulate(x, 2.0 * g(0, 0) * x.value());
  });
}

Tensor pick(Tape& tape, const Tensor& x, Index flat_index) {
  if (flat_index < 0 || flat_index >= x.size()) {
    throw ShapeError("pick: index " + std::to_string(flat_index) + " outside " +
                     shape_string(x.shape()));
  }
  Matrix value = Matrix::Constant(1, 1, x.at(flat_index));
  Tensor inputs[] = {x};
  return tape.record(Shape{1}, std::move(value), inputs,
                     [x, flat_index](const Matrix& g, const Matrix&) {
                       Matrix d = Matrix::Zero(x.rows(), x.cols());
                       d.data()[flat_index] = g(0, 0);
                       Tape::accumulate(x, d);
                     });
}

Tensor mean_rows(Tape& tape, const Tensor& m) {
  require_rank("mean_rows", m, 2);
  double n = static_cast<double>(m.rows());
  Matrix value = (m.value().colwise().sum() / n).transpose();
  Tensor inputs[] = {m};
  return tape.record(Shape{m.cols()}, std::move(value), inputs,
                     [m, n](const Matrix& g, const Matrix&) {
                       Matrix d = (g.col(0).transpose() / n).replicate(m.rows(), 1);
                       Tape::accumulate(m, d);
                     });
}

Tensor max_rows(Tape& tape, const Tensor& m) {
  require_rank("max_rows", m, 2);
  std::vector<Index> argmax(static_cast<std::size_t>(m.cols()));
  Matrix value(m.cols(), 1);
  for (Index c = 0; c < m.cols(); ++c) {
    Index best = 0;
    for (Index r = 1; r < m.rows(); ++r) {
      if (m.value()(r, c) > m.value()(best, c)) best = r;
    }
    argmax[static_cast<std::size_t>(c)] = best;
    value(c, 0) = m.value()(best, c);
  }
  Tensor inputs[] = {m};
  return tape.record(Shape{m.cols()}, std::move(value), inputs,
                     [m, argmax = std::move(argmax)](const Matrix& g, const Matrix&) {
                       Matrix d = Matrix::Zero(m.rows(), m.cols());
                       for (Index c = 0; c < m.cols(); ++c) {
                         d(argmax[static_cast<std::size_t>(c)], c) = g(c, 0);
                       }
                       Tape::accumulate(m, d);
                     });
}

// ---------------------------------------------------------------------------
// Structure

Tensor concat(Tape& tape, std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  Index total = 0;
  for (const auto& p : parts) {
    require_vector("concat", p);
    total += p.size();
  }
  Matrix value(total, 1);
  Index offset = 0;
  for (const auto& p : parts) {
    value.block(offset, 0, p.size(), 1) = p.value();
    offset += p.size();
  }
  std::vector<Tensor> kept(parts.begin(), parts.end());
  return tape.record(Shape{total}, std::move(value), parts,
                     [kept = std::move(kept)](const Matrix& g, const Matrix&) {
                       Index off = 0;
                       for (const auto& p : kept) {
                         if (p.requires_grad()) Tape::accumulate(p, g.block(off, 0, p.size(), 1));
                         off += p.size();
                       }
                     });
}

Tensor stack_rows(Tape& tape, std::span<const Tensor> rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no inputs");
  Index width = rows.front().size();
  for (const auto& r : rows) {
    require_vector("stack_rows", r);
    if (r.size() != width) {
      throw ShapeError("stack_rows: rows of length " + std::to_string(width) + " and " +
                       std::to_string(r.size()));
    }
  }
  auto n = static_cast<Index>(rows.size());
  Matrix value(n, width);
  for (Index t = 0; t < n; ++t) value.row(t) = rows[static_cast<std::size_t>(t)].value().col(0).transpose();
  std::vector<Tensor> kept(rows.begin(), rows.end());
  return tape.record(Shape{n, width}, std::move(value), rows,
                     [kept = std::move(kept)](const Matrix& g, const Matrix&) {
                       for (std::size_t t = 0; t < kept.size(); ++t) {
                         if (kept[t].requires_grad()) {
                           Tape::accumulate(kept[t], g.row(static_cast<Index>(t)).transpose());
                         }
                       }
                     });
}

Tensor row(Tape& tape, const Tensor& m, Index t) {
  require_rank("row", m, 2);
  if (t < 0 || t >= m.rows()) {
    throw ShapeError("row: index " + std::to_string(t) + " outside " + shape_string(m.shape()));
  }
  Matrix value = m.value().row(t).transpose();
  Tensor inputs[] = {m};
  return tape.record(Shape{m.cols()}, std::move(value), inputs,
                     [m, t](const Matrix& g, const Matrix&) {
                       Tensor target = m;
                       target.mutable_grad().row(t) += g.col(0).transpose();
                     });
}

Tensor gather_rows(Tape& tape, const Tensor& table, std::span<const Index> indices) {
  require_rank("gather_rows", table, 2);
  if (indices.empty()) throw ShapeError("gather_rows: no indices");
  auto k = static_cast<Index>(indices.size());
  Matrix value(k, table.cols());
  for (Index i = 0; i < k; ++i) {
    Index idx = indices[static_cast<std::size_t>(i)];
    if (idx < 0 || idx >= table.rows()) {
      throw ShapeError("gather_rows: index " + std::to_string(idx) + " outside " +
                       shape_string(table.shape()));
    }
    value.row(i) = table.value().row(idx);
  }
  std::vector<Index> kept(indices.begin(), indices.end());
  Tensor inputs[] = {table};
  return tape.record(Shape{k, table.cols()}, std::move(value), inputs,
                     [table, kept = std::move(kept)](const Matrix& g, const Matrix&) {
                       Tensor target = table;
                       Matrix& d = target.mutable_grad();
                       for (std::size_t i = 0; i < kept.size(); ++i) {
                         d.row(kept[i]) += g.row(static_cast<Index>(i));
                       }
                     });
}

Tensor embedding_row(Tape& tape, const Tensor& table, Index index) {
  return row(tape, table, index);
}

Tensor unfold_windows(Tape& tape, const Tensor& m, Index window) {
  require_rank("unfold_windows", m, 2);
  if (window < 1 || window > m.rows()) {
    throw ShapeError("unfold_windows: window " + std::to_string(window) + " over " +
                     shape_string(m.shape()));
  }
  Index positions = m.rows() - window + 1;
  Index d = m.cols();
  Matrix value(positions, window * d);
  for (Index p = 0; p < positions; ++p) {
    for (Index w = 0; w < window; ++w) value.block(p, w * d, 1, d) = m.value().row(p + w);
  }
  Tensor inputs[] = {m};
  return tape.record(Shape{positions, window * d}, std::move(value), inputs,
                     [m, window, positions, d](const Matrix& g, const Matrix&) {
                       Matrix dm = Matrix::Zero(m.rows(), d);
                       for (Index p = 0; p < positions; ++p) {
                         for (Index w = 0; w < window; ++w) dm.row(p + w) += g.block(p, w * d, 1, d);
                       }
                       Tape::accumulate(m, dm);
                     });
}

Tensor dropout(Tape& tape, const Tensor& x, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - rate);
  Matrix mask(x.rows(), x.cols());
  for (Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = uniform(rng) < rate ? 0.0 : keep_scale;
  }
  Matrix value = x.value().cwiseProduct(mask);
  Tensor inputs[] = {x};
  return tape.record(x.shape(), std::move(value), inputs,
                     [x, mask = std::move(mask)](const Matrix& g, const Matrix&) {
                       Tape::accumulate(x, g.cwiseProduct(mask));
                     });
}

// ---------------------------------------------------------------------------
// Gradient clipping

double global_grad_norm(std::span<const Tensor> params) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (p.has_grad()) sq += p.grad().squaredNorm();
  }
  return std::sqrt(sq);
}

double clip_global_norm(std::span<const Tensor> params, double max_norm) {
  if (!(max_norm > 0.0)) throw ConfigError("clip_global_norm: max_norm must be positive");
  double norm = global_grad_norm(params);
  if (norm > max_norm) {
    double scale = max_norm / norm;
    for (auto p : params) {
      if (p.has_grad()) p.mutable_grad() *= scale;
    }
  }
  return norm;
}

}  // namespace absa
