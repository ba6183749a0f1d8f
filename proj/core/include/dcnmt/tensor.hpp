// SPDX-License-Identifier: Apache-2.0
//
// Dense double-precision tensors and a reverse-mode tape.
//
// Every differentiable operation records one node on the active Tape; a node
// stores the forward value, the parent ids and a backward closure. backward()
// walks the tape once in reverse creation order, which is a valid topological
// order for define-by-run graphs.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace dcnmt {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rank-2 dense array, row-major. Column vectors are (n x 1), scalars (1 x 1).
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Tensor col_vector(std::size_t n, double fill = 0.0) { return Tensor(n, 1, fill); }
  static Tensor scalar(double v) {
    Tensor t(1, 1);
    t.data_[0] = v;
    return t;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double item() const;  // value of a (1 x 1) tensor
  bool all_finite() const;
  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

// Named trainable tensor. Gradients accumulate into `grad` across backward
// passes until zero_grad().
class Parameter {
 public:
  Parameter(std::string name, Tensor value)
      : name_(std::move(name)), value_(std::move(value)) {}

  const std::string& name() const { return name_; }
  Tensor& value() { return value_; }
  const Tensor& value() const { return value_; }
  Tensor& grad() {
    if (grad_.size() != value_.size()) grad_ = Tensor(value_.rows(), value_.cols());
    return grad_;
  }
  const Tensor& grad() const { return const_cast<Parameter*>(this)->grad(); }
  void zero_grad() { grad().fill(0.0); }

 private:
  std::string name_;
  Tensor value_;
  Tensor grad_;
};

class Tape;

// Handle to a tape node; cheap to copy.
class Value {
 public:
  Value() = default;
  const Tensor& val() const;
  std::size_t rows() const { return val().rows(); }
  std::size_t cols() const { return val().cols(); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool defined() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  friend Value make_node(Tape& tape, Tensor value, std::vector<int> parents,
                         std::function<void(Tape&, int)> back);
  Value(Tape* t, int id) : tape_(t), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Untracked input; no gradient flows into it.
  Value constant(Tensor v);
  // Tracked leaf bound to a parameter. One node per parameter per tape.
  Value leaf(Parameter& p);

  // Seeds d(loss)/d(loss) = 1 on a scalar node and accumulates parameter
  // gradients. A tape may only run backward once.
  void backward(const Value& loss);

  std::size_t node_count() const { return nodes_.size(); }
  bool backward_done() const { return backward_done_; }

  const Tensor& value_of(int id) const { return nodes_[id].value; }

 private:
  friend Value make_node(Tape& tape, Tensor value, std::vector<int> parents,
                         std::function<void(Tape&, int)> back);
  friend class Value;
  friend const Tensor& grad_of(Tape&, int);
  friend Tensor& grad_slot(Tape&, int);

  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<int> parents;
    std::function<void(Tape&, int)> back;  // null for constants/leaves
    Parameter* param = nullptr;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> leaf_cache_;
  bool backward_done_ = false;
};

// --- differentiable ops -----------------------------------------------------
// All ops check shapes (ShapeError) and reject non-finite outputs
// (NumericError). Operands must live on the same tape.

Value matmul(const Value& a, const Value& b);           // (m,k)x(k,n)
Value add(const Value& a, const Value& b);              // same shape
Value sub(const Value& a, const Value& b);
Value add_bias(const Value& x, const Value& b);         // (m,n) + (m,1) per column
Value elementwise_mul(const Value& a, const Value& b);
Value scale(const Value& a, double c);
Value one_minus(const Value& a);                        // 1 - a
Value sigmoid(const Value& a);
Value tanh_op(const Value& a);
Value softmax_columns(const Value& a);                  // each column sums to 1
Value log_softmax_columns(const Value& a);              // numerically stable log(softmax)
Value log_op(const Value& a);
Value concat_rows(std::span<const Value> parts);
Value slice_rows(const Value& a, std::size_t row0, std::size_t nrows);
Value sum_all(const Value& a);                          // -> (1,1)
Value broadcast_column(const Value& v, std::size_t ncols);  // (m,1) -> (m,n)
Value scale_columns(const Value& x, const Value& r);    // x(:,k) *= r(0,k), r is (1,n)
Value scale_columns_const(const Value& x, std::span<const double> r);
Value add_constant(const Value& x, const Tensor& c);    // no gradient into c
// out(0,k) = x(row_index[k], k)
Value pick_per_column(const Value& x, std::span<const int> row_index);
// out(:,k) = sources[which[k]](:,k); which[k] == -1 yields zeros for column k
Value pick_time_per_column(std::span<const Value> sources, std::span<const int> which);

// --- embedding ---------------------------------------------------------------

// Row k of `weights` is the embedding of id k. Lookup gradients scatter only
// into the rows that were read.
class EmbeddingTable {
 public:
  EmbeddingTable(std::string name, std::size_t vocab, std::size_t dim)
      : weights_(std::move(name), Tensor(vocab, dim)) {}

  std::size_t vocab_size() const { return weights_.value().rows(); }
  std::size_t dim() const { return weights_.value().cols(); }
  Parameter& weights() { return weights_; }
  const Parameter& weights() const { return weights_; }

 private:
  Parameter weights_;
};

// out(:,k) = transpose(row ids[k]); shape (dim, ids.size()).
Value embedding_lookup(Tape& tape, EmbeddingTable& table, std::span<const int> ids);

// --- initialization ----------------------------------------------------------

Tensor uniform_init(std::size_t rows, std::size_t cols, double scale, std::mt19937_64& rng);
// fan-in scaled uniform: U(-1/sqrt(cols), 1/sqrt(cols))
Tensor fan_in_init(std::size_t rows, std::size_t cols, std::mt19937_64& rng);
// orthogonal square matrix from the QR of a seeded gaussian, sign-fixed
Tensor orthogonal_init(std::size_t n, std::mt19937_64& rng);

// --- gradient checking -------------------------------------------------------

struct GradCheckEntry {
  std::string param;
  double worst_rel_err = 0.0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t flat_index = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double worst_rel_err = 0.0;
  bool pass(double tol) const { return worst_rel_err <= tol; }
};

// Central finite differences against the tape gradients of `loss_fn`.
// Samples at least `min_samples` coordinates per parameter (all of them when
// the parameter is smaller). Failures are reported in the result, not thrown.
GradCheckReport grad_check(const std::function<Value(Tape&)>& loss_fn,
                           std::span<Parameter* const> params, double eps = 1e-5,
                           double tol = 1e-4, std::uint64_t seed = 0, int min_samples = 32);

}  // namespace dcnmt
