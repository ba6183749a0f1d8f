// SPDX-License-Identifier: Apache-2.0

#include "dcnmt/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dcnmt {

using EigenMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<EigenMat>;
using ConstMap = Eigen::Map<const EigenMat>;

namespace {

ConstMap map_of(const Tensor& t) {
  return ConstMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}
Map map_of(Tensor& t) {
  return Map(t.data(), static_cast<Eigen::Index>(t.rows()),
             static_cast<Eigen::Index>(t.cols()));
}

void check_finite(const Tensor& t, const char* op) {
  if (!t.all_finite()) throw NumericError(std::string("non-finite value produced by ") + op);
}

[[noreturn]] void shape_fail(const char* op, const Tensor& a) {
  throw ShapeError(std::string(op) + ": bad operand shape (" + std::to_string(a.rows()) + "x" +
                   std::to_string(a.cols()) + ")");
}

void require_same_tape(const Value& a, const Value& b, const char* op) {
  if (a.tape() == nullptr || a.tape() != b.tape())
    throw ShapeError(std::string(op) + ": operands on different tapes");
}

}  // namespace

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item(): tensor is not scalar");
  return data_[0];
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

const Tensor& Value::val() const {
  if (!tape_) throw ShapeError("use of undefined Value");
  return tape_->value_of(id_);
}

Value make_node(Tape& tape, Tensor value, std::vector<int> parents,
                std::function<void(Tape&, int)> back) {
  Tape::Node n;
  n.value = std::move(value);
  n.parents = std::move(parents);
  n.back = std::move(back);
  tape.nodes_.push_back(std::move(n));
  return Value(&tape, static_cast<int>(tape.nodes_.size()) - 1);
}

Tensor& grad_slot(Tape& tape, int id) {
  auto& n = tape.nodes_[id];
  if (n.grad.size() != n.value.size()) n.grad = Tensor(n.value.rows(), n.value.cols());
  return n.grad;
}

const Tensor& grad_of(Tape& tape, int id) { return grad_slot(tape, id); }

Value Tape::constant(Tensor v) { return make_node(*this, std::move(v), {}, nullptr); }

Value Tape::leaf(Parameter& p) {
  auto it = leaf_cache_.find(&p);
  if (it != leaf_cache_.end()) return Value(this, it->second);
  Value v = make_node(*this, p.value(), {}, nullptr);
  nodes_[v.id()].param = &p;
  leaf_cache_.emplace(&p, v.id());
  return v;
}

void Tape::backward(const Value& loss) {
  if (backward_done_) throw NumericError("backward() called twice on the same tape");
  if (loss.tape() != this) throw ShapeError("backward(): loss not on this tape");
  if (loss.val().size() != 1) throw ShapeError("backward(): loss must be scalar");
  backward_done_ = true;

  grad_slot(*this, loss.id())[0] = 1.0;
  for (int i = loss.id(); i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.back) n.back(*this, i);
  }
  for (Node& n : nodes_) {
    if (n.param && n.grad.size() == n.value.size()) {
      Tensor& g = n.param->grad();
      for (std::size_t j = 0; j < g.size(); ++j) g[j] += n.grad[j];
    }
  }
}

// --- op helpers ---------------------------------------------------------------

namespace {

Value unary_op(const Value& a, const char* name, Tensor out,
               std::function<void(Tape&, int)> back) {
  check_finite(out, name);
  return make_node(*a.tape(), std::move(out), {a.id()}, std::move(back));
}

}  // namespace

Value matmul(const Value& a, const Value& b) {
  require_same_tape(a, b, "matmul");
  const Tensor& av = a.val();
  const Tensor& bv = b.val();
  if (av.cols() != bv.rows())
    throw ShapeError("matmul: inner dimensions disagree (" + std::to_string(av.cols()) + " vs " +
                     std::to_string(bv.rows()) + ")");
  Tensor out(av.rows(), bv.cols());
  map_of(out).noalias() = map_of(av) * map_of(bv);
  check_finite(out, "matmul");
  int aid = a.id(), bid = b.id();
  return make_node(*a.tape(), std::move(out), {aid, bid}, [aid, bid](Tape& t, int self) {
    const Tensor& g = grad_of(t, self);
    const Tensor& av = t.value_of(aid);
    const Tensor& bv = t.value_of(bid);
    map_of(grad_slot(t, aid)).noalias() += map_of(g) * map_of(bv).transpose();
    map_of(grad_slot(t, bid)).noalias() += map_of(av).transpose() * map_of(g);
  });
}

Value add(const Value& a, const Value& b) {
  require_same_tape(a, b, "add");
  const Tensor& av = a.val();
  const Tensor& bv = b.val();
  if (!av.same_shape(bv)) throw ShapeError("add: shape mismatch");
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  check_finite(out, "add");
  int aid = a.id(), bid = b.id();
  return make_node(*a.tape(), std::move(out), {aid, bid}, [aid, bid](Tape& t, int self) {
    const Tensor& g = grad_of(t, self);
    Tensor& ga = grad_slot(t, aid);
    Tensor& gb = grad_slot(t, bid);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] += g[i];
    }
  });
}

Value sub(const Value& a, const Value& b) {
  require_same_tape(a, b, "sub");
  const Tensor& av = a.val();
  const Tensor& bv = b.val();
  if (!av.same_shape(bv)) throw ShapeError("sub: shape mismatch");
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  check_finite(out, "sub");
  int aid = a.id(), bid = b.id();
  return make_node(*a.tape(), std::move(out), {aid, bid}, [aid, bid](Tape& t, int self) {
    const Tensor& g = grad_of(t, self);
    Tensor& ga = grad_slot(t, aid);
    Tensor& gb = grad_slot(t, bid);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] -= g[i];
    }
  });
}

Value add_bias(const Value& x, const Value& b) {
  require_same_tape(x, b, "add_bias");
  const Tensor& xv = x.val();
  const Tensor& bv = b.val();
  if (bv.cols() != 1 || bv.rows() != xv.rows()) shape_fail("add_bias", bv);
  Tensor out(xv.rows(), xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t c = 0; c < xv.cols(); ++c) out(r, c) = xv(r, c) + bv(r, 0);
  check_finite(out, "add_bias");
  int xid = x.id(), bid = b.id();
  return make_node(*x.tape(), std::move(out), {xid, bid}, [xid, bid](Tape& t, int self) {
    const Tensor& g = grad_of(t, self);
    Tensor& gx = grad_slot(t, xid);
    Tensor& gb = grad_slot(t, bid);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    for (std::size_t r = 0; r < g.rows(); ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < g.cols(); ++c) s += g(r, c);
      gb(r, 0) += s;
    }
  });
}

Value elementwise_mul(const Value& a, const Value& b) {
  require_same_tape(a, b, "elementwise_mul");
  const Tensor& av = a.val();
  const Tensor& bv = b.val();
  if (!av.same_shape(bv)) throw ShapeError("elementwise_mul: shape mismatch");
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  check_finite(out, "elementwise_mul");
  int aid = a.id(), bid = b.id();
  return make_node(*a.tape(), std::move(out), {aid, bid}, [aid, bid](Tape& t, int self) {
    const Tensor& g = grad_of(t, self);
    const Tensor& av = t.value_of(aid);
    const Tensor& bv = t.value_of(bid);
    Tensor& ga = grad_slot(t, aid);
    Tensor& gb = grad_slot(t, bid);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i] * bv[i];
      gb[i] += g[i] * av[i];
    }
  });
}

Value scale(const Value& a, double c) {
  const Tensor& av = a.val();
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * c;
  int aid = a.id();
  return unary_op(a, "scale", std::move(out), [aid, c](Tape& t, int self) {
    const Tensor& g = grad_of(t, self);
    Tensor& ga = grad_slot(t, aid);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * c;
  });
}

Value one_minus(const Value& a) {
  const Tensor& av = a.val();
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 - av[i];
  int aid = a.id();
  return unary_op(a, "one_minus", std::move(out), [aid](Tape& t, int self) {
    const Tensor& g = grad_of(t, self);
    Tensor& ga = grad_slot(t, aid);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] -= g[i];
  });
}

Value sigmoid(const Value& a) {
  const Tensor& av = a.val();
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-av[i]));
  int aid = a.id();
  return unary_op(a, "sigmoid", std::move(out), [aid](Tape& t, int self) {
    const Tensor& g = grad_of(t, self);
    const Tensor& y = t.value_of(self);
    Tensor& ga = grad_slot(t, aid);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Value tanh_op(const Value& a) {
  const Tensor& av = a.val();
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(av[i]);
  int aid = a.id();
  return unary_op(a, "tanh", std::move(out), [aid](Tape& t, int self) {
    const Tensor& g = grad_of(t, self);
    const Tensor& y = t.value_of(self);
    Tensor& ga = grad_slot(t, aid);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Value softmax_columns(const Value& a) {
  const Tensor& av = a.val();
  if (av.rows() == 0) shape_fail("softmax_columns", av);
  Tensor out(av.rows(), av.cols());
  for (std::size_t c = 0; c < av.cols(); ++c) {
    double mx = av(0, c);
    for (std::size_t r = 1; r < av.rows(); ++r) mx = std::max(mx, av(r, c));
    double sum = 0.0;
    for (std::size_t r = 0; r < av.rows(); ++r) {
      out(r, c) = std::exp(av(r, c) - mx);
      sum += out(r, c);
    }
    for (std::size_t r = 0; r < av.rows(); ++r) out(r, c) /= sum;
  }
  int aid = a.id();
  return unary_op(a, "softmax", std::move(out), [aid](Tape& t, int self) {
    const Tensor& g = grad_of(t, self);
    const Tensor& y = t.value_of(self);
    Tensor& ga = grad_slot(t, aid);
    for (std::size_t c = 0; c < g.cols(); ++c) {
      double dot = 0.0;
      for (std::size_t r = 0; r < g.rows(); ++r) dot += g(r, c) * y(r, c);
      for (std::size_t r = 0; r < g.rows(); ++r) ga(r, c) += y(r, c) * (g(r, c) - dot);
    }
  });
}

Value log_softmax_columns(const Value& a) {
  const Tensor& av = a.val();
  if (av.rows() == 0) shape_fail("log_softmax_columns", av);
  Tensor out(av.rows(), av.cols());
  for (std::size_t c = 0; c < av.cols(); ++c) {
    double mx = av(0, c);
    for (std::size_t r = 1; r < av.rows(); ++r) mx = std::max(mx, av(r, c));
    double sum = 0.0;
    for (std::size_t r = 0; r < av.rows(); ++r) sum += std::exp(av(r, c) - mx);
    double lse = mx + std::log(sum);
    for (std::size_t r = 0; r < av.rows(); ++r) out(r, c) = av(r, c) - lse;
  }
  int aid = a.id();
  return unary_op(a, "log_softmax", std::move(out), [aid](Tape& t, int self) {
    const Tensor& g = grad_of(t, self);
    const Tensor& y = t.value_of(self);
    Tensor& ga = grad_slot(t, aid);
    for (std::size_t c = 0; c < g.cols(); ++c) {
      double gsum = 0.0;
      for (std::size_t r = 0; r < g.rows(); ++r) gsum += g(r, c);
      for (std::size_t r = 0; r < g.rows(); ++r)
        ga(r, c) += g(r, c) - std::exp(y(r, c)) * gsum;
    }
  });
}

Value log_op(const Value& a) {
  const Tensor& av = a.val();
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(av[i]);
  int aid = a.id();
  return unary_op(a, "log", std::move(out), [aid](Tape& t, int self) {
    const Tensor& g = grad_of(t, self);
    const Tensor& x = t.value_of(aid);
    Tensor& ga = grad_slot(t, aid);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / x[i];
  });
}

Value concat_rows(std::span<const Value> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no operands");
  std::size_t rows = 0;
  std::size_t cols = parts[0].val().cols();
  std::vector<int> ids;
  for (const Value& p : parts) {
    require_same_tape(parts[0], p, "concat_rows");
    if (p.val().cols() != cols) throw ShapeError("concat_rows: column mismatch");
    rows += p.val().rows();
    ids.push_back(p.id());
  }
  Tensor out(rows, cols);
  std::size_t r0 = 0;
  for (const Value& p : parts) {
    const Tensor& pv = p.val();
    for (std::size_t r = 0; r < pv.rows(); ++r)
      for (std::size_t c = 0; c < cols; ++c) out(r0 + r, c) = pv(r, c);
    r0 += pv.rows();
  }
  check_finite(out, "concat_rows");
  auto back_ids = ids;
  return make_node(*parts[0].tape(), std::move(out), std::move(ids),
                   [back_ids](Tape& t, int self) {
                     const Tensor& g = grad_of(t, self);
                     std::size_t r0 = 0;
                     for (int pid : back_ids) {
                       Tensor& gp = grad_slot(t, pid);
                       for (std::size_t r = 0; r < gp.rows(); ++r)
                         for (std::size_t c = 0; c < gp.cols(); ++c) gp(r, c) += g(r0 + r, c);
                       r0 += gp.rows();
                     }
                   });
}

Value slice_rows(const Value& a, std::size_t row0, std::size_t nrows) {
  const Tensor& av = a.val();
  if (row0 + nrows > av.rows()) throw ShapeError("slice_rows: range out of bounds");
  Tensor out(nrows, av.cols());
  for (std::size_t r = 0; r < nrows; ++r)
    for (std::size_t c = 0; c < av.cols(); ++c) out(r, c) = av(row0 + r, c);
  int aid = a.id();
  return unary_op(a, "slice_rows", std::move(out), [aid, row0](Tape& t, int self) {
    const Tensor& g = grad_of(t, self);
    Tensor& ga = grad_slot(t, aid);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) ga(row0 + r, c) += g(r, c);
  });
}

Value sum_all(const Value& a) {
  const Tensor& av = a.val();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i];
  int aid = a.id();
  return unary_op(a, "sum_all", Tensor::scalar(s), [aid](Tape& t, int self) {
    double g = grad_of(t, self)[0];
    Tensor& ga = grad_slot(t, aid);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
}

Value broadcast_column(const Value& v, std::size_t ncols) {
  const Tensor& vv = v.val();
  if (vv.cols() != 1) shape_fail("broadcast_column", vv);
  Tensor out(vv.rows(), ncols);
  for (std::size_t r = 0; r < vv.rows(); ++r)
    for (std::size_t c = 0; c < ncols; ++c) out(r, c) = vv(r, 0);
  int vid = v.id();
  return unary_op(v, "broadcast_column", std::move(out), [vid](Tape& t, int self) {
    const Tensor& g = grad_of(t, self);
    Tensor& gv = grad_slot(t, vid);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < g.cols(); ++c) s += g(r, c);
      gv(r, 0) += s;
    }
  });
}

Value scale_columns(const Value& x, const Value& r) {
  require_same_tape(x, r, "scale_columns");
  const Tensor& xv = x.val();
  const Tensor& rv = r.val();
  if (rv.rows() != 1 || rv.cols() != xv.cols()) shape_fail("scale_columns", rv);
  Tensor out(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < xv.rows(); ++i)
    for (std::size_t c = 0; c < xv.cols(); ++c) out(i, c) = xv(i, c) * rv(0, c);
  check_finite(out, "scale_columns");
  int xid = x.id(), rid = r.id();
  return make_node(*x.tape(), std::move(out), {xid, rid}, [xid, rid](Tape& t, int self) {
    const Tensor& g = grad_of(t, self);
    const Tensor& xv = t.value_of(xid);
    const Tensor& rv = t.value_of(rid);
    Tensor& gx = grad_slot(t, xid);
    Tensor& gr = grad_slot(t, rid);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t c = 0; c < g.cols(); ++c) {
        gx(i, c) += g(i, c) * rv(0, c);
        gr(0, c) += g(i, c) * xv(i, c);
      }
  });
}

Value scale_columns_const(const Value& x, std::span<const double> r) {
  const Tensor& xv = x.val();
  if (r.size() != xv.cols()) throw ShapeError("scale_columns_const: flag count mismatch");
  Tensor out(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < xv.rows(); ++i)
    for (std::size_t c = 0; c < xv.cols(); ++c) out(i, c) = xv(i, c) * r[c];
  int xid = x.id();
  std::vector<double> rc(r.begin(), r.end());
  return unary_op(x, "scale_columns_const", std::move(out), [xid, rc](Tape& t, int self) {
    const Tensor& g = grad_of(t, self);
    Tensor& gx = grad_slot(t, xid);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t c = 0; c < g.cols(); ++c) gx(i, c) += g(i, c) * rc[c];
  });
}

Value add_constant(const Value& x, const Tensor& c) {
  const Tensor& xv = x.val();
  if (!xv.same_shape(c)) throw ShapeError("add_constant: shape mismatch");
  Tensor out(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] + c[i];
  int xid = x.id();
  // constants carry no gradient
  return unary_op(x, "add_constant", std::move(out), [xid](Tape& t, int self) {
    const Tensor& g = grad_of(t, self);
    Tensor& gx = grad_slot(t, xid);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Value pick_per_column(const Value& x, std::span<const int> row_index) {
  const Tensor& xv = x.val();
  if (row_index.size() != xv.cols()) throw ShapeError("pick_per_column: index count mismatch");
  Tensor out(1, xv.cols());
  for (std::size_t c = 0; c < xv.cols(); ++c) {
    int r = row_index[c];
    if (r < 0 || static_cast<std::size_t>(r) >= xv.rows())
      throw ShapeError("pick_per_column: row index out of range");
    out(0, c) = xv(static_cast<std::size_t>(r), c);
  }
  int xid = x.id();
  std::vector<int> idx(row_index.begin(), row_index.end());
  return unary_op(x, "pick_per_column", std::move(out), [xid, idx](Tape& t, int self) {
    const Tensor& g = grad_of(t, self);
    Tensor& gx = grad_slot(t, xid);
    for (std::size_t c = 0; c < g.cols(); ++c)
      gx(static_cast<std::size_t>(idx[c]), c) += g(0, c);
  });
}

Value pick_time_per_column(std::span<const Value> sources, std::span<const int> which) {
  if (sources.empty()) throw ShapeError("pick_time_per_column: no sources");
  const Tensor& s0 = sources[0].val();
  std::vector<int> ids;
  for (const Value& s : sources) {
    require_same_tape(sources[0], s, "pick_time_per_column");
    if (!s.val().same_shape(s0)) throw ShapeError("pick_time_per_column: source shape mismatch");
    ids.push_back(s.id());
  }
  if (which.size() != s0.cols()) throw ShapeError("pick_time_per_column: index count mismatch");
  Tensor out(s0.rows(), s0.cols());
  for (std::size_t c = 0; c < s0.cols(); ++c) {
    int w = which[c];
    if (w < 0) continue;  // zero column
    if (static_cast<std::size_t>(w) >= sources.size())
      throw ShapeError("pick_time_per_column: source index out of range");
    const Tensor& sv = sources[static_cast<std::size_t>(w)].val();
    for (std::size_t r = 0; r < s0.rows(); ++r) out(r, c) = sv(r, c);
  }
  check_finite(out, "pick_time_per_column");
  std::vector<int> wv(which.begin(), which.end());
  auto src_ids = ids;
  return make_node(*sources[0].tape(), std::move(out), std::move(ids),
                   [src_ids, wv](Tape& t, int self) {
                     const Tensor& g = grad_of(t, self);
                     for (std::size_t c = 0; c < g.cols(); ++c) {
                       int w = wv[c];
                       if (w < 0) continue;
                       Tensor& gs = grad_slot(t, src_ids[static_cast<std::size_t>(w)]);
                       for (std::size_t r = 0; r < g.rows(); ++r) gs(r, c) += g(r, c);
                     }
                   });
}

Value embedding_lookup(Tape& tape, EmbeddingTable& table, std::span<const int> ids) {
  Value w = tape.leaf(table.weights());
  const Tensor& wv = w.val();
  Tensor out(wv.cols(), ids.size());
  for (std::size_t c = 0; c < ids.size(); ++c) {
    int id = ids[c];
    if (id < 0 || static_cast<std::size_t>(id) >= wv.rows())
      throw ShapeError("embedding_lookup: id out of range");
    for (std::size_t r = 0; r < wv.cols(); ++r) out(r, c) = wv(static_cast<std::size_t>(id), r);
  }
  check_finite(out, "embedding_lookup");
  int wid = w.id();
  std::vector<int> idv(ids.begin(), ids.end());
  return make_node(tape, std::move(out), {wid}, [wid, idv](Tape& t, int self) {
    const Tensor& g = grad_of(t, self);
    Tensor& gw = grad_slot(t, wid);
    for (std::size_t c = 0; c < g.cols(); ++c) {
      auto row = static_cast<std::size_t>(idv[c]);
      for (std::size_t r = 0; r < g.rows(); ++r) gw(row, r) += g(r, c);
    }
  });
}

// --- initialization ------------------------------------------------------------

Tensor uniform_init(std::size_t rows, std::size_t cols, double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Tensor t(rows, cols);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
  return t;
}

Tensor fan_in_init(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  return uniform_init(rows, cols, 1.0 / std::sqrt(static_cast<double>(cols)), rng);
}

Tensor orthogonal_init(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  EigenMat g(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) g(r, c) = dist(rng);
  Eigen::HouseholderQR<EigenMat> qr(g);
  EigenMat q = qr.householderQ() * EigenMat::Identity(n, n);
  EigenMat rmat = qr.matrixQR().triangularView<Eigen::Upper>();
  // fix signs so the decomposition (and hence the init) is unique
  for (std::size_t c = 0; c < n; ++c)
    if (rmat(c, c) < 0) q.col(c) = -q.col(c);
  Tensor t(n, n);
  map_of(t) = q;
  return t;
}

// --- gradient checking ----------------------------------------------------------

GradCheckReport grad_check(const std::function<Value(Tape&)>& loss_fn,
                           std::span<Parameter* const> params, double eps, double tol,
                           std::uint64_t seed, int min_samples) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Value loss = loss_fn(tape);
    tape.backward(loss);
  }
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad());

  auto eval = [&]() {
    Tape tape;
    return loss_fn(tape).val().item();
  };

  std::mt19937_64 rng(seed);
  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi];
    const std::size_t n = p.value().size();
    std::vector<std::size_t> coords(n);
    std::iota(coords.begin(), coords.end(), 0);
    if (n > static_cast<std::size_t>(min_samples)) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(static_cast<std::size_t>(min_samples));
    }
    GradCheckEntry entry;
    entry.param = p.name();
    for (std::size_t ci : coords) {
      double saved = p.value()[ci];
      p.value()[ci] = saved + eps;
      double up = eval();
      p.value()[ci] = saved - eps;
      double down = eval();
      p.value()[ci] = saved;
      double numeric = (up - down) / (2.0 * eps);
      double a = analytic[pi][ci];
      double rel = std::abs(a - numeric) / std::max(1.0, std::abs(a));
      if (rel > entry.worst_rel_err) {
        entry.worst_rel_err = rel;
        entry.analytic = a;
        entry.numeric = numeric;
        entry.flat_index = ci;
      }
    }
    report.worst_rel_err = std::max(report.worst_rel_err, entry.worst_rel_err);
    report.entries.push_back(std::move(entry));
  }
  (void)tol;
  return report;
}

}  // namespace dcnmt
