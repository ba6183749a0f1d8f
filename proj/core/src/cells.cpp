// SPDX-License-Identifier: Apache-2.0

#include "dcnmt/cells.hpp"

namespace dcnmt {

GruParams::GruParams(const std::string& prefix, std::size_t input_dim, std::size_t hidden,
                     bool use_bias, std::mt19937_64& rng)
    : W_r(prefix + "/W_r", fan_in_init(hidden, input_dim, rng)),
      U_r(prefix + "/U_r", orthogonal_init(hidden, rng)),
      W_z(prefix + "/W_z", fan_in_init(hidden, input_dim, rng)),
      U_z(prefix + "/U_z", orthogonal_init(hidden, rng)),
      W(prefix + "/W", fan_in_init(hidden, input_dim, rng)),
      U(prefix + "/U", orthogonal_init(hidden, rng)),
      b_r(prefix + "/b_r", Tensor::col_vector(hidden)),
      b_z(prefix + "/b_z", Tensor::col_vector(hidden, -1.0)),
      b(prefix + "/b", Tensor::col_vector(hidden)),
      use_bias(use_bias),
      input_dim(input_dim),
      hidden(hidden) {}

void GruParams::collect(std::vector<Parameter*>& out) {
  out.push_back(&W_r);
  out.push_back(&U_r);
  out.push_back(&W_z);
  out.push_back(&U_z);
  out.push_back(&W);
  out.push_back(&U);
  if (use_bias) {
    out.push_back(&b_r);
    out.push_back(&b_z);
    out.push_back(&b);
  }
}

Value flag_lerp(std::span<const double> flags, const Value& when0, const Value& when1) {
  std::vector<double> inv(flags.size());
  for (std::size_t i = 0; i < flags.size(); ++i) inv[i] = 1.0 - flags[i];
  return add(scale_columns_const(when0, inv), scale_columns_const(when1, flags));
}

namespace {

Value gate(bool use_bias, Parameter& w, Parameter& u, Parameter& bias, const Value& x,
           const Value& h) {
  Tape& t = *x.tape();
  Value s = add(matmul(t.leaf(w), x), matmul(t.leaf(u), h));
  if (use_bias) s = add_bias(s, t.leaf(bias));
  return s;
}

}  // namespace

Value gru_core(GruParams& p, const Value& x, const Value& h_prev) {
  Value r = sigmoid(gate(p.use_bias, p.W_r, p.U_r, p.b_r, x, h_prev));
  Value z = sigmoid(gate(p.use_bias, p.W_z, p.U_z, p.b_z, x, h_prev));
  Value g = tanh_op(gate(p.use_bias, p.W, p.U, p.b, x, elementwise_mul(r, h_prev)));
  return add(elementwise_mul(z, h_prev), elementwise_mul(one_minus(z), g));
}

Value dgru_step(GruParams& p, const Value& x_emb, const Value& h_prev,
                std::span<const double> a_t, const Value& h0) {
  Value h_hat = gru_core(p, x_emb, h_prev);
  return flag_lerp(a_t, h_hat, h0);
}

Value igru_step(GruParams& p, const Value& y_prev_emb, const Value& h_prev,
                std::span<const double> a_prev, const Value& d_it) {
  Value h_in = flag_lerp(a_prev, h_prev, d_it);
  return gru_core(p, y_prev_emb, h_in);
}

}  // namespace dcnmt
