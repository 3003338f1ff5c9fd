#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "cfx/tensor.hpp"

namespace cfx {

// Reverse-mode autodiff over a dynamic DAG of dense tensors. Every training
// loop and every analytic gradient in the toolkit runs through this graph;
// each op's backward is verified against finite differences in the unit
// tests, which is what makes the downstream gradient-fidelity checks
// meaningful.
struct Node {
    Tensor val;
    Tensor grad;  // allocated lazily by ensure_grad()
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;  // accumulates into parents' grads
    int visit_mark = 0;
};

using Value = std::shared_ptr<Node>;

Value make_leaf(Tensor t, bool requires_grad);
Value make_constant(Tensor t);
void ensure_grad(Node& n);

// Runs backward from a scalar root (seed gradient = 1).
void backward(const Value& root);
// Clears gradients on the given leaves (optimizer step boundary).
void zero_grad(const std::vector<Value>& leaves);

// ---- elementwise ----
Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b);
Value divv(const Value& a, const Value& b);
Value neg(const Value& a);
Value add_scalar(const Value& a, double c);
Value mul_scalar(const Value& a, double c);
Value relu(const Value& a);
Value leaky_relu(const Value& a, double slope);
Value sigmoid(const Value& a);
Value silu(const Value& a);
Value exp_op(const Value& a);
Value log_op(const Value& a);   // caller guarantees positivity
Value abs_op(const Value& a);
Value clamp_op(const Value& a, double lo, double hi);
Value pow_scalar(const Value& a, double p);  // caller guarantees positive base

// ---- reductions / broadcasts ----
Value sum_all(const Value& a);                         // -> {1}
Value mean_all(const Value& a);                        // -> {1}
Value dot_const(const Value& a, const Tensor& w);      // sum(a*w) -> {1}
Value mean_hw(const Value& a);                         // (C,H,W) -> (C)
Value bcast_hw(const Value& a, int h, int w);          // (C) -> (C,H,W)
Value mul_mask(const Value& a, const Tensor& mask_hw); // per-pixel scale, shared across channels
Value add_bias_masked(const Value& a, const Value& bias, const Tensor& mask_hw);

// ---- linear algebra / structure ----
Value affine(const Value& x, const Value& w, const Value& b);       // (n),(m,n),(m) -> (m)
Value matmul_nt(const Value& a, const Value& b);                    // (m,k)x(n,k) -> (m,n)
Value reshape(const Value& a, std::vector<int> shape);
Value concat_c(const Value& a, const Value& b);                     // channel concat
Value upsample_nearest2(const Value& a);                            // (C,H,W) -> (C,2H,2W)
Value conv2d(const Value& x, const Value& w, const Value& b, int stride, int pad);
Value conv2d_nobias(const Value& x, const Value& w, int stride, int pad);

// ---- special ----
// Forward: out = (a >= t) ? 1 : 0. straight_through=true passes the incoming
// gradient unchanged; false detaches (true derivative is zero a.e.).
Value binarize_ge(const Value& a, double t, bool straight_through);
// Separable 2-D correlation with a fixed symmetric kernel, zero padded.
Value sep_conv_fixed(const Value& a, const std::vector<double>& k1d);
// Edge-weighted anisotropic total variation, normalized by edge count.
// wh: (H,W-1) horizontal edge weights, wv: (H-1,W) vertical edge weights.
Value tv_weighted(const Value& m, const Tensor& wh, const Tensor& wv);

}  // namespace cfx
