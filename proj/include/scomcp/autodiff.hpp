// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "scomcp/tensor.hpp"

namespace scomcp::nn {

// Reverse-mode autodiff over 2-D tensors. Graphs are built per sample and
// discarded after backward(); parameter leaves persist across graphs and
// accumulate gradients until explicitly cleared.
struct Node {
    Tensor val;
    Tensor grad;  // allocated on first accumulation
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backfn;

    Tensor& ensure_grad() {
        if (grad.rows() != val.rows() || grad.cols() != val.cols()) grad = Tensor::zeros(val.rows(), val.cols());
        return grad;
    }
    void clear_grad() { grad = Tensor(); }
};

using Var = std::shared_ptr<Node>;

Var constant(Tensor v);
Var leaf(Tensor v, bool requires_grad = true);

// Runs reverse-mode accumulation from a scalar [1,1] root.
void backward(const Var& root);

// elementwise / broadcast
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var neg(const Var& a);
Var scale_const(const Var& a, double s);
Var add_const_t(const Var& a, const Tensor& t);       // a + constant tensor
Var scale_var(const Var& a, const Var& s);            // s is [1,1]
Var add_rowvec(const Var& x, const Var& v);           // [R,C] + [1,C]
Var mul_rowvec(const Var& x, const Var& v);           // [R,C] * [1,C]
Var mul_colvec(const Var& x, const Var& v);           // [R,C] * [R,1]

// linear algebra
Var matmul_op(const Var& a, const Var& b);            // a[m,k] * b[k,n]
Var matmul_nt(const Var& a, const Var& b);            // a[m,k] * b[n,k]^T

// nonlinearities / normalizations
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var softmax_rows(const Var& x);
Var layer_norm_rows(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);

// reductions / reshapes
Var mean_over_rows(const Var& x);                     // [R,C] -> [1,C]
Var max_over_rows(const Var& x);                      // [R,C] -> [1,C]
Var rowwise_dot(const Var& a, const Var& b);          // -> [R,1]
Var concat_cols(const Var& a, const Var& b);          // [R,m],[R,n] -> [R,m+n]
Var col_slice(const Var& x, int c0, int c1);
Var reshape(const Var& x, int r, int c);
Var sum_all(const Var& x);                            // -> [1,1]
Var mean_all(const Var& x);
Var mse(const Var& a, const Var& b);                  // mean squared error -> [1,1]

// gather / scatter by row index (indices are structural constants)
Var gather_rows(const Var& x, std::vector<int> idx);
Var scatter_rows(const Var& x, std::vector<int> idx, int rows);

// stride-1 same-padding convolution on a flattened [H*W, Cin] map
// wgt is [Cout, Cin*k*k], bias [1, Cout], k odd
Var conv2d(const Var& x, int H, int W, const Var& wgt, const Var& bias, int k);

// straight-through threshold: forward indicator(probs > gamma), backward identity
Var ste_threshold(const Var& probs, double gamma);

// channel-layer helpers on interleaved complex tensors [K, 2C]
Var cmul_const(const Var& z, const Tensor& h);        // h (.) z, h constant
Var normalize_power(const Var& z, double p_bound);    // exact average power = p_bound

}  // namespace scomcp::nn
