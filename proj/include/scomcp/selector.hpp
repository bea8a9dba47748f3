// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "scomcp/extractor.hpp"

namespace scomcp::selector {

using extractor::GridSpec;

struct SelectorParams {
    nn::Var gen_w, gen_b;    // importance generator, 1x1 conv C->1
    nn::Var q_w, q_b;        // query projection 1->d_attn
    nn::Var k_w, k_b;        // key projection C->d_attn
    nn::Var v_w, v_b;        // value projection C->C
    nn::Var gamma_res;       // learnable residual weight (scalar)
    nn::Var dow_w, dow_b;    // downsampling 1x1 conv C->1
    nn::Var sp_w, sp_b;      // spatial attention conv 3x3, 2->1
    int d_attn = 16;
};

SelectorParams make_selector(nn::ParamStore& store, const GridSpec& grid, int d_attn,
                             std::mt19937_64& rng);
SelectorParams attach_selector(const nn::ParamStore& store, int d_attn);

// Eq.-11 style confidence map: 1x1 conv + sigmoid -> [H*W, 1], entries in (0,1)
nn::Var importance_map(const nn::Var& M, const SelectorParams& p);

// Importance-as-query cross attention over spatial positions, residual-added
// with the learnable scalar, then the 1x1 downsampling conv -> [H*W, 1].
// attn_out, when given, receives the row-stochastic attention matrix.
nn::Var cross_attend(const nn::Var& I, const nn::Var& M, const SelectorParams& p,
                     nn::Var* attn_out = nullptr);

// Spatial gate on the importance map: channel-pooled stats -> conv -> sigmoid,
// applied multiplicatively.
nn::Var spatial_attend(const nn::Var& I, const GridSpec& grid, const SelectorParams& p);

// softmax over all H*W elementwise products -> [H*W, 1], sums to one
nn::Var keep_probabilities(const nn::Var& Mp, const nn::Var& Ip);

// strict indicator probs > gamma_thr
std::vector<uint8_t> threshold_mask(const nn::Tensor& probs, double gamma_thr);

struct SelectionResult {
    std::vector<uint8_t> mask;   // H*W
    nn::Tensor probs;            // [H*W, 1]
    nn::Tensor features;         // [K, C]
    std::vector<int> positions;  // row-major cell indices, ascending
    int K = 0;
};

// Gathers rows of M at the mask's positions (row-major order).
SelectionResult select_features(const nn::Tensor& M, const std::vector<uint8_t>& mask);

// Full selection pass (inference): importance -> attention -> probabilities
// -> mask -> gather. probs_out is the softmax tensor for reuse.
SelectionResult run_selector(const nn::Tensor& M, const GridSpec& grid, const SelectorParams& p,
                             double gamma_thr);

// Differentiable keep-probabilities pipeline for training; returns the
// [H*W, 1] probability Var.
nn::Var keep_probabilities_graph(const nn::Var& M, const GridSpec& grid, const SelectorParams& p);

}  // namespace scomcp::selector
