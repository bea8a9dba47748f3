// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>

#include "scomcp/params.hpp"

namespace scomcp::codec {

struct ChannelSymbols {
    nn::Tensor symbols;  // [K, 2C] interleaved (even col = real, odd = imag)
    double p_z = 0.0;    // average power per complex symbol
    int K = 0, C = 0;
};

struct CAParams {
    nn::Var avg_w, avg_b;      // pooled-context linear, d -> d
    nn::Var max_w, max_b;      // pooled-context linear, d -> d
    nn::Var scale_w, scale_b;  // 2d -> d
    nn::Var off_w, off_b;      // 2d -> d
};

struct TransformerParams {
    nn::Var ln1_g, ln1_b;
    nn::Var wq, bq, wk, wv, bv, wo, bo;  // key bias is softmax-shift redundant, omitted
    nn::Var ln2_g, ln2_b;
    nn::Var ff1_w, ff1_b, ff2_w, ff2_b;
};

struct CodecSideParams {
    nn::Var emb_w, emb_b;  // input embedding
    std::vector<TransformerParams> tf;
    std::vector<CAParams> ca;
    nn::Var out_w, out_b;  // output projection
};

struct CodecParams {
    CodecSideParams enc, dec;
    int d_model = 64, heads = 4, blocks = 2, ff_mult = 4;
    int feat_c = 32;  // C of the BEV map
};

CodecParams make_codec(nn::ParamStore& store, int feat_c, int d_model, int blocks, int heads,
                       int ff_mult, std::mt19937_64& rng);
CodecParams attach_codec(const nn::ParamStore& store, int feat_c, int d_model, int blocks,
                         int heads, int ff_mult);

// CA block: parallel avg/max pooling over tokens, two context linears,
// concat, then scale and offset linears applied back to the tokens.
nn::Var channel_attention(const nn::Var& f, const CAParams& p);

nn::Var transformer_block(const nn::Var& x, const TransformerParams& p, int heads);

// Phi_enc: embed -> alternating transformer/CA blocks -> project to 2C reals
// per token -> exact average power normalization. Returns [K, 2C].
nn::Var encode(const nn::Var& F, const CodecParams& p, double p_bound = 1.0);

// Phi_dec on the received tokens: mirrored stack, projection back to C.
nn::Var decode_tokens(const nn::Var& z_hat, const CodecParams& p);

// zero-padding scatter of decoded K x C tokens onto the H*W grid
nn::Var decode_pad(const nn::Var& f_hat, const std::vector<int>& positions, int hw);

// interleaved tensor <-> complex vector helpers
std::vector<std::complex<double>> to_complex(const nn::Tensor& t);
nn::Tensor from_complex(const std::vector<std::complex<double>>& v, int K, int C);
double average_power(const nn::Tensor& t);

}  // namespace scomcp::codec
