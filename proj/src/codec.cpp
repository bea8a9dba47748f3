// SPDX-License-Identifier: Apache-2.0
#include "scomcp/codec.hpp"

#include "scomcp/errors.hpp"

namespace scomcp::codec {

namespace {

CAParams make_ca(nn::ParamStore& store, const std::string& prefix, int d, std::mt19937_64& rng) {
    CAParams p;
    p.avg_w = store.add(prefix + ".avg.w", nn::he_init(d, d, d, rng));
    p.avg_b = store.add(prefix + ".avg.b", nn::Tensor::zeros(1, d));
    p.max_w = store.add(prefix + ".max.w", nn::he_init(d, d, d, rng));
    p.max_b = store.add(prefix + ".max.b", nn::Tensor::zeros(1, d));
    // zero-init scale/offset projections: the block opens as an exact
    // identity (unit scale, zero offset) and learns its gating from there
    p.scale_w = store.add(prefix + ".scale.w", nn::Tensor::zeros(2 * d, d));
    p.scale_b = store.add(prefix + ".scale.b", nn::Tensor::full(1, d, 1.0));
    p.off_w = store.add(prefix + ".off.w", nn::Tensor::zeros(2 * d, d));
    p.off_b = store.add(prefix + ".off.b", nn::Tensor::zeros(1, d));
    return p;
}

CAParams attach_ca(const nn::ParamStore& store, const std::string& prefix) {
    CAParams p;
    p.avg_w = store.get(prefix + ".avg.w");
    p.avg_b = store.get(prefix + ".avg.b");
    p.max_w = store.get(prefix + ".max.w");
    p.max_b = store.get(prefix + ".max.b");
    p.scale_w = store.get(prefix + ".scale.w");
    p.scale_b = store.get(prefix + ".scale.b");
    p.off_w = store.get(prefix + ".off.w");
    p.off_b = store.get(prefix + ".off.b");
    return p;
}

TransformerParams make_tf(nn::ParamStore& store, const std::string& prefix, int d, int ff_mult,
                          std::mt19937_64& rng) {
    TransformerParams p;
    p.ln1_g = store.add(prefix + ".ln1.g", nn::Tensor::full(1, d, 1.0));
    p.ln1_b = store.add(prefix + ".ln1.b", nn::Tensor::zeros(1, d));
    p.wq = store.add(prefix + ".wq", nn::he_init(d, d, d, rng));
    p.bq = store.add(prefix + ".bq", nn::Tensor::zeros(1, d));
    p.wk = store.add(prefix + ".wk", nn::he_init(d, d, d, rng));
    p.wv = store.add(prefix + ".wv", nn::he_init(d, d, d, rng));
    p.bv = store.add(prefix + ".bv", nn::Tensor::zeros(1, d));
    p.wo = store.add(prefix + ".wo", nn::he_init(d, d, d, rng));
    p.bo = store.add(prefix + ".bo", nn::Tensor::zeros(1, d));
    p.ln2_g = store.add(prefix + ".ln2.g", nn::Tensor::full(1, d, 1.0));
    p.ln2_b = store.add(prefix + ".ln2.b", nn::Tensor::zeros(1, d));
    p.ff1_w = store.add(prefix + ".ff1.w", nn::he_init(d, ff_mult * d, d, rng));
    p.ff1_b = store.add(prefix + ".ff1.b", nn::Tensor::zeros(1, ff_mult * d));
    p.ff2_w = store.add(prefix + ".ff2.w", nn::he_init(ff_mult * d, d, ff_mult * d, rng));
    p.ff2_b = store.add(prefix + ".ff2.b", nn::Tensor::zeros(1, d));
    return p;
}

TransformerParams attach_tf(const nn::ParamStore& store, const std::string& prefix) {
    TransformerParams p;
    p.ln1_g = store.get(prefix + ".ln1.g");
    p.ln1_b = store.get(prefix + ".ln1.b");
    p.wq = store.get(prefix + ".wq");
    p.bq = store.get(prefix + ".bq");
    p.wk = store.get(prefix + ".wk");
    p.wv = store.get(prefix + ".wv");
    p.bv = store.get(prefix + ".bv");
    p.wo = store.get(prefix + ".wo");
    p.bo = store.get(prefix + ".bo");
    p.ln2_g = store.get(prefix + ".ln2.g");
    p.ln2_b = store.get(prefix + ".ln2.b");
    p.ff1_w = store.get(prefix + ".ff1.w");
    p.ff1_b = store.get(prefix + ".ff1.b");
    p.ff2_w = store.get(prefix + ".ff2.w");
    p.ff2_b = store.get(prefix + ".ff2.b");
    return p;
}

CodecSideParams make_side(nn::ParamStore& store, const std::string& side, int in_dim, int out_dim,
                          int d, int blocks, int ff_mult, std::mt19937_64& rng) {
    CodecSideParams s;
    s.emb_w = store.add("codec." + side + ".emb.w", nn::he_init(in_dim, d, in_dim, rng));
    s.emb_b = store.add("codec." + side + ".emb.b", nn::Tensor::zeros(1, d));
    for (int i = 0; i < blocks; ++i) {
        s.tf.push_back(make_tf(store, "codec." + side + ".tf" + std::to_string(i), d, ff_mult, rng));
        s.ca.push_back(make_ca(store, "codec." + side + ".ca" + std::to_string(i), d, rng));
    }
    s.out_w = store.add("codec." + side + ".out.w", nn::he_init(d, out_dim, d, rng));
    s.out_b = store.add("codec." + side + ".out.b", nn::Tensor::zeros(1, out_dim));
    return s;
}

CodecSideParams attach_side(const nn::ParamStore& store, const std::string& side, int blocks) {
    CodecSideParams s;
    s.emb_w = store.get("codec." + side + ".emb.w");
    s.emb_b = store.get("codec." + side + ".emb.b");
    for (int i = 0; i < blocks; ++i) {
        s.tf.push_back(attach_tf(store, "codec." + side + ".tf" + std::to_string(i)));
        s.ca.push_back(attach_ca(store, "codec." + side + ".ca" + std::to_string(i)));
    }
    s.out_w = store.get("codec." + side + ".out.w");
    s.out_b = store.get("codec." + side + ".out.b");
    return s;
}

nn::Var run_side(const nn::Var& x, const CodecSideParams& s, int heads) {
    nn::Var h = nn::add_rowvec(nn::matmul_op(x, s.emb_w), s.emb_b);
    for (size_t i = 0; i < s.tf.size(); ++i) {
        h = transformer_block(h, s.tf[i], heads);
        h = channel_attention(h, s.ca[i]);
    }
    return nn::add_rowvec(nn::matmul_op(h, s.out_w), s.out_b);
}

}  // namespace

CodecParams make_codec(nn::ParamStore& store, int feat_c, int d_model, int blocks, int heads,
                       int ff_mult, std::mt19937_64& rng) {
    CodecParams p;
    p.d_model = d_model;
    p.heads = heads;
    p.blocks = blocks;
    p.ff_mult = ff_mult;
    p.feat_c = feat_c;
    p.enc = make_side(store, "enc", feat_c, 2 * feat_c, d_model, blocks, ff_mult, rng);
    p.dec = make_side(store, "dec", 2 * feat_c, feat_c, d_model, blocks, ff_mult, rng);
    return p;
}

CodecParams attach_codec(const nn::ParamStore& store, int feat_c, int d_model, int blocks,
                         int heads, int ff_mult) {
    CodecParams p;
    p.d_model = d_model;
    p.heads = heads;
    p.blocks = blocks;
    p.ff_mult = ff_mult;
    p.feat_c = feat_c;
    p.enc = attach_side(store, "enc", blocks);
    p.dec = attach_side(store, "dec", blocks);
    return p;
}

nn::Var channel_attention(const nn::Var& f, const CAParams& p) {
    auto s_avg = nn::add_rowvec(nn::matmul_op(nn::mean_over_rows(f), p.avg_w), p.avg_b);  // [1,d]
    auto s_max = nn::add_rowvec(nn::matmul_op(nn::max_over_rows(f), p.max_w), p.max_b);   // [1,d]
    auto w = nn::concat_cols(s_avg, s_max);                                               // [1,2d]
    auto scale = nn::add_rowvec(nn::matmul_op(w, p.scale_w), p.scale_b);                  // [1,d]
    auto offset = nn::add_rowvec(nn::matmul_op(w, p.off_w), p.off_b);                     // [1,d]
    return nn::add_rowvec(nn::mul_rowvec(f, scale), offset);
}

nn::Var transformer_block(const nn::Var& x, const TransformerParams& p, int heads) {
    const int d = x->val.cols();
    if (d % heads != 0) throw ContractViolation("transformer_block: d_model not divisible by heads");
    const int dh = d / heads;

    auto h1 = nn::layer_norm_rows(x, p.ln1_g, p.ln1_b);
    auto Q = nn::add_rowvec(nn::matmul_op(h1, p.wq), p.bq);
    auto K = nn::matmul_op(h1, p.wk);
    auto V = nn::add_rowvec(nn::matmul_op(h1, p.wv), p.bv);

    nn::Var heads_out;
    for (int h = 0; h < heads; ++h) {
        auto qh = nn::col_slice(Q, h * dh, (h + 1) * dh);
        auto kh = nn::col_slice(K, h * dh, (h + 1) * dh);
        auto vh = nn::col_slice(V, h * dh, (h + 1) * dh);
        auto attn = nn::softmax_rows(
            nn::scale_const(nn::matmul_nt(qh, kh), 1.0 / std::sqrt(static_cast<double>(dh))));
        auto oh = nn::matmul_op(attn, vh);
        heads_out = heads_out ? nn::concat_cols(heads_out, oh) : oh;
    }
    auto attn_out = nn::add_rowvec(nn::matmul_op(heads_out, p.wo), p.bo);
    auto x1 = nn::add(x, attn_out);

    auto h2 = nn::layer_norm_rows(x1, p.ln2_g, p.ln2_b);
    auto ff = nn::add_rowvec(
        nn::matmul_op(nn::relu(nn::add_rowvec(nn::matmul_op(h2, p.ff1_w), p.ff1_b)), p.ff2_w),
        p.ff2_b);
    return nn::add(x1, ff);
}

nn::Var encode(const nn::Var& F, const CodecParams& p, double p_bound) {
    if (F->val.rows() < 1) throw ContractViolation("encode: requires K >= 1 tokens");
    if (F->val.cols() != p.feat_c) throw ContractViolation("encode: feature width mismatch");
    auto z = run_side(F, p.enc, p.heads);  // [K, 2C]
    return nn::normalize_power(z, p_bound);
}

nn::Var decode_tokens(const nn::Var& z_hat, const CodecParams& p) {
    if (z_hat->val.cols() != 2 * p.feat_c) throw ContractViolation("decode_tokens: symbol width mismatch");
    return run_side(z_hat, p.dec, p.heads);
}

nn::Var decode_pad(const nn::Var& f_hat, const std::vector<int>& positions, int hw) {
    for (int pos : positions)
        if (pos < 0 || pos >= hw) throw ContractViolation("decode_pad: position out of grid");
    if (f_hat->val.rows() == 0) return nn::constant(nn::Tensor::zeros(hw, f_hat->val.cols()));
    return nn::scatter_rows(f_hat, positions, hw);
}

std::vector<std::complex<double>> to_complex(const nn::Tensor& t) {
    std::vector<std::complex<double>> v(t.size() / 2);
    for (size_t i = 0; i < v.size(); ++i) v[i] = {t[2 * i], t[2 * i + 1]};
    return v;
}

nn::Tensor from_complex(const std::vector<std::complex<double>>& v, int K, int C) {
    nn::Tensor t(K, 2 * C);
    if (static_cast<int64_t>(v.size()) != static_cast<int64_t>(K) * C)
        throw ContractViolation("from_complex: size mismatch");
    for (size_t i = 0; i < v.size(); ++i) {
        t[2 * i] = v[i].real();
        t[2 * i + 1] = v[i].imag();
    }
    return t;
}

double average_power(const nn::Tensor& t) {
    if (t.size() == 0) return 0.0;
    double ss = 0.0;
    for (int64_t i = 0; i < t.size(); ++i) ss += t[i] * t[i];
    return ss / static_cast<double>(t.size() / 2);
}

}  // namespace scomcp::codec
