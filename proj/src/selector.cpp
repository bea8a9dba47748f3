// SPDX-License-Identifier: Apache-2.0
#include "scomcp/selector.hpp"

namespace scomcp::selector {

SelectorParams make_selector(nn::ParamStore& store, const GridSpec& grid, int d_attn,
                             std::mt19937_64& rng) {
    SelectorParams p;
    p.d_attn = d_attn;
    const int C = grid.C;
    p.gen_w = store.add("sel.gen.w", nn::he_init(1, C, C, rng));
    p.gen_b = store.add("sel.gen.b", nn::Tensor::zeros(1, 1));
    p.q_w = store.add("sel.q.w", nn::he_init(1, d_attn, 1, rng));
    p.q_b = store.add("sel.q.b", nn::Tensor::zeros(1, d_attn));
    p.k_w = store.add("sel.k.w", nn::he_init(C, d_attn, C, rng));
    p.k_b = store.add("sel.k.b", nn::Tensor::zeros(1, d_attn));
    p.v_w = store.add("sel.v.w", nn::he_init(C, C, C, rng));
    p.v_b = store.add("sel.v.b", nn::Tensor::zeros(1, C));
    p.gamma_res = store.add("sel.gamma_res", nn::Tensor::zeros(1, 1));
    p.dow_w = store.add("sel.dow.w", nn::he_init(1, C, C, rng));
    p.dow_b = store.add("sel.dow.b", nn::Tensor::zeros(1, 1));
    p.sp_w = store.add("sel.sp.w", nn::he_init(1, 2 * 9, 2 * 9, rng));
    p.sp_b = store.add("sel.sp.b", nn::Tensor::zeros(1, 1));
    return p;
}

SelectorParams attach_selector(const nn::ParamStore& store, int d_attn) {
    SelectorParams p;
    p.d_attn = d_attn;
    p.gen_w = store.get("sel.gen.w");
    p.gen_b = store.get("sel.gen.b");
    p.q_w = store.get("sel.q.w");
    p.q_b = store.get("sel.q.b");
    p.k_w = store.get("sel.k.w");
    p.k_b = store.get("sel.k.b");
    p.v_w = store.get("sel.v.w");
    p.v_b = store.get("sel.v.b");
    p.gamma_res = store.get("sel.gamma_res");
    p.dow_w = store.get("sel.dow.w");
    p.dow_b = store.get("sel.dow.b");
    p.sp_w = store.get("sel.sp.w");
    p.sp_b = store.get("sel.sp.b");
    return p;
}

nn::Var importance_map(const nn::Var& M, const SelectorParams& p) {
    // 1x1 conv == per-cell linear readout
    auto logits = nn::add_rowvec(nn::matmul_nt(M, p.gen_w), p.gen_b);
    return nn::sigmoid(logits);
}

nn::Var cross_attend(const nn::Var& I, const nn::Var& M, const SelectorParams& p, nn::Var* attn_out) {
    if (I->val.rows() != M->val.rows()) throw ContractViolation("cross_attend: grid mismatch");
    auto Q = nn::add_rowvec(nn::matmul_op(I, p.q_w), p.q_b);    // [HW, d]
    auto K = nn::add_rowvec(nn::matmul_op(M, p.k_w), p.k_b);    // [HW, d]
    auto V = nn::add_rowvec(nn::matmul_op(M, p.v_w), p.v_b);    // [HW, C]
    auto scores = nn::scale_const(nn::matmul_nt(Q, K), 1.0 / std::sqrt(static_cast<double>(p.d_attn)));
    auto attn = nn::softmax_rows(scores);
    if (attn_out) *attn_out = attn;
    auto attended = nn::matmul_op(attn, V);                     // [HW, C]
    auto enhanced = nn::add(M, nn::scale_var(attended, p.gamma_res));
    return nn::add_rowvec(nn::matmul_nt(enhanced, p.dow_w), p.dow_b);  // [HW, 1]
}

nn::Var spatial_attend(const nn::Var& I, const GridSpec& grid, const SelectorParams& p) {
    // the importance map has a single channel, so avg- and max-pooled
    // statistics both equal the map itself
    auto stats = nn::concat_cols(I, I);                         // [HW, 2]
    auto gate = nn::sigmoid(nn::conv2d(stats, grid.H, grid.W, p.sp_w, p.sp_b, 3));
    return nn::mul(I, gate);
}

nn::Var keep_probabilities(const nn::Var& Mp, const nn::Var& Ip) {
    if (!Mp->val.same_shape(Ip->val)) throw ContractViolation("keep_probabilities: shape mismatch");
    auto prod = nn::mul(Mp, Ip);
    const int hw = prod->val.rows();
    return nn::reshape(nn::softmax_rows(nn::reshape(prod, 1, hw)), hw, 1);
}

std::vector<uint8_t> threshold_mask(const nn::Tensor& probs, double gamma_thr) {
    if (gamma_thr < 0.0) throw ContractViolation("threshold_mask: gamma_thr must be >= 0");
    std::vector<uint8_t> mask(probs.size());
    for (int64_t i = 0; i < probs.size(); ++i) mask[i] = probs[i] > gamma_thr ? 1 : 0;
    return mask;
}

SelectionResult select_features(const nn::Tensor& M, const std::vector<uint8_t>& mask) {
    if (static_cast<int64_t>(mask.size()) != M.rows())
        throw ContractViolation("select_features: mask size mismatch");
    SelectionResult r;
    r.mask = mask;
    for (size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) r.positions.push_back(static_cast<int>(i));
    r.K = static_cast<int>(r.positions.size());
    r.features = nn::Tensor(r.K, M.cols());
    for (int i = 0; i < r.K; ++i)
        for (int c = 0; c < M.cols(); ++c) r.features.at(i, c) = M.at(r.positions[i], c);
    return r;
}

nn::Var keep_probabilities_graph(const nn::Var& M, const GridSpec& grid, const SelectorParams& p) {
    auto I = importance_map(M, p);
    auto Mp = cross_attend(I, M, p);
    auto Ip = spatial_attend(I, grid, p);
    return keep_probabilities(Mp, Ip);
}

SelectionResult run_selector(const nn::Tensor& M, const GridSpec& grid, const SelectorParams& p,
                             double gamma_thr) {
    auto probs = keep_probabilities_graph(nn::constant(M), grid, p);
    SelectionResult r = select_features(M, threshold_mask(probs->val, gamma_thr));
    r.probs = probs->val;
    return r;
}

}  // namespace scomcp::selector
