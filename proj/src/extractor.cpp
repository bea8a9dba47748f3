// SPDX-License-Identifier: Apache-2.0
#include "scomcp/extractor.hpp"

namespace scomcp::extractor {

nn::Tensor rasterize(const scenes::PointCloud& pc, const GridSpec& grid) {
    nn::Tensor raw(grid.hw(), kRawFeatures);
    for (const auto& p : pc.points) {
        const int idx = grid.cell_index(p[0], p[1]);
        if (idx < 0) continue;
        raw.at(idx, 0) += 1.0;                          // count
        raw.at(idx, 1) += p[0] - grid.cell_cx(idx);     // dx accumulate
        raw.at(idx, 2) += p[1] - grid.cell_cy(idx);     // dy accumulate
        raw.at(idx, 3) += p[2];                         // z accumulate
    }
    for (int i = 0; i < grid.hw(); ++i) {
        const double n = raw.at(i, 0);
        if (n > 0.0) {
            raw.at(i, 1) /= n;
            raw.at(i, 2) /= n;
            raw.at(i, 3) /= n;
            raw.at(i, 4) = 1.0;  // occupancy
        }
    }
    return raw;
}

ExtractorParams make_extractor(nn::ParamStore& store, const GridSpec& grid, int hidden,
                               std::mt19937_64& rng) {
    ExtractorParams p;
    const int k = 3;
    const int dims[4] = {kRawFeatures, hidden, grid.C, grid.C};
    for (int i = 0; i < 3; ++i) {
        const int cin = dims[i], cout = dims[i + 1];
        ExtractorParams::Block blk;
        blk.k = k;
        blk.w = store.add("ext.conv" + std::to_string(i) + ".w",
                          nn::he_init(cout, cin * k * k, cin * k * k, rng));
        blk.b = store.add("ext.conv" + std::to_string(i) + ".b", nn::Tensor::zeros(1, cout));
        p.blocks.push_back(blk);
    }
    p.ln_g = store.add("ext.ln.g", nn::Tensor::full(1, grid.C, 1.0));
    p.ln_b = store.add("ext.ln.b", nn::Tensor::zeros(1, grid.C));
    return p;
}

ExtractorParams attach_extractor(const nn::ParamStore& store, int n_blocks) {
    ExtractorParams p;
    for (int i = 0; i < n_blocks; ++i) {
        ExtractorParams::Block blk;
        blk.w = store.get("ext.conv" + std::to_string(i) + ".w");
        blk.b = store.get("ext.conv" + std::to_string(i) + ".b");
        p.blocks.push_back(blk);
    }
    p.ln_g = store.get("ext.ln.g");
    p.ln_b = store.get("ext.ln.b");
    return p;
}

nn::Var extract(const nn::Var& raw, const GridSpec& grid, const ExtractorParams& p) {
    if (raw->val.rows() != grid.hw() || raw->val.cols() != kRawFeatures)
        throw ContractViolation("extract: raw grid shape mismatch");
    nn::Var x = raw;
    for (const auto& blk : p.blocks) x = nn::relu(nn::conv2d(x, grid.H, grid.W, blk.w, blk.b, blk.k));
    return nn::layer_norm_rows(x, p.ln_g, p.ln_b);
}

}  // namespace scomcp::extractor
