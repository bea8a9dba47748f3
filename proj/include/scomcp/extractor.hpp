// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "scomcp/params.hpp"
#include "scomcp/scenes.hpp"

namespace scomcp::extractor {

struct GridSpec {
    int H = 32, W = 64, C = 32;
    double cell = 1.0;
    double x_extent() const { return W * cell; }  // x in [-x_extent/2, x_extent/2)
    double y_extent() const { return H * cell; }
    int hw() const { return H * W; }
    // row-major linear cell index; -1 when outside the extent
    int cell_index(double x, double y) const {
        const int j = static_cast<int>(std::floor((x + x_extent() / 2.0) / cell));
        const int i = static_cast<int>(std::floor((y + y_extent() / 2.0) / cell));
        if (i < 0 || i >= H || j < 0 || j >= W) return -1;
        return i * W + j;
    }
    double cell_cx(int idx) const { return (idx % W + 0.5) * cell - x_extent() / 2.0; }
    double cell_cy(int idx) const { return (idx / W + 0.5) * cell - y_extent() / 2.0; }
};

// Raw per-cell features: [count, mean dx, mean dy, mean z, occupancy]
constexpr int kRawFeatures = 5;

// Pillar rasterization of an ego-frame cloud onto the grid -> [H*W, 5]
nn::Tensor rasterize(const scenes::PointCloud& pc, const GridSpec& grid);

struct ExtractorParams {
    struct Block {
        nn::Var w, b;
        int k = 3;
    };
    std::vector<Block> blocks;  // conv(5->hidden) relu, conv(hidden->C) relu, conv(C->C) relu
    nn::Var ln_g, ln_b;         // per-cell channel norm keeps the map at unit scale
};

ExtractorParams make_extractor(nn::ParamStore& store, const GridSpec& grid, int hidden,
                               std::mt19937_64& rng);
ExtractorParams attach_extractor(const nn::ParamStore& store, int n_blocks);

// Phi_ext: conv stack mapping raw cell features to the C-channel BEV map
nn::Var extract(const nn::Var& raw, const GridSpec& grid, const ExtractorParams& p);

}  // namespace scomcp::extractor
