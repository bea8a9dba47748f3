// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "oracles.hpp"
#include "scomcp/extractor.hpp"

using namespace scomcp;
using namespace scomcp::extractor;

namespace {

GridSpec tiny_grid() {
    GridSpec g;
    g.H = 6;
    g.W = 8;
    g.C = 4;
    g.cell = 1.0;
    return g;
}

ExtractorParams tiny_extractor(nn::ParamStore& store, const GridSpec& g, uint64_t seed) {
    auto rng = make_rng({seed});
    return make_extractor(store, g, 3, rng);
}

}  // namespace

TEST_SUITE("extractor") {

TEST_CASE("empty cloud rasterizes to an all-zero grid") {
    scenes::PointCloud pc;
    pc.frame = "ego";
    const auto raw = rasterize(pc, tiny_grid());
    for (int64_t i = 0; i < raw.size(); ++i) CHECK(raw[i] == 0.0);
}

TEST_CASE("single point at a cell center: count 1, zero offsets") {
    const auto g = tiny_grid();
    scenes::PointCloud pc;
    pc.frame = "ego";
    const int idx = 2 * g.W + 5;
    pc.points.push_back({g.cell_cx(idx), g.cell_cy(idx), 1.2});
    const auto raw = rasterize(pc, g);
    CHECK(raw.at(idx, 0) == 1.0);
    CHECK(raw.at(idx, 1) == doctest::Approx(0.0));
    CHECK(raw.at(idx, 2) == doctest::Approx(0.0));
    CHECK(raw.at(idx, 3) == doctest::Approx(1.2));
    CHECK(raw.at(idx, 4) == 1.0);
}

TEST_CASE("counting oracle: total count equals in-extent points") {
    const auto g = tiny_grid();
    scenes::PointCloud pc;
    pc.frame = "ego";
    auto rng = make_rng({55});
    std::uniform_real_distribution<double> u(-6.0, 6.0);  // some points fall outside
    int inside = 0;
    for (int i = 0; i < 500; ++i) {
        const double x = u(rng), y = u(rng);
        pc.points.push_back({x, y, 0.5});
        if (g.cell_index(x, y) >= 0) ++inside;
    }
    const auto raw = rasterize(pc, g);
    double total = 0.0;
    for (int i = 0; i < g.hw(); ++i) total += raw.at(i, 0);
    CHECK(total == doctest::Approx(inside));
}

TEST_CASE("zero grid with zero biases maps to a zero feature map") {
    const auto g = tiny_grid();
    nn::ParamStore store;
    const auto p = tiny_extractor(store, g, 3);  // biases start at zero
    const auto out = extract(nn::constant(nn::Tensor::zeros(g.hw(), kRawFeatures)), g, p);
    for (int64_t i = 0; i < out->val.size(); ++i) CHECK(out->val[i] == 0.0);
}

TEST_CASE("extract is deterministic") {
    const auto g = tiny_grid();
    nn::ParamStore store;
    const auto p = tiny_extractor(store, g, 4);
    auto rng = make_rng({9});
    const auto raw = nn::Tensor::randn(g.hw(), kRawFeatures, rng, 1.0);
    const auto a = extract(nn::constant(raw), g, p);
    const auto b = extract(nn::constant(raw), g, p);
    for (int64_t i = 0; i < a->val.size(); ++i) CHECK(a->val[i] == b->val[i]);
}

TEST_CASE("gradient of a scalar readout matches finite differences") {
    const auto g = tiny_grid();
    nn::ParamStore store;
    const auto p = tiny_extractor(store, g, 5);
    auto rng = make_rng({10});
    const auto raw = nn::Tensor::randn(g.hw(), kRawFeatures, rng, 1.0);
    const auto target = nn::constant(nn::Tensor::randn(g.hw(), g.C, rng, 1.0));

    std::vector<nn::Var> params;
    for (const auto& name : store.names()) params.push_back(store.get(name));
    auto build = [&] { return nn::mse(extract(nn::constant(raw), g, p), target); };
    CHECK(oracle::max_grad_rel_err(build, params, 8) < 1e-4);
}

TEST_CASE("conv stack is translation covariant on interior cells") {
    const auto g = tiny_grid();
    nn::ParamStore store;
    const auto p = tiny_extractor(store, g, 6);
    auto rng = make_rng({12});
    auto raw = nn::Tensor::zeros(g.hw(), kRawFeatures);
    // content confined away from borders so a one-cell shift stays interior
    for (int i = 1; i < g.H - 2; ++i)
        for (int j = 1; j < g.W - 2; ++j)
            for (int c = 0; c < kRawFeatures; ++c) {
                std::normal_distribution<double> d(0.0, 1.0);
                raw.at(i * g.W + j, c) = d(rng);
            }
    auto shifted = nn::Tensor::zeros(g.hw(), kRawFeatures);
    for (int i = 0; i < g.H - 1; ++i)
        for (int j = 0; j < g.W; ++j)
            for (int c = 0; c < kRawFeatures; ++c)
                shifted.at((i + 1) * g.W + j, c) = raw.at(i * g.W + j, c);

    const auto out = extract(nn::constant(raw), g, p)->val;
    const auto out_s = extract(nn::constant(shifted), g, p)->val;
    // compare interior rows, excluding a 3-cell safety border (receptive field)
    for (int i = 3; i < g.H - 4; ++i)
        for (int j = 3; j < g.W - 3; ++j)
            for (int c = 0; c < g.C; ++c)
                CHECK(out_s.at((i + 1) * g.W + j, c) ==
                      doctest::Approx(out.at(i * g.W + j, c)).epsilon(1e-10));
}

TEST_CASE("one shared parameter set serves both agents") {
    nn::ParamStore store;
    const auto g = tiny_grid();
    tiny_extractor(store, g, 7);
    int ext_params = 0;
    for (const auto& n : store.names())
        if (n.rfind("ext.", 0) == 0) ++ext_params;
    CHECK(ext_params == 8);  // 3 conv (w,b) pairs + output norm; no per-agent copies
    const auto view = attach_extractor(store, 3);
    CHECK(view.blocks[0].w.get() == store.get("ext.conv0.w").get());
}

}  // TEST_SUITE
