// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "scomcp/evaluation.hpp"
#include "scomcp/selector.hpp"

using namespace scomcp;
using namespace scomcp::selector;

namespace {

GridSpec tiny_grid() {
    GridSpec g;
    g.H = 5;
    g.W = 6;
    g.C = 4;
    return g;
}

struct Fix {
    GridSpec g = tiny_grid();
    nn::ParamStore store;
    SelectorParams p;
    nn::Tensor M;
    explicit Fix(uint64_t seed = 1, int d_attn = 3) {
        auto rng = make_rng({seed});
        p = make_selector(store, g, d_attn, rng);
        M = nn::Tensor::randn(g.hw(), g.C, rng, 1.0);
    }
    std::vector<nn::Var> params() const {
        std::vector<nn::Var> v;
        for (const auto& n : store.names()) v.push_back(store.get(n));
        return v;
    }
};

}  // namespace

TEST_SUITE("selector") {

TEST_CASE("importance of a zero map with zero bias is 0.5 everywhere") {
    Fix f;
    const auto I = importance_map(nn::constant(nn::Tensor::zeros(f.g.hw(), f.g.C)), f.p);
    for (int64_t i = 0; i < I->val.size(); ++i) CHECK(I->val[i] == doctest::Approx(0.5));
}

TEST_CASE("importance entries stay inside (0,1)") {
    Fix f(2);
    const auto I = importance_map(nn::constant(f.M), f.p);
    for (int64_t i = 0; i < I->val.size(); ++i) {
        CHECK(I->val[i] > 0.0);
        CHECK(I->val[i] < 1.0);
    }
}

TEST_CASE("cross-attention weight rows sum to one") {
    Fix f(3);
    auto I = importance_map(nn::constant(f.M), f.p);
    nn::Var attn;
    cross_attend(I, nn::constant(f.M), f.p, &attn);
    for (int r = 0; r < attn->val.rows(); ++r) {
        double s = 0.0;
        for (int c = 0; c < attn->val.cols(); ++c) s += attn->val.at(r, c);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("zero residual weight reduces cross_attend to the downsampling conv") {
    Fix f(4);
    f.p.gamma_res->val[0] = 0.0;
    auto I = importance_map(nn::constant(f.M), f.p);
    const auto Mp = cross_attend(I, nn::constant(f.M), f.p);
    for (int r = 0; r < f.g.hw(); ++r) {
        double acc = f.p.dow_b->val[0];
        for (int c = 0; c < f.g.C; ++c) acc += f.M.at(r, c) * f.p.dow_w->val.at(0, c);
        CHECK(Mp->val[r] == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("saturated positive gate leaves the importance map unchanged") {
    Fix f(5);
    f.p.sp_w->val.fill(0.0);
    f.p.sp_b->val[0] = 50.0;  // sigmoid(50) ~ 1
    auto I = importance_map(nn::constant(f.M), f.p);
    const auto Ip = spatial_attend(I, f.g, f.p);
    for (int64_t i = 0; i < I->val.size(); ++i)
        CHECK(Ip->val[i] == doctest::Approx(I->val[i]).epsilon(1e-9));
}

TEST_CASE("spatial attention output stays non-negative") {
    Fix f(6);
    auto I = importance_map(nn::constant(f.M), f.p);
    const auto Ip = spatial_attend(I, f.g, f.p);
    for (int64_t i = 0; i < Ip->val.size(); ++i) CHECK(Ip->val[i] >= 0.0);
}

TEST_CASE("selector gradients match finite differences") {
    Fix f(7);
    auto build = [&] {
        auto probs = keep_probabilities_graph(nn::constant(f.M), f.g, f.p);
        auto idx = std::vector<int>{0, 3, 11, 17};
        return nn::scale_const(
            nn::mean_all(nn::mul(nn::gather_rows(probs, idx), nn::gather_rows(probs, idx))), 1e4);
    };
    CHECK(oracle::max_grad_rel_err(build, f.params(), 6) < 1e-4);
}

TEST_CASE("keep probabilities: symmetry, normalization, shift invariance") {
    nn::Tensor mp(2, 1), ip(2, 1);
    mp[0] = 0.7;
    mp[1] = 0.7;
    ip[0] = 1.0;
    ip[1] = 1.0;
    const auto two = keep_probabilities(nn::constant(mp), nn::constant(ip));
    CHECK(two->val[0] == doctest::Approx(0.5));
    CHECK(two->val[1] == doctest::Approx(0.5));

    Fix f(8);
    auto I = importance_map(nn::constant(f.M), f.p);
    auto Mp = cross_attend(I, nn::constant(f.M), f.p);
    auto Ip = spatial_attend(I, f.g, f.p);
    const auto pr = keep_probabilities(Mp, Ip);
    double sum = 0.0;
    for (int64_t i = 0; i < pr->val.size(); ++i) sum += pr->val[i];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));

    nn::Tensor ones = nn::Tensor::full(f.g.hw(), 1, 1.0);
    auto prod_shift = nn::add_const_t(nn::mul(Mp, Ip), nn::Tensor::full(f.g.hw(), 1, 3.7));
    const auto pr2 = keep_probabilities(prod_shift, nn::constant(ones));
    for (int64_t i = 0; i < pr->val.size(); ++i)
        CHECK(pr2->val[i] == doctest::Approx(pr->val[i]).epsilon(1e-9));
}

TEST_CASE("threshold_mask: uniform probabilities and degenerate thresholds") {
    nn::Tensor probs = nn::Tensor::full(100, 1, 0.01);
    auto all = threshold_mask(probs, 0.005);
    auto none = threshold_mask(probs, 0.02);
    auto strict = threshold_mask(probs, 0.01);  // strict inequality drops ties
    int k_all = 0, k_none = 0, k_strict = 0;
    for (int i = 0; i < 100; ++i) {
        k_all += all[i];
        k_none += none[i];
        k_strict += strict[i];
    }
    CHECK(k_all == 100);
    CHECK(k_none == 0);
    CHECK(k_strict == 0);

    auto zero_thr = threshold_mask(probs, 0.0);
    for (int i = 0; i < 100; ++i) CHECK(zero_thr[i] == 1);
    CHECK_THROWS_AS(threshold_mask(probs, -0.1), ContractViolation);
}

TEST_CASE("select_features: full, empty and the gather/scatter round trip") {
    Fix f(9);
    std::vector<uint8_t> all(f.g.hw(), 1), none(f.g.hw(), 0);
    const auto r_all = select_features(f.M, all);
    CHECK(r_all.K == f.g.hw());
    CHECK(r_all.features.rows() == f.g.hw());
    const auto r_none = select_features(f.M, none);
    CHECK(r_none.K == 0);
    CHECK(r_none.features.rows() == 0);

    auto rng = make_rng({33});
    std::bernoulli_distribution coin(0.3);
    std::vector<uint8_t> mask(f.g.hw());
    for (auto& m : mask) m = coin(rng) ? 1 : 0;
    const auto r = select_features(f.M, mask);
    CHECK(static_cast<int>(r.positions.size()) == r.K);
    nn::Tensor scat = nn::Tensor::zeros(f.g.hw(), f.g.C);
    for (int i = 0; i < r.K; ++i)
        for (int c = 0; c < f.g.C; ++c) scat.at(r.positions[i], c) = r.features.at(i, c);
    for (int row = 0; row < f.g.hw(); ++row)
        for (int c = 0; c < f.g.C; ++c)
            CHECK(scat.at(row, c) == (mask[row] ? f.M.at(row, c) : 0.0));
    for (int i = 0; i < r.K; ++i)
        for (int c = 0; c < f.g.C; ++c) CHECK(r.features.at(i, c) == f.M.at(r.positions[i], c));
}

TEST_CASE("mask is monotone in the threshold") {
    auto rng = make_rng({44});
    nn::Tensor probs(64, 1);
    double sum = 0.0;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 64; ++i) {
        probs[i] = u(rng);
        sum += probs[i];
    }
    for (int i = 0; i < 64; ++i) probs[i] /= sum;
    std::uniform_real_distribution<double> ug(0.0, 0.05);
    for (int trial = 0; trial < 100; ++trial) {
        double g1 = ug(rng), g2 = ug(rng);
        if (g1 > g2) std::swap(g1, g2);
        const auto m1 = threshold_mask(probs, g1);
        const auto m2 = threshold_mask(probs, g2);
        for (int i = 0; i < 64; ++i)
            if (m2[i]) CHECK(m1[i]);  // higher threshold selects a subset
    }
}

TEST_CASE("selection count adapts to content at a fixed threshold") {
    Fix f(10);
    std::set<int> ks;
    auto rng = make_rng({55});
    for (int trial = 0; trial < 10; ++trial) {
        nn::Tensor M = nn::Tensor::randn(f.g.hw(), f.g.C, rng, 1.0 + trial * 0.3);
        const auto r = run_selector(M, f.g, f.p, 1.0 / f.g.hw());
        ks.insert(r.K);
        CHECK(evaluation::compression_ratio(r.mask) ==
              doctest::Approx(static_cast<double>(r.K) / f.g.hw()));
    }
    CHECK(ks.size() >= 2);
}

}  // TEST_SUITE
