// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "oracles.hpp"
#include "scomcp/codec.hpp"

using namespace scomcp;
using namespace scomcp::codec;

namespace {

struct Fix {
    nn::ParamStore store;
    CodecParams p;
    int C = 6;
    explicit Fix(uint64_t seed = 1) {
        auto rng = make_rng({seed});
        p = make_codec(store, C, 16, 2, 4, 2, rng);
    }
    std::vector<nn::Var> params(const std::string& prefix = "codec.") const {
        std::vector<nn::Var> v;
        for (const auto& n : store.names())
            if (n.rfind(prefix, 0) == 0) v.push_back(store.get(n));
        return v;
    }
    nn::Tensor tokens(int K, uint64_t seed = 9) const {
        auto rng = make_rng({seed});
        return nn::Tensor::randn(K, C, rng, 1.0);
    }
};

}  // namespace

TEST_SUITE("codec") {

TEST_CASE("pooling over a single token degenerates to the token itself") {
    auto rng = make_rng({3});
    auto f = nn::constant(nn::Tensor::randn(1, 5, rng, 1.0));
    const auto avg = nn::mean_over_rows(f);
    const auto mx = nn::max_over_rows(f);
    for (int c = 0; c < 5; ++c) {
        CHECK(avg->val[c] == f->val[c]);
        CHECK(mx->val[c] == f->val[c]);
    }
}

TEST_CASE("forced unit scale and zero offset make the CA block an identity") {
    Fix f;
    auto& ca = f.p.enc.ca[0];
    ca.scale_w->val.fill(0.0);
    ca.scale_b->val.fill(1.0);
    ca.off_w->val.fill(0.0);
    ca.off_b->val.fill(0.0);
    auto x = nn::constant(f.tokens(3).reshaped(3, f.C));
    // CA runs at d_model width inside the codec; test it standalone at C
    nn::ParamStore s2;
    auto rng = make_rng({8});
    CAParams ca2;
    ca2.avg_w = s2.add("a.w", nn::he_init(f.C, f.C, f.C, rng));
    ca2.avg_b = s2.add("a.b", nn::Tensor::zeros(1, f.C));
    ca2.max_w = s2.add("m.w", nn::he_init(f.C, f.C, f.C, rng));
    ca2.max_b = s2.add("m.b", nn::Tensor::zeros(1, f.C));
    ca2.scale_w = s2.add("s.w", nn::Tensor::zeros(2 * f.C, f.C));
    ca2.scale_b = s2.add("s.b", nn::Tensor::full(1, f.C, 1.0));
    ca2.off_w = s2.add("o.w", nn::Tensor::zeros(2 * f.C, f.C));
    ca2.off_b = s2.add("o.b", nn::Tensor::zeros(1, f.C));
    const auto y = channel_attention(x, ca2);
    for (int64_t i = 0; i < x->val.size(); ++i) CHECK(y->val[i] == doctest::Approx(x->val[i]));
}

TEST_CASE("CA block gradients: all four linear maps") {
    nn::ParamStore store;
    auto rng = make_rng({12});
    const int d = 5;
    CAParams ca;
    ca.avg_w = store.add("a.w", nn::he_init(d, d, d, rng));
    ca.avg_b = store.add("a.b", nn::Tensor::randn(1, d, rng, 0.1));
    ca.max_w = store.add("m.w", nn::he_init(d, d, d, rng));
    ca.max_b = store.add("m.b", nn::Tensor::randn(1, d, rng, 0.1));
    ca.scale_w = store.add("s.w", nn::he_init(2 * d, d, 2 * d, rng));
    ca.scale_b = store.add("s.b", nn::Tensor::full(1, d, 1.0));
    ca.off_w = store.add("o.w", nn::he_init(2 * d, d, 2 * d, rng));
    ca.off_b = store.add("o.b", nn::Tensor::randn(1, d, rng, 0.1));
    auto x = nn::leaf(nn::Tensor::randn(4, d, rng, 1.0));
    auto target = nn::constant(nn::Tensor::randn(4, d, rng, 1.0));

    std::vector<nn::Var> params = {ca.avg_w, ca.avg_b, ca.max_w, ca.max_b,
                                   ca.scale_w, ca.scale_b, ca.off_w, ca.off_b, x};
    auto build = [&] { return nn::mse(channel_attention(x, ca), target); };
    CHECK(oracle::max_grad_rel_err(build, params) < 1e-4);
}

TEST_CASE("encode: shape contract, exact unit power, determinism") {
    Fix f;
    for (int K : {1, 2, 7}) {
        const auto z = encode(nn::constant(f.tokens(K)), f.p, 1.0);
        CHECK(z->val.rows() == K);
        CHECK(z->val.cols() == 2 * f.C);
        CHECK(average_power(z->val) == doctest::Approx(1.0).epsilon(1e-5));
        CHECK(to_complex(z->val).size() == static_cast<size_t>(K) * f.C);
    }
    const auto a = encode(nn::constant(f.tokens(4)), f.p, 1.0);
    const auto b = encode(nn::constant(f.tokens(4)), f.p, 1.0);
    for (int64_t i = 0; i < a->val.size(); ++i) CHECK(a->val[i] == b->val[i]);
    CHECK_THROWS_AS(encode(nn::constant(nn::Tensor(0, 6)), f.p, 1.0), ContractViolation);
}

TEST_CASE("normalize_power: constant input, idempotence, measured power") {
    // all entries 2+0j -> all 1+0j at unit power bound
    nn::Tensor z(3, 4);
    for (int64_t i = 0; i < z.size(); i += 2) z[i] = 2.0;
    const auto n1 = nn::normalize_power(nn::constant(z), 1.0);
    for (int64_t i = 0; i < n1->val.size(); i += 2) {
        CHECK(n1->val[i] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(n1->val[i + 1] == doctest::Approx(0.0));
    }
    const auto n2 = nn::normalize_power(nn::constant(n1->val), 1.0);
    for (int64_t i = 0; i < n2->val.size(); ++i)
        CHECK(n2->val[i] == doctest::Approx(n1->val[i]).epsilon(1e-9));

    auto rng = make_rng({77});
    const auto zr = nn::Tensor::randn(5, 8, rng, 3.0);
    const auto nz = nn::normalize_power(nn::constant(zr), 1.0);
    CHECK(average_power(nz->val) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("decode: empty input and scatter support") {
    Fix f;
    const auto zero_pad = decode_pad(nn::constant(nn::Tensor(0, f.C)), {}, 20);
    CHECK(zero_pad->val.rows() == 20);
    for (int64_t i = 0; i < zero_pad->val.size(); ++i) CHECK(zero_pad->val[i] == 0.0);

    const auto F = f.tokens(3);
    std::vector<int> pos = {2, 7, 15};
    const auto padded = decode_pad(nn::constant(F), pos, 20);
    for (int r = 0; r < 20; ++r) {
        const bool sel = r == 2 || r == 7 || r == 15;
        for (int c = 0; c < f.C; ++c) {
            if (!sel) CHECK(padded->val.at(r, c) == 0.0);
        }
    }
    CHECK(padded->val.at(7, 0) == F.at(1, 0));
    CHECK_THROWS_AS(decode_pad(nn::constant(F), {2, 7, 25}, 20), ContractViolation);
}

TEST_CASE("shape round trip through encode/decode for several K") {
    Fix f;
    for (int K : {1, 2, 17, 30}) {
        const auto F = f.tokens(K, 100 + K);
        const auto z = encode(nn::constant(F), f.p, 1.0);
        const auto Fh = decode_tokens(z, f.p);
        CHECK(Fh->val.rows() == K);
        CHECK(Fh->val.cols() == f.C);
    }
}

TEST_CASE("full codec MSE gradient matches finite differences on a 4-token toy") {
    Fix f(42);
    const auto F = f.tokens(4, 5);
    auto params = f.params();
    auto build = [&] {
        auto Fv = nn::constant(F);
        auto z = encode(Fv, f.p, 1.0);
        auto Fh = decode_tokens(z, f.p);
        return nn::mse(Fh, Fv);
    };
    CHECK(oracle::max_grad_rel_err(build, params, 4) < 1e-3);
}

}  // TEST_SUITE
