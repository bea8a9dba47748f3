// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "oracles.hpp"
#include "scomcp/classic.hpp"

using namespace scomcp;
using namespace scomcp::classic;

TEST_SUITE("classic") {

TEST_CASE("quantize8: degenerate, on-grid and random-bound cases") {
    // constant input reconstructs exactly
    nn::Tensor flat = nn::Tensor::full(3, 5, 2.5);
    auto [codes_c, spec_c] = quantize8(flat);
    for (uint8_t c : codes_c) CHECK(c == 0);
    const auto back_c = dequantize8(codes_c, spec_c, 3, 5);
    for (int64_t i = 0; i < flat.size(); ++i) CHECK(back_c[i] == 2.5);

    // linspace over [0,1] with 256 samples sits exactly on the level grid
    nn::Tensor lin(1, 256);
    for (int i = 0; i < 256; ++i) lin[i] = i / 255.0;
    auto [codes_l, spec_l] = quantize8(lin);
    const auto back_l = dequantize8(codes_l, spec_l, 1, 256);
    for (int i = 0; i < 256; ++i) CHECK(back_l[i] == doctest::Approx(lin[i]).epsilon(1e-12));

    // random input obeys the step bound
    auto rng = make_rng({1});
    nn::Tensor F = nn::Tensor::randn(16, 8, rng, 3.0);
    auto [codes, spec] = quantize8(F);
    const auto back = dequantize8(codes, spec, 16, 8);
    const double bound = (spec.max_v - spec.min_v) / 255.0 / 2.0 + 1e-9;
    for (int64_t i = 0; i < F.size(); ++i) CHECK(std::abs(F[i] - back[i]) <= bound);
}

TEST_CASE("convolutional code: zero word, round trip, linearity") {
    ConvCodec cc(100);
    Bits zeros(100, 0);
    const Bits coded = cc.encode(zeros);
    CHECK(coded.size() == 2 * (100 + ConvCodec::kMemory));
    for (uint8_t b : coded) CHECK(b == 0);

    auto rng = make_rng({2});
    std::bernoulli_distribution coin(0.5);
    Bits info(10000);
    for (auto& b : info) b = coin(rng) ? 1 : 0;
    ConvCodec big(500);
    CHECK(big.decode(big.encode(info)) == info);

    Bits a(100), b(100), ab(100);
    for (int i = 0; i < 100; ++i) {
        a[i] = coin(rng);
        b[i] = coin(rng);
        ab[i] = a[i] ^ b[i];
    }
    const Bits ea = cc.encode(a), eb = cc.encode(b), eab = cc.encode(ab);
    for (size_t i = 0; i < ea.size(); ++i) CHECK(eab[i] == (ea[i] ^ eb[i]));
}

TEST_CASE("every single coded-bit flip is corrected in one block") {
    ConvCodec cc(100);
    auto rng = make_rng({3});
    std::bernoulli_distribution coin(0.5);
    Bits info(100);
    for (auto& b : info) b = coin(rng) ? 1 : 0;
    const Bits coded = cc.encode(info);
    for (size_t flip = 0; flip < coded.size(); ++flip) {
        Bits corrupted = coded;
        corrupted[flip] ^= 1;
        CHECK(cc.decode(corrupted) == info);
    }
}

TEST_CASE("fec contracts: block multiple required, unknown kind rejected") {
    ConvCodec cc(100);
    CHECK_THROWS_AS(cc.encode(Bits(37, 0)), ContractViolation);
    CHECK_THROWS_AS(cc.decode(Bits(11, 0)), ContractViolation);
    ClassicConfig cfg;
    cfg.fec = "ldpc1000";
    CHECK_THROWS_AS(make_fec(cfg), ConfigError);
}

TEST_CASE("qam constellations have unit average energy") {
    for (int M : {16, 256}) {
        const int m = M == 16 ? 4 : 8;
        Bits bits;
        for (int sym = 0; sym < M; ++sym)
            for (int b = m - 1; b >= 0; --b) bits.push_back((sym >> b) & 1);
        const auto syms = qam_modulate(bits, M);
        REQUIRE(static_cast<int>(syms.size()) == M);
        double e = 0.0;
        for (const auto& s : syms) e += std::norm(s);
        CHECK(e / M == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("qam round trip is the identity without noise") {
    auto rng = make_rng({4});
    std::bernoulli_distribution coin(0.5);
    for (int M : {16, 256}) {
        Bits bits(4096);
        for (auto& b : bits) b = coin(rng) ? 1 : 0;
        CHECK(qam_demodulate(qam_modulate(bits, M), M) == bits);
    }
    CHECK_THROWS_AS(qam_modulate(Bits(7, 0), 16), ContractViolation);
}

TEST_CASE("uncoded 16QAM BER matches the Gray-mapping closed form at 10 dB") {
    auto rng = make_rng({5});
    std::bernoulli_distribution coin(0.5);
    const int n_bits = 1000000;
    Bits bits(n_bits);
    for (auto& b : bits) b = coin(rng) ? 1 : 0;
    const auto rx = channel::awgn(qam_modulate(bits, 16), 10.0, 99);
    const auto rbits = qam_demodulate(rx, 16);
    int64_t errors = 0;
    for (int i = 0; i < n_bits; ++i) errors += bits[i] != rbits[i];
    const double ber = static_cast<double>(errors) / n_bits;
    const double analytic = qam16_gray_ber(std::pow(10.0, 1.0));
    CHECK(ber == doctest::Approx(analytic).epsilon(0.05));
}

TEST_CASE("channel_uses arithmetic and the paper's parity points") {
    CHECK(channel_uses(100, 0.01, 0.5, 16) == doctest::Approx(4.0).epsilon(1e-12));
    // equal-use settings: semantic CR 1.4e-3 transmits S_m*CR complex symbols
    const double s_m = 12345.0;
    const double semantic_uses = s_m * 1.4e-3;
    CHECK(channel_uses(s_m, 3.5e-4, 0.5, 16) == doctest::Approx(semantic_uses).epsilon(1e-12));
    CHECK(channel_uses(s_m, 7e-4, 0.5, 256) == doctest::Approx(semantic_uses).epsilon(1e-12));
    CHECK_THROWS_AS(channel_uses(0, 0.01, 0.5, 16), ContractViolation);
}

TEST_CASE("transmit_classic over a clean channel stays within the quantizer bound") {
    auto rng = make_rng({6});
    nn::Tensor F = nn::Tensor::randn(12, 8, rng, 2.0);
    ClassicConfig ccfg;
    ccfg.fec_block_bits = 100;
    channel::ChannelConfig ch;
    ch.kind = channel::Kind::awgn;
    ch.snr_db = std::numeric_limits<double>::infinity();
    const auto F_hat = transmit_classic(F, ccfg, ch);
    auto [codes, spec] = quantize8(F);
    const double bound = (spec.max_v - spec.min_v) / 255.0 / 2.0 + 1e-9;
    for (int64_t i = 0; i < F.size(); ++i) CHECK(std::abs(F[i] - F_hat[i]) <= bound);
}

TEST_CASE("coded chain: clean at 20 dB, broken at 0 dB (fast sanity sweep)") {
    ConvCodec cc(500);
    auto rng = make_rng({7});
    std::bernoulli_distribution coin(0.5);
    auto run = [&](double snr_db, int n_blocks) {
        int64_t errors = 0, total = 0;
        for (int blk = 0; blk < n_blocks; ++blk) {
            Bits info(500);
            for (auto& b : info) b = coin(rng) ? 1 : 0;
            Bits coded = cc.encode(info);
            const size_t n_coded = coded.size();
            if (coded.size() % 4 != 0) coded.resize((coded.size() / 4 + 1) * 4, 0);
            const auto rx = channel::awgn(qam_modulate(coded, 16), snr_db, derive_seed({8, static_cast<uint64_t>(blk)}));
            auto rbits = qam_demodulate(rx, 16);
            rbits.resize(n_coded);
            const auto rinfo = cc.decode(rbits);
            for (int i = 0; i < 500; ++i) errors += info[i] != rinfo[i];
            total += 500;
        }
        return static_cast<double>(errors) / total;
    };
    CHECK(run(20.0, 40) == 0.0);      // 2e4 bits, no residual errors expected
    CHECK(run(0.0, 40) > 0.05);       // cliff regime
}

}  // TEST_SUITE
