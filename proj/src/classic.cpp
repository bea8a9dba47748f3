// SPDX-License-Identifier: Apache-2.0
#include "scomcp/classic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scomcp/errors.hpp"

namespace scomcp::classic {

std::pair<std::vector<uint8_t>, QuantSpec> quantize8(const nn::Tensor& F) {
    if (F.size() == 0) throw ContractViolation("quantize8: empty input");
    QuantSpec spec;
    spec.min_v = std::numeric_limits<double>::infinity();
    spec.max_v = -spec.min_v;
    for (int64_t i = 0; i < F.size(); ++i) {
        if (!std::isfinite(F[i])) throw ContractViolation("quantize8: non-finite input");
        spec.min_v = std::min(spec.min_v, F[i]);
        spec.max_v = std::max(spec.max_v, F[i]);
    }
    std::vector<uint8_t> codes(F.size(), 0);
    const double range = spec.max_v - spec.min_v;
    if (range > 0.0) {
        const double step = range / 255.0;
        for (int64_t i = 0; i < F.size(); ++i) {
            int q = static_cast<int>(std::lround((F[i] - spec.min_v) / step));
            codes[i] = static_cast<uint8_t>(std::clamp(q, 0, 255));
        }
    }
    return {codes, spec};
}

nn::Tensor dequantize8(const std::vector<uint8_t>& codes, const QuantSpec& spec, int rows, int cols) {
    if (static_cast<int64_t>(codes.size()) != static_cast<int64_t>(rows) * cols)
        throw ContractViolation("dequantize8: size mismatch");
    nn::Tensor F(rows, cols);
    const double step = (spec.max_v - spec.min_v) / 255.0;
    for (size_t i = 0; i < codes.size(); ++i) F[i] = spec.min_v + codes[i] * step;
    return F;
}

Bits bytes_to_bits(const std::vector<uint8_t>& bytes) {
    Bits bits;
    bits.reserve(bytes.size() * 8);
    for (uint8_t b : bytes)
        for (int i = 7; i >= 0; --i) bits.push_back((b >> i) & 1);
    return bits;
}

std::vector<uint8_t> bits_to_bytes(const Bits& bits) {
    if (bits.size() % 8 != 0) throw ContractViolation("bits_to_bytes: length not a byte multiple");
    std::vector<uint8_t> bytes(bits.size() / 8, 0);
    for (size_t i = 0; i < bits.size(); ++i)
        bytes[i / 8] = static_cast<uint8_t>((bytes[i / 8] << 1) | (bits[i] & 1));
    return bytes;
}

// ---- convolutional code ----

namespace {

constexpr unsigned kG1 = 0171;  // taps, MSB = current input
constexpr unsigned kG2 = 0133;

inline int parity(unsigned v) { return __builtin_popcount(v) & 1; }

// state = previous 6 inputs, most recent at bit 5
inline void conv_step(unsigned state, unsigned u, unsigned& out2, unsigned& next) {
    const unsigned window = (u << 6) | state;
    out2 = static_cast<unsigned>(parity(window & kG1)) << 1 | static_cast<unsigned>(parity(window & kG2));
    next = (u << 5) | (state >> 1);
}

}  // namespace

ConvCodec::ConvCodec(int block_info_bits) : block_bits_(block_info_bits) {
    if (block_info_bits <= 0) throw ConfigError("ConvCodec: block size must be positive");
}

Bits ConvCodec::encode(const Bits& info) const {
    if (info.size() % block_bits_ != 0)
        throw ContractViolation("fec_encode: bit length not a multiple of the block size");
    Bits coded;
    coded.reserve(info.size() / block_bits_ * block_coded_bits());
    for (size_t blk = 0; blk < info.size(); blk += block_bits_) {
        unsigned state = 0;
        for (int i = 0; i < block_bits_ + kMemory; ++i) {
            const unsigned u = i < block_bits_ ? info[blk + i] : 0u;  // zero termination
            unsigned out2, next;
            conv_step(state, u, out2, next);
            coded.push_back((out2 >> 1) & 1);
            coded.push_back(out2 & 1);
            state = next;
        }
    }
    return coded;
}

Bits ConvCodec::decode(const Bits& coded) const {
    const int cb = block_coded_bits();
    if (coded.size() % cb != 0)
        throw ContractViolation("fec_decode: coded length not a multiple of the block size");
    constexpr int kStates = 64;
    const int steps = block_bits_ + kMemory;

    Bits info;
    info.reserve(coded.size() / cb * block_bits_);
    std::vector<int> metric(kStates), next_metric(kStates);
    std::vector<uint8_t> decisions(static_cast<size_t>(steps) * kStates);

    for (size_t blk = 0; blk < coded.size(); blk += cb) {
        const int inf = std::numeric_limits<int>::max() / 2;
        std::fill(metric.begin(), metric.end(), inf);
        metric[0] = 0;

        for (int t = 0; t < steps; ++t) {
            std::fill(next_metric.begin(), next_metric.end(), inf);
            const int r0 = coded[blk + 2 * t];
            const int r1 = coded[blk + 2 * t + 1];
            for (int s = 0; s < kStates; ++s) {
                if (metric[s] >= inf) continue;
                const unsigned u_max = t < block_bits_ ? 1u : 0u;  // tail forces zeros
                for (unsigned u = 0; u <= u_max; ++u) {
                    unsigned out2, next;
                    conv_step(static_cast<unsigned>(s), u, out2, next);
                    const int bm = (static_cast<int>((out2 >> 1) & 1) != r0) + (static_cast<int>(out2 & 1) != r1);
                    const int m = metric[s] + bm;
                    if (m < next_metric[next]) {
                        next_metric[next] = m;
                        decisions[static_cast<size_t>(t) * kStates + next] =
                            static_cast<uint8_t>((s << 1) | u);
                    }
                }
            }
            metric.swap(next_metric);
        }

        // traceback from the zero state enforced by termination
        unsigned state = 0;
        Bits rev(steps);
        for (int t = steps - 1; t >= 0; --t) {
            const uint8_t d = decisions[static_cast<size_t>(t) * kStates + state];
            rev[t] = d & 1;
            state = d >> 1;
        }
        info.insert(info.end(), rev.begin(), rev.begin() + block_bits_);
    }
    return info;
}

std::unique_ptr<FecCodec> make_fec(const ClassicConfig& cfg) {
    if (cfg.fec == "conv") return std::make_unique<ConvCodec>(cfg.fec_block_bits);
    throw ConfigError("unknown FEC kind: " + cfg.fec + " (available: conv)");
}

// ---- Gray QAM ----

namespace {

inline unsigned gray(unsigned b) { return b ^ (b >> 1); }

inline unsigned gray_inverse(unsigned g) {
    unsigned b = 0;
    for (; g; g >>= 1) b ^= g;
    return b;
}

int bits_per_axis(int mod_order) {
    const int m = static_cast<int>(std::round(std::log2(mod_order)));
    if ((1 << m) != mod_order || m % 2 != 0) throw ConfigError("qam: order must be an even power of two");
    return m / 2;
}

}  // namespace

channel::CVec qam_modulate(const Bits& bits, int mod_order) {
    const int half = bits_per_axis(mod_order);
    const int m = 2 * half;
    if (bits.size() % m != 0)
        throw ContractViolation("qam_modulate: bit length not a multiple of log2(M)");
    const int levels = 1 << half;
    const double d = std::sqrt(3.0 / (2.0 * (mod_order - 1)));  // unit average energy

    channel::CVec out;
    out.reserve(bits.size() / m);
    for (size_t i = 0; i < bits.size(); i += m) {
        unsigned gi = 0, gq = 0;
        for (int b = 0; b < half; ++b) gi = (gi << 1) | bits[i + b];
        for (int b = 0; b < half; ++b) gq = (gq << 1) | bits[i + half + b];
        const int li = static_cast<int>(gray_inverse(gi));
        const int lq = static_cast<int>(gray_inverse(gq));
        out.emplace_back((2 * li - (levels - 1)) * d, (2 * lq - (levels - 1)) * d);
    }
    return out;
}

Bits qam_demodulate(const channel::CVec& symbols, int mod_order) {
    const int half = bits_per_axis(mod_order);
    const int levels = 1 << half;
    const double d = std::sqrt(3.0 / (2.0 * (mod_order - 1)));

    Bits bits;
    bits.reserve(symbols.size() * 2 * half);
    auto slice = [&](double x) {
        const int l = std::clamp(static_cast<int>(std::lround((x / d + (levels - 1)) / 2.0)), 0, levels - 1);
        return gray(static_cast<unsigned>(l));
    };
    for (const auto& s : symbols) {
        const unsigned gi = slice(s.real());
        const unsigned gq = slice(s.imag());
        for (int b = half - 1; b >= 0; --b) bits.push_back((gi >> b) & 1);
        for (int b = half - 1; b >= 0; --b) bits.push_back((gq >> b) & 1);
    }
    return bits;
}

double qam16_gray_ber(double esn0_linear) {
    // exact per-bit error rate of Gray-mapped 16QAM (4-PAM per axis):
    // BER = (1/4) [3 Q(a) + 2 Q(3a) - Q(5a)], a = sqrt(Es/N0 / 5)
    auto Q = [](double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); };
    const double a = std::sqrt(esn0_linear / 5.0);
    return 0.25 * (3.0 * Q(a) + 2.0 * Q(3.0 * a) - Q(5.0 * a));
}

double channel_uses(double s_m, double cr, double r_c, int m_c) {
    if (s_m <= 0.0 || cr <= 0.0 || r_c <= 0.0 || m_c < 2)
        throw ContractViolation("channel_uses: arguments must be positive");
    return s_m * cr * 8.0 / (r_c * std::log2(static_cast<double>(m_c)));
}

nn::Tensor transmit_classic(const nn::Tensor& F, const ClassicConfig& ccfg,
                            const channel::ChannelConfig& chcfg) {
    auto [codes, spec] = quantize8(F);
    Bits bits = bytes_to_bits(codes);
    const size_t n_info = bits.size();

    auto fec = make_fec(ccfg);
    const size_t bb = static_cast<size_t>(fec->block_info_bits());
    if (bits.size() % bb != 0) bits.resize((bits.size() / bb + 1) * bb, 0);
    Bits coded = fec->encode(bits);

    const int m = static_cast<int>(std::round(std::log2(ccfg.mod_order)));
    const size_t n_coded = coded.size();
    if (coded.size() % m != 0) coded.resize((coded.size() / m + 1) * m, 0);

    auto rx = channel::apply(qam_modulate(coded, ccfg.mod_order), chcfg);
    Bits rbits = qam_demodulate(rx, ccfg.mod_order);
    rbits.resize(n_coded);

    Bits rinfo = fec->decode(rbits);
    rinfo.resize(n_info);

    return dequantize8(bits_to_bytes(rinfo), spec, F.rows(), F.cols());
}

}  // namespace scomcp::classic
