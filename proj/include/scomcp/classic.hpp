// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>

#include "scomcp/channel.hpp"
#include "scomcp/tensor.hpp"

namespace scomcp::classic {

struct ClassicConfig {
    int mod_order = 16;      // 16 or 256
    double code_rate = 0.5;  // accounting rate R_c for Eq.-25 style budgeting
    std::string fec = "conv";
    int fec_block_bits = 500;  // info bits per coded block
    double cr_target = 3.5e-4;
};

struct QuantSpec {
    double min_v = 0.0, max_v = 0.0;
    int levels = 256;
};

// Uniform 8-bit quantization over the per-transmission [min, max]; level k
// reconstructs to min + k*(max-min)/255, so extreme values are exact.
std::pair<std::vector<uint8_t>, QuantSpec> quantize8(const nn::Tensor& F);
nn::Tensor dequantize8(const std::vector<uint8_t>& codes, const QuantSpec& spec, int rows, int cols);

using Bits = std::vector<uint8_t>;

Bits bytes_to_bits(const std::vector<uint8_t>& bytes);  // MSB first
std::vector<uint8_t> bits_to_bytes(const Bits& bits);

// Rate-1/2 FEC behind a pluggable interface; the default is a K=7
// (171,133 octal) convolutional code with zero-terminated blocks and
// hard-decision Viterbi decoding.
class FecCodec {
public:
    virtual ~FecCodec() = default;
    virtual Bits encode(const Bits& info) const = 0;  // info length must be a block multiple
    virtual Bits decode(const Bits& coded) const = 0;
    virtual int block_info_bits() const = 0;
    virtual int block_coded_bits() const = 0;
};

class ConvCodec final : public FecCodec {
public:
    explicit ConvCodec(int block_info_bits = 500);
    Bits encode(const Bits& info) const override;
    Bits decode(const Bits& coded) const override;
    int block_info_bits() const override { return block_bits_; }
    int block_coded_bits() const override { return 2 * (block_bits_ + kMemory); }

    static constexpr int kMemory = 6;  // constraint length 7

private:
    int block_bits_;
};

std::unique_ptr<FecCodec> make_fec(const ClassicConfig& cfg);

// Gray-mapped square M-QAM with unit average symbol energy
channel::CVec qam_modulate(const Bits& bits, int mod_order);
Bits qam_demodulate(const channel::CVec& symbols, int mod_order);

// exact analytic Gray-mapped 16QAM bit error rate over AWGN at Es/N0 (linear)
double qam16_gray_ber(double esn0_linear);

// Eq.-25 channel-use accounting: S_m * CR * 8 / (R_c * log2 Mc)
double channel_uses(double s_m, double cr, double r_c, int m_c);

// quantize -> FEC -> QAM -> channel -> demod -> FEC decode -> dequantize;
// QuantSpec and padding metadata travel losslessly out of band.
nn::Tensor transmit_classic(const nn::Tensor& F, const ClassicConfig& ccfg,
                            const channel::ChannelConfig& chcfg);

}  // namespace scomcp::classic
