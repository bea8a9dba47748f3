// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <string>
#include <vector>

#include "scomcp/autodiff.hpp"

namespace scomcp::channel {

enum class Kind { awgn, rayleigh };

Kind kind_from_string(const std::string& s);
std::string to_string(Kind k);

struct ChannelConfig {
    Kind kind = Kind::awgn;
    double snr_db = 10.0;
    bool equalize = true;  // rayleigh only: perfect-CSI MMSE-damped ZF at the receiver
    uint64_t seed = 0;
};

// Eq.-24 inverse: noise variance for a given SNR(dB) at transmit power p_z
double snr_to_sigma2(double snr_db, double p_z);

using CVec = std::vector<std::complex<double>>;

// Per-call draws: for every symbol the generator emits h_re, h_im, n_re, n_im
// in that order, so the plain and autodiff paths produce identical outputs
// for identical seeds.
struct Realization {
    nn::Tensor h;      // interleaved [K, 2C]; unit gain for AWGN
    nn::Tensor noise;  // interleaved [K, 2C]
};
Realization draw_realization(Kind kind, int K, int twoC, double sigma2, uint64_t seed);

// plain complex-vector interface (classic chain, calibration tests)
CVec awgn(const CVec& z, double snr_db, uint64_t seed);
CVec rayleigh(const CVec& z, double snr_db, uint64_t seed, bool equalize);
CVec apply(const CVec& z, const ChannelConfig& cfg);

// autodiff interface on interleaved [K, 2C] tensors; gain and noise are
// treated as constants so gradients flow to z only
nn::Var awgn_var(const nn::Var& z, double snr_db, uint64_t seed);
nn::Var rayleigh_var(const nn::Var& z, double snr_db, uint64_t seed, bool equalize);
nn::Var apply_var(const nn::Var& z, const ChannelConfig& cfg);

}  // namespace scomcp::channel
