// SPDX-License-Identifier: Apache-2.0
#include "scomcp/channel.hpp"

#include <cmath>

#include "scomcp/errors.hpp"
#include "scomcp/rng.hpp"

namespace scomcp::channel {

Kind kind_from_string(const std::string& s) {
    if (s == "awgn") return Kind::awgn;
    if (s == "rayleigh") return Kind::rayleigh;
    throw ConfigError("unknown channel kind: " + s);
}

std::string to_string(Kind k) { return k == Kind::awgn ? "awgn" : "rayleigh"; }

double snr_to_sigma2(double snr_db, double p_z) {
    if (p_z <= 0.0) throw ContractViolation("snr_to_sigma2: p_z must be > 0");
    if (std::isinf(snr_db) && snr_db > 0.0) return 0.0;
    return p_z / std::pow(10.0, snr_db / 10.0);
}

Realization draw_realization(Kind kind, int K, int twoC, double sigma2, uint64_t seed) {
    Realization r;
    r.h = nn::Tensor(K, twoC);
    r.noise = nn::Tensor(K, twoC);
    auto rng = make_rng({seed, 0xc4a271});
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double n_std = std::sqrt(sigma2 / 2.0);  // per real component
    const double h_std = std::sqrt(0.5);           // CN(0,1) gain
    const int64_t n_sym = static_cast<int64_t>(K) * twoC / 2;
    for (int64_t i = 0; i < n_sym; ++i) {
        if (kind == Kind::rayleigh) {
            r.h[2 * i] = h_std * gauss(rng);
            r.h[2 * i + 1] = h_std * gauss(rng);
        } else {
            r.h[2 * i] = 1.0;
            r.h[2 * i + 1] = 0.0;
        }
        r.noise[2 * i] = n_std * gauss(rng);
        r.noise[2 * i + 1] = n_std * gauss(rng);
    }
    return r;
}

namespace {

// MMSE-damped zero-forcing coefficient h* / (|h|^2 + sigma^2)
inline std::complex<double> zf_coeff(std::complex<double> h, double sigma2) {
    const double den = std::norm(h) + sigma2;
    if (den < 1e-300) return {0.0, 0.0};
    return std::conj(h) / den;
}

}  // namespace

CVec awgn(const CVec& z, double snr_db, uint64_t seed) {
    const double sigma2 = snr_to_sigma2(snr_db, 1.0);
    if (sigma2 == 0.0) return z;
    auto real = draw_realization(Kind::awgn, static_cast<int>(z.size()), 2, sigma2, seed);
    CVec out(z.size());
    for (size_t i = 0; i < z.size(); ++i)
        out[i] = z[i] + std::complex<double>(real.noise[2 * i], real.noise[2 * i + 1]);
    return out;
}

CVec rayleigh(const CVec& z, double snr_db, uint64_t seed, bool equalize) {
    const double sigma2 = snr_to_sigma2(snr_db, 1.0);
    auto real = draw_realization(Kind::rayleigh, static_cast<int>(z.size()), 2, sigma2, seed);
    CVec out(z.size());
    for (size_t i = 0; i < z.size(); ++i) {
        const std::complex<double> h{real.h[2 * i], real.h[2 * i + 1]};
        std::complex<double> y = h * z[i] + std::complex<double>(real.noise[2 * i], real.noise[2 * i + 1]);
        if (equalize) y *= zf_coeff(h, sigma2);
        out[i] = y;
    }
    return out;
}

CVec apply(const CVec& z, const ChannelConfig& cfg) {
    return cfg.kind == Kind::awgn ? awgn(z, cfg.snr_db, cfg.seed)
                                  : rayleigh(z, cfg.snr_db, cfg.seed, cfg.equalize);
}

nn::Var awgn_var(const nn::Var& z, double snr_db, uint64_t seed) {
    const double sigma2 = snr_to_sigma2(snr_db, 1.0);
    if (sigma2 == 0.0) return z;
    auto real = draw_realization(Kind::awgn, z->val.rows(), z->val.cols(), sigma2, seed);
    return nn::add_const_t(z, real.noise);
}

nn::Var rayleigh_var(const nn::Var& z, double snr_db, uint64_t seed, bool equalize) {
    const double sigma2 = snr_to_sigma2(snr_db, 1.0);
    auto real = draw_realization(Kind::rayleigh, z->val.rows(), z->val.cols(), sigma2, seed);
    nn::Var y = nn::add_const_t(nn::cmul_const(z, real.h), real.noise);
    if (!equalize) return y;
    nn::Tensor g(z->val.rows(), z->val.cols());
    const int64_t n_sym = z->val.size() / 2;
    for (int64_t i = 0; i < n_sym; ++i) {
        const auto c = zf_coeff({real.h[2 * i], real.h[2 * i + 1]}, sigma2);
        g[2 * i] = c.real();
        g[2 * i + 1] = c.imag();
    }
    return nn::cmul_const(y, g);
}

nn::Var apply_var(const nn::Var& z, const ChannelConfig& cfg) {
    return cfg.kind == Kind::awgn ? awgn_var(z, cfg.snr_db, cfg.seed)
                                  : rayleigh_var(z, cfg.snr_db, cfg.seed, cfg.equalize);
}

}  // namespace scomcp::channel
