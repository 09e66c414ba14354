#pragma once

#include <cstddef>

#include "mimofb/complex_matrix.hpp"
#include "mimofb/rng.hpp"

namespace mimofb {

enum class PhasePolicy { Fixed, UniformRandom };

// Transmit-correlated Rayleigh channel with exponential correlation
// coefficient t = t_mag * exp(j psi).
struct ChannelSpec {
    std::size_t n_tx = 8;
    std::size_t n_rx = 4;
    double t_mag = 0.0;
    PhasePolicy phase_policy = PhasePolicy::UniformRandom;
    double fixed_psi = 0.0; // radians, used when phase_policy == Fixed

    void validate() const;
};

struct ChannelSample {
    ComplexMatrix h; // n_rx x n_tx
    double psi_used = 0.0;
};

struct PilotSpec {
    std::size_t length = 4;   // L
    double pilot_energy = 1.0; // E_p
    double noise_var = 1.0;    // sigma_n^2

    void validate() const;
};

// R_H = E[H^H H]: N_r * t^{|i-j|} above the diagonal, N_r * conj(t)^{|i-j|} on and below.
ComplexMatrix correlation_matrix(const ChannelSpec& spec, double psi);

// Transmit correlation of a single row of H, R_H / N_r.
ComplexMatrix transmit_correlation(const ChannelSpec& spec, double psi);

// Samples H = H_w * (R_H / N_r)^{1/2 H}. Draws psi first when the policy is random.
ChannelSample sample_channel(const ChannelSpec& spec, RngStream& rng);

// Reusable sampler: decomposes the correlation once and rotates it per phase.
class ChannelSampler {
public:
    explicit ChannelSampler(ChannelSpec spec);

    ChannelSample operator()(RngStream& rng) const;
    const ChannelSpec& spec() const noexcept { return spec_; }

private:
    ComplexMatrix rotated_root(double psi) const;

    ChannelSpec spec_;
    ComplexMatrix base_root_adjoint_; // (R(0) / N_r)^{1/2 H}
};

// Columns p_i = N_t^{-1/2} [1, e^{j2pi(i-1)/L}, ..., e^{j2pi(i-1)(N_t-1)/L}]^T.
ComplexMatrix dft_pilot_matrix(std::size_t n_tx, std::size_t length);

// Y = sqrt(E_p) H P + N, N i.i.d. CN(0, sigma_n^2).
ComplexMatrix pilot_observation(const ChannelSample& ch, const PilotSpec& pilots, const ComplexMatrix& p,
                                RngStream& rng);

} // namespace mimofb
