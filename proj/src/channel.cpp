#include "mimofb/channel.hpp"

#include <cmath>
#include <numbers>

#include "mimofb/error.hpp"
#include "mimofb/linalg.hpp"

namespace mimofb {

void ChannelSpec::validate() const
{
    if (n_tx < 1)
        fail(ErrorCode::ConfigError, "n_tx must be >= 1");
    if (n_rx < 1)
        fail(ErrorCode::ConfigError, "n_rx must be >= 1");
    if (!(t_mag >= 0.0 && t_mag < 1.0))
        fail(ErrorCode::ConfigError, "t_mag must lie in [0, 1)");
    if (phase_policy == PhasePolicy::Fixed && !(fixed_psi >= 0.0 && fixed_psi < 2.0 * std::numbers::pi))
        fail(ErrorCode::ConfigError, "psi must lie in [0, 2pi)");
}

void PilotSpec::validate() const
{
    if (length < 1)
        fail(ErrorCode::ConfigError, "pilot length must be >= 1");
    if (!(pilot_energy >= 0.0) || !std::isfinite(pilot_energy))
        fail(ErrorCode::ConfigError, "pilot_energy must be finite and non-negative");
    if (!(noise_var > 0.0) || !std::isfinite(noise_var))
        fail(ErrorCode::ConfigError, "noise_var must be finite and positive");
}

ComplexMatrix correlation_matrix(const ChannelSpec& spec, double psi)
{
    spec.validate();
    const std::size_t n = spec.n_tx;
    const cplx t = std::polar(spec.t_mag, psi);
    const double nr = static_cast<double>(spec.n_rx);
    ComplexMatrix r(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const int k = static_cast<int>(i > j ? i - j : j - i);
            r(i, j) = nr * (i < j ? std::pow(t, k) : std::pow(std::conj(t), k));
        }
    return r;
}

ComplexMatrix transmit_correlation(const ChannelSpec& spec, double psi)
{
    ComplexMatrix r = correlation_matrix(spec, psi);
    r *= 1.0 / static_cast<double>(spec.n_rx);
    return r;
}

namespace {

double draw_psi(const ChannelSpec& spec, RngStream& rng)
{
    if (spec.phase_policy == PhasePolicy::Fixed)
        return spec.fixed_psi;
    return 2.0 * std::numbers::pi * rng.uniform();
}

} // namespace

ChannelSample sample_channel(const ChannelSpec& spec, RngStream& rng)
{
    return ChannelSampler(spec)(rng);
}

ChannelSampler::ChannelSampler(ChannelSpec spec) : spec_(spec)
{
    spec_.validate();
    if (spec_.t_mag == 0.0)
        base_root_adjoint_ = ComplexMatrix::identity(spec_.n_tx);
    else
        base_root_adjoint_ = hermitian_sqrt(transmit_correlation(spec_, 0.0)).adjoint();
}

// R(psi) = D R(0) D^H with D = diag(e^{-j k psi}), so the Hermitian root
// rotates the same way and only the psi = 0 root is ever decomposed.
ChannelSample ChannelSampler::operator()(RngStream& rng) const
{
    ChannelSample out;
    out.psi_used = draw_psi(spec_, rng);
    out.h = matmul(sample_standard_complex_gaussian(rng, spec_.n_rx, spec_.n_tx), rotated_root(out.psi_used));
    return out;
}

ComplexMatrix ChannelSampler::rotated_root(double psi) const
{
    if (psi == 0.0 || spec_.t_mag == 0.0)
        return base_root_adjoint_;
    ComplexMatrix out = base_root_adjoint_;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j)
            out(i, j) *= std::polar(1.0, -(static_cast<double>(i) - static_cast<double>(j)) * psi);
    return out;
}

ComplexMatrix dft_pilot_matrix(std::size_t n_tx, std::size_t length)
{
    if (n_tx < 1 || length < 1)
        fail(ErrorCode::InvalidArgument, "dft_pilot_matrix: n_tx and length must be >= 1");
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_tx));
    ComplexMatrix p(n_tx, length);
    for (std::size_t i = 0; i < length; ++i)
        for (std::size_t k = 0; k < n_tx; ++k) {
            // Reduce the phase index modulo L before scaling to keep the angle small.
            const double frac = static_cast<double>((i * k) % length) / static_cast<double>(length);
            p(k, i) = std::polar(scale, 2.0 * std::numbers::pi * frac);
        }
    return p;
}

ComplexMatrix pilot_observation(const ChannelSample& ch, const PilotSpec& pilots, const ComplexMatrix& p,
                                RngStream& rng)
{
    pilots.validate();
    if (p.rows() != ch.h.cols() || p.cols() != pilots.length)
        fail(ErrorCode::ShapeMismatch, "pilot_observation: P must be N_t x L");
    ComplexMatrix y = matmul(ch.h, p);
    y *= std::sqrt(pilots.pilot_energy);
    const double sigma = std::sqrt(pilots.noise_var);
    for (auto& v : y.data())
        v += sigma * rng.complex_normal();
    return y;
}

} // namespace mimofb
