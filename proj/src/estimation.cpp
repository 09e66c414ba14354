#include "mimofb/estimation.hpp"

#include <cmath>

#include "mimofb/error.hpp"
#include "mimofb/linalg.hpp"

namespace mimofb {

ChannelEstimate ls_estimate(const ComplexMatrix& y, const ComplexMatrix& p, double pilot_energy)
{
    if (y.cols() != p.cols())
        fail(ErrorCode::ShapeMismatch, "ls_estimate: Y and P must share L columns");
    if (!(pilot_energy > 0.0))
        fail(ErrorCode::InvalidArgument, "ls_estimate: pilot energy must be positive");
    if (p.cols() < p.rows())
        fail(ErrorCode::RankDeficientPilots, "ls_estimate: L < N_t");

    // (P P^H) Z = P Y^H gives Z = sqrt(E_p) H_hat^H.
    const ComplexMatrix gram = matmul(p, p.adjoint());
    ComplexMatrix z;
    try {
        z = solve_hpd(gram, matmul(p, y.adjoint()));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NumericalSingularity)
            fail(ErrorCode::RankDeficientPilots, "ls_estimate: P P^H is singular");
        throw;
    }
    ChannelEstimate out{z.adjoint(), EstimatorKind::LS};
    out.h_hat *= 1.0 / std::sqrt(pilot_energy);
    return out;
}

ComplexMatrix lmmse_filter(const ComplexMatrix& p, double pilot_energy, double noise_var, const ComplexMatrix& r_t)
{
    if (r_t.rows() != p.rows() || r_t.cols() != p.rows())
        fail(ErrorCode::ShapeMismatch, "lmmse_filter: r_t must be N_t x N_t");
    if (!(noise_var >= 0.0) || !(pilot_energy >= 0.0))
        fail(ErrorCode::InvalidArgument, "lmmse_filter: energies must be non-negative");
    const std::size_t len = p.cols();

    const ComplexMatrix ph_r = adjoint_times(p, r_t); // P^H r_t, L x N_t
    ComplexMatrix system = matmul(ph_r, p);           // P^H r_t P
    system *= pilot_energy;
    for (std::size_t i = 0; i < len; ++i)
        system(i, i) += noise_var;

    ComplexMatrix filter = solve_hpd(system, ph_r);
    filter *= std::sqrt(pilot_energy);
    return filter;
}

ChannelEstimate lmmse_estimate(const ComplexMatrix& y, const ComplexMatrix& p, double pilot_energy,
                               double noise_var, const ComplexMatrix& r_t)
{
    if (y.cols() != p.cols())
        fail(ErrorCode::ShapeMismatch, "lmmse_estimate: Y and P must share L columns");
    return {matmul(y, lmmse_filter(p, pilot_energy, noise_var, r_t)), EstimatorKind::LMMSE};
}

} // namespace mimofb
