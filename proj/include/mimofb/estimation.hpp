#pragma once

#include "mimofb/complex_matrix.hpp"

namespace mimofb {

enum class EstimatorKind { LS, LMMSE };

struct ChannelEstimate {
    ComplexMatrix h_hat; // N_r x N_t
    EstimatorKind method = EstimatorKind::LMMSE;
};

// H_hat = E_p^{-1/2} Y P^H (P P^H)^{-1}. Needs L >= N_t and full-rank pilots.
ChannelEstimate ls_estimate(const ComplexMatrix& y, const ComplexMatrix& p, double pilot_energy);

// Row-wise LMMSE under H = H_w r_t^{1/2 H}:
//   H_hat = sqrt(E_p) Y (E_p P^H r_t P + sigma^2 I_L)^{-1} P^H r_t
// Valid for every L >= 1.
ChannelEstimate lmmse_estimate(const ComplexMatrix& y, const ComplexMatrix& p, double pilot_energy,
                               double noise_var, const ComplexMatrix& r_t);

// The L x N_t filter A with H_hat = Y A. Depends only on statistics, so callers
// with a fixed correlation may compute it once.
ComplexMatrix lmmse_filter(const ComplexMatrix& p, double pilot_energy, double noise_var, const ComplexMatrix& r_t);

} // namespace mimofb
