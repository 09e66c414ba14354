#include <cmath>

#include "doctest.h"
#include "mimofb/channel.hpp"
#include "mimofb/error.hpp"
#include "mimofb/estimation.hpp"
#include "mimofb/linalg.hpp"
#include "support.hpp"

using namespace mimofb;
using namespace testing_support;

namespace {

ChannelSpec correlated(std::size_t nt, std::size_t nr, double t)
{
    ChannelSpec s;
    s.n_tx = nt;
    s.n_rx = nr;
    s.t_mag = t;
    s.phase_policy = PhasePolicy::Fixed;
    s.fixed_psi = 0.8;
    return s;
}

PilotSpec pilots_at(std::size_t len, double snr_db, double noise_var = 1.0)
{
    PilotSpec p;
    p.length = len;
    p.noise_var = noise_var;
    p.pilot_energy = noise_var * std::pow(10.0, snr_db / 10.0);
    return p;
}

} // namespace

TEST_CASE("LS recovers H without noise")
{
    RngStream rng(31);
    const ChannelSpec spec = correlated(4, 2, 0.5);
    const ChannelSample ch = sample_channel(spec, rng);
    const ComplexMatrix p = dft_pilot_matrix(4, 4);
    PilotSpec pilots = pilots_at(4, 0.0, 1e-300);
    pilots.pilot_energy = 1.0;
    const ComplexMatrix y = pilot_observation(ch, pilots, p, rng);
    const ChannelEstimate est = ls_estimate(y, p, pilots.pilot_energy);
    CHECK(est.method == EstimatorKind::LS);
    CHECK(frobenius_norm(est.h_hat - ch.h) < 1e-9);
}

TEST_CASE("LS needs at least N_t pilots")
{
    const ComplexMatrix p = dft_pilot_matrix(4, 3);
    try {
        ls_estimate(ComplexMatrix(2, 3), p, 1.0);
        FAIL("expected RankDeficientPilots");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::RankDeficientPilots);
    }
    // L >= N_t but every pilot identical: P P^H has rank one.
    ComplexMatrix repeated(4, 5, 0.5);
    try {
        ls_estimate(ComplexMatrix(2, 5), repeated, 1.0);
        FAIL("expected RankDeficientPilots");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::RankDeficientPilots);
    }
}

TEST_CASE("LS is unbiased")
{
    RngStream rng(32);
    const ChannelSample ch = sample_channel(correlated(3, 2, 0.4), rng);
    const ComplexMatrix p = dft_pilot_matrix(3, 5);
    const PilotSpec pilots = pilots_at(5, 0.0);
    const std::size_t n = 10000;
    ComplexMatrix mean(2, 3);
    for (std::size_t i = 0; i < n; ++i)
        mean += ls_estimate(pilot_observation(ch, pilots, p, rng), p, pilots.pilot_energy).h_hat;
    mean *= 1.0 / static_cast<double>(n);
    // Each entry's error variance is sigma^2 / (E_p * (L / N_t)) = 0.6, so the
    // Monte Carlo standard error of the mean is sqrt(0.6 / n) per entry.
    const double se = std::sqrt(0.6 / static_cast<double>(n));
    CHECK(max_abs_diff(mean, ch.h) < 5.0 * se);
}

TEST_CASE("LMMSE noiseless limit recovers H")
{
    RngStream rng(33);
    for (double t : {0.0, 0.5, 0.9}) {
        const ChannelSpec spec = correlated(8, 4, t);
        const ChannelSample ch = sample_channel(spec, rng);
        const ComplexMatrix p = dft_pilot_matrix(8, 8);
        PilotSpec pilots = pilots_at(8, 0.0, 1e-12);
        pilots.pilot_energy = 1.0;
        // The filter is built for sigma^2 = 1e-12 but fed a clean observation;
        // actual noise at that level would by itself exceed the tolerance.
        const ComplexMatrix y = matmul(ch.h, p);
        const ChannelEstimate est =
            lmmse_estimate(y, p, pilots.pilot_energy, pilots.noise_var, transmit_correlation(spec, spec.fixed_psi));
        CHECK(est.method == EstimatorKind::LMMSE);
        CHECK(frobenius_norm(est.h_hat - ch.h) <= 1e-6);
    }
}

TEST_CASE("LMMSE works for short pilots and filter form matches the estimate")
{
    RngStream rng(34);
    const ChannelSpec spec = correlated(8, 4, 0.7);
    const ChannelSample ch = sample_channel(spec, rng);
    const ComplexMatrix r_t = transmit_correlation(spec, spec.fixed_psi);
    for (std::size_t len : {1u, 2u, 4u}) {
        const ComplexMatrix p = dft_pilot_matrix(8, len);
        const PilotSpec pilots = pilots_at(len, 0.0);
        const ComplexMatrix y = pilot_observation(ch, pilots, p, rng);
        const ChannelEstimate est = lmmse_estimate(y, p, pilots.pilot_energy, pilots.noise_var, r_t);
        CHECK(est.h_hat.rows() == 4);
        CHECK(est.h_hat.cols() == 8);
        CHECK(est.h_hat.all_finite());
        const ComplexMatrix a = lmmse_filter(p, pilots.pilot_energy, pilots.noise_var, r_t);
        CHECK(frobenius_norm(matmul(y, a) - est.h_hat) < 1e-12 * (1.0 + frobenius_norm(est.h_hat)));
        // Deterministic function of its inputs.
        CHECK(lmmse_estimate(y, p, pilots.pilot_energy, pilots.noise_var, r_t).h_hat == est.h_hat);
    }
}

TEST_CASE("LMMSE matches the generic Wiener estimator applied row by row")
{
    // Independent route: write one row as the column x = h^T with covariance
    // C_x = r_t^T. Its observation y^T = sqrt(E_p) P^T x + n^T gives
    //   x_hat = C_xy C_yy^{-1} y^T,  C_xy = sqrt(E_p) C_x conj(P),
    //   C_yy = E_p P^T C_x conj(P) + s^2 I,
    // solved here with Eigen's dense LU.
    RngStream rng(35);
    const ChannelSpec spec = correlated(5, 3, 0.6);
    const ComplexMatrix r_t = transmit_correlation(spec, spec.fixed_psi);
    const ComplexMatrix p = dft_pilot_matrix(5, 3);
    const PilotSpec pilots = pilots_at(3, 2.0, 0.5);
    const ChannelSample ch = sample_channel(spec, rng);
    const ComplexMatrix y = pilot_observation(ch, pilots, p, rng);
    const ChannelEstimate est = lmmse_estimate(y, p, pilots.pilot_energy, pilots.noise_var, r_t);

    const Eigen::MatrixXcd P = to_eigen(p), Cx = to_eigen(r_t).transpose(), Y = to_eigen(y);
    const double se = std::sqrt(pilots.pilot_energy);
    const Eigen::MatrixXcd cxy = se * Cx * P.conjugate();
    const Eigen::MatrixXcd cyy = pilots.pilot_energy * P.transpose() * Cx * P.conjugate() +
                                 pilots.noise_var * Eigen::MatrixXcd::Identity(3, 3);
    const Eigen::MatrixXcd gain = cyy.transpose().fullPivLu().solve(cxy.transpose()).transpose();
    for (Eigen::Index r = 0; r < Y.rows(); ++r) {
        const Eigen::VectorXcd x_hat = gain * Y.row(r).transpose();
        const Eigen::VectorXcd ours = to_eigen(est.h_hat).row(r).transpose();
        CHECK((x_hat - ours).norm() < 1e-12 * (1.0 + x_hat.norm()));
    }
}

TEST_CASE("LMMSE error is orthogonal to the observation")
{
    // For the optimal linear estimator, E[(H - H_hat)^H Y] = 0 entrywise.
    RngStream rng(36);
    const ChannelSpec spec = correlated(4, 2, 0.7);
    const ChannelSampler sampler(spec);
    const ComplexMatrix r_t = transmit_correlation(spec, spec.fixed_psi);
    const ComplexMatrix p = dft_pilot_matrix(4, 3);
    const PilotSpec pilots = pilots_at(3, 0.0);
    const ComplexMatrix a = lmmse_filter(p, pilots.pilot_energy, pilots.noise_var, r_t);
    const std::size_t n = 100000;
    ComplexMatrix cross(4, 3);
    std::vector<double> second_moment(12, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const ChannelSample ch = sampler(rng);
        const ComplexMatrix y = pilot_observation(ch, pilots, p, rng);
        const ComplexMatrix prod = adjoint_times(ch.h - matmul(y, a), y);
        cross += prod;
        for (std::size_t k = 0; k < 12; ++k)
            second_moment[k] += std::norm(prod.data()[k]);
    }
    for (std::size_t k = 0; k < 12; ++k) {
        const cplx mean = cross.data()[k] / static_cast<double>(n);
        const double se = std::sqrt(second_moment[k] / n / n);
        CHECK(std::abs(mean) < 5.0 * se);
    }
}

TEST_CASE("LMMSE beats LS on mean squared error at L = N_t")
{
    const std::size_t nt = 4, nr = 2, n = 10000;
    RngStream rng(37);
    for (double snr_db : {-5.0, 0.0, 5.0})
        for (double t : {0.0, 0.5, 0.9}) {
            const ChannelSpec spec = correlated(nt, nr, t);
            const ChannelSampler sampler(spec);
            const ComplexMatrix r_t = transmit_correlation(spec, spec.fixed_psi);
            const ComplexMatrix p = dft_pilot_matrix(nt, nt);
            const PilotSpec pilots = pilots_at(nt, snr_db);
            double sum_d = 0.0, sum_d2 = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const ChannelSample ch = sampler(rng);
                const ComplexMatrix y = pilot_observation(ch, pilots, p, rng);
                const double ls = squared_norm(ls_estimate(y, p, pilots.pilot_energy).h_hat - ch.h);
                const double lm = squared_norm(
                    lmmse_estimate(y, p, pilots.pilot_energy, pilots.noise_var, r_t).h_hat - ch.h);
                sum_d += ls - lm;
                sum_d2 += (ls - lm) * (ls - lm);
            }
            const double mean = sum_d / n;
            const double se = std::sqrt((sum_d2 / n - mean * mean) / n);
            CAPTURE(snr_db);
            CAPTURE(t);
            CHECK(mean > 3.0 * se);
        }
}

TEST_CASE("LMMSE shape checks")
{
    const ComplexMatrix p = dft_pilot_matrix(4, 2);
    try {
        lmmse_estimate(ComplexMatrix(2, 3), p, 1.0, 1.0, ComplexMatrix::identity(4));
        FAIL("expected ShapeMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ShapeMismatch);
    }
    try {
        lmmse_filter(p, 1.0, 1.0, ComplexMatrix::identity(3));
        FAIL("expected ShapeMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ShapeMismatch);
    }
}
