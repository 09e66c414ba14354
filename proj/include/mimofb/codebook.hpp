#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "mimofb/channel.hpp"
#include "mimofb/complex_matrix.hpp"
#include "mimofb/estimation.hpp"
#include "mimofb/rng.hpp"

namespace mimofb {

enum class CodebookKind { DFT, Lloyd };

const char* to_string(CodebookKind kind) noexcept;

// 2^bits unit-norm beamformers stored as the columns of an N_t x 2^bits matrix.
struct Codebook {
    std::size_t bits = 0;
    ComplexMatrix words;
    CodebookKind provenance = CodebookKind::DFT;

    std::size_t n_tx() const noexcept { return words.rows(); }
    std::size_t size() const noexcept { return words.cols(); }
    ComplexMatrix word(std::size_t i) const { return words.col(i); }

    friend bool operator==(const Codebook&, const Codebook&) = default;
};

// Oversampled DFT codebook: w_i = N_t^{-1/2} [1, e^{j2pi(i-1)/2^B}, ...].
Codebook dft_codebook(std::size_t n_tx, std::size_t bits);

// argmax_i ||H_hat w_i||^2, ties to the smallest index.
std::size_t select_pmi(const ComplexMatrix& h_hat, const Codebook& cb);
inline std::size_t select_pmi(const ChannelEstimate& est, const Codebook& cb) { return select_pmi(est.h_hat, cb); }

struct LloydOptions {
    std::size_t max_iters = 100;
    double rel_tol = 1e-6;
};

struct LloydResult {
    Codebook codebook;
    // Average distortion -mean ||H w_{i*}||^2 after each assignment step.
    std::vector<double> distortion_trace;
};

// Generalised Lloyd design with distortion d(H, w) = -||H w||^2. Training
// matrices may be channel estimates or true channels.
LloydResult lloyd_design(std::span<const ComplexMatrix> training_set, std::size_t bits, const LloydOptions& opts,
                         RngStream& rng);

struct FeedbackChoice {
    std::size_t index = 0;
    ComplexMatrix beamformer;
};

// LMMSE estimate, PMI search, then codebook lookup.
FeedbackChoice baseline_feedback(const ComplexMatrix& y, const ComplexMatrix& p, const PilotSpec& pilots,
                                 const ComplexMatrix& r_t, const Codebook& cb);

void write_codebook(std::ostream& out, const Codebook& cb);
Codebook read_codebook(std::istream& in);
void save_codebook(const std::filesystem::path& path, const Codebook& cb);
Codebook load_codebook(const std::filesystem::path& path);

} // namespace mimofb
