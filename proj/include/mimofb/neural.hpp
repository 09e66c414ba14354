#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mimofb/complex_matrix.hpp"
#include "mimofb/rng.hpp"

namespace mimofb {

// Output activation of a dense layer. StochasticBinarize is the receiver's
// output stage: tanh squashing followed by the +/-1 quantiser.
enum class Activation { Relu, Tanh, StochasticBinarize, L2Normalize, Identity };

const char* to_string(Activation a) noexcept;
Activation activation_from_string(const std::string& name);

struct LayerParams {
    Eigen::MatrixXd weight; // out x in
    Eigen::VectorXd bias;   // out
    Activation activation = Activation::Relu;

    std::size_t inputs() const noexcept { return static_cast<std::size_t>(weight.cols()); }
    std::size_t outputs() const noexcept { return static_cast<std::size_t>(weight.rows()); }
};

struct ArchMeta {
    std::size_t n_tx = 8;
    std::size_t n_rx = 4;
    std::size_t pilot_length = 4;

    std::size_t encoder_inputs() const noexcept { return 2 * pilot_length * n_rx; }
    std::size_t decoder_outputs() const noexcept { return 2 * n_tx; }
};

// Hidden widths of both networks; the output widths follow from ArchMeta and B.
struct Architecture {
    std::vector<std::size_t> encoder_hidden;
    std::vector<std::size_t> decoder_hidden;

    // (50, 30, 20) * N_t for the receiver, mirrored for the transmitter.
    static Architecture scaled_default(std::size_t n_tx);
};

// Receiver network g_R (pilot observation -> B bipolar bits) and transmitter
// network g_T (bits -> unit-norm beamformer), trained jointly.
struct FeedbackModel {
    ArchMeta arch;
    std::size_t bits = 0;
    std::vector<LayerParams> encoder;
    std::vector<LayerParams> decoder;

    // Throws ShapeMismatch / InvalidArgument on a broken layer chain.
    void validate() const;
    std::size_t parameter_count() const noexcept;
};

// Glorot-uniform weights, zero biases.
FeedbackModel init_model(const ArchMeta& arch, std::size_t bits, const Architecture& hidden, RngStream& rng);

enum class BinarizeMode {
    Train, // stochastic: +1 with probability (1 + z) / 2
    Infer, // deterministic sign, sign(0) = +1
    Soft,  // identity, for finite-difference checks
};

// The receiver's quantiser for a soft value z in [-1, 1]: +1 when u < (1 + z) / 2,
// so that E[b] = z for u uniform on [0, 1).
template <class S>
S stochastic_binarize(S z, S u)
{
    return u < (S(1) + z) / S(2) ? S(1) : S(-1);
}
inline double stochastic_binarize(double z, RngStream& rng) { return stochastic_binarize(z, rng.uniform()); }

// Single-sample forward of the receiver network. y_real is [Re vec(Y); Im vec(Y)].
std::vector<double> encoder_forward(const FeedbackModel& model, std::span<const double> y_real, RngStream& rng,
                                    BinarizeMode mode);

// Single-sample forward of the transmitter network; returns the complex
// beamformer w with ||w|| = 1. Throws DegenerateOutput when the
// pre-normalisation output vanishes.
std::vector<cplx> decoder_forward(const FeedbackModel& model, std::span<const double> bits);

// One training tuple: the true channel and its pilot observation.
struct TrainingSample {
    ComplexMatrix h;
    std::vector<double> y_real;
};

struct LayerGradient {
    Eigen::MatrixXd weight;
    Eigen::VectorXd bias;
};

struct ModelGradients {
    std::vector<LayerGradient> encoder;
    std::vector<LayerGradient> decoder;
};

struct LossAndGradients {
    double loss = 0.0; // -mean ||H w||^2
    ModelGradients gradients;
};

// Batch loss and its gradient. The binarisation stage is passed through
// unchanged in the backward pass; every other stage is differentiated exactly.
LossAndGradients loss_and_gradients(const FeedbackModel& model, std::span<const TrainingSample> batch, RngStream& rng,
                                    BinarizeMode mode = BinarizeMode::Train);

// Index of a bipolar vector in lexicographic order with -1 < +1, first entry most significant.
std::size_t bits_to_index(std::span<const double> bits);
std::vector<double> index_to_bits(std::size_t index, std::size_t n_bits);

inline constexpr std::size_t kMaxTableBits = 20;

// All 2^B decoder outputs as columns of an N_t x 2^B matrix. TableTooLarge above 20 bits.
ComplexMatrix decoder_lookup_table(const FeedbackModel& model);

// Receiver network specialised for repeated inference in single precision:
// deterministic binarisation, preallocated buffers. One instance per thread.
class CompiledEncoder {
public:
    explicit CompiledEncoder(const FeedbackModel& model);
    ~CompiledEncoder();
    CompiledEncoder(CompiledEncoder&&) noexcept;
    CompiledEncoder& operator=(CompiledEncoder&&) noexcept;

    // Feedback index for one observation (real-stacked, length 2 L N_r).
    std::size_t feedback_index(std::span<const double> y_real);
    std::size_t feedback_index(const ComplexMatrix& y);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

void write_model(std::ostream& out, const FeedbackModel& model);
FeedbackModel read_model(std::istream& in);
void save_model(const std::filesystem::path& path, const FeedbackModel& model);
FeedbackModel load_model(const std::filesystem::path& path);

} // namespace mimofb
