#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "mimofb/channel.hpp"
#include "mimofb/codebook.hpp"
#include "mimofb/neural.hpp"

namespace mimofb {

// Everything a scheme may look at in one trial. Practical schemes read only
// the pilot observation y (plus channel statistics); h is exposed for genie
// references and tests.
struct Trial {
    const ComplexMatrix& h;
    const ComplexMatrix& y;
    double psi = 0.0;
};

class Beamformer {
public:
    virtual ~Beamformer() = default;
    virtual std::string name() const = 0;
    // Unit-norm N_t x 1 beamformer for this trial.
    virtual ComplexMatrix beamform(const Trial& trial) = 0;
    // Independent copy for another worker thread.
    virtual std::unique_ptr<Beamformer> clone() const = 0;
};

// A limited-feedback scheme: receiver maps the observation to an index,
// transmitter maps the index to a beamformer.
class FeedbackPipeline : public Beamformer {
public:
    virtual std::size_t feedback(const Trial& trial) = 0;
    virtual const ComplexMatrix& transmit_table() const = 0; // N_t x 2^B

    ComplexMatrix beamform(const Trial& trial) override { return transmit_table().col(feedback(trial)); }
};

// What the baseline LMMSE estimator assumes about the channel correlation.
enum class StatisticsKnowledge {
    PerRealization, // exact R_H(psi) of the current draw
    PhaseAveraged,  // R_H averaged over the phase policy
};

// LMMSE estimation followed by exhaustive PMI search over a codebook.
class BaselinePipeline final : public FeedbackPipeline {
public:
    BaselinePipeline(Codebook cb, const ChannelSpec& spec, const PilotSpec& pilots,
                     StatisticsKnowledge knowledge = StatisticsKnowledge::PerRealization);

    std::string name() const override;
    std::size_t feedback(const Trial& trial) override;
    const ComplexMatrix& transmit_table() const override { return cb_.words; }
    std::unique_ptr<Beamformer> clone() const override { return std::make_unique<BaselinePipeline>(*this); }

    // r_t the estimator uses for a draw with this phase.
    ComplexMatrix statistics(double psi) const;

private:
    Codebook cb_;
    ChannelSpec spec_;
    PilotSpec pilots_;
    StatisticsKnowledge knowledge_;
    ComplexMatrix p_;
    ComplexMatrix averaged_r_t_;
};

// Trained receiver network + transmitter lookup table.
class DeepPipeline final : public FeedbackPipeline {
public:
    explicit DeepPipeline(const FeedbackModel& model);
    DeepPipeline(const DeepPipeline& other);

    std::string name() const override { return "DL"; }
    std::size_t feedback(const Trial& trial) override { return encoder_.feedback_index(trial.y); }
    const ComplexMatrix& transmit_table() const override { return table_; }
    std::unique_ptr<Beamformer> clone() const override { return std::make_unique<DeepPipeline>(*this); }

private:
    std::shared_ptr<const FeedbackModel> model_;
    CompiledEncoder encoder_;
    ComplexMatrix table_;
};

// Genie reference: principal eigenvector of H^H H (normalised gain 1).
class EigenBeamformer final : public Beamformer {
public:
    std::string name() const override { return "genie"; }
    ComplexMatrix beamform(const Trial& trial) override;
    std::unique_ptr<Beamformer> clone() const override { return std::make_unique<EigenBeamformer>(); }
};

// Adapts a callable; the callable must be safe to copy across threads.
class FunctionBeamformer final : public Beamformer {
public:
    using Fn = std::function<ComplexMatrix(const Trial&)>;
    FunctionBeamformer(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}

    std::string name() const override { return name_; }
    ComplexMatrix beamform(const Trial& trial) override { return fn_(trial); }
    std::unique_ptr<Beamformer> clone() const override { return std::make_unique<FunctionBeamformer>(*this); }

private:
    std::string name_;
    Fn fn_;
};

struct DataLinkSpec {
    double symbol_energy = 1.0; // E_s
    double noise_var = 1.0;     // sigma_n^2

    double snr_db() const;
    static DataLinkSpec from_snr_db(double snr_db, double noise_var = 1.0);
    void validate() const;
};

struct MetricRecord {
    std::string scheme;
    std::size_t n_tx = 0;
    std::size_t n_rx = 0;
    std::size_t pilot_length = 0;
    std::size_t bits = 0;
    double t_mag = 0.0;
    double snr_db = 0.0; // data SNR for SER rows, pilot SNR otherwise
    std::string metric;  // norm_gain | ser | cpu_time
    double value = 0.0;
    double stderr_ = 0.0;
    std::size_t n_trials = 0;
    std::uint64_t seed = 0;
};

struct EvalOptions {
    std::size_t threads = 1;
    std::size_t block = 1000; // trials per RNG substream
};

struct GainResult {
    MetricRecord record;
    double max_ratio = 0.0;         // largest per-trial ||Hw||^2 / lambda_max
    double min_ratio = 0.0;
    std::size_t bound_violations = 0; // trials above 1 + 1e-9
    std::vector<double> per_trial;  // filled only when requested
};

inline constexpr double kGainBoundSlack = 1e-9;

// Mean of ||H w||^2 / lambda_max(H^H H) over fresh channel draws.
GainResult normalized_gain(const Beamformer& scheme, const ChannelSpec& spec, const PilotSpec& pilots,
                           std::size_t n_trials, std::uint64_t seed, const EvalOptions& opts = {},
                           bool keep_per_trial = false);

struct SerResult {
    MetricRecord record;
    std::size_t errors = 0;
    std::size_t symbols = 0;
};

// Gray-mapped unit-energy QPSK symbol errors over a fixed effective channel
// h_eff = H w with genie MRC.
std::size_t count_qpsk_errors(const ComplexMatrix& h_eff, const DataLinkSpec& link, std::size_t n_symbols,
                              RngStream& rng);

// Symbol error rate with one fresh channel per block of `symbols_per_channel`.
SerResult qpsk_ser(const Beamformer& scheme, const ChannelSpec& spec, const PilotSpec& pilots,
                   const DataLinkSpec& link, std::size_t n_symbols, std::uint64_t seed,
                   std::size_t symbols_per_channel = 100, const EvalOptions& opts = {});

struct TimingOptions {
    std::size_t warmup = 100;
    std::size_t pool = 256; // distinct observations cycled through
    std::uint64_t seed = 7;
};

// Median wall-clock milliseconds of the receiver-side online path.
MetricRecord time_online(FeedbackPipeline& scheme, const ChannelSpec& spec, const PilotSpec& pilots,
                         std::size_t n_trials, const TimingOptions& opts = {});

void write_metric_header(std::ostream& out);
void write_metric_row(std::ostream& out, const MetricRecord& r);

double q_function(double x);

} // namespace mimofb
