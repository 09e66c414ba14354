#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "mimofb/channel.hpp"
#include "mimofb/neural.hpp"

namespace mimofb {

enum class OptimizerKind { Sgd, Adam };
enum class Precision { Single, Double };

struct TrainConfig {
    std::size_t batch_size = 2000;
    double learning_rate = 1e-3;
    std::size_t iterations = 20000;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 1;

    std::size_t probe_every = 200; // iterations between held-out probes
    std::size_t probe_size = 256;
    std::size_t patience = 10;     // probes without improvement before stopping; 0 disables
    Precision precision = Precision::Single;
    std::size_t threads = 1;

    void validate() const;
};

struct TraceRow {
    std::size_t iteration = 0;
    double train_loss = 0.0; // mean mini-batch loss since the previous row
    double probe_gain = 0.0; // mean ||H w||^2 on the probe set, deterministic bits
};

struct TrainResult {
    FeedbackModel model;
    std::vector<TraceRow> trace;
    std::size_t iterations_run = 0;
    std::size_t best_iteration = 0;
};

// Draws `count` fresh (H, Y) tuples.
std::vector<TrainingSample> generate_samples(const ChannelSampler& sampler, const PilotSpec& pilots,
                                             const ComplexMatrix& p, std::size_t count, RngStream& rng);

// Mini-batch training of the feedback networks. Each iteration draws a fresh
// batch; with patience > 0 the parameters of the best probe are returned.
TrainResult train(const ChannelSpec& spec, const PilotSpec& pilots, std::size_t bits, const Architecture& hidden,
                  const TrainConfig& cfg, const std::function<void(const TraceRow&)>& on_probe = {});

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace);

} // namespace mimofb
