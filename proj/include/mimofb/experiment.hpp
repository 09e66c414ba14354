#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "mimofb/config.hpp"

namespace mimofb {

// Configuration of one point of a sweep, with artifact paths expanded.
struct RunPoint {
    ChannelSpec channel;
    PilotSpec pilots;
    std::size_t bits = 0;
    double pilot_snr_db = 0.0;
    std::string model_path;
    std::string codebook_path;
};

std::vector<RunPoint> expand_sweep(const ExperimentConfig& cfg);

// LMMSE estimates (or true channels) used to train a Lloyd codebook.
std::vector<ComplexMatrix> lloyd_training_set(const ChannelSpec& spec, const PilotSpec& pilots,
                                              StatisticsKnowledge knowledge, std::size_t count, bool estimated,
                                              RngStream& rng);

Codebook design_codebook(const ExperimentConfig& cfg, const RunPoint& point);
TrainResult train_model(const ExperimentConfig& cfg, const RunPoint& point,
                        const std::function<void(const TraceRow&)>& on_probe = {});

// Executes the configured scenario. Metric rows go to `csv` (header first);
// progress lines go to `log` when given. Artifacts are written to their
// configured paths.
void run_experiment(const ExperimentConfig& cfg, std::ostream& csv, std::ostream* log = nullptr);

// Same, with rows written to cfg.output (stdout when empty).
void run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

// Human-readable summary of a model or codebook file, including an
// integrity check. CorruptArtifact / MissingArtifact on failure.
std::string describe_artifact(const std::string& path);

} // namespace mimofb
