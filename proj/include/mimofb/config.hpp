#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mimofb/channel.hpp"
#include "mimofb/codebook.hpp"
#include "mimofb/evaluation.hpp"
#include "mimofb/trainer.hpp"

namespace mimofb {

enum class Scenario { Fig2Gain, Fig3Ser, Table1Timing, Train, DesignCodebook, Smoke };
enum class Scheme { DL, LmmseDft, LmmseLloyd };

const char* to_string(Scenario s) noexcept;
const char* to_string(Scheme s) noexcept;

// Parameter varied across the runs of one experiment.
enum class SweepParameter { None, PilotLength, Bits, TMag, PilotSnrDb };

struct Sweep {
    SweepParameter parameter = SweepParameter::None;
    std::vector<double> values;
};

struct LloydDesignSpec {
    std::size_t training_samples = 10000;
    bool estimated_csi = true; // train on LMMSE estimates rather than true channels
    LloydOptions options;
};

struct ExperimentConfig {
    Scenario scenario = Scenario::Fig2Gain;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    std::string output; // CSV path; empty means stdout

    ChannelSpec channel;
    PilotSpec pilots;
    std::size_t bits = 6;
    StatisticsKnowledge knowledge = StatisticsKnowledge::PerRealization;

    std::vector<double> link_snr_db{0.0};
    double link_noise_var = 1.0;

    std::vector<Scheme> schemes{Scheme::DL, Scheme::LmmseDft, Scheme::LmmseLloyd};
    Sweep sweep;

    std::size_t trials = 10000;         // gain trials and timed trials
    std::size_t symbols = 1000000;      // SER symbols per point
    std::size_t symbols_per_channel = 100;
    std::size_t block = 1000;

    // Artifact paths; "{L}", "{B}", "{t_mag}" and "{snr}" expand per sweep point.
    std::string model_path = "model_L{L}_B{B}.txt";
    std::string codebook_path = "lloyd_L{L}_B{B}.txt";

    TrainConfig train;
    Architecture hidden; // empty means the N_t-scaled default
    LloydDesignSpec lloyd;

    void validate() const;
};

// The reduced configuration used for quick end-to-end checks.
ExperimentConfig smoke_config();

// TOML-style text: top-level keys, [section] headers, key = value with
// numbers, booleans, quoted strings and arrays. Each override is a
// "section.key=value" assignment applied after the text. Unknown keys and
// invalid values raise ConfigError naming the field.
ExperimentConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

} // namespace mimofb
