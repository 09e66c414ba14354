#pragma once

#include <cstdint>
#include <random>

#include "mimofb/complex_matrix.hpp"

namespace mimofb {

// Seeded random source. (seed, stream_id) fully determines the sequence;
// distinct stream ids are decorrelated through a seed_seq built from both.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    // Independent child stream, keyed by this stream's seed and a child id.
    RngStream substream(std::uint64_t child_id) const;

    double uniform() { return uniform_(engine_); }            // [0, 1)
    double normal() { return normal_(engine_); }              // N(0, 1)
    cplx complex_normal();                                    // CN(0, 1)
    std::uint64_t next_u64() { return engine_(); }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

// i.i.d. CN(0, 1) entries: real and imaginary parts each N(0, 1/2).
ComplexMatrix sample_standard_complex_gaussian(RngStream& rng, std::size_t rows, std::size_t cols);

} // namespace mimofb
