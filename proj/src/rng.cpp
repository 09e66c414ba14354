#include "mimofb/rng.hpp"

#include <cmath>

#include "mimofb/error.hpp"

namespace mimofb {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32), 0x6d696d6fu};
    return std::mt19937_64(seq);
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

} // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id))
{
}

RngStream RngStream::substream(std::uint64_t child_id) const
{
    return RngStream(splitmix64(seed_ ^ splitmix64(stream_id_)), child_id);
}

cplx RngStream::complex_normal()
{
    static const double scale = std::sqrt(0.5);
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return {scale * re, scale * im};
}

ComplexMatrix sample_standard_complex_gaussian(RngStream& rng, std::size_t rows, std::size_t cols)
{
    if (rows == 0 || cols == 0)
        fail(ErrorCode::InvalidArgument, "sample_standard_complex_gaussian: empty shape");
    ComplexMatrix out(rows, cols);
    for (auto& v : out.data())
        v = rng.complex_normal();
    return out;
}

} // namespace mimofb
