#include "mimofb/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <utility>

#include "mimofb/error.hpp"
#include "mimofb/linalg.hpp"
#include "text_io.hpp"

namespace mimofb {

const char* to_string(CodebookKind kind) noexcept
{
    switch (kind) {
    case CodebookKind::DFT: return "dft";
    case CodebookKind::Lloyd: return "lloyd";
    }
    return "unknown";
}

namespace {

constexpr std::size_t kMaxBits = 24;

void check_bits(std::size_t bits)
{
    if (bits < 1 || bits > kMaxBits)
        fail(ErrorCode::InvalidArgument, "codebook bits must lie in [1, " + std::to_string(kMaxBits) + "]");
}

// Index and value of the largest ||h w_i||^2; the first word wins ties.
// h * W is formed as one product so the inner loop runs along a row of the
// codebook instead of down its columns.
std::pair<std::size_t, double> best_word(const ComplexMatrix& h, const ComplexMatrix& words)
{
    const ComplexMatrix hw = matmul(h, words);
    std::size_t best = 0;
    double best_gain = -1.0;
    for (std::size_t i = 0; i < hw.cols(); ++i) {
        double g = 0.0;
        for (std::size_t r = 0; r < hw.rows(); ++r)
            g += std::norm(hw(r, i));
        if (g > best_gain) {
            best_gain = g;
            best = i;
        }
    }
    return {best, best_gain};
}

struct Assignment {
    std::vector<std::size_t> cell;
    std::vector<double> gain;
    double mean_distortion = 0.0;
};

Assignment assign(std::span<const ComplexMatrix> samples, const Codebook& cb)
{
    Assignment out;
    out.cell.resize(samples.size());
    out.gain.resize(samples.size());
    double total = 0.0;
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const auto [best, best_gain] = best_word(samples[s], cb.words);
        out.cell[s] = best;
        out.gain[s] = best_gain;
        total += best_gain;
    }
    out.mean_distortion = -total / static_cast<double>(samples.size());
    return out;
}

void set_word(Codebook& cb, std::size_t i, const ComplexMatrix& w)
{
    for (std::size_t k = 0; k < cb.n_tx(); ++k)
        cb.words(k, i) = w(k, 0);
}

// w^H G w for column `col` of `w`.
double quadratic_form(const ComplexMatrix& g, const ComplexMatrix& w, std::size_t col = 0)
{
    cplx acc = 0.0;
    for (std::size_t i = 0; i < g.rows(); ++i) {
        cplx row = 0.0;
        for (std::size_t j = 0; j < g.cols(); ++j)
            row += g(i, j) * w(j, col);
        acc += std::conj(w(i, col)) * row;
    }
    return acc.real();
}

} // namespace

Codebook dft_codebook(std::size_t n_tx, std::size_t bits)
{
    check_bits(bits);
    if (n_tx < 1)
        fail(ErrorCode::InvalidArgument, "dft_codebook: n_tx must be >= 1");
    const std::size_t size = std::size_t{1} << bits;
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_tx));
    Codebook cb{bits, ComplexMatrix(n_tx, size), CodebookKind::DFT};
    for (std::size_t i = 0; i < size; ++i)
        for (std::size_t k = 0; k < n_tx; ++k) {
            const double frac = static_cast<double>((i * k) % size) / static_cast<double>(size);
            cb.words(k, i) = std::polar(scale, 2.0 * std::numbers::pi * frac);
        }
    return cb;
}

std::size_t select_pmi(const ComplexMatrix& h_hat, const Codebook& cb)
{
    if (h_hat.cols() != cb.n_tx())
        fail(ErrorCode::ShapeMismatch, "select_pmi: estimate has " + std::to_string(h_hat.cols()) +
                                           " columns but codewords have " + std::to_string(cb.n_tx()) + " entries");
    return best_word(h_hat, cb.words).first;
}

LloydResult lloyd_design(std::span<const ComplexMatrix> training_set, std::size_t bits, const LloydOptions& opts,
                         RngStream& rng)
{
    check_bits(bits);
    if (training_set.empty())
        fail(ErrorCode::EmptyTrainingSet, "lloyd_design: no training samples");
    const std::size_t size = std::size_t{1} << bits;
    if (training_set.size() < 10 * size)
        fail(ErrorCode::InvalidArgument, "lloyd_design: need at least 10 training samples per codeword");
    const std::size_t n_tx = training_set.front().cols();
    for (const auto& h : training_set)
        if (h.cols() != n_tx || h.rows() != training_set.front().rows())
            fail(ErrorCode::ShapeMismatch, "lloyd_design: training matrices differ in shape");

    std::vector<ComplexMatrix> grams;
    std::vector<double> traces; // ||H||_F^2, upper bound on the gain of any word
    grams.reserve(training_set.size());
    traces.reserve(training_set.size());
    for (const auto& h : training_set) {
        grams.push_back(adjoint_times(h, h));
        traces.push_back(squared_norm(h));
    }

    // Initial words: principal eigenvectors of 2^B distinct random samples.
    std::vector<std::size_t> pool(training_set.size());
    std::iota(pool.begin(), pool.end(), 0);
    Codebook cb{bits, ComplexMatrix(n_tx, size), CodebookKind::Lloyd};
    for (std::size_t i = 0; i < size; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform() * static_cast<double>(pool.size() - i));
        std::swap(pool[i], pool[std::min(j, pool.size() - 1)]);
        set_word(cb, i, principal_eigenvector(grams[pool[i]]));
    }

    LloydResult result;
    Assignment current = assign(training_set, cb);
    result.distortion_trace.push_back(current.mean_distortion);

    for (std::size_t iter = 0; iter < opts.max_iters; ++iter) {
        std::vector<ComplexMatrix> cell_sum(size, ComplexMatrix(n_tx, n_tx));
        std::vector<std::size_t> members(size, 0);
        for (std::size_t s = 0; s < training_set.size(); ++s) {
            cell_sum[current.cell[s]] += grams[s];
            ++members[current.cell[s]];
        }

        for (std::size_t i = 0; i < size; ++i) {
            if (members[i] == 0)
                continue;
            const ComplexMatrix candidate = principal_eigenvector(cell_sum[i]);
            // Keep the old word unless the new one is at least as good on this
            // cell; guards monotonicity against eigensolver round-off.
            if (quadratic_form(cell_sum[i], candidate) >= quadratic_form(cell_sum[i], cb.words, i))
                set_word(cb, i, candidate);
        }

        // Empty cells: split the most populated cell by reseeding with the
        // principal direction of its worst-served member.
        for (std::size_t i = 0; i < size; ++i) {
            if (members[i] != 0)
                continue;
            const auto donor = static_cast<std::size_t>(
                std::distance(members.begin(), std::max_element(members.begin(), members.end())));
            std::size_t worst = training_set.size();
            double worst_ratio = 2.0;
            for (std::size_t s = 0; s < training_set.size(); ++s) {
                if (current.cell[s] != donor)
                    continue;
                const double ratio = traces[s] > 0.0 ? current.gain[s] / traces[s] : 1.0;
                if (ratio < worst_ratio) {
                    worst_ratio = ratio;
                    worst = s;
                }
            }
            if (worst == training_set.size())
                break;
            set_word(cb, i, principal_eigenvector(grams[worst]));
            current.cell[worst] = i;
            --members[donor];
            members[i] = 1;
        }

        Assignment next = assign(training_set, cb);
        const double prev = current.mean_distortion;
        current = std::move(next);
        result.distortion_trace.push_back(current.mean_distortion);
        const double improvement = prev - current.mean_distortion;
        if (prev == 0.0 || improvement < opts.rel_tol * std::abs(prev))
            break;
    }

    result.codebook = std::move(cb);
    return result;
}

FeedbackChoice baseline_feedback(const ComplexMatrix& y, const ComplexMatrix& p, const PilotSpec& pilots,
                                 const ComplexMatrix& r_t, const Codebook& cb)
{
    const ChannelEstimate est = lmmse_estimate(y, p, pilots.pilot_energy, pilots.noise_var, r_t);
    const std::size_t index = select_pmi(est, cb);
    return {index, cb.word(index)};
}

void write_codebook(std::ostream& out, const Codebook& cb)
{
    out << "mimofb-codebook 1\n";
    out << "n_tx " << cb.n_tx() << "\n";
    out << "bits " << cb.bits << "\n";
    out << "provenance " << to_string(cb.provenance) << "\n";
    out << "words " << cb.size() << "\n";
    for (std::size_t i = 0; i < cb.size(); ++i) {
        for (std::size_t k = 0; k < cb.n_tx(); ++k) {
            if (k)
                out << "  ";
            out << detail::format_double(cb.words(k, i).real()) << ' ' << detail::format_double(cb.words(k, i).imag());
        }
        out << '\n';
    }
    out << "end\n";
}

Codebook read_codebook(std::istream& in)
{
    detail::TokenReader rd(in);
    rd.expect("mimofb-codebook");
    if (rd.count("version") != 1)
        fail(ErrorCode::CorruptArtifact, "unsupported codebook version");
    const std::size_t n_tx = rd.keyed_count("n_tx");
    const std::size_t bits = rd.keyed_count("bits");
    rd.expect("provenance");
    const std::string prov = rd.word("provenance");
    Codebook cb;
    if (prov == "dft")
        cb.provenance = CodebookKind::DFT;
    else if (prov == "lloyd")
        cb.provenance = CodebookKind::Lloyd;
    else
        fail(ErrorCode::CorruptArtifact, "unknown codebook provenance '" + prov + "'");
    if (n_tx < 1 || bits < 1 || bits > kMaxBits)
        fail(ErrorCode::CorruptArtifact, "codebook header out of range");
    const std::size_t size = rd.keyed_count("words");
    if (size != (std::size_t{1} << bits))
        fail(ErrorCode::CorruptArtifact, "word count does not equal 2^bits");
    cb.bits = bits;
    cb.words = ComplexMatrix(n_tx, size);
    for (std::size_t i = 0; i < size; ++i)
        for (std::size_t k = 0; k < n_tx; ++k) {
            const double re = rd.real("codeword entry");
            const double im = rd.real("codeword entry");
            cb.words(k, i) = {re, im};
        }
    rd.expect("end");
    if (!cb.words.all_finite())
        fail(ErrorCode::CorruptArtifact, "non-finite codeword entry");
    for (std::size_t i = 0; i < size; ++i)
        if (std::abs(squared_norm(cb.words.col(i)) - 1.0) > 1e-9)
            fail(ErrorCode::CorruptArtifact, "codeword " + std::to_string(i) + " is not unit-norm");
    return cb;
}

void save_codebook(const std::filesystem::path& path, const Codebook& cb)
{
    std::ofstream out(path);
    if (!out)
        fail(ErrorCode::MissingArtifact, "cannot open '" + path.string() + "' for writing");
    write_codebook(out, cb);
    if (!out)
        fail(ErrorCode::MissingArtifact, "write failed for '" + path.string() + "'");
}

Codebook load_codebook(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        fail(ErrorCode::MissingArtifact, "codebook file '" + path.string() + "' not found");
    return read_codebook(in);
}

} // namespace mimofb
