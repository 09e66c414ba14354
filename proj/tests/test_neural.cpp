#include <cmath>
#include <sstream>

#include "doctest.h"
#include "mimofb/channel.hpp"
#include "mimofb/error.hpp"
#include "mimofb/neural.hpp"
#include "network.hpp"
#include "support.hpp"

using namespace mimofb;
using namespace testing_support;

namespace {

FeedbackModel tiny_model(RngStream& rng, std::size_t bits = 2)
{
    const ArchMeta meta{2, 2, 2};
    FeedbackModel m = init_model(meta, bits, {{8, 6}, {6, 8}}, rng);
    // Non-zero biases so their gradients are exercised too.
    for (auto* net : {&m.encoder, &m.decoder})
        for (auto& l : *net)
            for (Eigen::Index i = 0; i < l.bias.size(); ++i)
                l.bias(i) = 0.1 * rng.normal();
    return m;
}

std::vector<TrainingSample> tiny_batch(RngStream& rng, const ArchMeta& meta, std::size_t n)
{
    ChannelSpec spec;
    spec.n_tx = meta.n_tx;
    spec.n_rx = meta.n_rx;
    spec.t_mag = 0.5;
    const ChannelSampler sampler(spec);
    const ComplexMatrix p = dft_pilot_matrix(meta.n_tx, meta.pilot_length);
    PilotSpec pilots;
    pilots.length = meta.pilot_length;
    std::vector<TrainingSample> batch;
    for (std::size_t i = 0; i < n; ++i) {
        const ChannelSample ch = sampler(rng);
        batch.push_back({ch.h, split_real_imag(pilot_observation(ch, pilots, p, rng))});
    }
    return batch;
}

double soft_loss(const FeedbackModel& m, const std::vector<TrainingSample>& batch)
{
    RngStream unused(0);
    return loss_and_gradients(m, batch, unused, BinarizeMode::Soft).loss;
}

// Largest |analytic - numeric| / max(|analytic|, |numeric|, floor) over all parameters.
double worst_relative_error(FeedbackModel m, const std::vector<TrainingSample>& batch)
{
    RngStream unused(0);
    const LossAndGradients lg = loss_and_gradients(m, batch, unused, BinarizeMode::Soft);
    const double h = 1e-6;
    const double floor = 1e-5; // central-difference roundoff is about 1e-10 at h = 1e-6
    double worst = 0.0;
    auto probe = [&](double& param, double analytic) {
        const double saved = param;
        param = saved + h;
        const double up = soft_loss(m, batch);
        param = saved - h;
        const double down = soft_loss(m, batch);
        param = saved;
        const double numeric = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor}));
    };
    for (std::size_t i = 0; i < m.encoder.size(); ++i) {
        auto& l = m.encoder[i];
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
                probe(l.weight(r, c), lg.gradients.encoder[i].weight(r, c));
        for (Eigen::Index r = 0; r < l.bias.size(); ++r)
            probe(l.bias(r), lg.gradients.encoder[i].bias(r));
    }
    for (std::size_t i = 0; i < m.decoder.size(); ++i) {
        auto& l = m.decoder[i];
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
                probe(l.weight(r, c), lg.gradients.decoder[i].weight(r, c));
        for (Eigen::Index r = 0; r < l.bias.size(); ++r)
            probe(l.bias(r), lg.gradients.decoder[i].bias(r));
    }
    return worst;
}

} // namespace

TEST_CASE("default architecture widths scale with N_t")
{
    const Architecture a = Architecture::scaled_default(8);
    CHECK(a.encoder_hidden == std::vector<std::size_t>{400, 240, 160});
    CHECK(a.decoder_hidden == std::vector<std::size_t>{160, 240, 400});

    RngStream rng(51);
    const FeedbackModel m = init_model({8, 4, 4}, 6, a, rng);
    REQUIRE(m.encoder.size() == 4);
    CHECK(m.encoder[0].inputs() == 32);
    CHECK(m.encoder[3].outputs() == 6);
    CHECK(m.encoder[3].activation == Activation::StochasticBinarize);
    CHECK(m.decoder[0].inputs() == 6);
    CHECK(m.decoder[3].outputs() == 16);
    CHECK(m.decoder[3].activation == Activation::L2Normalize);
    for (const auto& l : m.encoder) {
        CHECK(l.bias.isZero());
        const double limit = std::sqrt(6.0 / static_cast<double>(l.inputs() + l.outputs()));
        CHECK(l.weight.cwiseAbs().maxCoeff() <= limit);
    }
}

TEST_CASE("model validation catches broken chains")
{
    RngStream rng(52);
    FeedbackModel m = tiny_model(rng);
    m.encoder[1].weight.resize(6, 7);
    CHECK_THROWS_AS(m.validate(), Error);

    FeedbackModel n = tiny_model(rng);
    n.decoder.back().activation = Activation::Relu;
    try {
        n.validate();
        FAIL("expected InvalidArgument");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidArgument);
    }
}

TEST_CASE("encoder outputs are bipolar in every mode")
{
    RngStream rng(53);
    const FeedbackModel m = tiny_model(rng, 4);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> y(m.arch.encoder_inputs());
        for (auto& v : y)
            v = rng.normal();
        for (BinarizeMode mode : {BinarizeMode::Train, BinarizeMode::Infer}) {
            const auto b = encoder_forward(m, y, rng, mode);
            REQUIRE(b.size() == 4);
            for (double v : b)
                CHECK((v == 1.0 || v == -1.0));
        }
    }
    std::vector<double> wrong(3);
    CHECK_THROWS_AS(encoder_forward(m, wrong, rng, BinarizeMode::Infer), Error);
}

TEST_CASE("inference uses the sign with sign(0) = +1")
{
    RngStream rng(54);
    FeedbackModel m = tiny_model(rng, 2);
    for (auto& l : m.encoder) {
        l.weight.setZero();
        l.bias.setZero();
    }
    m.encoder.back().bias(1) = -3.0;
    std::vector<double> y(m.arch.encoder_inputs(), 1.0);
    const auto b = encoder_forward(m, y, rng, BinarizeMode::Infer);
    CHECK(b[0] == 1.0);
    CHECK(b[1] == -1.0);
}

TEST_CASE("stochastic binarisation boundary and midpoint behaviour")
{
    RngStream rng(55);
    for (int i = 0; i < 1000; ++i)
        CHECK(stochastic_binarize(1.0, rng) == 1.0);
    for (int i = 0; i < 1000; ++i)
        CHECK(stochastic_binarize(-1.0, rng) == -1.0);

    const std::size_t n = 100000;
    for (double z : {0.0, 0.5}) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            sum += stochastic_binarize(z, rng);
        CHECK(std::abs(sum / n - z) <= 4.0 * std::sqrt(std::max(1.0 - z * z, 1e-12) / n));
    }
}

TEST_CASE("decoder output is unit norm and deterministic")
{
    RngStream rng(56);
    const FeedbackModel m = tiny_model(rng, 3);
    for (std::size_t i = 0; i < 8; ++i) {
        const auto bits = index_to_bits(i, 3);
        const auto w = decoder_forward(m, bits);
        REQUIRE(w.size() == 2);
        CHECK(std::abs(std::norm(w[0]) + std::norm(w[1]) - 1.0) < 1e-9);
        CHECK(decoder_forward(m, bits) == w);
    }
}

TEST_CASE("decoder reassembles real and imaginary halves")
{
    // Single linear output layer with zero weights: the bias alone sets w.
    RngStream rng(57);
    FeedbackModel m = init_model({2, 1, 1}, 1, {{}, {}}, rng);
    m.decoder[0].weight.setZero();
    m.decoder[0].bias << 3.0, 0.0, 4.0, 0.0; // [Re w1, Re w2, Im w1, Im w2]
    for (double b : {-1.0, 1.0}) {
        const auto w = decoder_forward(m, std::vector<double>{b});
        CHECK(std::abs(w[0] - cplx(0.6, 0.8)) < 1e-15);
        CHECK(std::abs(w[1]) < 1e-15);
    }
    m.decoder[0].bias << 3.0, 4.0, 0.0, 0.0;
    const auto w = decoder_forward(m, std::vector<double>{1.0});
    CHECK(std::abs(w[0] - cplx(0.6, 0.0)) < 1e-15);
    CHECK(std::abs(w[1] - cplx(0.8, 0.0)) < 1e-15);

    m.decoder[0].bias.setZero();
    try {
        decoder_forward(m, std::vector<double>{1.0});
        FAIL("expected DegenerateOutput");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateOutput);
    }
}

TEST_CASE("zero channels give zero loss and zero gradients")
{
    RngStream rng(58);
    const FeedbackModel m = tiny_model(rng);
    auto batch = tiny_batch(rng, m.arch, 5);
    for (auto& s : batch)
        s.h = ComplexMatrix(2, 2);
    const LossAndGradients lg = loss_and_gradients(m, batch, rng);
    CHECK(lg.loss == 0.0);
    for (const auto& g : lg.gradients.encoder) {
        CHECK(g.weight.isZero());
        CHECK(g.bias.isZero());
    }
    for (const auto& g : lg.gradients.decoder) {
        CHECK(g.weight.isZero());
        CHECK(g.bias.isZero());
    }
}

TEST_CASE("analytic gradients match central differences")
{
    RngStream rng(59);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const FeedbackModel m = tiny_model(rng, 2);
        const auto batch = tiny_batch(rng, m.arch, 3);
        worst = std::max(worst, worst_relative_error(m, batch));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("straight-through backward passes the bit gradient unchanged")
{
    // Build dL/dbits numerically from the transmitter alone, then check the
    // receiver's last-layer bias gradient equals dL/dbits * (1 - soft^2).
    RngStream rng(60);
    const FeedbackModel m = tiny_model(rng, 3);
    const auto batch = tiny_batch(rng, m.arch, 1);
    const detail::Network<double> net(m);

    detail::Mat<double> x =
        Eigen::Map<const Eigen::VectorXd>(batch[0].y_real.data(), static_cast<Eigen::Index>(batch[0].y_real.size()));
    detail::Mat<double> u(3, 1);
    for (Eigen::Index k = 0; k < 3; ++k)
        u(k, 0) = rng.uniform();
    detail::Cache<double> cache;
    net.forward(x, BinarizeMode::Train, &u, cache);
    std::vector<const ComplexMatrix*> channels{&batch[0].h};
    detail::Mat<double> d_out;
    detail::beamforming_loss_grad<double>(channels, cache.out, 1.0, d_out);
    detail::Grads<double> g;
    net.backward(cache, d_out, g);

    auto loss_at = [&](const detail::Mat<double>& bits) {
        detail::Cache<double> c;
        c.dec_in.resize(net.dec.size());
        c.dec_in[0] = bits;
        net.decode(c);
        detail::Mat<double> unused;
        return -detail::beamforming_loss_grad<double>(channels, c.out, 1.0, unused);
    };
    const detail::Mat<double> bits = cache.dec_in[0];
    for (Eigen::Index k = 0; k < 3; ++k) {
        detail::Mat<double> up = bits, down = bits;
        up(k, 0) += 1e-6;
        down(k, 0) -= 1e-6;
        const double d_bit = (loss_at(up) - loss_at(down)) / 2e-6;
        const double expected = d_bit * (1.0 - cache.soft(k, 0) * cache.soft(k, 0));
        CHECK(g.enc.back().b(k) == doctest::Approx(expected).epsilon(1e-6).scale(1e-6));
    }
}

TEST_CASE("stochastic quantiser gives an unbiased gradient of the expected loss")
{
    // One-unit toy: z = tanh(a x), b = quantise(z), loss = c b. The straight-
    // through gradient is c (1 - z^2) x on every draw. An independent
    // estimate of d E[loss] / da comes from the score function
    //   loss(b) * d log p(b) / da,  p(+1) = (1 + z) / 2.
    RngStream rng(61);
    const double a = 0.7, x = 0.9, c = -1.3;
    const double z = std::tanh(a * x);
    const double dz = (1.0 - z * z) * x;
    const std::size_t n = 10000;
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double b = stochastic_binarize(z, rng);
        const double score = b / (1.0 + b * z) * dz;
        const double g = c * b * score;
        sum += g;
        sum2 += g * g;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    const double straight_through = c * dz;
    CHECK(std::abs(mean - straight_through) <= 3.0 * se);
}

TEST_CASE("bit indexing is lexicographic with -1 first")
{
    CHECK(bits_to_index(std::vector<double>{-1, -1}) == 0);
    CHECK(bits_to_index(std::vector<double>{-1, 1}) == 1);
    CHECK(bits_to_index(std::vector<double>{1, -1}) == 2);
    CHECK(bits_to_index(std::vector<double>{1, 1}) == 3);
    for (std::size_t i = 0; i < 32; ++i)
        CHECK(bits_to_index(index_to_bits(i, 5)) == i);
}

TEST_CASE("lookup table equals the live decoder bit for bit")
{
    RngStream rng(62);
    const FeedbackModel m = tiny_model(rng, 2);
    const ComplexMatrix table = decoder_lookup_table(m);
    REQUIRE(table.cols() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        const auto w = decoder_forward(m, index_to_bits(i, 2));
        CHECK(std::abs(squared_norm(table.col(i)) - 1.0) < 1e-9);
        for (std::size_t k = 0; k < 2; ++k)
            CHECK(table(k, i) == w[k]);
    }

    FeedbackModel big = init_model({1, 1, 1}, 21, {{}, {}}, rng);
    try {
        decoder_lookup_table(big);
        FAIL("expected TableTooLarge");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TableTooLarge);
    }
}

TEST_CASE("compiled encoder agrees with the reference forward")
{
    RngStream rng(63);
    const FeedbackModel m = init_model({4, 2, 3}, 5, Architecture::scaled_default(4), rng);
    CompiledEncoder enc(m);
    std::size_t agree = 0;
    const std::size_t n = 500;
    for (std::size_t i = 0; i < n; ++i) {
        const ComplexMatrix y = random_matrix(rng, 2, 3);
        const auto y_real = split_real_imag(y);
        const std::size_t ref = bits_to_index(encoder_forward(m, y_real, rng, BinarizeMode::Infer));
        const std::size_t fast = enc.feedback_index(y);
        CHECK(fast == enc.feedback_index(y_real));
        agree += fast == ref;
    }
    // Single precision can only flip a bit whose pre-activation is within
    // rounding of zero.
    CHECK(agree >= n - 2);
}

TEST_CASE("model files round-trip exactly and reject damage")
{
    RngStream rng(64);
    const FeedbackModel m = tiny_model(rng, 3);
    std::stringstream ss;
    write_model(ss, m);
    const std::string text = ss.str();
    std::stringstream in(text);
    const FeedbackModel back = read_model(in);
    CHECK(back.bits == 3);
    CHECK(back.arch.n_tx == 2);
    for (std::size_t i = 0; i < m.encoder.size(); ++i) {
        CHECK(back.encoder[i].weight == m.encoder[i].weight);
        CHECK(back.encoder[i].bias == m.encoder[i].bias);
    }
    for (std::size_t i = 0; i < m.decoder.size(); ++i)
        CHECK(back.decoder[i].weight == m.decoder[i].weight);

    std::stringstream truncated(text.substr(0, text.size() * 2 / 3));
    try {
        read_model(truncated);
        FAIL("expected CorruptArtifact");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::CorruptArtifact);
    }
    try {
        load_model("/nonexistent/model.txt");
        FAIL("expected MissingArtifact");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingArtifact);
    }
}
