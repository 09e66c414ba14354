#include "mimofb/neural.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include "mimofb/error.hpp"
#include "network.hpp"
#include "text_io.hpp"

namespace mimofb {

using detail::Mat;
using detail::Vec;

const char* to_string(Activation a) noexcept
{
    switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::StochasticBinarize: return "stochastic-binarize";
    case Activation::L2Normalize: return "l2-normalize";
    case Activation::Identity: return "identity";
    }
    return "unknown";
}

Activation activation_from_string(const std::string& name)
{
    for (Activation a : {Activation::Relu, Activation::Tanh, Activation::StochasticBinarize, Activation::L2Normalize,
                         Activation::Identity})
        if (name == to_string(a))
            return a;
    fail(ErrorCode::InvalidArgument, "unknown activation '" + name + "'");
}

Architecture Architecture::scaled_default(std::size_t n_tx)
{
    return {{50 * n_tx, 30 * n_tx, 20 * n_tx}, {20 * n_tx, 30 * n_tx, 50 * n_tx}};
}

namespace {

bool is_hidden_activation(Activation a)
{
    return a == Activation::Relu || a == Activation::Tanh || a == Activation::Identity;
}

void check_chain(const std::vector<LayerParams>& layers, std::size_t inputs, std::size_t outputs, Activation final,
                 const char* which)
{
    const std::string name(which);
    if (layers.empty())
        fail(ErrorCode::InvalidArgument, name + " has no layers");
    std::size_t width = inputs;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.inputs() != width)
            fail(ErrorCode::ShapeMismatch, name + " layer " + std::to_string(i) + " expects " +
                                               std::to_string(l.inputs()) + " inputs, chain provides " +
                                               std::to_string(width));
        if (static_cast<std::size_t>(l.bias.size()) != l.outputs())
            fail(ErrorCode::ShapeMismatch, name + " layer " + std::to_string(i) + " bias length mismatch");
        if (!l.weight.allFinite() || !l.bias.allFinite())
            fail(ErrorCode::InvalidArgument, name + " layer " + std::to_string(i) + " has non-finite parameters");
        const bool last = i + 1 == layers.size();
        if (last ? l.activation != final : !is_hidden_activation(l.activation))
            fail(ErrorCode::InvalidArgument, name + " layer " + std::to_string(i) + " has activation " +
                                                 to_string(l.activation));
        width = l.outputs();
    }
    if (width != outputs)
        fail(ErrorCode::ShapeMismatch, name + " output width " + std::to_string(width) + ", expected " +
                                           std::to_string(outputs));
}

LayerParams glorot_layer(std::size_t in, std::size_t out, Activation act, RngStream& rng)
{
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    LayerParams l;
    l.weight.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
            l.weight(r, c) = limit * (2.0 * rng.uniform() - 1.0);
    l.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out));
    l.activation = act;
    return l;
}

Mat<double> column_from(std::span<const double> v)
{
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

} // namespace

void FeedbackModel::validate() const
{
    if (bits < 1)
        fail(ErrorCode::InvalidArgument, "model must emit at least one feedback bit");
    if (arch.n_tx < 1 || arch.n_rx < 1 || arch.pilot_length < 1)
        fail(ErrorCode::InvalidArgument, "model architecture dimensions must be >= 1");
    check_chain(encoder, arch.encoder_inputs(), bits, Activation::StochasticBinarize, "encoder");
    check_chain(decoder, bits, arch.decoder_outputs(), Activation::L2Normalize, "decoder");
}

std::size_t FeedbackModel::parameter_count() const noexcept
{
    std::size_t n = 0;
    for (const auto* net : {&encoder, &decoder})
        for (const auto& l : *net)
            n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

FeedbackModel init_model(const ArchMeta& arch, std::size_t bits, const Architecture& hidden, RngStream& rng)
{
    FeedbackModel m;
    m.arch = arch;
    m.bits = bits;
    std::size_t width = arch.encoder_inputs();
    for (std::size_t h : hidden.encoder_hidden) {
        m.encoder.push_back(glorot_layer(width, h, Activation::Relu, rng));
        width = h;
    }
    m.encoder.push_back(glorot_layer(width, bits, Activation::StochasticBinarize, rng));
    width = bits;
    for (std::size_t h : hidden.decoder_hidden) {
        m.decoder.push_back(glorot_layer(width, h, Activation::Relu, rng));
        width = h;
    }
    m.decoder.push_back(glorot_layer(width, arch.decoder_outputs(), Activation::L2Normalize, rng));
    m.validate();
    return m;
}

std::vector<double> encoder_forward(const FeedbackModel& model, std::span<const double> y_real, RngStream& rng,
                                    BinarizeMode mode)
{
    if (y_real.size() != model.arch.encoder_inputs())
        fail(ErrorCode::ShapeMismatch, "encoder_forward: expected " + std::to_string(model.arch.encoder_inputs()) +
                                           " inputs, got " + std::to_string(y_real.size()));
    const detail::Network<double> net(model);
    Mat<double> uniforms;
    if (mode == BinarizeMode::Train) {
        uniforms.resize(static_cast<Eigen::Index>(model.bits), 1);
        for (Eigen::Index k = 0; k < uniforms.rows(); ++k)
            uniforms(k, 0) = rng.uniform();
    }
    detail::Cache<double> cache;
    net.encode(column_from(y_real), mode, &uniforms, cache);
    const auto& b = cache.dec_in[0];
    return {b.data(), b.data() + b.size()};
}

namespace {

// Shared by decoder_forward and the lookup table so both agree bit for bit.
std::vector<cplx> decode_one(const detail::Network<double>& net, std::span<const double> bits)
{
    detail::Cache<double> cache;
    cache.dec_in.resize(net.dec.size());
    cache.dec_in[0] = column_from(bits);
    net.decode(cache);
    return join_real_imag(std::span<const double>(cache.out.data(), static_cast<std::size_t>(cache.out.size())));
}

} // namespace

std::vector<cplx> decoder_forward(const FeedbackModel& model, std::span<const double> bits)
{
    if (bits.size() != model.bits)
        fail(ErrorCode::ShapeMismatch, "decoder_forward: expected " + std::to_string(model.bits) + " bits");
    return decode_one(detail::Network<double>(model), bits);
}

LossAndGradients loss_and_gradients(const FeedbackModel& model, std::span<const TrainingSample> batch, RngStream& rng,
                                    BinarizeMode mode)
{
    if (batch.empty())
        fail(ErrorCode::InvalidArgument, "loss_and_gradients: empty batch");
    const detail::Network<double> net(model);
    const auto n = static_cast<Eigen::Index>(batch.size());
    const auto in = static_cast<Eigen::Index>(model.arch.encoder_inputs());

    Mat<double> x(in, n);
    std::vector<const ComplexMatrix*> channels;
    channels.reserve(batch.size());
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto& s = batch[static_cast<std::size_t>(j)];
        if (static_cast<Eigen::Index>(s.y_real.size()) != in)
            fail(ErrorCode::ShapeMismatch, "loss_and_gradients: observation length mismatch");
        if (s.h.rows() != model.arch.n_rx || s.h.cols() != model.arch.n_tx)
            fail(ErrorCode::ShapeMismatch, "loss_and_gradients: channel shape mismatch");
        x.col(j) = column_from(s.y_real);
        channels.push_back(&s.h);
    }
    Mat<double> uniforms;
    if (mode == BinarizeMode::Train) {
        uniforms.resize(static_cast<Eigen::Index>(model.bits), n);
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index k = 0; k < uniforms.rows(); ++k)
                uniforms(k, j) = rng.uniform();
    }

    detail::Cache<double> cache;
    net.forward(x, mode, &uniforms, cache);
    Mat<double> d_out;
    const double total = detail::beamforming_loss_grad<double>(channels, cache.out, static_cast<double>(n), d_out);
    detail::Grads<double> g;
    net.backward(cache, d_out, g);

    LossAndGradients out;
    out.loss = -total / static_cast<double>(n);
    for (auto& l : g.enc)
        out.gradients.encoder.push_back({std::move(l.w), std::move(l.b)});
    for (auto& l : g.dec)
        out.gradients.decoder.push_back({std::move(l.w), std::move(l.b)});
    return out;
}

std::size_t bits_to_index(std::span<const double> bits)
{
    std::size_t index = 0;
    for (double b : bits)
        index = (index << 1) | (b > 0.0 ? 1u : 0u);
    return index;
}

std::vector<double> index_to_bits(std::size_t index, std::size_t n_bits)
{
    std::vector<double> bits(n_bits);
    for (std::size_t k = 0; k < n_bits; ++k)
        bits[k] = ((index >> (n_bits - 1 - k)) & 1u) ? 1.0 : -1.0;
    return bits;
}

ComplexMatrix decoder_lookup_table(const FeedbackModel& model)
{
    if (model.bits > kMaxTableBits)
        fail(ErrorCode::TableTooLarge, "decoder_lookup_table: " + std::to_string(model.bits) + " bits exceeds " +
                                           std::to_string(kMaxTableBits));
    const detail::Network<double> net(model);
    const std::size_t size = std::size_t{1} << model.bits;
    ComplexMatrix table(model.arch.n_tx, size);
    for (std::size_t i = 0; i < size; ++i) {
        const std::vector<cplx> w = decode_one(net, index_to_bits(i, model.bits));
        for (std::size_t k = 0; k < w.size(); ++k)
            table(k, i) = w[k];
    }
    return table;
}

struct CompiledEncoder::Impl {
    std::vector<detail::Dense<float>> layers;
    std::vector<Vec<float>> buffers;
    Vec<float> input;
    std::size_t n_rx = 0;
    std::size_t length = 0;
    std::vector<double> stacked;
};

CompiledEncoder::CompiledEncoder(const FeedbackModel& model) : impl_(std::make_unique<Impl>())
{
    model.validate();
    for (const auto& l : model.encoder) {
        impl_->layers.push_back(detail::to_dense<float>(l));
        impl_->buffers.emplace_back(static_cast<Eigen::Index>(l.outputs()));
    }
    impl_->input.resize(static_cast<Eigen::Index>(model.arch.encoder_inputs()));
    impl_->n_rx = model.arch.n_rx;
    impl_->length = model.arch.pilot_length;
}

CompiledEncoder::~CompiledEncoder() = default;
CompiledEncoder::CompiledEncoder(CompiledEncoder&&) noexcept = default;
CompiledEncoder& CompiledEncoder::operator=(CompiledEncoder&&) noexcept = default;

std::size_t CompiledEncoder::feedback_index(std::span<const double> y_real)
{
    Impl& m = *impl_;
    if (static_cast<Eigen::Index>(y_real.size()) != m.input.size())
        fail(ErrorCode::ShapeMismatch, "CompiledEncoder: observation length mismatch");
    for (std::size_t i = 0; i < y_real.size(); ++i)
        m.input(static_cast<Eigen::Index>(i)) = static_cast<float>(y_real[i]);
    const Vec<float>* x = &m.input;
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        Vec<float>& z = m.buffers[i];
        z.noalias() = m.layers[i].w * *x;
        z += m.layers[i].b;
        if (i + 1 < m.layers.size())
            detail::apply_hidden(z, m.layers[i].act);
        x = &z;
    }
    // sign(tanh(u)) = sign(u), so the squashing is skipped.
    std::size_t index = 0;
    for (Eigen::Index k = 0; k < x->size(); ++k)
        index = (index << 1) | ((*x)(k) >= 0.0f ? 1u : 0u);
    return index;
}

std::size_t CompiledEncoder::feedback_index(const ComplexMatrix& y)
{
    if (y.rows() != impl_->n_rx || y.cols() != impl_->length)
        fail(ErrorCode::ShapeMismatch, "CompiledEncoder: observation must be N_r x L");
    // Same layout as split_real_imag(y), written without a temporary.
    const std::size_t n = y.rows() * y.cols();
    impl_->stacked.resize(2 * n);
    for (std::size_t c = 0; c < y.cols(); ++c)
        for (std::size_t r = 0; r < y.rows(); ++r) {
            const cplx v = y(r, c);
            impl_->stacked[c * y.rows() + r] = v.real();
            impl_->stacked[n + c * y.rows() + r] = v.imag();
        }
    return feedback_index(impl_->stacked);
}

void write_model(std::ostream& out, const FeedbackModel& model)
{
    model.validate();
    out << "mimofb-model 1\n";
    out << "n_tx " << model.arch.n_tx << "\n";
    out << "n_rx " << model.arch.n_rx << "\n";
    out << "pilot_length " << model.arch.pilot_length << "\n";
    out << "bits " << model.bits << "\n";
    auto write_net = [&](const char* name, const std::vector<LayerParams>& layers) {
        out << name << ' ' << layers.size() << "\n";
        for (const auto& l : layers) {
            out << "layer " << l.inputs() << ' ' << l.outputs() << ' ' << to_string(l.activation) << "\n";
            for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
                for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
                    out << (c ? " " : "") << detail::format_double(l.weight(r, c));
                out << "\n";
            }
            for (Eigen::Index r = 0; r < l.bias.size(); ++r)
                out << (r ? " " : "") << detail::format_double(l.bias(r));
            out << "\n";
        }
    };
    write_net("encoder", model.encoder);
    write_net("decoder", model.decoder);
    out << "end\n";
}

FeedbackModel read_model(std::istream& in)
{
    detail::TokenReader rd(in);
    rd.expect("mimofb-model");
    if (rd.count("version") != 1)
        fail(ErrorCode::CorruptArtifact, "unsupported model version");
    FeedbackModel m;
    m.arch.n_tx = rd.keyed_count("n_tx");
    m.arch.n_rx = rd.keyed_count("n_rx");
    m.arch.pilot_length = rd.keyed_count("pilot_length");
    m.bits = rd.keyed_count("bits");
    constexpr std::size_t kMaxWidth = 1u << 16;
    auto read_net = [&](const char* name) {
        std::vector<LayerParams> layers(rd.keyed_count(name));
        if (layers.size() > 64)
            fail(ErrorCode::CorruptArtifact, "implausible layer count");
        for (auto& l : layers) {
            rd.expect("layer");
            const std::size_t inputs = rd.count("layer inputs");
            const std::size_t outputs = rd.count("layer outputs");
            if (inputs == 0 || outputs == 0 || inputs > kMaxWidth || outputs > kMaxWidth)
                fail(ErrorCode::CorruptArtifact, "layer width out of range");
            try {
                l.activation = activation_from_string(rd.word("activation"));
            } catch (const Error& e) {
                fail(ErrorCode::CorruptArtifact, e.what());
            }
            l.weight.resize(static_cast<Eigen::Index>(outputs), static_cast<Eigen::Index>(inputs));
            for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
                for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
                    l.weight(r, c) = rd.real("weight");
            l.bias.resize(static_cast<Eigen::Index>(outputs));
            for (Eigen::Index r = 0; r < l.bias.size(); ++r)
                l.bias(r) = rd.real("bias");
        }
        return layers;
    };
    m.encoder = read_net("encoder");
    m.decoder = read_net("decoder");
    rd.expect("end");
    try {
        m.validate();
    } catch (const Error& e) {
        fail(ErrorCode::CorruptArtifact, e.what());
    }
    return m;
}

void save_model(const std::filesystem::path& path, const FeedbackModel& model)
{
    std::ofstream out(path);
    if (!out)
        fail(ErrorCode::MissingArtifact, "cannot open '" + path.string() + "' for writing");
    write_model(out, model);
    if (!out)
        fail(ErrorCode::MissingArtifact, "write failed for '" + path.string() + "'");
}

FeedbackModel load_model(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        fail(ErrorCode::MissingArtifact, "model file '" + path.string() + "' not found");
    return read_model(in);
}

} // namespace mimofb
