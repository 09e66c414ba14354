#include "mimofb/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <thread>

#include "mimofb/error.hpp"
#include "network.hpp"
#include "text_io.hpp"

namespace mimofb {

void TrainConfig::validate() const
{
    if (batch_size < 1)
        fail(ErrorCode::ConfigError, "batch_size must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        fail(ErrorCode::ConfigError, "learning_rate must be positive");
    if (optimizer == OptimizerKind::Adam) {
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
            fail(ErrorCode::ConfigError, "adam betas must lie in [0, 1)");
        if (!(epsilon > 0.0))
            fail(ErrorCode::ConfigError, "adam epsilon must be positive");
    }
    if (probe_every < 1)
        fail(ErrorCode::ConfigError, "probe_every must be >= 1");
    if (probe_size < 1)
        fail(ErrorCode::ConfigError, "probe_size must be >= 1");
    if (threads < 1)
        fail(ErrorCode::ConfigError, "threads must be >= 1");
}

std::vector<TrainingSample> generate_samples(const ChannelSampler& sampler, const PilotSpec& pilots,
                                             const ComplexMatrix& p, std::size_t count, RngStream& rng)
{
    std::vector<TrainingSample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        ChannelSample ch = sampler(rng);
        const ComplexMatrix y = pilot_observation(ch, pilots, p, rng);
        out.push_back({std::move(ch.h), split_real_imag(y)});
    }
    return out;
}

namespace {

using detail::Mat;
using detail::Vec;

// Gradient chunks per batch. Fixed so results do not depend on thread count.
constexpr std::size_t kChunks = 4;

template <class S>
struct Batch {
    Mat<S> x;
    std::vector<const ComplexMatrix*> channels;
};

template <class S>
Batch<S> to_batch(const std::vector<TrainingSample>& samples)
{
    Batch<S> b;
    const auto in = static_cast<Eigen::Index>(samples.front().y_real.size());
    b.x.resize(in, static_cast<Eigen::Index>(samples.size()));
    for (std::size_t j = 0; j < samples.size(); ++j) {
        for (Eigen::Index k = 0; k < in; ++k)
            b.x(k, static_cast<Eigen::Index>(j)) = static_cast<S>(samples[j].y_real[static_cast<std::size_t>(k)]);
        b.channels.push_back(&samples[j].h);
    }
    return b;
}

template <class S>
struct Optimizer {
    OptimizerKind kind;
    double lr, beta1, beta2, eps;
    std::size_t step = 0;
    detail::Grads<S> m, v;

    void init(const detail::Network<S>& net)
    {
        auto zeros = [](const auto& layers) {
            std::vector<detail::DenseGrad<S>> out;
            for (const auto& l : layers)
                out.push_back({Mat<S>::Zero(l.w.rows(), l.w.cols()), Vec<S>::Zero(l.b.size())});
            return out;
        };
        m.enc = zeros(net.enc);
        m.dec = zeros(net.dec);
        v = m;
    }

    void apply(detail::Network<S>& net, const detail::Grads<S>& g)
    {
        ++step;
        if (kind == OptimizerKind::Sgd) {
            for (std::size_t i = 0; i < net.enc.size(); ++i) {
                net.enc[i].w -= static_cast<S>(lr) * g.enc[i].w;
                net.enc[i].b -= static_cast<S>(lr) * g.enc[i].b;
            }
            for (std::size_t i = 0; i < net.dec.size(); ++i) {
                net.dec[i].w -= static_cast<S>(lr) * g.dec[i].w;
                net.dec[i].b -= static_cast<S>(lr) * g.dec[i].b;
            }
            return;
        }
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        const S step_size = static_cast<S>(lr * std::sqrt(c2) / c1);
        const S eps_hat = static_cast<S>(eps * std::sqrt(c2));
        const S b1 = static_cast<S>(beta1), b2 = static_cast<S>(beta2);
        auto update = [&](auto& param, auto& mom, auto& var, const auto& grad) {
            mom = b1 * mom + (S(1) - b1) * grad;
            var = b2 * var + (S(1) - b2) * grad.cwiseAbs2();
            param.array() -= step_size * mom.array() / (var.array().sqrt() + eps_hat);
        };
        for (std::size_t i = 0; i < net.enc.size(); ++i) {
            update(net.enc[i].w, m.enc[i].w, v.enc[i].w, g.enc[i].w);
            update(net.enc[i].b, m.enc[i].b, v.enc[i].b, g.enc[i].b);
        }
        for (std::size_t i = 0; i < net.dec.size(); ++i) {
            update(net.dec[i].w, m.dec[i].w, v.dec[i].w, g.dec[i].w);
            update(net.dec[i].b, m.dec[i].b, v.dec[i].b, g.dec[i].b);
        }
    }
};

template <class S>
void accumulate(detail::Grads<S>& into, const detail::Grads<S>& g)
{
    for (std::size_t i = 0; i < into.enc.size(); ++i) {
        into.enc[i].w += g.enc[i].w;
        into.enc[i].b += g.enc[i].b;
    }
    for (std::size_t i = 0; i < into.dec.size(); ++i) {
        into.dec[i].w += g.dec[i].w;
        into.dec[i].b += g.dec[i].b;
    }
}

// Returns the summed gain; `total` receives the chunk-ordered gradient sum.
template <class S>
double batch_gradient(const detail::Network<S>& net, const Batch<S>& batch, const Mat<S>& uniforms,
                      std::size_t threads, detail::Grads<S>& total)
{
    const auto n = batch.x.cols();
    const std::size_t chunks = std::min<std::size_t>(kChunks, static_cast<std::size_t>(n));
    std::vector<detail::Grads<S>> grads(chunks);
    std::vector<double> gains(chunks, 0.0);
    std::vector<std::exception_ptr> errors(chunks);

    auto work = [&](std::size_t c) {
        try {
            const Eigen::Index begin = static_cast<Eigen::Index>(c) * n / static_cast<Eigen::Index>(chunks);
            const Eigen::Index end = static_cast<Eigen::Index>(c + 1) * n / static_cast<Eigen::Index>(chunks);
            const Mat<S> x = batch.x.middleCols(begin, end - begin);
            const Mat<S> u = uniforms.middleCols(begin, end - begin);
            detail::Cache<S> cache;
            net.forward(x, BinarizeMode::Train, &u, cache);
            Mat<S> d_out;
            gains[c] = detail::beamforming_loss_grad<S>(
                std::span(batch.channels).subspan(static_cast<std::size_t>(begin),
                                                  static_cast<std::size_t>(end - begin)),
                cache.out, static_cast<double>(n), d_out);
            net.backward(cache, d_out, grads[c]);
        } catch (...) {
            errors[c] = std::current_exception();
        }
    };

    const std::size_t workers = std::min(threads, chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c)
            work(c);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t c = w; c < chunks; c += workers)
                    work(c);
            });
        for (auto& t : pool)
            t.join();
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);

    total = std::move(grads[0]);
    double gain = gains[0];
    for (std::size_t c = 1; c < chunks; ++c) {
        accumulate(total, grads[c]);
        gain += gains[c];
    }
    return gain;
}

template <class S>
double probe_gain(const detail::Network<S>& net, const Batch<S>& probe)
{
    detail::Cache<S> cache;
    net.forward(probe.x, BinarizeMode::Infer, nullptr, cache);
    Mat<S> unused;
    return detail::beamforming_loss_grad<S>(probe.channels, cache.out, 1.0, unused) /
           static_cast<double>(probe.x.cols());
}

template <class S>
TrainResult train_impl(const ChannelSpec& spec, const PilotSpec& pilots, std::size_t bits,
                       const Architecture& hidden, const TrainConfig& cfg,
                       const std::function<void(const TraceRow&)>& on_probe)
{
    const ArchMeta arch{spec.n_tx, spec.n_rx, pilots.length};
    RngStream init_rng(cfg.seed, 0);
    RngStream data_rng(cfg.seed, 1);
    RngStream noise_rng(cfg.seed, 2);
    RngStream probe_rng(cfg.seed, 3);

    TrainResult result;
    result.model = init_model(arch, bits, hidden, init_rng);

    const ChannelSampler sampler(spec);
    const ComplexMatrix p = dft_pilot_matrix(spec.n_tx, pilots.length);
    const std::vector<TrainingSample> probe_samples = generate_samples(sampler, pilots, p, cfg.probe_size, probe_rng);
    const Batch<S> probe = to_batch<S>(probe_samples);

    detail::Network<S> net(result.model);
    Optimizer<S> opt{cfg.optimizer, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon, 0, {}, {}};
    opt.init(net);

    double best = probe_gain(net, probe);
    result.trace.push_back({0, 0.0, best});
    if (on_probe)
        on_probe(result.trace.back());
    detail::Network<S> best_net = net;
    std::size_t stale = 0;
    double loss_sum = 0.0;
    std::size_t loss_count = 0;

    Mat<S> uniforms(static_cast<Eigen::Index>(bits), static_cast<Eigen::Index>(cfg.batch_size));
    for (std::size_t it = 1; it <= cfg.iterations; ++it) {
        const std::vector<TrainingSample> samples = generate_samples(sampler, pilots, p, cfg.batch_size, data_rng);
        const Batch<S> batch = to_batch<S>(samples);
        for (Eigen::Index j = 0; j < uniforms.cols(); ++j)
            for (Eigen::Index k = 0; k < uniforms.rows(); ++k)
                uniforms(k, j) = static_cast<S>(noise_rng.uniform());

        detail::Grads<S> grads;
        const double loss = -batch_gradient(net, batch, uniforms, cfg.threads, grads) /
                            static_cast<double>(cfg.batch_size);
        if (!std::isfinite(loss))
            fail(ErrorCode::NonFiniteLoss, "training loss became non-finite at iteration " + std::to_string(it));
        opt.apply(net, grads);
        loss_sum += loss;
        ++loss_count;
        result.iterations_run = it;

        if (it % cfg.probe_every == 0 || it == cfg.iterations) {
            const double gain = probe_gain(net, probe);
            result.trace.push_back({it, loss_sum / static_cast<double>(loss_count), gain});
            loss_sum = 0.0;
            loss_count = 0;
            if (on_probe)
                on_probe(result.trace.back());
            if (gain > best) {
                best = gain;
                best_net = net;
                result.best_iteration = it;
                stale = 0;
            } else if (cfg.patience > 0 && ++stale >= cfg.patience) {
                break;
            }
        }
    }

    if (cfg.patience == 0)
        result.best_iteration = result.iterations_run;
    // best_iteration == 0 means the initial parameters were never beaten; keep
    // them in full precision rather than round-tripping through S.
    if (result.best_iteration > 0)
        (cfg.patience > 0 ? best_net : net).export_to(result.model);
    return result;
}

} // namespace

TrainResult train(const ChannelSpec& spec, const PilotSpec& pilots, std::size_t bits, const Architecture& hidden,
                  const TrainConfig& cfg, const std::function<void(const TraceRow&)>& on_probe)
{
    spec.validate();
    pilots.validate();
    cfg.validate();
    if (bits < 1)
        fail(ErrorCode::ConfigError, "bits must be >= 1");
    if (cfg.precision == Precision::Single)
        return train_impl<float>(spec, pilots, bits, hidden, cfg, on_probe);
    return train_impl<double>(spec, pilots, bits, hidden, cfg, on_probe);
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace)
{
    out << "iteration,train_loss,probe_gain\n";
    for (const auto& row : trace)
        out << row.iteration << ',' << detail::format_double(row.train_loss) << ','
            << detail::format_double(row.probe_gain) << '\n';
}

} // namespace mimofb
