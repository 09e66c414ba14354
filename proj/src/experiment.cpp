#include "mimofb/experiment.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "mimofb/error.hpp"
#include "mimofb/estimation.hpp"
#include "mimofb/linalg.hpp"
#include "text_io.hpp"

namespace mimofb {

namespace {

constexpr std::uint64_t kLloydTag = 0x6c6c6f7964; // "lloyd"

std::string replace_all(std::string s, const std::string& from, const std::string& to)
{
    for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
        s.replace(pos, from.size(), to);
    return s;
}

std::string expand(const std::string& pattern, const RunPoint& p)
{
    std::string s = replace_all(pattern, "{L}", std::to_string(p.pilots.length));
    s = replace_all(s, "{B}", std::to_string(p.bits));
    s = replace_all(s, "{t_mag}", detail::format_shortest(p.channel.t_mag));
    return replace_all(s, "{snr}", detail::format_shortest(p.pilot_snr_db));
}

Architecture hidden_of(const ExperimentConfig& cfg, const RunPoint& p)
{
    Architecture a = Architecture::scaled_default(p.channel.n_tx);
    if (!cfg.hidden.encoder_hidden.empty())
        a.encoder_hidden = cfg.hidden.encoder_hidden;
    if (!cfg.hidden.decoder_hidden.empty())
        a.decoder_hidden = cfg.hidden.decoder_hidden;
    return a;
}

FeedbackModel load_matching_model(const RunPoint& p)
{
    FeedbackModel m = load_model(p.model_path);
    if (m.arch.n_tx != p.channel.n_tx || m.arch.n_rx != p.channel.n_rx || m.arch.pilot_length != p.pilots.length ||
        m.bits != p.bits)
        fail(ErrorCode::ConfigError, "artifacts.model '" + p.model_path + "' was trained for N_t=" +
                                         std::to_string(m.arch.n_tx) + ", N_r=" + std::to_string(m.arch.n_rx) +
                                         ", L=" + std::to_string(m.arch.pilot_length) +
                                         ", B=" + std::to_string(m.bits) + ", which does not match this run");
    return m;
}

Codebook load_matching_codebook(const RunPoint& p)
{
    Codebook cb = load_codebook(p.codebook_path);
    if (cb.n_tx() != p.channel.n_tx || cb.bits != p.bits)
        fail(ErrorCode::ConfigError, "artifacts.codebook '" + p.codebook_path + "' has N_t=" +
                                         std::to_string(cb.n_tx()) + ", B=" + std::to_string(cb.bits) +
                                         ", which does not match this run");
    return cb;
}

// Schemes evaluated at one point. Artifacts come from disk unless supplied.
std::vector<std::unique_ptr<FeedbackPipeline>> build_schemes(const ExperimentConfig& cfg, const RunPoint& p,
                                                             const FeedbackModel* model = nullptr,
                                                             const Codebook* lloyd = nullptr)
{
    std::vector<std::unique_ptr<FeedbackPipeline>> out;
    for (Scheme s : cfg.schemes) {
        switch (s) {
        case Scheme::DL:
            out.push_back(std::make_unique<DeepPipeline>(model ? *model : load_matching_model(p)));
            break;
        case Scheme::LmmseDft:
            out.push_back(std::make_unique<BaselinePipeline>(dft_codebook(p.channel.n_tx, p.bits), p.channel,
                                                             p.pilots, cfg.knowledge));
            break;
        case Scheme::LmmseLloyd:
            out.push_back(std::make_unique<BaselinePipeline>(lloyd ? *lloyd : load_matching_codebook(p), p.channel,
                                                             p.pilots, cfg.knowledge));
            break;
        }
    }
    return out;
}

EvalOptions eval_options(const ExperimentConfig& cfg) { return {cfg.threads, cfg.block}; }

void emit_gain(const ExperimentConfig& cfg, const RunPoint& p, const Beamformer& scheme, std::ostream& csv,
               std::ostream* log)
{
    const GainResult r = normalized_gain(scheme, p.channel, p.pilots, cfg.trials, cfg.seed, eval_options(cfg));
    if (r.bound_violations > 0)
        fail(ErrorCode::BoundViolation, scheme.name() + ": " + std::to_string(r.bound_violations) +
                                            " trials exceed the eigen-beamforming bound (max ratio " +
                                            detail::format_double(r.max_ratio) + ")");
    MetricRecord rec = r.record;
    rec.snr_db = p.pilot_snr_db;
    write_metric_row(csv, rec);
    if (log)
        *log << rec.scheme << " L=" << p.pilots.length << " B=" << p.bits << " gain " << rec.value << " +- "
             << rec.stderr_ << "\n";
}

void log_probe(std::ostream* log, const TraceRow& row)
{
    if (log)
        *log << "  iteration " << row.iteration << " loss " << row.train_loss << " probe " << row.probe_gain << "\n"
             << std::flush;
}

} // namespace

std::vector<RunPoint> expand_sweep(const ExperimentConfig& cfg)
{
    RunPoint base;
    base.channel = cfg.channel;
    base.pilots = cfg.pilots;
    base.bits = cfg.bits;
    base.pilot_snr_db = 10.0 * std::log10(cfg.pilots.pilot_energy / cfg.pilots.noise_var);

    std::vector<double> values = cfg.sweep.values;
    if (cfg.sweep.parameter == SweepParameter::None)
        values = {0.0};
    std::vector<RunPoint> out;
    for (double v : values) {
        RunPoint p = base;
        switch (cfg.sweep.parameter) {
        case SweepParameter::None: break;
        case SweepParameter::PilotLength: p.pilots.length = static_cast<std::size_t>(v); break;
        case SweepParameter::Bits: p.bits = static_cast<std::size_t>(v); break;
        case SweepParameter::TMag: p.channel.t_mag = v; break;
        case SweepParameter::PilotSnrDb:
            p.pilot_snr_db = v;
            p.pilots.pilot_energy = p.pilots.noise_var * std::pow(10.0, v / 10.0);
            break;
        }
        p.model_path = expand(cfg.model_path, p);
        p.codebook_path = expand(cfg.codebook_path, p);
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<ComplexMatrix> lloyd_training_set(const ChannelSpec& spec, const PilotSpec& pilots,
                                              StatisticsKnowledge knowledge, std::size_t count, bool estimated,
                                              RngStream& rng)
{
    const ChannelSampler sampler(spec);
    const ComplexMatrix p = dft_pilot_matrix(spec.n_tx, pilots.length);
    // Reuse the baseline's notion of known statistics so design and use agree.
    const BaselinePipeline stats(dft_codebook(spec.n_tx, 1), spec, pilots, knowledge);
    std::vector<ComplexMatrix> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const ChannelSample ch = sampler(rng);
        if (!estimated) {
            out.push_back(ch.h);
            continue;
        }
        const ComplexMatrix y = pilot_observation(ch, pilots, p, rng);
        out.push_back(
            lmmse_estimate(y, p, pilots.pilot_energy, pilots.noise_var, stats.statistics(ch.psi_used)).h_hat);
    }
    return out;
}

Codebook design_codebook(const ExperimentConfig& cfg, const RunPoint& point)
{
    RngStream rng = RngStream(cfg.seed, kLloydTag);
    const auto samples = lloyd_training_set(point.channel, point.pilots, cfg.knowledge, cfg.lloyd.training_samples,
                                            cfg.lloyd.estimated_csi, rng);
    return lloyd_design(samples, point.bits, cfg.lloyd.options, rng).codebook;
}

TrainResult train_model(const ExperimentConfig& cfg, const RunPoint& point,
                        const std::function<void(const TraceRow&)>& on_probe)
{
    return train(point.channel, point.pilots, point.bits, hidden_of(cfg, point), cfg.train, on_probe);
}

void run_experiment(const ExperimentConfig& cfg, std::ostream& csv, std::ostream* log)
{
    cfg.validate();
    const std::vector<RunPoint> points = expand_sweep(cfg);

    switch (cfg.scenario) {
    case Scenario::Train:
        for (const auto& p : points) {
            if (log)
                *log << "training L=" << p.pilots.length << " B=" << p.bits << " -> " << p.model_path << "\n";
            const TrainResult r = train_model(cfg, p, [&](const TraceRow& row) { log_probe(log, row); });
            save_model(p.model_path, r.model);
            std::ofstream trace(p.model_path + ".trace.csv");
            write_trace_csv(trace, r.trace);
        }
        return;

    case Scenario::DesignCodebook:
        for (const auto& p : points) {
            if (log)
                *log << "designing Lloyd codebook L=" << p.pilots.length << " B=" << p.bits << " -> "
                     << p.codebook_path << "\n";
            save_codebook(p.codebook_path, design_codebook(cfg, p));
        }
        return;

    case Scenario::Fig2Gain:
        write_metric_header(csv);
        for (const auto& p : points)
            for (const auto& scheme : build_schemes(cfg, p))
                emit_gain(cfg, p, *scheme, csv, log);
        return;

    case Scenario::Fig3Ser:
        write_metric_header(csv);
        for (const auto& p : points)
            for (const auto& scheme : build_schemes(cfg, p))
                for (double snr : cfg.link_snr_db) {
                    const DataLinkSpec link = DataLinkSpec::from_snr_db(snr, cfg.link_noise_var);
                    const SerResult r = qpsk_ser(*scheme, p.channel, p.pilots, link, cfg.symbols, cfg.seed,
                                                 cfg.symbols_per_channel, eval_options(cfg));
                    write_metric_row(csv, r.record);
                    if (log)
                        *log << r.record.scheme << " L=" << p.pilots.length << " snr " << snr << " dB ser "
                             << r.record.value << "\n";
                }
        return;

    case Scenario::Table1Timing:
        write_metric_header(csv);
        for (const auto& p : points)
            for (const auto& scheme : build_schemes(cfg, p)) {
                TimingOptions opts;
                opts.seed = cfg.seed;
                MetricRecord rec = time_online(*scheme, p.channel, p.pilots, cfg.trials, opts);
                rec.snr_db = p.pilot_snr_db;
                write_metric_row(csv, rec);
                if (log)
                    *log << rec.scheme << " L=" << p.pilots.length << " median " << rec.value << " ms\n";
            }
        return;

    case Scenario::Smoke:
        // Everything in memory: train, design, evaluate.
        write_metric_header(csv);
        for (const auto& p : points) {
            std::unique_ptr<FeedbackModel> model;
            std::unique_ptr<Codebook> lloyd;
            for (Scheme s : cfg.schemes) {
                if (s == Scheme::DL && !model) {
                    if (log)
                        *log << "smoke: training " << cfg.train.iterations << " iterations\n";
                    model = std::make_unique<FeedbackModel>(
                        train_model(cfg, p, [&](const TraceRow& row) { log_probe(log, row); }).model);
                }
                if (s == Scheme::LmmseLloyd && !lloyd)
                    lloyd = std::make_unique<Codebook>(design_codebook(cfg, p));
            }
            for (const auto& scheme : build_schemes(cfg, p, model.get(), lloyd.get()))
                emit_gain(cfg, p, *scheme, csv, log);
        }
        return;
    }
}

void run_experiment(const ExperimentConfig& cfg, std::ostream* log)
{
    if (cfg.output.empty()) {
        run_experiment(cfg, std::cout, log);
        return;
    }
    std::ofstream out(cfg.output);
    if (!out)
        fail(ErrorCode::MissingArtifact, "cannot write output '" + cfg.output + "'");
    run_experiment(cfg, out, log);
    if (!out)
        fail(ErrorCode::MissingArtifact, "write failed for output '" + cfg.output + "'");
}

std::string describe_artifact(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        fail(ErrorCode::MissingArtifact, "'" + path + "' not found");
    std::string magic;
    in >> magic;
    in.seekg(0);
    std::ostringstream out;
    if (magic == "mimofb-model") {
        const FeedbackModel m = read_model(in);
        out << "model " << path << "\n";
        out << "  N_t " << m.arch.n_tx << ", N_r " << m.arch.n_rx << ", L " << m.arch.pilot_length << ", B "
            << m.bits << "\n";
        auto widths = [&](const char* name, const std::vector<LayerParams>& layers) {
            out << "  " << name << " " << layers.front().inputs();
            for (const auto& l : layers)
                out << " -> " << l.outputs() << " (" << to_string(l.activation) << ")";
            out << "\n";
        };
        widths("encoder", m.encoder);
        widths("decoder", m.decoder);
        out << "  parameters " << m.parameter_count() << "\n";
        const ComplexMatrix table = decoder_lookup_table(m);
        double worst = 0.0;
        for (std::size_t i = 0; i < table.cols(); ++i)
            worst = std::max(worst, std::abs(squared_norm(table.col(i)) - 1.0));
        out << "  integrity ok: " << table.cols() << " transmit beamformers, max |norm^2 - 1| "
            << detail::format_shortest(worst) << "\n";
    } else if (magic == "mimofb-codebook") {
        const Codebook cb = read_codebook(in);
        out << "codebook " << path << "\n";
        out << "  provenance " << to_string(cb.provenance) << ", N_t " << cb.n_tx() << ", B " << cb.bits << "\n";
        double worst = 0.0;
        for (std::size_t i = 0; i < cb.size(); ++i)
            worst = std::max(worst, std::abs(squared_norm(cb.word(i)) - 1.0));
        out << "  integrity ok: " << cb.size() << " words, all unit-norm (max |norm^2 - 1| "
            << detail::format_shortest(worst) << ")\n";
    } else {
        fail(ErrorCode::CorruptArtifact, "'" + path + "' is neither a model nor a codebook file");
    }
    return out.str();
}

} // namespace mimofb
