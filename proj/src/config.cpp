#include "mimofb/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <variant>

#include "mimofb/error.hpp"

namespace mimofb {

const char* to_string(Scenario s) noexcept
{
    switch (s) {
    case Scenario::Fig2Gain: return "fig2-gain";
    case Scenario::Fig3Ser: return "fig3-ser";
    case Scenario::Table1Timing: return "table1-timing";
    case Scenario::Train: return "train";
    case Scenario::DesignCodebook: return "design-codebook";
    case Scenario::Smoke: return "smoke";
    }
    return "?";
}

const char* to_string(Scheme s) noexcept
{
    switch (s) {
    case Scheme::DL: return "DL";
    case Scheme::LmmseDft: return "LMMSE+DFT";
    case Scheme::LmmseLloyd: return "LMMSE+Lloyd";
    }
    return "?";
}

namespace {

// ---- minimal TOML-style document ----

struct Value;
using Array = std::vector<Value>;

struct Value {
    std::variant<bool, double, std::string, Array> v;
};

struct Entry {
    Value value;
    std::string origin; // "line N" or "override"
    bool used = false;
};

using Document = std::map<std::string, Entry>;

[[noreturn]] void config_error(const std::string& what) { fail(ErrorCode::ConfigError, what); }

class ValueParser {
public:
    ValueParser(std::string_view text, std::string origin) : s_(text), origin_(std::move(origin)) {}

    Value parse_all()
    {
        Value v = parse();
        skip_space();
        if (pos_ != s_.size())
            config_error(origin_ + ": trailing characters after value");
        return v;
    }

private:
    void skip_space()
    {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r'))
            ++pos_;
    }

    Value parse()
    {
        skip_space();
        if (pos_ >= s_.size())
            config_error(origin_ + ": missing value");
        const char c = s_[pos_];
        if (c == '"')
            return {parse_string()};
        if (c == '[')
            return {parse_array()};
        if (s_.substr(pos_, 4) == "true") {
            pos_ += 4;
            return {true};
        }
        if (s_.substr(pos_, 5) == "false") {
            pos_ += 5;
            return {false};
        }
        return parse_number();
    }

    std::string parse_string()
    {
        ++pos_;
        std::string out;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            char c = s_[pos_++];
            if (c == '\\' && pos_ < s_.size()) {
                const char e = s_[pos_++];
                c = e == 'n' ? '\n' : e == 't' ? '\t' : e;
            }
            out += c;
        }
        if (pos_ >= s_.size())
            config_error(origin_ + ": unterminated string");
        ++pos_;
        return out;
    }

    Array parse_array()
    {
        ++pos_;
        Array out;
        skip_space();
        if (pos_ < s_.size() && s_[pos_] == ']') {
            ++pos_;
            return out;
        }
        for (;;) {
            out.push_back(parse());
            skip_space();
            if (pos_ >= s_.size())
                config_error(origin_ + ": unterminated array");
            if (s_[pos_] == ',') {
                ++pos_;
                skip_space();
                if (pos_ < s_.size() && s_[pos_] == ']') { // trailing comma
                    ++pos_;
                    return out;
                }
                continue;
            }
            if (s_[pos_] == ']') {
                ++pos_;
                return out;
            }
            config_error(origin_ + ": expected ',' or ']' in array");
        }
    }

    Value parse_number()
    {
        std::size_t end = pos_;
        while (end < s_.size() && std::string_view("+-0123456789.eE_").find(s_[end]) != std::string_view::npos)
            ++end;
        std::string tok;
        for (std::size_t i = pos_; i < end; ++i)
            if (s_[i] != '_')
                tok += s_[i];
        if (tok.empty())
            config_error(origin_ + ": cannot parse value '" + std::string(s_.substr(pos_)) + "'");
        double d = 0.0;
        const char* first = tok.data() + (tok[0] == '+' ? 1 : 0);
        const auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), d);
        if (ec != std::errc{} || ptr != tok.data() + tok.size())
            config_error(origin_ + ": malformed number '" + tok + "'");
        pos_ = end;
        return {d};
    }

    std::string_view s_;
    std::string origin_;
    std::size_t pos_ = 0;
};

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

// Drops a trailing comment, ignoring '#' inside strings.
std::string strip_comment(const std::string& line)
{
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\'))
            in_string = !in_string;
        else if (line[i] == '#' && !in_string)
            return line.substr(0, i);
    }
    return line;
}

int bracket_balance(const std::string& s)
{
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"' && (i == 0 || s[i - 1] != '\\'))
            in_string = !in_string;
        else if (!in_string && s[i] == '[')
            ++depth;
        else if (!in_string && s[i] == ']')
            --depth;
    }
    return depth;
}

void assign(Document& doc, const std::string& key, const std::string& raw, const std::string& origin)
{
    if (key.empty())
        config_error(origin + ": empty key");
    doc[key] = Entry{ValueParser(raw, origin + " (" + key + ")").parse_all(), origin, false};
}

Document parse_document(std::string_view text, const std::vector<std::string>& overrides)
{
    Document doc;
    std::istringstream in{std::string(text)};
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string content = trim(strip_comment(line));
        if (content.empty())
            continue;
        const std::string origin = "line " + std::to_string(line_no);
        if (content.front() == '[') {
            if (content.back() != ']')
                config_error(origin + ": malformed section header");
            section = trim(std::string_view(content).substr(1, content.size() - 2));
            continue;
        }
        const auto eq = content.find('=');
        if (eq == std::string::npos)
            config_error(origin + ": expected key = value");
        std::string key = trim(std::string_view(content).substr(0, eq));
        std::string raw = trim(std::string_view(content).substr(eq + 1));
        // Arrays may continue over several lines.
        while (bracket_balance(raw) > 0 && std::getline(in, line)) {
            ++line_no;
            raw += " " + trim(strip_comment(line));
        }
        assign(doc, section.empty() ? key : section + "." + key, raw, origin);
    }
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos)
            config_error("override '" + o + "' must look like section.key=value");
        std::string raw = trim(std::string_view(o).substr(eq + 1));
        // Bare words are accepted as strings on the command line.
        if (!raw.empty() && raw.front() != '"' && raw.front() != '[' && raw != "true" && raw != "false" &&
            raw.find_first_not_of("+-0123456789.eE_") != std::string::npos)
            raw = "\"" + raw + "\"";
        assign(doc, trim(std::string_view(o).substr(0, eq)), raw, "override");
    }
    return doc;
}

// ---- typed access ----

class Reader {
public:
    explicit Reader(Document& doc) : doc_(doc) {}

    const Value* find(const std::string& key)
    {
        auto it = doc_.find(key);
        if (it == doc_.end())
            return nullptr;
        it->second.used = true;
        return &it->second.value;
    }

    void real(const std::string& key, double& out)
    {
        if (const Value* v = find(key))
            out = as_real(key, *v);
    }

    template <class U>
    void count(const std::string& key, U& out)
    {
        if (const Value* v = find(key))
            out = static_cast<U>(as_count(key, *v));
    }

    void boolean(const std::string& key, bool& out)
    {
        if (const Value* v = find(key)) {
            if (!std::holds_alternative<bool>(v->v))
                config_error(key + " must be true or false");
            out = std::get<bool>(v->v);
        }
    }

    bool string(const std::string& key, std::string& out)
    {
        if (const Value* v = find(key)) {
            if (!std::holds_alternative<std::string>(v->v))
                config_error(key + " must be a string");
            out = std::get<std::string>(v->v);
            return true;
        }
        return false;
    }

    bool reals(const std::string& key, std::vector<double>& out)
    {
        const Value* v = find(key);
        if (!v)
            return false;
        out.clear();
        if (std::holds_alternative<Array>(v->v)) {
            for (const auto& x : std::get<Array>(v->v))
                out.push_back(as_real(key, x));
        } else {
            out.push_back(as_real(key, *v));
        }
        return true;
    }

    bool strings(const std::string& key, std::vector<std::string>& out)
    {
        const Value* v = find(key);
        if (!v)
            return false;
        out.clear();
        const Array single{*v};
        const Array& items = std::holds_alternative<Array>(v->v) ? std::get<Array>(v->v) : single;
        for (const auto& x : items) {
            if (!std::holds_alternative<std::string>(x.v))
                config_error(key + " must be a list of strings");
            out.push_back(std::get<std::string>(x.v));
        }
        return true;
    }

    bool counts(const std::string& key, std::vector<std::size_t>& out)
    {
        const Value* v = find(key);
        if (!v)
            return false;
        out.clear();
        const Array single{*v};
        const Array& items = std::holds_alternative<Array>(v->v) ? std::get<Array>(v->v) : single;
        for (const auto& x : items)
            out.push_back(as_count(key, x));
        return true;
    }

    void reject_unused() const
    {
        for (const auto& [key, entry] : doc_)
            if (!entry.used)
                config_error(entry.origin + ": unknown field '" + key + "'");
    }

private:
    static double as_real(const std::string& key, const Value& v)
    {
        if (!std::holds_alternative<double>(v.v))
            config_error(key + " must be a number");
        return std::get<double>(v.v);
    }

    static std::uint64_t as_count(const std::string& key, const Value& v)
    {
        if (!std::holds_alternative<double>(v.v))
            config_error(key + " must be a non-negative integer");
        const double d = std::get<double>(v.v);
        if (d < 0 || d > 9.007199254740992e15 || d != std::floor(d))
            config_error(key + " must be a non-negative integer");
        return static_cast<std::uint64_t>(d);
    }

    Document& doc_;
};

Scenario scenario_from(const std::string& s)
{
    for (Scenario v : {Scenario::Fig2Gain, Scenario::Fig3Ser, Scenario::Table1Timing, Scenario::Train,
                       Scenario::DesignCodebook, Scenario::Smoke})
        if (s == to_string(v))
            return v;
    config_error("scenario: unknown value '" + s + "'");
}

Scheme scheme_from(const std::string& s)
{
    for (Scheme v : {Scheme::DL, Scheme::LmmseDft, Scheme::LmmseLloyd})
        if (s == to_string(v))
            return v;
    config_error("eval.schemes: unknown scheme '" + s + "'");
}

SweepParameter sweep_from(const std::string& s)
{
    if (s == "none")
        return SweepParameter::None;
    if (s == "L")
        return SweepParameter::PilotLength;
    if (s == "B")
        return SweepParameter::Bits;
    if (s == "t_mag")
        return SweepParameter::TMag;
    if (s == "pilot_snr_db")
        return SweepParameter::PilotSnrDb;
    config_error("sweep.parameter: unknown value '" + s + "' (expected L, B, t_mag or pilot_snr_db)");
}

void fill(ExperimentConfig& cfg, Reader& r)
{
    r.count("seed", cfg.seed);
    r.count("threads", cfg.threads);
    r.string("output", cfg.output);

    r.count("channel.n_tx", cfg.channel.n_tx);
    r.count("channel.n_rx", cfg.channel.n_rx);
    r.real("channel.t_mag", cfg.channel.t_mag);
    std::string policy;
    if (r.string("channel.phase_policy", policy)) {
        if (policy == "uniform-random")
            cfg.channel.phase_policy = PhasePolicy::UniformRandom;
        else if (policy == "fixed")
            cfg.channel.phase_policy = PhasePolicy::Fixed;
        else
            config_error("channel.phase_policy: expected \"fixed\" or \"uniform-random\"");
    }
    r.real("channel.psi", cfg.channel.fixed_psi);
    std::string knowledge;
    if (r.string("channel.statistics", knowledge)) {
        if (knowledge == "per-realization")
            cfg.knowledge = StatisticsKnowledge::PerRealization;
        else if (knowledge == "phase-averaged")
            cfg.knowledge = StatisticsKnowledge::PhaseAveraged;
        else
            config_error("channel.statistics: expected \"per-realization\" or \"phase-averaged\"");
    }

    r.count("pilots.length", cfg.pilots.length);
    r.real("pilots.noise_var", cfg.pilots.noise_var);
    double snr_db = 0.0;
    const bool has_energy = r.find("pilots.pilot_energy") != nullptr;
    r.real("pilots.pilot_energy", cfg.pilots.pilot_energy);
    if (r.find("pilots.snr_db")) {
        if (has_energy)
            config_error("pilots.snr_db and pilots.pilot_energy are mutually exclusive");
        r.real("pilots.snr_db", snr_db);
        cfg.pilots.pilot_energy = cfg.pilots.noise_var * std::pow(10.0, snr_db / 10.0);
    }

    r.count("bits", cfg.bits);

    r.reals("link.snr_db", cfg.link_snr_db);
    r.real("link.noise_var", cfg.link_noise_var);

    std::vector<std::string> schemes;
    if (r.strings("eval.schemes", schemes)) {
        cfg.schemes.clear();
        for (const auto& s : schemes)
            cfg.schemes.push_back(scheme_from(s));
    }
    r.count("eval.trials", cfg.trials);
    r.count("eval.symbols", cfg.symbols);
    r.count("eval.symbols_per_channel", cfg.symbols_per_channel);
    r.count("eval.block", cfg.block);

    std::string parameter;
    if (r.string("sweep.parameter", parameter))
        cfg.sweep.parameter = sweep_from(parameter);
    r.reals("sweep.values", cfg.sweep.values);

    r.string("artifacts.model", cfg.model_path);
    r.string("artifacts.codebook", cfg.codebook_path);

    TrainConfig& t = cfg.train;
    t.seed = cfg.seed;
    t.threads = cfg.threads;
    r.count("train.batch_size", t.batch_size);
    r.real("train.learning_rate", t.learning_rate);
    r.count("train.iterations", t.iterations);
    std::string opt;
    if (r.string("train.optimizer", opt)) {
        if (opt == "adam")
            t.optimizer = OptimizerKind::Adam;
        else if (opt == "sgd")
            t.optimizer = OptimizerKind::Sgd;
        else
            config_error("train.optimizer: expected \"adam\" or \"sgd\"");
    }
    r.real("train.beta1", t.beta1);
    r.real("train.beta2", t.beta2);
    r.real("train.epsilon", t.epsilon);
    r.count("train.seed", t.seed);
    r.count("train.probe_every", t.probe_every);
    r.count("train.probe_size", t.probe_size);
    r.count("train.patience", t.patience);
    std::string precision;
    if (r.string("train.precision", precision)) {
        if (precision == "single")
            t.precision = Precision::Single;
        else if (precision == "double")
            t.precision = Precision::Double;
        else
            config_error("train.precision: expected \"single\" or \"double\"");
    }
    r.counts("train.encoder_hidden", cfg.hidden.encoder_hidden);
    r.counts("train.decoder_hidden", cfg.hidden.decoder_hidden);

    r.count("lloyd.training_samples", cfg.lloyd.training_samples);
    std::string csi;
    if (r.string("lloyd.csi", csi)) {
        if (csi == "estimated")
            cfg.lloyd.estimated_csi = true;
        else if (csi == "true")
            cfg.lloyd.estimated_csi = false;
        else
            config_error("lloyd.csi: expected \"estimated\" or \"true\"");
    }
    r.count("lloyd.max_iters", cfg.lloyd.options.max_iters);
    r.real("lloyd.rel_tol", cfg.lloyd.options.rel_tol);
}

// Re-raises a module validation failure with the section it came from.
template <class F>
void validate_section(const char* section, F&& f)
{
    try {
        f();
    } catch (const Error& e) {
        if (e.code() != ErrorCode::ConfigError)
            throw;
        std::string what = e.what();
        const std::string prefix = std::string(to_string(ErrorCode::ConfigError)) + ": ";
        if (what.rfind(prefix, 0) == 0)
            what = what.substr(prefix.size());
        config_error(std::string("[") + section + "] " + what);
    }
}

} // namespace

ExperimentConfig smoke_config()
{
    ExperimentConfig cfg;
    cfg.scenario = Scenario::Smoke;
    cfg.channel.n_tx = 4;
    cfg.channel.n_rx = 2;
    cfg.channel.t_mag = 0.7;
    cfg.pilots.length = 2;
    cfg.bits = 4;
    cfg.trials = 2000;
    cfg.train.iterations = 2000;
    cfg.train.patience = 0;
    cfg.lloyd.training_samples = 2000;
    return cfg;
}

void ExperimentConfig::validate() const
{
    if (threads < 1)
        config_error("threads must be >= 1");
    validate_section("channel", [&] { channel.validate(); });
    validate_section("pilots", [&] { pilots.validate(); });
    validate_section("train", [&] { train.validate(); });
    if (bits < 1 || bits > kMaxTableBits)
        config_error("bits must lie in [1, " + std::to_string(kMaxTableBits) + "]");
    if (schemes.empty())
        config_error("eval.schemes must name at least one scheme");
    if (trials < 1)
        config_error("eval.trials must be >= 1");
    if (symbols < 1 || symbols_per_channel < 1)
        config_error("eval.symbols and eval.symbols_per_channel must be >= 1");
    if (block < 1)
        config_error("eval.block must be >= 1");
    if (link_snr_db.empty())
        config_error("link.snr_db must list at least one value");
    for (double s : link_snr_db)
        if (!std::isfinite(s))
            config_error("link.snr_db values must be finite");
    if (!(link_noise_var > 0.0) || !std::isfinite(link_noise_var))
        config_error("link.noise_var must be finite and positive");
    if (lloyd.training_samples < 1)
        config_error("lloyd.training_samples must be >= 1");
    for (std::size_t w : hidden.encoder_hidden)
        if (w < 1)
            config_error("train.encoder_hidden widths must be >= 1");
    for (std::size_t w : hidden.decoder_hidden)
        if (w < 1)
            config_error("train.decoder_hidden widths must be >= 1");

    if (sweep.parameter == SweepParameter::None) {
        if (!sweep.values.empty())
            config_error("sweep.values given without sweep.parameter");
        return;
    }
    if (sweep.values.empty())
        config_error("sweep.values must list at least one value");
    for (double v : sweep.values) {
        switch (sweep.parameter) {
        case SweepParameter::PilotLength:
        case SweepParameter::Bits:
            if (!(v >= 1.0) || v != std::floor(v))
                config_error("sweep.values must be positive integers when sweeping " +
                             std::string(sweep.parameter == SweepParameter::Bits ? "B" : "L"));
            if (sweep.parameter == SweepParameter::Bits && v > kMaxTableBits)
                config_error("sweep.values: B above " + std::to_string(kMaxTableBits));
            break;
        case SweepParameter::TMag:
            if (!(v >= 0.0 && v < 1.0))
                config_error("sweep.values: t_mag must lie in [0, 1)");
            break;
        case SweepParameter::PilotSnrDb:
            if (!std::isfinite(v))
                config_error("sweep.values: pilot_snr_db must be finite");
            break;
        case SweepParameter::None:
            break;
        }
    }
}

ExperimentConfig parse_config(std::string_view text, const std::vector<std::string>& overrides)
{
    Document doc = parse_document(text, overrides);
    Reader r(doc);
    std::string scenario;
    ExperimentConfig cfg;
    if (r.string("scenario", scenario)) {
        cfg.scenario = scenario_from(scenario);
        if (cfg.scenario == Scenario::Smoke)
            cfg = smoke_config();
    }
    fill(cfg, r);
    r.reject_unused();
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides)
{
    std::ifstream in(path);
    if (!in)
        fail(ErrorCode::MissingArtifact, "cannot open config " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), overrides);
}

} // namespace mimofb
