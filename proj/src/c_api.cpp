#include "mimofb/mimofb.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mimofb/config.hpp"
#include "mimofb/error.hpp"
#include "mimofb/experiment.hpp"

struct mimofb_model {
    mimofb::FeedbackModel model;
    mimofb::CompiledEncoder encoder;
    mimofb::ComplexMatrix table;

    explicit mimofb_model(mimofb::FeedbackModel m)
        : model(std::move(m)), encoder(model), table(mimofb::decoder_lookup_table(model))
    {
    }
};

struct mimofb_codebook {
    mimofb::Codebook cb;
};

namespace {

thread_local std::string last_error;

mimofb_status status_of(mimofb::ErrorCode code) { return static_cast<mimofb_status>(static_cast<int>(code)); }

template <class F>
mimofb_status guarded(F&& f)
{
    try {
        f();
        last_error.clear();
        return MIMOFB_OK;
    } catch (const mimofb::Error& e) {
        last_error = e.what();
        return status_of(e.code());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return MIMOFB_INTERNAL_ERROR;
    } catch (const std::exception& e) {
        last_error = e.what();
        return MIMOFB_INTERNAL_ERROR;
    }
}

void require(bool ok, const char* what)
{
    if (!ok)
        mimofb::fail(mimofb::ErrorCode::InvalidArgument, what);
}

// Forwards complete lines to the caller's callback.
class LineBuffer : public std::streambuf {
public:
    LineBuffer(mimofb_log_fn fn, void* user) : fn_(fn), user_(user) {}
    ~LineBuffer() override
    {
        if (!line_.empty())
            fn_(line_.c_str(), user_);
    }

protected:
    int_type overflow(int_type ch) override
    {
        if (ch == traits_type::eof())
            return traits_type::not_eof(ch);
        if (ch == '\n') {
            fn_(line_.c_str(), user_);
            line_.clear();
        } else {
            line_ += static_cast<char>(ch);
        }
        return ch;
    }

private:
    mimofb_log_fn fn_;
    void* user_;
    std::string line_;
};

std::vector<std::string> collect(const char* const* overrides, size_t n)
{
    require(n == 0 || overrides, "overrides is null");
    std::vector<std::string> out;
    for (size_t i = 0; i < n; ++i) {
        require(overrides[i] != nullptr, "override entry is null");
        out.emplace_back(overrides[i]);
    }
    return out;
}

void run(const mimofb::ExperimentConfig& cfg, mimofb_log_fn log, void* user)
{
    if (!log) {
        mimofb::run_experiment(cfg, nullptr);
        return;
    }
    LineBuffer buf(log, user);
    std::ostream out(&buf);
    mimofb::run_experiment(cfg, &out);
}

mimofb::ComplexMatrix from_interleaved(const double* data, size_t rows, size_t cols)
{
    mimofb::ComplexMatrix m(rows, cols);
    for (size_t r = 0; r < rows; ++r)
        for (size_t c = 0; c < cols; ++c)
            m(r, c) = {data[2 * (r * cols + c)], data[2 * (r * cols + c) + 1]};
    return m;
}

void to_interleaved(const mimofb::ComplexMatrix& column, double* out)
{
    for (size_t k = 0; k < column.rows(); ++k) {
        out[2 * k] = column(k, 0).real();
        out[2 * k + 1] = column(k, 0).imag();
    }
}

} // namespace

extern "C" {

const char* mimofb_version(void) { return "1.0.0"; }

const char* mimofb_last_error(void) { return last_error.c_str(); }

const char* mimofb_status_name(mimofb_status status)
{
    if (status == MIMOFB_OK)
        return "Ok";
    if (status >= MIMOFB_SHAPE_MISMATCH && status <= MIMOFB_BOUND_VIOLATION)
        return mimofb::to_string(static_cast<mimofb::ErrorCode>(status));
    return "InternalError";
}

int mimofb_exit_code(mimofb_status status)
{
    switch (status) {
    case MIMOFB_OK:
        return 0;
    case MIMOFB_CONFIG_ERROR:
    case MIMOFB_INVALID_ARGUMENT:
    case MIMOFB_SHAPE_MISMATCH:
    case MIMOFB_RANK_DEFICIENT_PILOTS:
    case MIMOFB_EMPTY_TRAINING_SET:
    case MIMOFB_TABLE_TOO_LARGE:
        return 2;
    case MIMOFB_MISSING_ARTIFACT:
    case MIMOFB_CORRUPT_ARTIFACT:
        return 3;
    case MIMOFB_NOT_HERMITIAN:
    case MIMOFB_INDEFINITE:
    case MIMOFB_NO_CONVERGENCE:
    case MIMOFB_NUMERICAL_SINGULARITY:
    case MIMOFB_DEGENERATE_OUTPUT:
    case MIMOFB_NON_FINITE_LOSS:
    case MIMOFB_BOUND_VIOLATION:
        return 4;
    default:
        return 1;
    }
}

mimofb_status mimofb_run_config_file(const char* path, const char* const* overrides, size_t n_overrides,
                                     mimofb_log_fn log, void* user)
{
    return guarded([&] {
        require(path != nullptr, "path is null");
        run(mimofb::load_config(path, collect(overrides, n_overrides)), log, user);
    });
}

mimofb_status mimofb_run_config_text(const char* text, const char* const* overrides, size_t n_overrides,
                                     mimofb_log_fn log, void* user)
{
    return guarded([&] {
        require(text != nullptr, "text is null");
        run(mimofb::parse_config(text, collect(overrides, n_overrides)), log, user);
    });
}

mimofb_status mimofb_describe(const char* path, char** summary)
{
    return guarded([&] {
        require(path && summary, "null argument");
        const std::string text = mimofb::describe_artifact(path);
        char* out = static_cast<char*>(std::malloc(text.size() + 1));
        if (!out)
            throw std::bad_alloc();
        std::memcpy(out, text.c_str(), text.size() + 1);
        *summary = out;
    });
}

void mimofb_string_free(char* s) { std::free(s); }

mimofb_status mimofb_model_load(const char* path, mimofb_model** out)
{
    return guarded([&] {
        require(path && out, "null argument");
        *out = new mimofb_model(mimofb::load_model(path));
    });
}

void mimofb_model_free(mimofb_model* model) { delete model; }

mimofb_status mimofb_model_shape(const mimofb_model* model, size_t* n_tx, size_t* n_rx, size_t* pilot_length,
                                 size_t* bits)
{
    return guarded([&] {
        require(model != nullptr, "model is null");
        if (n_tx)
            *n_tx = model->model.arch.n_tx;
        if (n_rx)
            *n_rx = model->model.arch.n_rx;
        if (pilot_length)
            *pilot_length = model->model.arch.pilot_length;
        if (bits)
            *bits = model->model.bits;
    });
}

mimofb_status mimofb_model_feedback(mimofb_model* model, const double* y, size_t n_doubles, size_t* index)
{
    return guarded([&] {
        require(model && y && index, "null argument");
        const auto& a = model->model.arch;
        if (n_doubles != 2 * a.n_rx * a.pilot_length)
            mimofb::fail(mimofb::ErrorCode::ShapeMismatch, "observation must hold 2 N_r L doubles");
        *index = model->encoder.feedback_index(from_interleaved(y, a.n_rx, a.pilot_length));
    });
}

mimofb_status mimofb_model_beamformer(const mimofb_model* model, size_t index, double* w, size_t n_doubles)
{
    return guarded([&] {
        require(model && w, "null argument");
        if (index >= model->table.cols())
            mimofb::fail(mimofb::ErrorCode::InvalidArgument, "index out of range");
        if (n_doubles != 2 * model->table.rows())
            mimofb::fail(mimofb::ErrorCode::ShapeMismatch, "beamformer buffer must hold 2 N_t doubles");
        to_interleaved(model->table.col(index), w);
    });
}

mimofb_status mimofb_codebook_dft(size_t n_tx, size_t bits, mimofb_codebook** out)
{
    return guarded([&] {
        require(out != nullptr, "out is null");
        *out = new mimofb_codebook{mimofb::dft_codebook(n_tx, bits)};
    });
}

mimofb_status mimofb_codebook_load(const char* path, mimofb_codebook** out)
{
    return guarded([&] {
        require(path && out, "null argument");
        *out = new mimofb_codebook{mimofb::load_codebook(path)};
    });
}

void mimofb_codebook_free(mimofb_codebook* cb) { delete cb; }

mimofb_status mimofb_codebook_shape(const mimofb_codebook* cb, size_t* n_tx, size_t* bits)
{
    return guarded([&] {
        require(cb != nullptr, "codebook is null");
        if (n_tx)
            *n_tx = cb->cb.n_tx();
        if (bits)
            *bits = cb->cb.bits;
    });
}

mimofb_status mimofb_codebook_select(const mimofb_codebook* cb, const double* h, size_t n_rx, size_t* index)
{
    return guarded([&] {
        require(cb && h && index, "null argument");
        require(n_rx >= 1, "n_rx must be >= 1");
        *index = mimofb::select_pmi(from_interleaved(h, n_rx, cb->cb.n_tx()), cb->cb);
    });
}

mimofb_status mimofb_codebook_word(const mimofb_codebook* cb, size_t index, double* w, size_t n_doubles)
{
    return guarded([&] {
        require(cb && w, "null argument");
        if (index >= cb->cb.size())
            mimofb::fail(mimofb::ErrorCode::InvalidArgument, "index out of range");
        if (n_doubles != 2 * cb->cb.n_tx())
            mimofb::fail(mimofb::ErrorCode::ShapeMismatch, "word buffer must hold 2 N_t doubles");
        to_interleaved(cb->cb.word(index), w);
    });
}

} // extern "C"
