// Exercises the shared library through its C header only.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "mimofb/mimofb.h"

namespace {

std::filesystem::path scratch_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("mimofb_capi_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p);
    return std::string((std::istreambuf_iterator<char>(in)), {});
}

void collect_line(const char* line, void* user) { static_cast<std::vector<std::string>*>(user)->push_back(line); }

} // namespace

TEST_CASE("status names and exit codes")
{
    CHECK(std::string(mimofb_status_name(MIMOFB_OK)) == "Ok");
    CHECK(std::string(mimofb_status_name(MIMOFB_CONFIG_ERROR)) == "ConfigError");
    CHECK(std::string(mimofb_status_name(MIMOFB_BOUND_VIOLATION)) == "BoundViolation");
    CHECK(mimofb_exit_code(MIMOFB_OK) == 0);
    CHECK(mimofb_exit_code(MIMOFB_CONFIG_ERROR) == 2);
    CHECK(mimofb_exit_code(MIMOFB_MISSING_ARTIFACT) == 3);
    CHECK(mimofb_exit_code(MIMOFB_NON_FINITE_LOSS) == 4);
    CHECK(mimofb_exit_code(MIMOFB_NUMERICAL_SINGULARITY) == 4);
}

TEST_CASE("DFT codebook handle: shape, words and selection")
{
    mimofb_codebook* cb = nullptr;
    REQUIRE(mimofb_codebook_dft(2, 1, &cb) == MIMOFB_OK);
    size_t n_tx = 0, bits = 0;
    CHECK(mimofb_codebook_shape(cb, &n_tx, &bits) == MIMOFB_OK);
    CHECK(n_tx == 2);
    CHECK(bits == 1);

    double w[4];
    REQUIRE(mimofb_codebook_word(cb, 1, w, 4) == MIMOFB_OK);
    CHECK(w[0] == doctest::Approx(1 / std::sqrt(2.0)));
    CHECK(w[2] == doctest::Approx(-1 / std::sqrt(2.0)));

    // H = [1, -1] prefers the second word.
    const double h[4] = {1, 0, -1, 0};
    size_t index = 99;
    REQUIRE(mimofb_codebook_select(cb, h, 1, &index) == MIMOFB_OK);
    CHECK(index == 1);

    CHECK(mimofb_codebook_word(cb, 2, w, 4) == MIMOFB_INVALID_ARGUMENT);
    CHECK(std::string(mimofb_last_error()).find("out of range") != std::string::npos);
    CHECK(mimofb_codebook_word(cb, 0, w, 3) == MIMOFB_SHAPE_MISMATCH);
    mimofb_codebook_free(cb);
}

TEST_CASE("null arguments and missing files are reported, not crashed on")
{
    mimofb_codebook* cb = nullptr;
    CHECK(mimofb_codebook_dft(2, 1, nullptr) == MIMOFB_INVALID_ARGUMENT);
    CHECK(mimofb_codebook_load("/nonexistent/cb.txt", &cb) == MIMOFB_MISSING_ARTIFACT);
    CHECK(cb == nullptr);
    mimofb_model* m = nullptr;
    CHECK(mimofb_model_load("/nonexistent/m.txt", &m) == MIMOFB_MISSING_ARTIFACT);
    CHECK(mimofb_run_config_file("/nonexistent/x.toml", nullptr, 0, nullptr, nullptr) == MIMOFB_MISSING_ARTIFACT);
    mimofb_model_free(nullptr);
    mimofb_codebook_free(nullptr);
}

TEST_CASE("config errors carry the field name")
{
    const char* overrides[] = {"channel.t_mag=1.3"};
    CHECK(mimofb_run_config_text("", overrides, 1, nullptr, nullptr) == MIMOFB_CONFIG_ERROR);
    CHECK(std::string(mimofb_last_error()).find("t_mag") != std::string::npos);
}

TEST_CASE("train through the C API, then load and query the model")
{
    const auto dir = scratch_dir("train");
    const std::string model = (dir / "m.txt").string();
    const std::string csv = (dir / "gain.csv").string();
    const std::string config = "seed = 11\nbits = 3\n[channel]\nn_tx = 4\nn_rx = 2\nt_mag = 0.5\n"
                               "[pilots]\nlength = 2\n[train]\niterations = 10\nbatch_size = 50\n"
                               "[eval]\nschemes = [\"DL\", \"LMMSE+DFT\"]\ntrials = 300\n"
                               "[artifacts]\nmodel = \"" + model + "\"\n";
    std::vector<std::string> lines;
    const char* train[] = {"scenario=train"};
    REQUIRE(mimofb_run_config_text(config.c_str(), train, 1, collect_line, &lines) == MIMOFB_OK);
    CHECK_FALSE(lines.empty());

    const std::string out_override = "output=\"" + csv + "\"";
    const char* eval[] = {"scenario=fig2-gain", out_override.c_str()};
    REQUIRE(mimofb_run_config_text(config.c_str(), eval, 2, nullptr, nullptr) == MIMOFB_OK);
    const std::string rows = read_file(csv);
    CHECK(rows.rfind("scheme,N_t,N_r,L,B,t_mag,snr_db,metric,value,stderr,n_trials,seed\nDL,4,2,2,3,0.5,0,", 0) == 0);

    mimofb_model* m = nullptr;
    REQUIRE(mimofb_model_load(model.c_str(), &m) == MIMOFB_OK);
    size_t n_tx = 0, n_rx = 0, len = 0, bits = 0;
    REQUIRE(mimofb_model_shape(m, &n_tx, &n_rx, &len, &bits) == MIMOFB_OK);
    CHECK(n_tx == 4);
    CHECK(n_rx == 2);
    CHECK(len == 2);
    CHECK(bits == 3);

    const double y[8] = {0.3, -0.1, 1.2, 0.4, -0.7, 0.2, 0.05, -0.9};
    size_t index = 99;
    REQUIRE(mimofb_model_feedback(m, y, 8, &index) == MIMOFB_OK);
    CHECK(index < 8);
    size_t again = 99;
    REQUIRE(mimofb_model_feedback(m, y, 8, &again) == MIMOFB_OK);
    CHECK(again == index);
    CHECK(mimofb_model_feedback(m, y, 6, &index) == MIMOFB_SHAPE_MISMATCH);

    double w[8];
    REQUIRE(mimofb_model_beamformer(m, index, w, 8) == MIMOFB_OK);
    double norm = 0;
    for (double v : w)
        norm += v * v;
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-9));
    mimofb_model_free(m);

    char* summary = nullptr;
    REQUIRE(mimofb_describe(model.c_str(), &summary) == MIMOFB_OK);
    CHECK(std::string(summary).find("B 3") != std::string::npos);
    mimofb_string_free(summary);
}
