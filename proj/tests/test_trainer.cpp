#include <sstream>

#include "doctest.h"
#include "mimofb/error.hpp"
#include "mimofb/trainer.hpp"

using namespace mimofb;

namespace {

struct Setup {
    ChannelSpec spec;
    PilotSpec pilots;
    Architecture arch;
};

Setup small_setup()
{
    Setup s;
    s.spec.n_tx = 4;
    s.spec.n_rx = 2;
    s.spec.t_mag = 0.7;
    s.pilots.length = 2;
    s.arch = Architecture::scaled_default(4);
    return s;
}

bool same_parameters(const FeedbackModel& a, const FeedbackModel& b)
{
    if (a.encoder.size() != b.encoder.size() || a.decoder.size() != b.decoder.size())
        return false;
    for (std::size_t i = 0; i < a.encoder.size(); ++i)
        if (a.encoder[i].weight != b.encoder[i].weight || a.encoder[i].bias != b.encoder[i].bias)
            return false;
    for (std::size_t i = 0; i < a.decoder.size(); ++i)
        if (a.decoder[i].weight != b.decoder[i].weight || a.decoder[i].bias != b.decoder[i].bias)
            return false;
    return true;
}

} // namespace

TEST_CASE("zero iterations returns the initial model")
{
    const Setup s = small_setup();
    TrainConfig cfg;
    cfg.iterations = 0;
    cfg.seed = 9;
    const TrainResult r = train(s.spec, s.pilots, 4, s.arch, cfg);
    RngStream init_rng(9, 0);
    const FeedbackModel fresh = init_model({4, 2, 2}, 4, s.arch, init_rng);
    CHECK(same_parameters(r.model, fresh));
    CHECK(r.iterations_run == 0);
    REQUIRE(r.trace.size() == 1);
    CHECK(r.trace[0].iteration == 0);
}

TEST_CASE("training is deterministic for a seed and independent of thread count")
{
    const Setup s = small_setup();
    TrainConfig cfg;
    cfg.iterations = 30;
    cfg.batch_size = 64;
    cfg.probe_every = 10;
    cfg.seed = 3;
    const TrainResult a = train(s.spec, s.pilots, 4, s.arch, cfg);
    const TrainResult b = train(s.spec, s.pilots, 4, s.arch, cfg);
    CHECK(same_parameters(a.model, b.model));
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].train_loss == b.trace[i].train_loss);
        CHECK(a.trace[i].probe_gain == b.trace[i].probe_gain);
    }

    cfg.threads = 3;
    const TrainResult c = train(s.spec, s.pilots, 4, s.arch, cfg);
    CHECK(same_parameters(a.model, c.model));

    cfg.threads = 1;
    cfg.seed = 4;
    const TrainResult d = train(s.spec, s.pilots, 4, s.arch, cfg);
    CHECK_FALSE(same_parameters(a.model, d.model));
}

TEST_CASE("double precision training runs and matches its own rerun")
{
    const Setup s = small_setup();
    TrainConfig cfg;
    cfg.iterations = 5;
    cfg.batch_size = 32;
    cfg.precision = Precision::Double;
    cfg.optimizer = OptimizerKind::Sgd;
    cfg.learning_rate = 0.01;
    const TrainResult a = train(s.spec, s.pilots, 2, s.arch, cfg);
    const TrainResult b = train(s.spec, s.pilots, 2, s.arch, cfg);
    CHECK(same_parameters(a.model, b.model));
    CHECK(a.iterations_run == 5);
}

TEST_CASE("smoke training improves the held-out objective")
{
    const Setup s = small_setup();
    TrainConfig cfg;
    cfg.iterations = 2000;
    cfg.seed = 5;
    cfg.patience = 0;
    const TrainResult r = train(s.spec, s.pilots, 4, s.arch, cfg);
    REQUIRE(r.trace.size() >= 2);
    CHECK(r.trace.back().probe_gain >= r.trace.front().probe_gain);
    CHECK(r.trace.back().iteration == 2000);
}

TEST_CASE("early stopping keeps the best probe")
{
    const Setup s = small_setup();
    TrainConfig cfg;
    cfg.iterations = 400;
    cfg.batch_size = 100;
    cfg.probe_every = 20;
    cfg.patience = 2;
    cfg.seed = 6;
    const TrainResult r = train(s.spec, s.pilots, 4, s.arch, cfg);
    double best = r.trace.front().probe_gain;
    std::size_t best_it = 0;
    for (const auto& row : r.trace)
        if (row.probe_gain > best) {
            best = row.probe_gain;
            best_it = row.iteration;
        }
    CHECK(r.best_iteration == best_it);
}

TEST_CASE("training config validation")
{
    TrainConfig cfg;
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.learning_rate = -1.0;
    try {
        cfg.validate();
        FAIL("expected ConfigError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConfigError);
        CHECK(std::string(e.what()).find("learning_rate") != std::string::npos);
    }
}

TEST_CASE("trace CSV has the documented header")
{
    std::ostringstream out;
    write_trace_csv(out, {{0, 0.0, 1.5}, {200, -2.0, 2.5}});
    CHECK(out.str() == "iteration,train_loss,probe_gain\n0,0,1.5\n200,-2,2.5\n");
}
