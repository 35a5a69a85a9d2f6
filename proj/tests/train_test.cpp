#include "grasp/autodiff/checkpoint.hpp"
#include "grasp/train/trainer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <map>
#include <sstream>

using namespace grasp;
using namespace grasp::train;

namespace {

Transition make(std::uint64_t episode, double marker, bool terminal = false) {
    Transition t;
    t.observation = {marker};
    t.goal = {};
    t.action = {0.0};
    t.reward = marker;
    t.duration = 1;
    t.next_observation = {marker + 0.5};
    t.terminal = terminal;
    t.episode = episode;
    return t;
}

std::uint64_t hash_params(const ad::ParamList& params) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto* p : params) {
        for (double x : p->value.data()) {
            std::uint64_t bits = 0;
            std::memcpy(&bits, &x, sizeof bits);
            h = (h ^ bits) * 1099511628211ULL;
        }
    }
    return h;
}

TrainConfig tiny(const std::string& env = "collect") {
    TrainConfig c;
    c.env = env;
    c.heads = 2;
    c.variant = affordance::Variant::goal_state;
    c.state_dim = 8;
    c.hidden = 16;
    c.afford_hidden = 16;
    c.batch = 4;
    c.unroll = 3;
    c.warmup = 20;
    c.steps = 60;
    c.sync_period = 5;
    c.capacity = 1000;
    c.log_interval = 20;
    c.eval_interval = 30;
    c.eval_episodes = 2;
    return c;
}

std::string run_csv(const TrainConfig& c, std::uint64_t seed) {
    Trainer t(c, seed);
    std::ostringstream out;
    t.run(out);
    return out.str();
}

}  // namespace

TEST(Replay, RingEvictsOldest) {
    ReplayBuffer b(4);
    for (int i = 0; i < 5; ++i) b.append(make(0, i));
    ASSERT_EQ(b.size(), 4u);
    EXPECT_DOUBLE_EQ(b.at(0).reward, 1.0);
    EXPECT_DOUBLE_EQ(b.at(3).reward, 4.0);
}

TEST(Replay, TenStepEpisodeHasSixStartsOfLengthFive) {
    ReplayBuffer b(100);
    for (int i = 0; i < 10; ++i) b.append(make(0, i));
    EXPECT_EQ(b.count_valid_starts(5), 6u);
}

TEST(Replay, StartsAreUniformOverValidPositions) {
    ReplayBuffer b(100);
    for (int i = 0; i < 10; ++i) b.append(make(0, i));
    Rng rng(7);
    const int draws = 10000;
    std::map<std::size_t, int> counts;
    for (int i = 0; i < draws; ++i) counts[b.sample_start(5, rng)] += 1;
    ASSERT_EQ(counts.size(), 6u);
    const double p = 1.0 / 6.0;
    const double sigma = std::sqrt(draws * p * (1.0 - p));
    for (const auto& [start, n] : counts) {
        EXPECT_LE(start, 5u);
        EXPECT_LE(std::abs(n - draws * p), 3.0 * sigma) << "start " << start;
    }
}

TEST(Replay, NoSegmentStraddlesEpisodes) {
    ReplayBuffer b(64);
    Rng rng(3);
    std::uint64_t episode = 0;
    for (int i = 0; i < 80; ++i) {
        const bool terminal = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < 0.15;
        b.append(make(episode, i, terminal));
        if (terminal || std::uniform_real_distribution<double>(0.0, 1.0)(rng) < 0.05) ++episode;
    }
    for (std::size_t n = 1; n <= 6; ++n) {
        for (std::size_t i = 0; i < b.size(); ++i) {
            const std::size_t len = b.segment_length(i, n);
            if (len == 0) continue;
            for (std::size_t j = 0; j < len; ++j) {
                EXPECT_EQ(b.at(i + j).episode, b.at(i).episode);
                if (j + 1 < len) EXPECT_FALSE(b.at(i + j).terminal);
            }
            if (len < n) EXPECT_TRUE(b.at(i + len - 1).terminal);
        }
    }
}

TEST(Replay, TerminalEndsSegmentEarly) {
    ReplayBuffer b(10);
    b.append(make(0, 0));
    b.append(make(0, 1, true));
    b.append(make(1, 2));
    EXPECT_EQ(b.segment_length(0, 5), 2u);
    const auto s = b.segment(0, 5);
    EXPECT_EQ(s.length(), 2u);
    EXPECT_TRUE(s.terminals.back());
    EXPECT_DOUBLE_EQ(s.observations.back()[0], 1.5);
    EXPECT_EQ(b.segment_length(2, 5), 0u);
}

TEST(Replay, EmptyBufferReportsWarmup) {
    ReplayBuffer b(10);
    Rng rng(1);
    EXPECT_THROW(b.sample(3, rng), WarmupIncomplete);
    b.append(make(0, 0));
    EXPECT_THROW(b.sample(3, rng), WarmupIncomplete);
}

TEST(Trainer, SameSeedGivesIdenticalCsv) {
    const TrainConfig c = tiny();
    EXPECT_EQ(run_csv(c, 11), run_csv(c, 11));
    EXPECT_NE(run_csv(c, 11), run_csv(c, 12));
}

TEST(Trainer, CsvHasHeaderAndRowsAtLogInterval) {
    const std::string csv = run_csv(tiny(), 1);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, metrics_header(2));
    std::vector<std::string> steps;
    while (std::getline(in, line)) steps.push_back(line.substr(0, line.find(',')));
    EXPECT_EQ(steps, (std::vector<std::string>{"20", "40", "60"}));
}

TEST(Trainer, UpdatesTouchDisjointParameters) {
    // Same seed with and without trainable affordances: the model step must
    // come out bit-identical (the objective never writes model weights), and
    // the frozen run must leave the affordance weights untouched (the model
    // loss never writes affordance weights).
    TrainConfig c = tiny();
    TrainConfig f = c;
    f.frozen = true;
    Trainer live(c, 5), frozen(f, 5);
    // stop one step short so no update has run yet
    while (live.step_count() + 1 < c.warmup) live.step();
    while (frozen.step_count() + 1 < f.warmup) frozen.step();
    const auto model_before = hash_params(live.model().parameters());
    const auto afford_before = hash_params(live.affordances().parameters());
    ASSERT_EQ(hash_params(frozen.affordances().parameters()), afford_before);
    live.update();
    frozen.update();
    EXPECT_NE(hash_params(live.model().parameters()), model_before);
    EXPECT_NE(hash_params(live.affordances().parameters()), afford_before);
    EXPECT_EQ(hash_params(frozen.model().parameters()), hash_params(live.model().parameters()));
    EXPECT_EQ(hash_params(frozen.affordances().parameters()), afford_before);
}

TEST(Trainer, TargetChangesOnlyAtSync) {
    TrainConfig c = tiny();
    c.sync_period = 3;
    Trainer t(c, 2);
    while (t.step_count() + 1 < c.warmup) t.step();
    ASSERT_EQ(t.update_count(), 0u);
    auto live = [&] {
        auto p = t.model().parameters();
        auto a = t.affordances().parameters();
        p.insert(p.end(), a.begin(), a.end());
        return hash_params(p);
    };
    auto h = hash_params(t.target().parameters());
    EXPECT_EQ(h, live());
    for (int i = 1; i <= 7; ++i) {
        t.update();
        const auto now = hash_params(t.target().parameters());
        if (i % 3 == 0) {
            EXPECT_NE(now, h) << "update " << i;
            EXPECT_EQ(now, live()) << "update " << i;
        } else {
            EXPECT_EQ(now, h) << "update " << i;
        }
        h = now;
    }
}

TEST(Trainer, FrozenAffordancesNeverChange) {
    TrainConfig c = tiny("reach_goal");
    c.frozen = true;
    c.steps = 40;
    Trainer t(c, 4);
    const auto before = hash_params(t.affordances().parameters());
    std::ostringstream out;
    t.run(out);
    EXPECT_EQ(hash_params(t.affordances().parameters()), before);
    EXPECT_GT(t.update_count(), 0u);
}

TEST(Trainer, NumericalFailureCheckpointsAndAborts) {
    const auto dir = std::filesystem::temp_directory_path() / "grasp_train_test_nan";
    std::filesystem::remove_all(dir);
    TrainConfig c = tiny();
    Trainer t(c, 9);
    t.model().parameters().front()->value[0] = std::numeric_limits<double>::quiet_NaN();
    std::ostringstream out;
    EXPECT_THROW(t.run(out, dir), ad::NumericalError);
    EXPECT_TRUE(std::filesystem::exists(dir / "numerical_failure.grsp"));
    EXPECT_FALSE(std::filesystem::exists(dir / "final.grsp"));
    std::filesystem::remove_all(dir);
}

TEST(Trainer, CheckpointRoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "grasp_train_test_ckpt.grsp";
    TrainConfig c = tiny();
    Trainer a(c, 1);
    std::ostringstream out;
    a.run(out);
    a.save(path);
    Trainer b(c, 2);
    b.load(path);
    EXPECT_EQ(hash_params(b.model().parameters()), hash_params(a.model().parameters()));
    EXPECT_EQ(hash_params(b.affordances().parameters()), hash_params(a.affordances().parameters()));
    EXPECT_EQ(hash_params(b.target().parameters()), hash_params(a.target().parameters()));
    const auto all = ad::load_checkpoint(path);
    EXPECT_DOUBLE_EQ(all.at("trainer.step").item(), 60.0);
    std::filesystem::remove(path);
}

TEST(Trainer, InvalidConfigNamesField) {
    TrainConfig c = tiny();
    c.batch = 0;
    try {
        validate(c);
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("train.batch"), std::string::npos);
    }
}

TEST(Trainer, DeriveSeedSeparatesStreams) {
    EXPECT_NE(derive_seed(1, 1), derive_seed(1, 2));
    EXPECT_NE(derive_seed(1, 1), derive_seed(2, 1));
    EXPECT_EQ(derive_seed(3, 4), derive_seed(3, 4));
}
