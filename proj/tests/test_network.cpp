#include <catch_amalgamated.hpp>

#include <cmath>

#include "arramon/error.h"
#include "arramon/model/network.h"
#include "arramon/model/train.h"

using namespace arramon;

namespace {

ModelConfig tiny(Modality m = Modality::VisionLanguage) {
    ModelConfig c;
    c.hidden = 8;
    c.word_dim = 6;
    c.action_dim = 4;
    c.features.grid = 3;
    c.features.bin_deg = 40.0;
    c.dropout = 0.0;
    c.init_range = 0.3;
    c.zero_output_init = false;
    c.modality = m;
    c.seed = 5;
    return c;
}

Vocab small_vocab() {
    Vocab v;
    for (const char* w : {"walk", "to", "the", "bench", "pick", "up", "place", "mug", "left", "right"}) v.add(w);
    return v;
}

PhaseSequence sequence(Phase phase, int turn, int steps, std::uint64_t seed, int grid) {
    Rng rng(seed);
    PhaseSequence s;
    s.phase = phase;
    s.turn = turn;
    for (int i = 0; i < 5; ++i) s.tokens.push_back(2 + static_cast<int>(rng.below(10)));
    s.features = Eigen::MatrixXd::Zero(steps * grid * grid, channel::kCount);
    for (Eigen::Index i = 0; i < s.features.size(); ++i)
        if (rng.chance(0.2)) s.features.data()[i] = rng.uniform(0, 2);
    s.prev_actions.push_back(Network::kStartAction);
    for (int t = 0; t < steps; ++t) {
        s.targets.push_back(static_cast<int>(rng.below(4)));
        if (t + 1 < steps) s.prev_actions.push_back(s.targets.back());
    }
    return s;
}

TrainingEpisode fake_episode(int grid, std::uint64_t seed = 1) {
    TrainingEpisode ex;
    ex.id = "fake";
    ex.phases = {sequence(Phase::Navigation, 1, 4, seed, grid), sequence(Phase::Assembly, 1, 3, seed + 1, grid),
                 sequence(Phase::Navigation, 2, 2, seed + 2, grid), sequence(Phase::Assembly, 2, 3, seed + 3, grid)};
    return ex;
}

double loss_of(Network& net, const TrainingEpisode& ex) {
    ad::Tape tape;
    return episode_loss(net, tape, ex).value()(0, 0);
}

// Max elementwise |analytic - numeric| / max(|analytic|, |numeric|, floor).
double full_gradient_error(Network& net, const TrainingEpisode& ex, double floor) {
    for (auto* p : net.params()) p->zero_grad();
    {
        ad::Tape tape;
        tape.backward(episode_loss(net, tape, ex));
    }
    const double h = 1e-6;
    double worst = 0.0;
    for (auto* p : net.params()) {
        for (Eigen::Index i = 0; i < p->value.size(); ++i) {
            const double keep = p->value.data()[i];
            p->value.data()[i] = keep + h;
            const double up = loss_of(net, ex);
            p->value.data()[i] = keep - h;
            const double down = loss_of(net, ex);
            p->value.data()[i] = keep;
            const double n = (up - down) / (2 * h);
            const double a = p->grad.data()[i];
            worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor}));
        }
    }
    return worst;
}

} // namespace

TEST_CASE("vocab ids, encoding and word lists") {
    Vocab v = small_vocab();
    CHECK(v.id("<unk>") == Vocab::kUnk);
    CHECK(v.id("walk") == 2);
    CHECK(v.add("walk") == 2);
    CHECK(v.encode("Walk to the zebra.") == std::vector<int>{2, 3, 4, Vocab::kUnk});
    CHECK(v.encode("  ") == std::vector<int>{Vocab::kEmpty});
    CHECK_THROWS_AS(v.encode("zebra", false), VocabError);
    CHECK(Vocab::from_words(v.words()).words() == v.words());
    const std::vector<std::string> bad{"walk"};
    CHECK_THROWS_AS(Vocab::from_words(bad), VocabError);
    const Vocab g = Vocab::from_grammar();
    for (const char* w : {"pick", "place", "turn", "until", "front", "between", "dotted", "hourglass"})
        CHECK(g.id(w) != Vocab::kUnk);
}

TEST_CASE("full-loss gradient check on the tiny config") {
    for (Modality m : {Modality::VisionLanguage, Modality::VisionOnly, Modality::LanguageOnly}) {
        Network net(tiny(m), small_vocab());
        const auto ex = fake_episode(3);
        INFO(name(m));
        CHECK(full_gradient_error(net, ex, 1e-5) < 1e-4);
    }
}

TEST_CASE("zero output projection gives uniform logits") {
    ModelConfig c = tiny();
    c.zero_output_init = true;
    Network net(c, small_vocab());
    CHECK(loss_of(net, fake_episode(3)) == Catch::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("greedy step matches the teacher-forced forward pass") {
    for (Modality m : {Modality::VisionLanguage, Modality::VisionOnly, Modality::LanguageOnly}) {
        Network net(tiny(m), small_vocab());
        const auto seq = sequence(Phase::Assembly, 1, 5, 9, 3);
        ad::Tape tape;
        const Eigen::MatrixXd logits =
            net.forward(tape, seq.phase, seq.tokens, seq.features, seq.prev_actions).value();
        REQUIRE(logits.rows() == 5);
        REQUIRE(logits.cols() == 4);
        Network::Memory mem = net.begin(seq.phase, seq.tokens);
        for (int t = 0; t < 5; ++t) {
            mem.prev = seq.prev_actions[static_cast<std::size_t>(t)];
            const Eigen::RowVectorXd row = net.step(mem, seq.features.middleRows(t * 9, 9));
            CHECK((row - logits.row(t)).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("ablations drop one input stream") {
    const auto a = sequence(Phase::Navigation, 1, 3, 1, 3);
    auto b = a;
    b.tokens = {3, 3, 7};
    auto c = a;
    c.features.setZero();
    auto logits = [](Network& net, const PhaseSequence& s) {
        ad::Tape tape;
        return Eigen::MatrixXd(net.forward(tape, s.phase, s.tokens, s.features, s.prev_actions).value());
    };
    Network vo(tiny(Modality::VisionOnly), small_vocab());
    CHECK((logits(vo, a) - logits(vo, b)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((logits(vo, a) - logits(vo, c)).cwiseAbs().maxCoeff() > 1e-6);
    Network lo(tiny(Modality::LanguageOnly), small_vocab());
    CHECK((logits(lo, a) - logits(lo, c)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((logits(lo, a) - logits(lo, b)).cwiseAbs().maxCoeff() > 1e-6);
    Network vl(tiny(), small_vocab());
    CHECK((logits(vl, a) - logits(vl, b)).cwiseAbs().maxCoeff() > 1e-6);
    CHECK((logits(vl, a) - logits(vl, c)).cwiseAbs().maxCoeff() > 1e-6);
}

TEST_CASE("phases keep separate parameters") {
    Network net(tiny(), small_vocab());
    const auto seq = sequence(Phase::Navigation, 1, 3, 4, 3);
    for (auto* p : net.params()) p->zero_grad();
    ad::Tape tape;
    const std::vector<int> targets = seq.targets;
    tape.backward(ad::cross_entropy(net.forward(tape, seq.phase, seq.tokens, seq.features, seq.prev_actions), targets));
    CHECK(net.phase_params(Phase::Assembly).out_w.grad.isZero());
    CHECK_FALSE(net.phase_params(Phase::Navigation).out_w.grad.isZero());
    CHECK_FALSE(net.word_embedding().grad.isZero());
}

TEST_CASE("attention weights are normalized") {
    Network net(tiny(), small_vocab());
    auto& pp = net.phase_params(Phase::Navigation);
    ad::Tape tape;
    Rng rng(2);
    Eigen::MatrixXd v(2 * 9, 8), l(5, 8);
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = rng.uniform(-1, 1);
    for (Eigen::Index i = 0; i < l.size(); ++i) l.data()[i] = rng.uniform(-1, 1);
    const auto a = cross_attention(tape.constant(v), tape.constant(l), tape.param(pp.w_s), tape.param(pp.fuse_v),
                                   tape.param(pp.fuse_l), 9);
    const Eigen::MatrixXd al = a.attn_l.value(), av = a.attn_v.value();
    CHECK((al.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-6);
    for (int blk = 0; blk < 2; ++blk)
        CHECK((av.middleRows(blk * 9, 9).colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-6);
    CHECK(a.v_hat.rows() == 18);
    CHECK(a.l_hat.rows() == 10);

    CHECK_THROWS_AS(net.encode_instruction(tape, Phase::Navigation, std::vector<int>{}), ShapeError);
}
