#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "arramon/error.h"
#include "arramon/model/checkpoint.h"
#include "arramon/model/train.h"

using namespace arramon;

namespace {

std::shared_ptr<const CityMap> city() {
    static const auto c = std::make_shared<const CityMap>(generate_city(51));
    return c;
}

const std::vector<CorpusEpisode>& corpus() {
    static const auto c = synth_corpus(*city(), {1, 2, 3}, 12, 6);
    return c;
}

Vocab corpus_vocab() {
    std::vector<std::string> texts;
    for (const auto& e : corpus()) {
        texts.insert(texts.end(), e.instructions.nav.begin(), e.instructions.nav.end());
        texts.insert(texts.end(), e.instructions.assembly.begin(), e.instructions.assembly.end());
    }
    return Vocab::build(texts);
}

std::vector<TrainingEpisode> examples(const Vocab& v) {
    std::vector<TrainingEpisode> out;
    for (const auto& e : corpus()) out.push_back(make_training_episode(e.spec, city(), e.routes, e.instructions, v));
    return out;
}

Hyper small_hyper() {
    Hyper h;
    h.hidden = 16;
    h.word_dim = 12;
    h.action_dim = 8;
    h.epochs = 6;
    h.lr = 0.01;
    h.seed = 3;
    return h;
}

} // namespace

TEST_CASE("training examples follow the ground truth") {
    const Vocab v = corpus_vocab();
    const auto& e = corpus().front();
    const TrainingEpisode ex = make_training_episode(e.spec, city(), e.routes, e.instructions, v);
    const std::array<const std::vector<Action>*, 4> gt{&e.routes.nav[0].actions, &e.routes.assembly[0].actions,
                                                       &e.routes.nav[1].actions, &e.routes.assembly[1].actions};
    for (std::size_t k = 0; k < 4; ++k) {
        const auto& p = ex.phases[k];
        CHECK(p.phase == (k % 2 == 0 ? Phase::Navigation : Phase::Assembly));
        CHECK(p.turn == static_cast<int>(k / 2) + 1);
        REQUIRE(p.targets.size() == gt[k]->size());
        for (std::size_t t = 0; t < p.targets.size(); ++t) CHECK(p.targets[t] == static_cast<int>((*gt[k])[t]));
        CHECK(p.prev_actions.front() == Network::kStartAction);
        for (std::size_t t = 1; t < p.prev_actions.size(); ++t) CHECK(p.prev_actions[t] == p.targets[t - 1]);
        CHECK(p.features.rows() == static_cast<Eigen::Index>(p.targets.size()) * 49);
        CHECK(std::find(p.tokens.begin(), p.tokens.end(), Vocab::kUnk) == p.tokens.end());
    }

    EpisodeRoutes broken = e.routes;
    broken.assembly[1].actions.clear();
    CHECK_THROWS_AS(make_training_episode(e.spec, city(), broken, e.instructions, v), DataError);
}

TEST_CASE("teacher forcing lowers the loss") {
    const Vocab v = corpus_vocab();
    const auto data = examples(v);
    const Hyper h = small_hyper();
    Network net(h.model_config(), v);
    int epochs_seen = 0;
    const TrainResult r = train_teacher_forcing(net, data, h, [&](int, double) { ++epochs_seen; });
    CHECK(epochs_seen == h.epochs);
    CHECK(r.finite);
    CHECK(r.initial_loss == Catch::Approx(std::log(4.0)));
    REQUIRE(r.step_loss.size() == data.size() * static_cast<std::size_t>(h.epochs));
    REQUIRE(r.smoothed.size() == r.step_loss.size());
    CHECK(r.smoothed.front() == r.step_loss.front());
    CHECK(r.smoothed[1] == Catch::Approx(0.95 * r.smoothed[0] + 0.05 * r.step_loss[1]));
    REQUIRE(r.epoch_loss.size() == static_cast<std::size_t>(h.epochs));
    CHECK(r.epoch_loss.back() < r.epoch_loss.front());
    CHECK(evaluate_loss(net, data) < r.initial_loss);
}

TEST_CASE("zero learning rate leaves parameters untouched") {
    const Vocab v = corpus_vocab();
    const auto data = examples(v);
    Hyper h = small_hyper();
    h.epochs = 1;
    h.lr = 0.0;
    Network net(h.model_config(), v);
    std::vector<Eigen::MatrixXd> before;
    for (const auto* p : std::as_const(net).params()) before.push_back(p->value);
    train_teacher_forcing(net, data, h);
    std::size_t i = 0;
    for (const auto* p : std::as_const(net).params()) CHECK(p->value == before[i++]);
}

TEST_CASE("checkpoints round-trip") {
    const Vocab v = corpus_vocab();
    const auto data = examples(v);
    Hyper h = small_hyper();
    h.epochs = 1;
    h.modality = Modality::LanguageOnly;
    Network net(h.model_config(), v);
    train_teacher_forcing(net, data, h);

    const auto path = std::filesystem::temp_directory_path() / "arramon_test_checkpoint.json";
    save_checkpoint(path, net);
    Network back = load_checkpoint(path);
    CHECK(back.config() == net.config());
    CHECK(back.vocab().words() == net.vocab().words());
    CHECK(evaluate_loss(back, data) == evaluate_loss(net, data));

    auto j = checkpoint_json(net);
    CHECK(j["format"] == "arramon-checkpoint");
    j["tensors"][0]["shape"][0] = 999;
    CHECK_THROWS_AS(network_from_json(j), SchemaError);
    auto k = checkpoint_json(net);
    k["format"] = "other";
    CHECK_THROWS_AS(network_from_json(k), SchemaError);
}

TEST_CASE("hyperparameters round-trip through JSON") {
    Hyper h = small_hyper();
    h.modality = Modality::VisionOnly;
    h.clip_norm = 0.0;
    const Hyper back = Hyper::from_json(h.to_json());
    CHECK(back.to_json() == h.to_json());
    CHECK(back.model_config() == h.model_config());
    const Hyper d = Hyper::from_json(nlohmann::json::object());
    CHECK(d.hidden == 128);
    CHECK(d.word_dim == 300);
    CHECK(d.action_dim == 64);
    CHECK(d.lr == 0.001);
    CHECK(d.dropout == 0.3);
    CHECK_THROWS_AS(Hyper::from_json({{"modality", "smell"}}), ConfigError);
}

TEST_CASE("model policy decodes deterministically") {
    const Vocab v = corpus_vocab();
    Hyper h = small_hyper();
    auto net = std::make_shared<Network>(h.model_config(), v);
    ModelPolicy a(net);
    const auto& e = corpus()[1];
    const auto r1 = run_episode(a, e.spec, city(), e.routes, e.instructions);
    auto b = a.clone();
    const auto r2 = run_episode(*b, e.spec, city(), e.routes, e.instructions);
    CHECK(r1.actions == r2.actions);
    CHECK(r1.state.done);
    CHECK(b->name() == "model");
}
