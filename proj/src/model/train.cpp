#include "arramon/model/train.h"

#include <cmath>
#include <numeric>

#include "arramon/error.h"

namespace arramon {

TrainingEpisode make_training_episode(const EpisodeSpec& episode, std::shared_ptr<const CityMap> city,
                                      const EpisodeRoutes& routes, const EpisodeInstructions& instructions,
                                      const Vocab& vocab, const FeatureConfig& features, const SimConfig& sim) {
    TrainingEpisode ex;
    ex.id = episode.id;
    const int positions = features.grid * features.grid;
    SimState s = reset(episode, std::move(city), sim);
    for (int k = 0; k < 4; ++k) {
        const Phase phase = k % 2 == 0 ? Phase::Navigation : Phase::Assembly;
        const int turn = k / 2 + 1;
        const auto t = static_cast<std::size_t>(turn - 1);
        const auto& actions = phase == Phase::Navigation ? routes.nav[t].actions : routes.assembly[t].actions;
        if (actions.empty()) throw DataError("episode " + episode.id + " lacks ground-truth actions");
        if (s.done || s.phase != phase || s.turn != turn) throw DataError("ground truth of " + episode.id + " desyncs");

        PhaseSequence& seq = ex.phases[static_cast<std::size_t>(k)];
        seq.phase = phase;
        seq.turn = turn;
        seq.tokens = vocab.encode(phase == Phase::Navigation ? instructions.nav[t] : instructions.assembly[t]);
        seq.features.resize(static_cast<Eigen::Index>(actions.size()) * positions, channel::kCount);
        int prev = Network::kStartAction;
        for (std::size_t i = 0; i < actions.size(); ++i) {
            seq.features.middleRows(static_cast<Eigen::Index>(i) * positions, positions) = featurize(observe(s), features);
            seq.prev_actions.push_back(prev);
            seq.targets.push_back(static_cast<int>(actions[i]));
            prev = static_cast<int>(actions[i]);
            step(s, actions[i]);
        }
    }
    return ex;
}

ad::Var episode_loss(Network& net, ad::Tape& tape, const TrainingEpisode& ex, bool train, Rng* rng) {
    std::array<ad::Var, 2> module_loss;
    for (Phase phase : {Phase::Navigation, Phase::Assembly}) {
        std::vector<ad::Var> logits;
        std::vector<int> targets;
        for (const auto& seq : ex.phases) {
            if (seq.phase != phase) continue;
            logits.push_back(net.forward(tape, phase, seq.tokens, seq.features, seq.prev_actions, train, rng));
            targets.insert(targets.end(), seq.targets.begin(), seq.targets.end());
        }
        module_loss[static_cast<std::size_t>(phase)] = ad::cross_entropy(ad::concat_rows(logits), targets);
    }
    return ad::scale(ad::add(module_loss[0], module_loss[1]), 0.5);
}

ModelConfig Hyper::model_config() const {
    ModelConfig c;
    c.hidden = hidden;
    c.word_dim = word_dim;
    c.action_dim = action_dim;
    c.dropout = dropout;
    c.seed = seed;
    c.modality = modality;
    return c;
}

Hyper Hyper::from_json(const nlohmann::json& j) {
    Hyper h;
    h.epochs = j.value("epochs", h.epochs);
    h.lr = j.value("lr", h.lr);
    h.beta1 = j.value("beta1", h.beta1);
    h.beta2 = j.value("beta2", h.beta2);
    h.adam_eps = j.value("adam_eps", h.adam_eps);
    h.clip_norm = j.value("clip_norm", h.clip_norm);
    h.dropout = j.value("dropout", h.dropout);
    h.hidden = j.value("hidden", h.hidden);
    h.word_dim = j.value("word_dim", h.word_dim);
    h.action_dim = j.value("action_dim", h.action_dim);
    h.seed = j.value("seed", h.seed);
    if (j.contains("modality")) {
        auto m = parse_modality(j["modality"].get<std::string>());
        if (!m) throw ConfigError("unknown modality " + j["modality"].dump());
        h.modality = *m;
    }
    return h;
}

nlohmann::json Hyper::to_json() const {
    return {{"epochs", epochs},         {"lr", lr},           {"beta1", beta1},   {"beta2", beta2},
            {"adam_eps", adam_eps},     {"clip_norm", clip_norm}, {"dropout", dropout}, {"hidden", hidden},
            {"word_dim", word_dim},     {"action_dim", action_dim}, {"seed", seed},
            {"modality", std::string(name(modality))}};
}

double evaluate_loss(Network& net, std::span<const TrainingEpisode> data) {
    if (data.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& ex : data) {
        ad::Tape tape;
        sum += episode_loss(net, tape, ex).value()(0, 0);
    }
    return sum / static_cast<double>(data.size());
}

TrainResult train_teacher_forcing(Network& net, std::span<const TrainingEpisode> data, const Hyper& hyper,
                                  const std::function<void(int, double)>& on_epoch) {
    if (data.empty()) throw DataError("no training episodes");
    TrainResult r;
    r.initial_loss = evaluate_loss(net, data);
    auto params = net.params();
    for (ad::Param* p : params) {
        p->zero_grad();
        p->m = ad::Matrix::Zero(p->value.rows(), p->value.cols());
        p->v = ad::Matrix::Zero(p->value.rows(), p->value.cols());
    }
    Rng rng(Rng::mix(hyper.seed, 0x7261696eULL));
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    long step = 0;
    double ema = 0.0;
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        rng.shuffle(order);
        double sum = 0.0;
        for (std::size_t idx : order) {
            ad::Tape tape;
            const ad::Var loss = episode_loss(net, tape, data[idx], true, &rng);
            const double l = loss.value()(0, 0);
            if (!std::isfinite(l)) r.finite = false;
            tape.backward(loss);

            double norm2 = 0.0;
            for (ad::Param* p : params) norm2 += p->grad.squaredNorm();
            const double norm = std::sqrt(norm2);
            if (!std::isfinite(norm)) r.finite = false;
            const double clip = hyper.clip_norm > 0 && norm > hyper.clip_norm ? hyper.clip_norm / norm : 1.0;

            ++step;
            const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step));
            for (ad::Param* p : params) {
                const ad::Matrix g = p->grad * clip;
                p->m = hyper.beta1 * p->m + (1.0 - hyper.beta1) * g;
                p->v = hyper.beta2 * p->v + (1.0 - hyper.beta2) * g.cwiseAbs2();
                p->value.array() -= hyper.lr * (p->m.array() / bc1) / ((p->v.array() / bc2).sqrt() + hyper.adam_eps);
                p->grad.setZero();
            }

            r.step_loss.push_back(l);
            ema = r.smoothed.empty() ? l : 0.95 * ema + 0.05 * l;
            r.smoothed.push_back(ema);
            sum += l;
        }
        r.epoch_loss.push_back(sum / static_cast<double>(data.size()));
        if (on_epoch) on_epoch(epoch, r.epoch_loss.back());
    }
    return r;
}

void ModelPolicy::begin_phase(Phase phase, int, std::string_view instruction, const Observation&) {
    const auto tokens = net_->vocab().encode(instruction);
    memory_ = net_->begin(phase, tokens);
}

Action ModelPolicy::act(const Observation& obs) {
    const Eigen::RowVectorXd logits = net_->step(memory_, featurize(obs, net_->config().features));
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < logits.size(); ++i) {
        if (logits(i) > logits(best)) best = i;
    }
    memory_.prev = static_cast<int>(best);
    return kActions[static_cast<std::size_t>(best)];
}

} // namespace arramon
