#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "arramon/agents.h"
#include "arramon/model/network.h"

namespace arramon {

/// One phase of a teacher-forcing example.
struct PhaseSequence {
    Phase phase = Phase::Navigation;
    int turn = 1;
    std::vector<int> tokens;
    Eigen::MatrixXd features; ///< T * grid^2 rows
    std::vector<int> prev_actions;
    std::vector<int> targets;
};

struct TrainingEpisode {
    std::string id;
    std::array<PhaseSequence, 4> phases; ///< nav1, asm1, nav2, asm2
};

/// Replays the ground-truth actions and records the observation before
/// each one. Throws DataError when a phase has no ground-truth actions.
TrainingEpisode make_training_episode(const EpisodeSpec& episode, std::shared_ptr<const CityMap> city,
                                      const EpisodeRoutes& routes, const EpisodeInstructions& instructions,
                                      const Vocab& vocab, const FeatureConfig& features = {},
                                      const SimConfig& sim = {});

/// Mean of the navigation-module and assembly-module losses, each the mean
/// per-step cross-entropy over both turns.
ad::Var episode_loss(Network& net, ad::Tape& tape, const TrainingEpisode& ex, bool train = false, Rng* rng = nullptr);

struct Hyper {
    int epochs = 20;
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double clip_norm = 5.0; ///< 0 disables clipping
    double dropout = 0.3;
    int hidden = 128;
    int word_dim = 300;
    int action_dim = 64;
    std::uint64_t seed = 1;
    Modality modality = Modality::VisionLanguage;

    ModelConfig model_config() const;
    static Hyper from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct TrainResult {
    std::vector<double> step_loss;  ///< one per episode update
    std::vector<double> epoch_loss; ///< mean of step_loss per epoch
    std::vector<double> smoothed;   ///< exponential moving average of step_loss
    double initial_loss = 0.0;      ///< mean eval-mode loss before training
    bool finite = true;
};

/// Adam with one episode per update, episodes shuffled every epoch.
TrainResult train_teacher_forcing(Network& net, std::span<const TrainingEpisode> data, const Hyper& hyper,
                                  const std::function<void(int, double)>& on_epoch = {});

/// Mean eval-mode loss over `data`.
double evaluate_loss(Network& net, std::span<const TrainingEpisode> data);

/// Greedy decoding with a trained network.
class ModelPolicy : public Policy {
  public:
    explicit ModelPolicy(std::shared_ptr<const Network> net) : net_(std::move(net)) {}

    std::string name() const override { return "model"; }
    std::unique_ptr<Policy> clone() const override { return std::make_unique<ModelPolicy>(*this); }
    void begin_phase(Phase phase, int turn, std::string_view instruction, const Observation& obs) override;
    Action act(const Observation& obs) override;

  private:
    std::shared_ptr<const Network> net_;
    Network::Memory memory_;
};

} // namespace arramon
