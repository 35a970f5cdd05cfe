#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "arramon/metrics.h"
#include "arramon/rng.h"
#include "arramon/routes.h"
#include "arramon/sim.h"
#include "arramon/synth.h"

namespace arramon {

/// Shared interface of every baseline and the learned model. A policy keeps
/// its memory internally; begin_episode/begin_phase reset it and clone()
/// copies it, so one clone can run per concurrent episode.
class Policy {
  public:
    virtual ~Policy() = default;
    virtual std::string name() const = 0;
    virtual std::unique_ptr<Policy> clone() const = 0;

    virtual void begin_episode(const EpisodeSpec& episode, const EpisodeRoutes& routes) {
        (void)episode;
        (void)routes;
    }
    virtual void begin_phase(Phase phase, int turn, std::string_view instruction, const Observation& obs) = 0;
    virtual Action act(const Observation& obs) = 0;
};

class RandomWalkPolicy : public Policy {
  public:
    explicit RandomWalkPolicy(std::uint64_t seed) : seed_(seed), rng_(seed) {}

    std::string name() const override { return "random"; }
    std::unique_ptr<Policy> clone() const override { return std::make_unique<RandomWalkPolicy>(*this); }
    /// Reseeds from (seed, episode id) so results do not depend on episode order.
    void begin_episode(const EpisodeSpec& episode, const EpisodeRoutes& routes) override;
    void begin_phase(Phase, int, std::string_view, const Observation&) override {}
    Action act(const Observation& obs) override;

  private:
    std::uint64_t seed_;
    Rng rng_;
};

/// Replays the ground-truth action stream of the current phase.
class OraclePolicy : public Policy {
  public:
    std::string name() const override { return "oracle"; }
    std::unique_ptr<Policy> clone() const override { return std::make_unique<OraclePolicy>(*this); }
    void begin_episode(const EpisodeSpec& episode, const EpisodeRoutes& routes) override;
    void begin_phase(Phase phase, int turn, std::string_view instruction, const Observation& obs) override;
    Action act(const Observation& obs) override;

  private:
    EpisodeRoutes routes_;
    std::vector<Action> script_;
    std::size_t next_ = 0;
};

/// Executes instructions written in the synthesizer grammar: turns,
/// walk-until-landmark legs and the closing pick-up clause in navigation;
/// scan, relation resolution and a shortest approach in assembly.
/// Landmarks are matched by exact descriptor equality. Anything the parser
/// cannot use is counted as a miss and handled by random actions.
class HeuristicFollower : public Policy {
  public:
    explicit HeuristicFollower(std::uint64_t seed = 0, int search_limit = 30) : seed_(seed), rng_(seed), search_limit_(search_limit) {}

    std::string name() const override { return "heuristic"; }
    std::unique_ptr<Policy> clone() const override { return std::make_unique<HeuristicFollower>(*this); }
    void begin_episode(const EpisodeSpec& episode, const EpisodeRoutes& routes) override;
    void begin_phase(Phase phase, int turn, std::string_view instruction, const Observation& obs) override;
    Action act(const Observation& obs) override;

    /// Parse misses accumulated since begin_episode.
    int misses() const { return misses_; }
    /// True when the current phase fell back to random actions.
    bool fallback() const { return fallback_; }

  private:
    Action act_nav(const Observation& obs);
    Action act_asm(const Observation& obs);
    void track(const Observation& obs);
    void start_clause(const Observation& obs);

    std::uint64_t seed_;
    Rng rng_;
    int search_limit_;
    int misses_ = 0;
    bool fallback_ = false;
    Phase phase_ = Phase::Navigation;

    // navigation
    std::vector<NavClause> clauses_;
    std::size_t clause_ = 0;
    bool clause_started_ = false;
    std::deque<Action> queued_;
    std::string tracked_;
    std::optional<double> tracked_f_;
    std::optional<double> tracked_lat_;
    int steps_in_clause_ = 0;
    std::optional<Action> last_;

    // assembly
    std::optional<AsmPlan> plan_;
    AgentPose asm_pose_;
    std::map<std::string, Cell> seen_cells_;
    int scans_ = 0;
    bool planned_ = false;
};

/// The two navigation and two assembly instructions handed to a policy.
struct EpisodeInstructions {
    std::array<std::string, 2> nav;
    std::array<std::string, 2> assembly;
};

struct EpisodeRun {
    SimState state;
    MetricReport report;
    std::vector<Action> actions; ///< every action taken, in order
};

EpisodeRun run_episode(Policy& policy, const EpisodeSpec& episode, std::shared_ptr<const CityMap> city,
                       const EpisodeRoutes& routes, const EpisodeInstructions& instructions = {},
                       const SimConfig& sim = {}, const MetricConfig& metrics = {});

/// Synthesized instructions for an episode. Throws GenerationError or
/// AmbiguityError when some phase cannot be described.
EpisodeInstructions synth_instructions(const CityMap& map, const EpisodeSpec& episode, const EpisodeRoutes& routes,
                                       std::uint64_t seed, const SimConfig& sim = {});

/// Episode with ground truth and instructions, ready for evaluation or training.
struct CorpusEpisode {
    EpisodeSpec spec;
    EpisodeRoutes routes;
    EpisodeInstructions instructions;
};

/// Samples `count` episodes cycling through `sections`, skipping seeds whose
/// episode cannot be placed or described.
std::vector<CorpusEpisode> synth_corpus(const CityMap& map, const std::vector<int>& sections, int count,
                                        std::uint64_t seed, const SimConfig& sim = {});

std::uint64_t fnv1a(std::string_view s);

} // namespace arramon
