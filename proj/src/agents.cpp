#include "arramon/agents.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "arramon/error.h"

namespace arramon {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// --- random walk ----------------------------------------------------------

void RandomWalkPolicy::begin_episode(const EpisodeSpec& episode, const EpisodeRoutes&) {
    rng_ = Rng(Rng::mix(seed_, fnv1a(episode.id)));
}

Action RandomWalkPolicy::act(const Observation&) { return kActions[rng_.below(kActionCount)]; }

// --- oracle ---------------------------------------------------------------

void OraclePolicy::begin_episode(const EpisodeSpec&, const EpisodeRoutes& routes) { routes_ = routes; }

void OraclePolicy::begin_phase(Phase phase, int turn, std::string_view, const Observation&) {
    const auto t = static_cast<std::size_t>(turn - 1);
    script_ = phase == Phase::Navigation ? routes_.nav[t].actions : routes_.assembly[t].actions;
    next_ = 0;
}

Action OraclePolicy::act(const Observation&) { return next_ < script_.size() ? script_[next_++] : Action::End; }

// --- heuristic follower ---------------------------------------------------

namespace {

Action rotate_toward(int rotation) { return rotation < 0 ? Action::Left : Action::Right; }

} // namespace

void HeuristicFollower::begin_episode(const EpisodeSpec& episode, const EpisodeRoutes&) {
    rng_ = Rng(Rng::mix(seed_, fnv1a(episode.id)));
    misses_ = 0;
}

void HeuristicFollower::begin_phase(Phase phase, int, std::string_view instruction, const Observation& obs) {
    (void)obs;
    phase_ = phase;
    fallback_ = false;
    queued_.clear();
    tracked_.clear();
    tracked_f_.reset();
    tracked_lat_.reset();
    last_.reset();
    clause_ = 0;
    clause_started_ = false;
    steps_in_clause_ = 0;
    clauses_.clear();
    plan_.reset();
    seen_cells_.clear();
    scans_ = 0;
    planned_ = false;
    if (phase == Phase::Navigation) {
        int missed = 0;
        clauses_ = parse_nav(instruction, &missed);
        misses_ += missed;
        fallback_ = clauses_.empty();
    } else {
        const AssemblyRoom room;
        asm_pose_ = AgentPose::at(room.start_cell, room.start_heading);
        plan_ = parse_asm(instruction);
        if (!plan_) {
            ++misses_;
            fallback_ = true;
        }
    }
}

Action HeuristicFollower::act(const Observation& obs) {
    Action a;
    if (fallback_) {
        a = kActions[rng_.below(kActionCount)];
    } else {
        a = phase_ == Phase::Navigation ? act_nav(obs) : act_asm(obs);
    }
    last_ = a;
    return a;
}

void HeuristicFollower::track(const Observation& obs) {
    if (tracked_.empty()) return;
    const VisibleEntity* best = nullptr;
    double best_score = std::numeric_limits<double>::infinity();
    for (const auto& v : obs.visible) {
        if (v.descriptor != tracked_) continue;
        double score = v.range;
        if (tracked_f_ && tracked_lat_) score = std::hypot(v.forward - *tracked_f_, v.lateral - *tracked_lat_);
        if (score < best_score) {
            best_score = score;
            best = &v;
        }
    }
    if (best) {
        tracked_f_ = best->forward;
        tracked_lat_ = best->lateral;
    }
}

void HeuristicFollower::start_clause(const Observation& obs) {
    const NavClause& c = clauses_[clause_];
    clause_started_ = true;
    steps_in_clause_ = 0;
    tracked_.clear();
    tracked_f_.reset();
    tracked_lat_.reset();
    if (c.kind == NavClause::Kind::Turn) {
        for (int i = 0; i < std::abs(c.rotation); ++i) queued_.push_back(rotate_toward(c.rotation));
        return;
    }
    tracked_ = c.reference;
    track(obs);
}

Action HeuristicFollower::act_nav(const Observation& obs) {
    if (last_ == Action::Forward && tracked_f_) {
        // Dead reckoning; overwritten below whenever the reference is in view.
        *tracked_f_ -= 1.0;
    }
    track(obs);
    for (;;) {
        if (!queued_.empty()) {
            const Action a = queued_.front();
            queued_.pop_front();
            return a;
        }
        if (clause_ >= clauses_.size()) return Action::End;
        if (!clause_started_) start_clause(obs);
        const NavClause& c = clauses_[clause_];
        const bool exhausted = steps_in_clause_ >= search_limit_;
        switch (c.kind) {
        case NavClause::Kind::Turn:
            if (!queued_.empty()) continue;
            break;
        case NavClause::Kind::WalkUntil:
            if (!(tracked_f_ && *tracked_f_ <= c.stop_offset + 0.5) && !exhausted) {
                ++steps_in_clause_;
                return Action::Forward;
            }
            if (exhausted) ++misses_;
            break;
        case NavClause::Kind::FinalAhead:
            if (!(tracked_f_ && *tracked_f_ <= 1.5) && !exhausted) {
                ++steps_in_clause_;
                return Action::Forward;
            }
            return Action::End;
        case NavClause::Kind::FinalSide:
            if (!(tracked_f_ && *tracked_f_ <= 0.5) && !exhausted) {
                ++steps_in_clause_;
                return Action::Forward;
            }
            for (int i = 0; i < std::abs(c.rotation); ++i) queued_.push_back(rotate_toward(c.rotation));
            queued_.push_back(Action::End);
            ++clause_;
            clause_started_ = false;
            continue;
        }
        ++clause_;
        clause_started_ = false;
    }
}

Action HeuristicFollower::act_asm(const Observation& obs) {
    const Vec2 pos = asm_pose_.position();
    const Vec2 fwd = heading_vector(asm_pose_.heading);
    const Vec2 right = right_vector(asm_pose_.heading);
    for (const auto& v : obs.visible) {
        const Vec2 w = pos + fwd * v.forward + right * v.lateral;
        seen_cells_[v.descriptor] = cell_of(w);
    }

    if (queued_.empty() && !planned_) {
        const auto target = resolve_asm(*plan_, seen_cells_, AssemblyRoom{}.start_heading);
        if (target) {
            planned_ = true;
            try {
                const auto route = assembly_route(*target, asm_pose_.cell(), asm_pose_.heading);
                queued_.assign(route.actions.begin(), route.actions.end());
            } catch (const PlacementError&) {
                queued_.push_back(Action::End);
            }
        } else if (scans_ < 3) {
            ++scans_;
            queued_.push_back(Action::Left);
        } else {
            ++misses_;
            planned_ = true;
            queued_.push_back(Action::End);
        }
    }
    if (queued_.empty()) return Action::End;
    const Action a = queued_.front();
    queued_.pop_front();
    switch (a) {
    case Action::Forward: {
        const Cell d = cardinal_step(asm_pose_.heading);
        const Cell here = asm_pose_.cell();
        const Cell next{here.x + d.x, here.y + d.y};
        if (AssemblyRoom::inside(next)) asm_pose_ = AgentPose::at(next, asm_pose_.heading);
        break;
    }
    case Action::Left:
        asm_pose_.heading = normalize_heading(asm_pose_.heading - 90);
        break;
    case Action::Right:
        asm_pose_.heading = normalize_heading(asm_pose_.heading + 90);
        break;
    case Action::End:
        break;
    }
    return a;
}

// --- runner ---------------------------------------------------------------

EpisodeRun run_episode(Policy& policy, const EpisodeSpec& episode, std::shared_ptr<const CityMap> city,
                       const EpisodeRoutes& routes, const EpisodeInstructions& instructions, const SimConfig& sim,
                       const MetricConfig& metrics) {
    EpisodeRun run;
    policy.begin_episode(episode, routes);
    run.state = reset(episode, std::move(city), sim);
    Observation obs = observe(run.state);
    policy.begin_phase(Phase::Navigation, 1, instructions.nav[0], obs);
    while (!run.state.done) {
        const Action a = policy.act(obs);
        run.actions.push_back(a);
        StepResult r = step(run.state, a);
        obs = std::move(r.observation);
        if (r.phase_done && !run.state.done) {
            const auto t = static_cast<std::size_t>(run.state.turn - 1);
            const std::string& text =
                run.state.phase == Phase::Navigation ? instructions.nav[t] : instructions.assembly[t];
            policy.begin_phase(run.state.phase, run.state.turn, text, obs);
        }
    }
    run.report = score_episode(episode, routes, run.state.trajectories, metrics);
    return run;
}

EpisodeInstructions synth_instructions(const CityMap& map, const EpisodeSpec& episode, const EpisodeRoutes& routes,
                                       std::uint64_t seed, const SimConfig& sim) {
    EpisodeInstructions out;
    for (int turn = 1; turn <= 2; ++turn) {
        const auto t = static_cast<std::size_t>(turn - 1);
        out.nav[t] = synth_nav_instruction(map, episode, turn, routes.nav[t], Rng::mix(seed, t), sim).text;
        out.assembly[t] = synth_asm_instruction(room_for_turn(episode, turn), episode.turns[t].assembly_target_cell,
                                                episode.turns[t].target, Rng::mix(seed, 10 + t))
                              .text;
    }
    return out;
}

std::vector<CorpusEpisode> synth_corpus(const CityMap& map, const std::vector<int>& sections, int count,
                                        std::uint64_t seed, const SimConfig& sim) {
    if (sections.empty()) throw ConfigError("no sections to sample from");
    std::vector<CorpusEpisode> out;
    const int max_attempts = 20 * std::max(count, 1) + 100;
    for (int k = 0; static_cast<int>(out.size()) < count; ++k) {
        if (k >= max_attempts) throw GenerationError("could not synthesize enough episodes");
        const int section = sections[static_cast<std::size_t>(k) % sections.size()];
        const std::uint64_t s = Rng::mix(seed, static_cast<std::uint64_t>(k));
        try {
            CorpusEpisode c;
            c.spec = sample_episode(map, section, s);
            c.routes = gt_route_for_episode(map, c.spec);
            c.instructions = synth_instructions(map, c.spec, c.routes, s, sim);
            out.push_back(std::move(c));
        } catch (const PlacementError&) {
        } catch (const GenerationError&) {
        } catch (const AmbiguityError&) {
        }
    }
    return out;
}

} // namespace arramon
