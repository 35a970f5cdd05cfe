#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arramon/routes.h"
#include "arramon/sim.h"

namespace arramon {

struct MetricConfig {
    double d_th = 3.0;
    std::vector<int> ctc_ks{0, 3, 5, 7};
    int assembly_gate_k = 3;
    bool manhattan_ctc = false;
};

struct TurnMetrics {
    double ndtw = 0.0;
    std::map<int, int> ctc;
    double rpod = 0.0;
    int ptc = 0;
    bool collected_ok = false;
    bool forced_pickup = false;
    bool forced_place = false;
    std::optional<int> placed_distance; ///< D_a, when something was placed
};

struct MetricReport {
    std::array<TurnMetrics, 2> turns;
    double ndtw = 0.0;
    std::map<int, double> ctc;
    double rpod = 0.0;
    double ptc = 0.0;
};

/// Classic DTW with Euclidean point cost. Throws EmptyPathError.
double dtw(std::span<const Vec2> ref, std::span<const Vec2> pred);

/// exp(-dtw / (|ref| * d_th)).
double ndtw(std::span<const Vec2> ref, std::span<const Vec2> pred, double d_th = 3.0);

/// k = 0: genuine pick-up of the target. k > 0: final position within k of
/// the target cell center.
int ctc_k(const std::optional<ObjectSpec>& picked, bool forced, Vec2 final_position, const ObjectSpec& target,
          Cell target_cell, int k, bool manhattan = false);

double rpod(std::optional<Cell> placed, Cell target, bool collected_ok);
int ptc(std::optional<Cell> placed, Cell target, bool collected_ok);

/// `trajectories` is nav1, asm1, nav2, asm2. Throws ShapeError otherwise.
MetricReport score_episode(const EpisodeSpec& episode, const EpisodeRoutes& routes,
                           std::span<const Trajectory> trajectories, const MetricConfig& cfg = {});

/// Mean of the episode totals (per-turn fields are left empty). Throws
/// EmptyResultsError on an empty span.
MetricReport aggregate(std::span<const MetricReport> reports);

/// "nDTW,CTC-0,CTC-3,CTC-5,CTC-7,rPOD,PTC" header and one row.
std::string csv_header(const MetricConfig& cfg = {});
std::string csv_row(const MetricReport& r, const MetricConfig& cfg = {});

} // namespace arramon
