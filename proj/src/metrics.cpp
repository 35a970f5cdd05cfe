#include "arramon/metrics.h"

#include <cmath>
#include <cstdio>
#include <limits>

#include "arramon/error.h"

namespace arramon {

double dtw(std::span<const Vec2> ref, std::span<const Vec2> pred) {
    if (ref.empty() || pred.empty()) throw EmptyPathError("dtw needs two non-empty paths");
    const std::size_t n = ref.size();
    const std::size_t m = pred.size();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
    prev[0] = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = inf;
        for (std::size_t j = 1; j <= m; ++j) {
            const double best = std::min({prev[j], cur[j - 1], prev[j - 1]});
            cur[j] = distance(ref[i - 1], pred[j - 1]) + best;
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

double ndtw(std::span<const Vec2> ref, std::span<const Vec2> pred, double d_th) {
    return std::exp(-dtw(ref, pred) / (static_cast<double>(ref.size()) * d_th));
}

int ctc_k(const std::optional<ObjectSpec>& picked, bool forced, Vec2 final_position, const ObjectSpec& target,
          Cell target_cell, int k, bool manhattan) {
    if (k == 0) return picked && !forced && picked->id == target.id ? 1 : 0;
    const Vec2 d = final_position - cell_center(target_cell);
    const double dist = manhattan ? std::abs(d.x) + std::abs(d.y) : d.norm();
    return dist <= k + 1e-9 ? 1 : 0;
}

double rpod(std::optional<Cell> placed, Cell target, bool collected_ok) {
    if (!collected_ok || !placed) return 0.0;
    const double d = manhattan(*placed, target);
    return 1.0 / (1.0 + d * d);
}

int ptc(std::optional<Cell> placed, Cell target, bool collected_ok) {
    return collected_ok && placed && *placed == target ? 1 : 0;
}

MetricReport score_episode(const EpisodeSpec& episode, const EpisodeRoutes& routes,
                           std::span<const Trajectory> trajectories, const MetricConfig& cfg) {
    if (trajectories.size() != 4) {
        throw ShapeError("expected 4 trajectories, got " + std::to_string(trajectories.size()));
    }
    MetricReport r;
    for (std::size_t t = 0; t < 2; ++t) {
        const Trajectory& nav = trajectories[2 * t];
        const Trajectory& as = trajectories[2 * t + 1];
        if (nav.phase != Phase::Navigation || as.phase != Phase::Assembly) {
            throw ShapeError("trajectories must alternate navigation and assembly");
        }
        const TurnSpec& spec = episode.turns[t];
        TurnMetrics& m = r.turns[t];
        m.ndtw = ndtw(routes.nav[t].points, nav.points, cfg.d_th);
        m.forced_pickup = nav.end.forced;
        m.forced_place = as.end.forced;
        const Vec2 final_pos = nav.points.back();
        for (int k : cfg.ctc_ks) {
            m.ctc[k] = ctc_k(nav.end.picked, nav.end.forced, final_pos, spec.target, spec.target_cell, k, cfg.manhattan_ctc);
        }
        const int ctc0 = ctc_k(nav.end.picked, nav.end.forced, final_pos, spec.target, spec.target_cell, 0);
        const int gate = ctc_k(nav.end.picked, nav.end.forced, final_pos, spec.target, spec.target_cell,
                               cfg.assembly_gate_k, cfg.manhattan_ctc);
        // The distance relaxation only rescues a budget-forced pickup of the
        // right object; any other object scores zero downstream.
        const bool right_object = nav.end.picked && nav.end.picked->id == spec.target.id;
        m.collected_ok = ctc0 == 1 || (gate == 1 && right_object);
        if (as.end.placed_cell) m.placed_distance = manhattan(*as.end.placed_cell, spec.assembly_target_cell);
        const bool scorable = m.collected_ok && !as.end.forced;
        m.rpod = rpod(as.end.placed_cell, spec.assembly_target_cell, scorable);
        m.ptc = ptc(as.end.placed_cell, spec.assembly_target_cell, scorable);
    }
    r.ndtw = (r.turns[0].ndtw + r.turns[1].ndtw) / 2;
    for (int k : cfg.ctc_ks) r.ctc[k] = (r.turns[0].ctc[k] + r.turns[1].ctc[k]) / 2.0;
    r.rpod = (r.turns[0].rpod + r.turns[1].rpod) / 2;
    r.ptc = (r.turns[0].ptc + r.turns[1].ptc) / 2.0;
    return r;
}

MetricReport aggregate(std::span<const MetricReport> reports) {
    if (reports.empty()) throw EmptyResultsError("no reports to aggregate");
    MetricReport out;
    const double n = static_cast<double>(reports.size());
    for (const auto& r : reports) {
        out.ndtw += r.ndtw / n;
        out.rpod += r.rpod / n;
        out.ptc += r.ptc / n;
        for (const auto& [k, v] : r.ctc) out.ctc[k] += v / n;
    }
    return out;
}

std::string csv_header(const MetricConfig& cfg) {
    std::string s = "nDTW";
    for (int k : cfg.ctc_ks) s += ",CTC-" + std::to_string(k);
    return s + ",rPOD,PTC";
}

std::string csv_row(const MetricReport& r, const MetricConfig& cfg) {
    char buf[32];
    const auto fmt = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.3f", v);
        return std::string(buf);
    };
    std::string s = fmt(r.ndtw);
    for (int k : cfg.ctc_ks) {
        auto it = r.ctc.find(k);
        s += "," + fmt(it == r.ctc.end() ? 0.0 : it->second);
    }
    return s + "," + fmt(r.rpod) + "," + fmt(r.ptc);
}

} // namespace arramon
