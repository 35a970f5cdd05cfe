// Command-line front end: world and episode generation, replay, evaluation,
// instruction tooling, dataset splits and statistics, training and serving.

#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "arramon/agents.h"
#include "arramon/dataset.h"
#include "arramon/error.h"
#include "arramon/model/checkpoint.h"
#include "arramon/model/train.h"
#include "arramon/serialize.h"
#include "arramon/service/http_server.h"

using namespace arramon;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<int> parse_sections(const std::string& spec) {
    std::vector<int> out;
    std::stringstream ss(spec);
    std::string part;
    while (std::getline(ss, part, ',')) {
        if (part.empty()) continue;
        const auto dash = part.find('-');
        if (dash != std::string::npos) {
            const int a = std::stoi(part.substr(0, dash));
            const int b = std::stoi(part.substr(dash + 1));
            for (int s = a; s <= b; ++s) out.push_back(s);
        } else {
            out.push_back(std::stoi(part));
        }
    }
    for (int s : out) {
        if (s < 1 || s > 7) throw ConfigError("section ids are 1..7, got " + std::to_string(s));
    }
    if (out.empty()) throw ConfigError("no sections given");
    return out;
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw DataError("cannot read " + p.string());
    return json::parse(in);
}

void write_json(const fs::path& p, const json& j) {
    std::ofstream out(p);
    if (!out) throw DataError("cannot write " + p.string());
    out << j.dump(2) << '\n';
}

struct LoadedEpisode {
    EpisodeFile file;
    std::shared_ptr<const CityMap> city;
};

std::vector<LoadedEpisode> load_episodes(const fs::path& dir) {
    std::map<std::string, std::shared_ptr<const CityMap>> cities;
    std::vector<LoadedEpisode> out;
    for (const auto& p : list_episode_files(dir)) {
        LoadedEpisode e{load_episode(p), nullptr};
        const std::string key = std::to_string(e.file.episode.world_seed) + json(e.file.episode.world_cfg).dump();
        auto& city = cities[key];
        if (!city) city = std::make_shared<const CityMap>(generate_city(e.file.episode.world_seed, e.file.episode.world_cfg));
        e.city = city;
        out.push_back(std::move(e));
    }
    if (out.empty()) throw DataError("no episode files in " + dir.string());
    return out;
}

/// Validated instruction sets keyed by episode ref; the first set per episode wins.
std::map<std::string, EpisodeInstructions> load_instructions(const fs::path& path) {
    std::map<std::string, EpisodeInstructions> out;
    if (path.empty() || !fs::exists(path)) return out;
    for (const auto& s : read_jsonl(path)) {
        if (!out.count(s.episode_ref)) out[s.episode_ref] = {s.nav_instructions, s.asm_instructions};
    }
    return out;
}

fs::path default_instructions(const fs::path& episodes, const std::string& given) {
    return given.empty() ? episodes / "instructions.jsonl" : fs::path(given);
}

/// Instructions for every episode: from the file when present, else synthesized.
std::vector<EpisodeInstructions> instructions_for(const std::vector<LoadedEpisode>& eps,
                                                  const std::map<std::string, EpisodeInstructions>& given,
                                                  std::uint64_t seed) {
    std::vector<EpisodeInstructions> out;
    for (const auto& e : eps) {
        auto it = given.find(e.file.episode.id);
        if (it != given.end()) {
            out.push_back(it->second);
            continue;
        }
        try {
            out.push_back(synth_instructions(*e.city, e.file.episode, e.file.gt, Rng::mix(seed, fnv1a(e.file.episode.id))));
        } catch (const Error&) {
            out.push_back({});
        }
    }
    return out;
}

int cmd_gen_world(std::uint64_t seed, const std::string& out) {
    const CityMap city = generate_city(seed);
    write_json(out, city);
    std::cout << "wrote " << out << '\n';
    return 0;
}

int cmd_gen_episodes(std::uint64_t seed, const std::string& sections, int count, const std::string& out) {
    const auto secs = parse_sections(sections);
    const CityMap city = generate_city(seed);
    fs::create_directories(out);
    int written = 0;
    for (int k = 0; written < count; ++k) {
        if (k > 50 * count + 100) throw GenerationError("could not place enough episodes");
        const int section = secs[static_cast<std::size_t>(k) % secs.size()];
        EpisodeSpec ep;
        try {
            ep = sample_episode(city, section, Rng::mix(seed, static_cast<std::uint64_t>(k)));
        } catch (const PlacementError&) {
            continue;
        }
        save_episode(fs::path(out) / (ep.id + ".json"), ep, gt_route_for_episode(city, ep));
        ++written;
    }
    std::cout << "wrote " << written << " episodes to " << out << '\n';
    return 0;
}

int cmd_replay(const std::string& episode, const std::string& actions_path, const std::string& out) {
    const EpisodeFile f = load_episode(episode);
    std::ifstream in(actions_path);
    if (!in) throw DataError("cannot read " + actions_path);
    const auto actions = read_actions(in);
    const SimState s = replay(f.episode, std::make_shared<const CityMap>(generate_city(f.episode.world_seed, f.episode.world_cfg)), actions);
    if (out.empty()) {
        write_trajectory_jsonl(std::cout, s.trajectories);
    } else {
        std::ofstream o(out);
        write_trajectory_jsonl(o, s.trajectories);
    }
    if (!s.done) std::cerr << "episode incomplete after " << actions.size() << " actions\n";
    if (s.done) {
        const auto report = score_episode(f.episode, f.gt, s.trajectories);
        std::cerr << csv_header() << '\n' << csv_row(report) << '\n';
    }
    return 0;
}

std::unique_ptr<Policy> make_agent(const std::string& agent, std::uint64_t seed, const std::string& model) {
    if (agent == "random") return std::make_unique<RandomWalkPolicy>(seed);
    if (agent == "oracle") return std::make_unique<OraclePolicy>();
    if (agent == "heuristic") return std::make_unique<HeuristicFollower>(seed);
    if (agent == "model") {
        if (model.empty()) throw ConfigError("--agent model needs --model <checkpoint>");
        return std::make_unique<ModelPolicy>(std::make_shared<const Network>(load_checkpoint(model)));
    }
    throw ConfigError("unknown agent " + agent);
}

int cmd_eval(const std::string& agent, const std::string& episodes, const std::string& trajectories,
             const std::string& instructions, const std::string& model, const std::string& report_path,
             const std::string& csv_path, const std::string& traj_out, std::uint64_t seed) {
    const auto eps = load_episodes(episodes);
    std::vector<MetricReport> reports;
    json per_episode = json::array();
    std::unique_ptr<Policy> policy;
    std::vector<EpisodeInstructions> texts;
    if (trajectories.empty()) {
        policy = make_agent(agent, seed, model);
        texts = instructions_for(eps, load_instructions(default_instructions(episodes, instructions)), seed);
        if (!traj_out.empty()) fs::create_directories(traj_out);
    }
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const auto& e = eps[i];
        MetricReport r;
        if (!trajectories.empty()) {
            const fs::path p = fs::path(trajectories) / (e.file.episode.id + ".jsonl");
            std::ifstream in(p);
            if (!in) throw DataError("missing trajectory " + p.string());
            r = score_episode(e.file.episode, e.file.gt, read_trajectory_jsonl(in));
        } else {
            const auto run = run_episode(*policy, e.file.episode, e.city, e.file.gt, texts[i]);
            r = run.report;
            if (!traj_out.empty()) {
                std::ofstream o(fs::path(traj_out) / (e.file.episode.id + ".jsonl"));
                write_trajectory_jsonl(o, run.state.trajectories);
            }
        }
        per_episode.push_back({{"episode_id", e.file.episode.id}, {"report", r}});
        reports.push_back(std::move(r));
    }
    const MetricReport total = aggregate(reports);
    const json doc{{"agent", trajectories.empty() ? agent : "trajectories"},
                   {"episodes", per_episode},
                   {"aggregate", total}};
    if (!report_path.empty()) write_json(report_path, doc);
    const std::string csv = csv_header() + "\n" + csv_row(total) + "\n";
    if (!csv_path.empty()) {
        std::ofstream(csv_path) << csv;
    }
    std::cout << csv;
    return 0;
}

int cmd_validate(const std::string& in_path, const std::string& out_path) {
    std::ifstream file;
    std::istream* in = &std::cin;
    if (!in_path.empty() && in_path != "-") {
        file.open(in_path);
        if (!file) throw DataError("cannot read " + in_path);
        in = &file;
    }
    std::ofstream out_file;
    std::ostream* out = &std::cout;
    if (!out_path.empty() && out_path != "-") {
        out_file.open(out_path);
        out = &out_file;
    }
    std::string line;
    std::size_t n = 0;
    int blocked = 0;
    while (std::getline(*in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw SchemaError(e.what(), n);
        }
        const auto phase = parse_phase(j.value("phase", std::string{}));
        if (!phase) throw SchemaError("phase must be nav or asm", n);
        std::vector<Action> gt;
        if (j.contains("gt_actions")) gt = actions_from_json(j["gt_actions"]);
        const auto v = validate(j.value("text", std::string{}), *phase, gt);
        if (has_blocking(v)) ++blocked;
        json o{{"violations", v}, {"blocking", has_blocking(v)}};
        if (j.contains("id")) o["id"] = j["id"];
        *out << o.dump() << '\n';
    }
    std::cerr << blocked << " blocked\n";
    return 0;
}

int cmd_synth(const std::string& episodes, std::uint64_t seed, const std::string& out) {
    const auto eps = load_episodes(episodes);
    std::vector<InstructionSet> sets;
    int failed = 0;
    for (const auto& e : eps) {
        try {
            const auto ins = synth_instructions(*e.city, e.file.episode, e.file.gt, Rng::mix(seed, fnv1a(e.file.episode.id)));
            InstructionSet s;
            s.id = "synth-" + e.file.episode.id;
            s.episode_ref = e.file.episode.id;
            s.section_id = e.file.episode.section_id;
            s.nav_instructions = ins.nav;
            s.asm_instructions = ins.assembly;
            s.author_id = "synth";
            s.validated = true;
            sets.push_back(std::move(s));
        } catch (const Error& err) {
            ++failed;
            std::cerr << e.file.episode.id << ": " << err.what() << '\n';
        }
    }
    write_jsonl(out.empty() ? fs::path(episodes) / "instructions.jsonl" : fs::path(out), sets);
    std::cout << sets.size() << " instruction sets, " << failed << " episodes skipped\n";
    return 0;
}

std::vector<InstructionSet> read_sets(const std::string& path, const std::string& mapping) {
    if (mapping.empty()) return read_jsonl(fs::path(path));
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path);
    return import_records(in, ImportMapping::load(mapping));
}

int cmd_make_splits(const std::string& sets_path, const std::string& mapping, std::uint64_t seed, const std::string& out) {
    const auto sets = read_sets(sets_path, mapping);
    const auto splits = make_splits(sets, seed);
    json j = json::object();
    std::map<std::string, int> counts;
    for (const auto& [id, a] : splits) {
        j[id] = {{"split", name(a.split)}, {"section_id", a.section_id}};
        ++counts[std::string(name(a.split))];
    }
    if (out.empty()) {
        std::cout << j.dump(2) << '\n';
    } else {
        write_json(out, j);
    }
    for (const auto& [s, c] : counts) std::cerr << s << ": " << c << '\n';
    return 0;
}

int cmd_stats(const std::string& sets_path, const std::string& mapping, const std::string& episodes,
              const std::string& stopwords, int top_k, bool as_json) {
    const auto sets = read_sets(sets_path, mapping);
    std::map<std::string, EpisodeRoutes> routes;
    if (!episodes.empty()) {
        for (const auto& p : list_episode_files(episodes)) {
            auto f = load_episode(p);
            routes[f.episode.id] = f.gt;
        }
    }
    const auto words = load_stopwords(stopwords.empty() ? data_dir() / "stopwords.txt" : fs::path(stopwords));
    const auto report = stats_report(sets, routes, words, top_k);
    std::cout << (as_json ? stats_json(report).dump(2) + "\n" : format_stats(report));
    return 0;
}

int cmd_train(const std::string& episodes, const std::string& instructions, int epochs, std::uint64_t seed,
              const std::string& hyper_path, const std::string& out, const std::string& log_path) {
    Hyper hyper = hyper_path.empty() ? Hyper{} : Hyper::from_json(read_json(hyper_path));
    if (epochs > 0) hyper.epochs = epochs;
    hyper.seed = seed;
    const auto eps = load_episodes(episodes);
    const auto texts = instructions_for(eps, load_instructions(default_instructions(episodes, instructions)), seed);

    std::vector<std::string> all;
    for (const auto& t : texts) {
        for (int i = 0; i < 2; ++i) {
            all.push_back(t.nav[static_cast<std::size_t>(i)]);
            all.push_back(t.assembly[static_cast<std::size_t>(i)]);
        }
    }
    const Vocab vocab = Vocab::build(all);

    std::vector<TrainingEpisode> data;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (texts[i].nav[0].empty()) continue;
        data.push_back(make_training_episode(eps[i].file.episode, eps[i].city, eps[i].file.gt, texts[i], vocab));
    }
    std::cerr << data.size() << " training episodes, vocabulary " << vocab.size() << '\n';
    Network net(hyper.model_config(), vocab);
    const auto start = std::chrono::steady_clock::now();
    const auto result = train_teacher_forcing(net, data, hyper, [&](int epoch, double loss) {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cerr << "epoch " << epoch + 1 << " loss " << loss << " (" << secs << " s)\n";
    });
    save_checkpoint(out, net);
    if (!log_path.empty()) {
        write_json(log_path, {{"hyper", hyper.to_json()},
                              {"initial_loss", result.initial_loss},
                              {"epoch_loss", result.epoch_loss},
                              {"step_loss", result.step_loss},
                              {"smoothed", result.smoothed}});
    }
    std::cout << "wrote " << out << '\n';
    return result.finite ? 0 : 1;
}

HttpServer* g_server = nullptr;

int cmd_serve(int port, const std::string& episodes, const std::string& host) {
    const fs::path dir = episodes.empty() ? data_dir() / "episodes" : fs::path(episodes);
    auto store = std::make_shared<const EpisodeStore>(EpisodeStore::load_dir(dir));
    auto sessions = std::make_shared<SessionManager>(store);
    HttpServer server(sessions);
    const int bound = server.bind(host, port);
    if (bound < 0) throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
    g_server = &server;
    std::signal(SIGINT, [](int) {
        if (g_server) g_server->stop();
    });
    std::cout << "serving " << store->size() << " episodes on http://" << host << ':' << bound << std::endl;
    server.listen();
    g_server = nullptr;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ArraMon navigation and assembly simulator"};
    app.require_subcommand(1);

    std::uint64_t seed = 1;
    std::string out, sections = "1-7", episodes, actions, agent = "heuristic", report, csv, trajectories, traj_out,
                     instructions, model, in, sets, mapping, stopwords, hyper, log, host = "127.0.0.1";
    int count = 70, epochs = 0, port = 8080, top_k = 25;
    bool as_json = false;

    auto* gw = app.add_subcommand("gen-world", "Generate a city and write it as JSON");
    gw->add_option("--seed", seed);
    gw->add_option("--out", out)->required();

    auto* ge = app.add_subcommand("gen-episodes", "Sample episodes with ground-truth routes");
    ge->add_option("--seed", seed);
    ge->add_option("--sections", sections, "e.g. 1-5 or 1,3,6");
    ge->add_option("--count", count);
    ge->add_option("--out", out)->required();

    auto* rp = app.add_subcommand("replay", "Replay an action list and print the trajectory log");
    rp->add_option("--episode", episodes)->required();
    rp->add_option("--actions", actions)->required();
    rp->add_option("--out", out);

    auto* ev = app.add_subcommand("eval", "Score an agent or recorded trajectories");
    ev->add_option("--agent", agent)->check(CLI::IsMember({"random", "oracle", "heuristic", "model"}));
    ev->add_option("--episodes", episodes)->required();
    ev->add_option("--trajectories", trajectories, "score <id>.jsonl logs instead of running an agent");
    ev->add_option("--instructions", instructions);
    ev->add_option("--model", model);
    ev->add_option("--report", report);
    ev->add_option("--csv", csv);
    ev->add_option("--save-trajectories", traj_out);
    ev->add_option("--seed", seed);

    auto* va = app.add_subcommand("validate-instructions", "JSONL {text, phase} in, {violations} out");
    va->add_option("--in", in);
    va->add_option("--out", out);

    auto* sy = app.add_subcommand("synth-instructions", "Template instructions for episode files");
    sy->add_option("--episodes", episodes)->required();
    sy->add_option("--seed", seed);
    sy->add_option("--out", out);

    auto* ms = app.add_subcommand("make-splits", "Assign instruction sets to splits");
    ms->add_option("--sets", sets)->required();
    ms->add_option("--mapping", mapping, "field mapping for foreign records");
    ms->add_option("--seed", seed);
    ms->add_option("--out", out);

    auto* st = app.add_subcommand("stats", "Instruction length and vocabulary report");
    st->add_option("--sets", sets)->required();
    st->add_option("--mapping", mapping);
    st->add_option("--episodes", episodes);
    st->add_option("--stopwords", stopwords);
    st->add_option("--top", top_k);
    st->add_flag("--json", as_json);

    auto* tr = app.add_subcommand("train", "Teacher-forcing training of the attention policy");
    tr->add_option("--episodes", episodes)->required();
    tr->add_option("--instructions", instructions);
    tr->add_option("--epochs", epochs);
    tr->add_option("--seed", seed);
    tr->add_option("--hyper", hyper);
    tr->add_option("--out", out)->required();
    tr->add_option("--log", log);

    auto* sv = app.add_subcommand("serve", "HTTP session server");
    sv->add_option("--port", port);
    sv->add_option("--host", host);
    sv->add_option("--episodes", episodes);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gw) return cmd_gen_world(seed, out);
        if (*ge) return cmd_gen_episodes(seed, sections, count, out);
        if (*rp) return cmd_replay(episodes, actions, out);
        if (*ev) return cmd_eval(agent, episodes, trajectories, instructions, model, report, csv, traj_out, seed);
        if (*va) return cmd_validate(in, out);
        if (*sy) return cmd_synth(episodes, seed, out);
        if (*ms) return cmd_make_splits(sets, mapping, seed, out);
        if (*st) return cmd_stats(sets, mapping, episodes, stopwords, top_k, as_json);
        if (*tr) return cmd_train(episodes, instructions, epochs, seed, hyper, out, log);
        if (*sv) return cmd_serve(port, episodes, host);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
