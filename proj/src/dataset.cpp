#include "arramon/dataset.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "arramon/error.h"
#include "arramon/objects.h"
#include "arramon/rng.h"
#include "arramon/serialize.h"
#include "arramon/validator.h"

#ifndef ARRAMON_DEFAULT_DATA_DIR
#define ARRAMON_DEFAULT_DATA_DIR "data"
#endif

namespace arramon {

using nlohmann::json;

nlohmann::json to_record(const InstructionSet& s) {
    json followers = json::array();
    for (const auto& f : s.followers) {
        followers.push_back({{"follower_id", f.follower_id},
                             {"ndtw_turn1", f.ndtw_turn1},
                             {"ndtw_turn2", f.ndtw_turn2},
                             {"ptc_turn1", f.ptc_turn1},
                             {"ptc_turn2", f.ptc_turn2}});
    }
    return {{"schema_version", kSchemaVersion},
            {"id", s.id},
            {"episode_ref", s.episode_ref},
            {"section_id", s.section_id},
            {"nav_instructions", s.nav_instructions},
            {"asm_instructions", s.asm_instructions},
            {"author_id", s.author_id},
            {"language_tag", s.language_tag},
            {"validated", s.validated},
            {"followers", followers}};
}

namespace {

std::array<std::string, 2> instruction_pair(const json& j, const char* key) {
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 2) throw SchemaError(std::string(key) + " needs exactly 2 strings");
    return {a[0].get<std::string>(), a[1].get<std::string>()};
}

void check_range(const FollowerResult& f) {
    auto unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
    auto bit = [](int v) { return v == 0 || v == 1; };
    if (!unit(f.ndtw_turn1) || !unit(f.ndtw_turn2) || !bit(f.ptc_turn1) || !bit(f.ptc_turn2)) {
        throw SchemaError("follower " + f.follower_id + " has out-of-range scores");
    }
}

} // namespace

InstructionSet from_record(const nlohmann::json& j) {
    try {
        if (!j.is_object()) throw SchemaError("record is not an object");
        if (j.value("schema_version", 0) != kSchemaVersion) throw SchemaError("unsupported schema_version");
        InstructionSet s;
        s.id = j.at("id").get<std::string>();
        s.episode_ref = j.at("episode_ref").get<std::string>();
        s.section_id = j.at("section_id").get<int>();
        s.nav_instructions = instruction_pair(j, "nav_instructions");
        s.asm_instructions = instruction_pair(j, "asm_instructions");
        s.author_id = j.value("author_id", std::string{});
        s.language_tag = j.value("language_tag", std::string("en"));
        s.validated = j.value("validated", false);
        if (j.contains("followers")) {
            for (const auto& f : j["followers"]) {
                FollowerResult r;
                r.follower_id = f.at("follower_id").get<std::string>();
                r.ndtw_turn1 = f.at("ndtw_turn1").get<double>();
                r.ndtw_turn2 = f.at("ndtw_turn2").get<double>();
                r.ptc_turn1 = f.at("ptc_turn1").get<int>();
                r.ptc_turn2 = f.at("ptc_turn2").get<int>();
                check_range(r);
                s.followers.push_back(std::move(r));
            }
        }
        return s;
    } catch (const json::exception& e) {
        throw SchemaError(e.what());
    }
}

void write_jsonl(std::ostream& out, std::span<const InstructionSet> sets) {
    for (const auto& s : sets) out << to_record(s).dump() << '\n';
}

std::vector<InstructionSet> read_jsonl(std::istream& in) {
    std::vector<InstructionSet> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(from_record(json::parse(line)));
        } catch (const SchemaError& e) {
            throw SchemaError(e.what(), lineno);
        } catch (const json::exception& e) {
            throw SchemaError(e.what(), lineno);
        }
    }
    return out;
}

void write_jsonl(const std::filesystem::path& path, std::span<const InstructionSet> sets) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    write_jsonl(out, sets);
}

std::vector<InstructionSet> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    return read_jsonl(in);
}

bool verify_filter(std::span<const FollowerResult> results) {
    if (results.empty()) throw EmptyResultsError("verify_filter needs at least one follower result");
    return std::any_of(results.begin(), results.end(), [](const FollowerResult& r) {
        return r.ndtw_turn1 > 0.2 && r.ndtw_turn2 > 0.2 && r.ptc_turn1 == 1 && r.ptc_turn2 == 1;
    });
}

std::string_view name(Split s) {
    switch (s) {
    case Split::Train:
        return "train";
    case Split::ValSeen:
        return "val_seen";
    case Split::ValUnseen:
        return "val_unseen";
    case Split::TestUnseen:
        return "test_unseen";
    }
    return "?";
}

std::map<std::string, SplitAssignment> make_splits(std::span<const InstructionSet> sets, std::uint64_t seed) {
    std::map<std::string, SplitAssignment> out;
    std::vector<std::string> seen;
    for (const auto& s : sets) {
        if (s.section_id < 1 || s.section_id > 7) {
            throw DataError("set " + s.id + " has section " + std::to_string(s.section_id));
        }
        if (s.section_id == 6) {
            out[s.id] = {Split::ValUnseen, 6};
        } else if (s.section_id == 7) {
            out[s.id] = {Split::TestUnseen, 7};
        } else {
            out[s.id] = {Split::Train, s.section_id};
            seen.push_back(s.id);
        }
    }
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    Rng rng(seed);
    rng.shuffle(seen);
    const std::size_t n_val = seen.size() / 5;
    for (std::size_t i = 0; i < n_val; ++i) out[seen[i]].split = Split::ValSeen;
    return out;
}

std::filesystem::path data_dir() {
    if (const char* env = std::getenv("ARRAMON_DATA"); env && *env) return env;
    return ARRAMON_DEFAULT_DATA_DIR;
}

std::set<std::string> load_stopwords(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read stopwords from " + path.string());
    std::set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream words(line);
        std::string w;
        while (words >> w) {
            std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return std::tolower(c); });
            out.insert(w);
        }
    }
    return out;
}

namespace {

struct Accum {
    double max = 0.0;
    double sum = 0.0;
    int n = 0;

    void add(double v) {
        max = n == 0 ? v : std::max(max, v);
        sum += v;
        ++n;
    }
    double avg() const { return n == 0 ? 0.0 : sum / n; }
};

double path_length(std::span<const Vec2> pts) {
    double d = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) d += distance(pts[i - 1], pts[i]);
    return d;
}

const std::set<std::string>& object_words() {
    static const std::set<std::string> words = [] {
        std::set<std::string> w;
        for (auto c : kObjectClasses) w.emplace(name(c));
        for (auto p : kPatterns) w.emplace(name(p));
        for (auto c : kColors) w.emplace(name(c));
        w.insert({"spotted", "tvs", "mugs", "buckets", "bowls", "hourglasses", "books", "balls", "object"});
        return w;
    }();
    return words;
}

} // namespace

StatsReport stats_report(std::span<const InstructionSet> sets, const std::map<std::string, EpisodeRoutes>& routes,
                         const std::set<std::string>& stopwords, int top_k) {
    StatsReport r;
    if (sets.empty()) return r;

    Accum words_nav, words_asm, path_nav, path_asm, act_nav, act_asm;
    std::unordered_map<std::string, int> freq;
    auto count_words = [&](const std::string& text) {
        const auto tokens = tokenize(text);
        for (const auto& t : tokens) {
            if (stopwords.contains(t.norm) || object_words().contains(t.norm)) continue;
            ++freq[t.norm];
        }
        return static_cast<double>(tokens.size());
    };

    bool have_routes = false;
    for (const auto& s : sets) {
        for (const auto& t : s.nav_instructions) words_nav.add(count_words(t));
        for (const auto& t : s.asm_instructions) words_asm.add(count_words(t));
        ++r.sets_per_section[s.section_id];
        r.authors_per_section[s.section_id].insert(s.author_id);

        auto it = routes.find(s.episode_ref);
        if (it == routes.end()) continue;
        have_routes = true;
        for (const auto& nav : it->second.nav) {
            path_nav.add(path_length(nav.points));
            act_nav.add(static_cast<double>(nav.actions.size()));
        }
        for (const auto& a : it->second.assembly) {
            path_asm.add(path_length(a.points));
            act_asm.add(static_cast<double>(a.actions.size()));
        }
    }

    r.rows.push_back({"Instruction", words_nav.max, words_nav.avg(), words_asm.max, words_asm.avg()});
    if (have_routes) {
        r.rows.push_back({"Path", path_nav.max, path_nav.avg(), path_asm.max, path_asm.avg()});
        r.rows.push_back({"Action Sequence", act_nav.max, act_nav.avg(), act_asm.max, act_asm.avg()});
    }

    std::vector<std::pair<std::string, int>> ranked(freq.begin(), freq.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (static_cast<int>(ranked.size()) > top_k) ranked.resize(static_cast<std::size_t>(top_k));
    r.top_words = std::move(ranked);
    return r;
}

std::string format_stats(const StatsReport& r) {
    if (r.empty()) return "empty corpus\n";
    std::ostringstream out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-16s %9s %9s %9s %9s\n", "", "nav max", "nav avg", "asm max", "asm avg");
    out << buf;
    for (const auto& row : r.rows) {
        std::snprintf(buf, sizeof buf, "%-16s %9.1f %9.2f %9.1f %9.2f\n", row.label.c_str(), row.nav_max, row.nav_avg,
                      row.asm_max, row.asm_avg);
        out << buf;
    }
    out << "\ntop words:";
    for (const auto& [w, n] : r.top_words) out << ' ' << w << '(' << n << ')';
    out << "\n\nsection  sets  authors\n";
    for (const auto& [sid, n] : r.sets_per_section) {
        std::snprintf(buf, sizeof buf, "%7d %5d %8zu\n", sid, n, r.authors_per_section.at(sid).size());
        out << buf;
    }
    return out.str();
}

nlohmann::json stats_json(const StatsReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"label", row.label},
                        {"nav", {{"max", row.nav_max}, {"avg", row.nav_avg}}},
                        {"asm", {{"max", row.asm_max}, {"avg", row.asm_avg}}}});
    }
    json words = json::array();
    for (const auto& [w, n] : r.top_words) words.push_back({w, n});
    json sections = json::object();
    for (const auto& [sid, n] : r.sets_per_section) {
        sections[std::to_string(sid)] = {{"sets", n}, {"authors", r.authors_per_section.at(sid).size()}};
    }
    return {{"rows", rows}, {"top_words", words}, {"sections", sections}};
}

ImportMapping ImportMapping::identity() {
    return {json{{"id", "/id"},
                 {"episode_ref", "/episode_ref"},
                 {"section_id", "/section_id"},
                 {"nav_instructions", {"/nav_instructions/0", "/nav_instructions/1"}},
                 {"asm_instructions", {"/asm_instructions/0", "/asm_instructions/1"}},
                 {"author_id", "/author_id"},
                 {"language_tag", "/language_tag"}}};
}

ImportMapping ImportMapping::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read mapping " + path.string());
    try {
        return {json::parse(in)};
    } catch (const json::exception& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
}

namespace {

const json& at_pointer(const json& record, const json& ptr) {
    const json::json_pointer p(ptr.get<std::string>());
    if (!record.contains(p)) throw SchemaError("missing " + ptr.get<std::string>());
    return record.at(p);
}

std::string as_text(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

} // namespace

std::vector<InstructionSet> import_records(std::istream& in, const ImportMapping& mapping) {
    const auto& m = mapping.fields;
    std::vector<InstructionSet> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json rec = json::parse(line);
            InstructionSet s;
            s.id = as_text(at_pointer(rec, m.at("id")));
            s.episode_ref = as_text(at_pointer(rec, m.at("episode_ref")));
            if (m.contains("section_id")) {
                const auto& v = at_pointer(rec, m["section_id"]);
                s.section_id = v.is_string() ? std::stoi(v.get<std::string>()) : v.get<int>();
            }
            for (int k = 0; k < 2; ++k) {
                s.nav_instructions[k] = at_pointer(rec, m.at("nav_instructions").at(k)).get<std::string>();
                s.asm_instructions[k] = at_pointer(rec, m.at("asm_instructions").at(k)).get<std::string>();
            }
            if (m.contains("author_id") && rec.contains(json::json_pointer(m["author_id"].get<std::string>()))) {
                s.author_id = as_text(at_pointer(rec, m["author_id"]));
            }
            if (m.contains("language_tag") && rec.contains(json::json_pointer(m["language_tag"].get<std::string>()))) {
                s.language_tag = as_text(at_pointer(rec, m["language_tag"]));
            }
            out.push_back(std::move(s));
        } catch (const SchemaError& e) {
            throw SchemaError(e.what(), lineno);
        } catch (const std::exception& e) {
            throw SchemaError(e.what(), lineno);
        }
    }
    return out;
}

} // namespace arramon
