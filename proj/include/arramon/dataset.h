#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "arramon/routes.h"

namespace arramon {

struct FollowerResult {
    std::string follower_id;
    double ndtw_turn1 = 0.0;
    double ndtw_turn2 = 0.0;
    int ptc_turn1 = 0;
    int ptc_turn2 = 0;

    bool operator==(const FollowerResult&) const = default;
};

/// Two navigation and two assembly instructions written for one episode.
struct InstructionSet {
    std::string id;
    std::string episode_ref;
    int section_id = 1;
    std::array<std::string, 2> nav_instructions;
    std::array<std::string, 2> asm_instructions;
    std::string author_id;
    std::string language_tag = "en";
    bool validated = false; ///< passed the writing-stage validator
    std::vector<FollowerResult> followers;

    bool operator==(const InstructionSet&) const = default;
};

nlohmann::json to_record(const InstructionSet& s);
/// Throws SchemaError (without a line number) on a malformed record.
InstructionSet from_record(const nlohmann::json& j);

void write_jsonl(std::ostream& out, std::span<const InstructionSet> sets);
/// Throws SchemaError carrying the 1-based line number.
std::vector<InstructionSet> read_jsonl(std::istream& in);
void write_jsonl(const std::filesystem::path& path, std::span<const InstructionSet> sets);
std::vector<InstructionSet> read_jsonl(const std::filesystem::path& path);

/// Keep when some follower scored nDTW > 0.2 on both navigation turns and
/// PTC = 1 on both assembly turns. Throws EmptyResultsError.
bool verify_filter(std::span<const FollowerResult> results);

enum class Split { Train, ValSeen, ValUnseen, TestUnseen };
std::string_view name(Split s);

struct SplitAssignment {
    Split split = Split::Train;
    int section_id = 1;

    bool operator==(const SplitAssignment&) const = default;
};

/// Sections 1-5 are shuffled with `seed` (ids sorted first) and split
/// 80/20, val_seen taking floor(20%). Section 6 is val_unseen and 7 is
/// test_unseen. Throws DataError on a section id outside 1..7.
std::map<std::string, SplitAssignment> make_splits(std::span<const InstructionSet> sets, std::uint64_t seed);

/// Data root: $ARRAMON_DATA when set, else the source tree's data/.
std::filesystem::path data_dir();
/// One lowercase word per line; '#' starts a comment.
std::set<std::string> load_stopwords(const std::filesystem::path& path = data_dir() / "stopwords.txt");

struct StatsRow {
    std::string label; ///< "Instruction", "Path" or "Action Sequence"
    double nav_max = 0.0;
    double nav_avg = 0.0;
    double asm_max = 0.0;
    double asm_avg = 0.0;
};

struct StatsReport {
    std::vector<StatsRow> rows;
    std::vector<std::pair<std::string, int>> top_words;
    std::map<int, int> sets_per_section;
    std::map<int, std::set<std::string>> authors_per_section;

    bool empty() const { return rows.empty(); }
};

/// Path and action rows need the ground-truth routes, keyed by episode_ref;
/// they are omitted when `routes` is empty. Path length counts unit moves.
StatsReport stats_report(std::span<const InstructionSet> sets, const std::map<std::string, EpisodeRoutes>& routes,
                         const std::set<std::string>& stopwords, int top_k = 25);

std::string format_stats(const StatsReport& r);
nlohmann::json stats_json(const StatsReport& r);

/// Maps InstructionSet fields to JSON pointers inside foreign records, e.g.
/// {"id": "/instruction_id", "nav_instructions": ["/turns/0/nav", "/turns/1/nav"]}.
/// Unmapped fields keep their defaults; ids, episode_ref and all four
/// instructions are required.
struct ImportMapping {
    nlohmann::json fields;

    static ImportMapping identity();
    static ImportMapping load(const std::filesystem::path& path);
};

std::vector<InstructionSet> import_records(std::istream& in, const ImportMapping& mapping);

} // namespace arramon
