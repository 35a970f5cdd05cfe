#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "arramon/dataset.h"
#include "arramon/error.h"
#include "arramon/rng.h"

using namespace arramon;
using nlohmann::json;

namespace {

InstructionSet make_set(int i, int section) {
    InstructionSet s;
    s.id = "set" + std::to_string(i);
    s.episode_ref = "ep" + std::to_string(i);
    s.section_id = section;
    s.nav_instructions = {"Walk to the bench and pick up the dotted red tv", "Turn left and grab the striped blue mug"};
    s.asm_instructions = {"Place the dotted red tv in front of the green ball", "Put the mug on top of the tv"};
    s.author_id = "author" + std::to_string(i % 3);
    return s;
}

FollowerResult follower(double n1, double n2, int p1, int p2) { return {"f", n1, n2, p1, p2}; }

} // namespace

TEST_CASE("verify_filter boundary matrix") {
    const std::vector<double> ndtws{0.0, 0.19, 0.2, std::nextafter(0.2, 1.0), 0.21, 1.0};
    for (double n1 : ndtws)
        for (double n2 : ndtws)
            for (int p1 : {0, 1})
                for (int p2 : {0, 1}) {
                    const bool expect = n1 > 0.2 && n2 > 0.2 && p1 == 1 && p2 == 1;
                    const std::vector<FollowerResult> one{follower(n1, n2, p1, p2)};
                    CHECK(verify_filter(one) == expect);
                }
    // one follower passing is enough; passing halves from different followers are not
    const std::vector<FollowerResult> split{follower(0.9, 0.1, 1, 1), follower(0.1, 0.9, 1, 1)};
    CHECK_FALSE(verify_filter(split));
    const std::vector<FollowerResult> mixed{follower(0.1, 0.1, 0, 0), follower(0.3, 0.3, 1, 1)};
    CHECK(verify_filter(mixed));
    CHECK_THROWS_AS(verify_filter(std::vector<FollowerResult>{}), EmptyResultsError);
}

TEST_CASE("records round-trip through JSONL") {
    std::vector<InstructionSet> sets{make_set(1, 2), make_set(2, 7)};
    sets[0].validated = true;
    sets[0].followers = {follower(0.5, 0.25, 1, 0)};
    sets[1].language_tag = "en-GB";
    std::stringstream buf;
    write_jsonl(buf, sets);
    CHECK(read_jsonl(buf) == sets);
    CHECK(to_record(sets[0])["schema_version"] == 1);
}

TEST_CASE("malformed JSONL reports the line") {
    std::stringstream buf;
    buf << to_record(make_set(1, 1)).dump() << "\n\n";
    json bad = to_record(make_set(2, 1));
    bad["nav_instructions"] = {"only one"};
    buf << bad.dump() << "\n";
    try {
        read_jsonl(buf);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.line() == 3);
    }

    std::stringstream garbage("{\"id\": \n");
    try {
        read_jsonl(garbage);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.line() == 1);
    }

    json missing = to_record(make_set(3, 1));
    missing.erase("episode_ref");
    CHECK_THROWS_AS(from_record(missing), SchemaError);
}

TEST_CASE("splits: 80/20 over seen sections, unseen sections fixed") {
    std::vector<InstructionSet> sets;
    for (int i = 0; i < 100; ++i) sets.push_back(make_set(i, 1 + i % 5));
    for (int i = 100; i < 110; ++i) sets.push_back(make_set(i, 6));
    for (int i = 110; i < 117; ++i) sets.push_back(make_set(i, 7));
    const auto a = make_splits(sets, 3);
    std::map<Split, int> n;
    for (const auto& s : sets) {
        const auto& as = a.at(s.id);
        CHECK(as.section_id == s.section_id);
        ++n[as.split];
        if (s.section_id == 6) CHECK(as.split == Split::ValUnseen);
        if (s.section_id == 7) CHECK(as.split == Split::TestUnseen);
        if (s.section_id <= 5) CHECK((as.split == Split::Train || as.split == Split::ValSeen));
    }
    CHECK(n[Split::Train] == 80);
    CHECK(n[Split::ValSeen] == 20);
    CHECK(n[Split::ValUnseen] == 10);
    CHECK(n[Split::TestUnseen] == 7);

    // input order does not matter, the seed does
    auto shuffled = sets;
    std::reverse(shuffled.begin(), shuffled.end());
    CHECK(make_splits(shuffled, 3) == a);
    CHECK(make_splits(sets, 4) != a);

    std::vector<InstructionSet> odd;
    for (int i = 0; i < 7; ++i) odd.push_back(make_set(i, 3));
    int val = 0;
    for (const auto& [id, as] : make_splits(odd, 1)) val += as.split == Split::ValSeen;
    CHECK(val == 1);

    sets.push_back(make_set(999, 8));
    CHECK_THROWS_AS(make_splits(sets, 3), DataError);
}

TEST_CASE("stats: lengths, top words, sections") {
    std::vector<InstructionSet> sets{make_set(0, 1), make_set(1, 1), make_set(2, 4)};
    sets[2].nav_instructions[0] = "Walk walk walk to the bench and pick up the mug";
    const std::set<std::string> stop{"the", "to", "and", "up", "of", "in", "on", "it"};

    EpisodeRoutes r;
    r.nav[0].points = {{0.5, 0.5}, {1.5, 0.5}, {1.5, 1.5}};
    r.nav[0].actions = {Action::Forward, Action::Right, Action::Forward, Action::End};
    r.nav[1].points = {{0.5, 0.5}};
    r.nav[1].actions = {Action::End};
    r.assembly[0].points = {{0.5, 2.5}, {1.5, 2.5}};
    r.assembly[0].actions = {Action::Forward, Action::End};
    r.assembly[1].points = {{0.5, 2.5}};
    r.assembly[1].actions = {Action::End};

    const auto rep = stats_report(sets, {{"ep0", r}}, stop, 3);
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.rows[0].label == "Instruction");
    // token counts are 11 and 8 per set in both phases
    CHECK(rep.rows[0].nav_max == 11);
    CHECK(rep.rows[0].nav_avg == Catch::Approx(9.5));
    CHECK(rep.rows[0].asm_max == 11);
    CHECK(rep.rows[0].asm_avg == Catch::Approx(9.5));
    CHECK(rep.rows[1].label == "Path");
    CHECK(rep.rows[1].nav_max == 2);
    CHECK(rep.rows[1].nav_avg == 1);
    CHECK(rep.rows[1].asm_avg == 0.5);
    CHECK(rep.rows[2].nav_max == 4);
    CHECK(rep.rows[2].asm_avg == 1.5);
    REQUIRE(rep.top_words.size() == 3);
    CHECK(rep.top_words[0].first == "walk");
    CHECK(rep.top_words[0].second == 5);
    CHECK(rep.sets_per_section.at(1) == 2);
    CHECK(rep.authors_per_section.at(1).size() == 2);
    CHECK(format_stats(rep).find("Action Sequence") != std::string::npos);
    CHECK(stats_json(rep)["sections"]["4"]["sets"] == 1);

    CHECK(stats_report(sets, {}, stop).rows.size() == 1);
    CHECK(stats_report({}, {}, stop).empty());
}

TEST_CASE("stopword file loads") {
    const auto s = load_stopwords();
    CHECK(s.contains("the"));
    CHECK_FALSE(s.contains("#"));
    CHECK_FALSE(s.contains("bench"));
}

TEST_CASE("import through a field mapping") {
    const json rec{{"instruction_id", 17},
                   {"episode", "w1-s3-e9"},
                   {"meta", {{"section", "3"}, {"worker", "A1"}}},
                   {"turns",
                    {{{"nav", "Walk to the bench and pick up the tv"}, {"asm", "Place the tv behind the mug"}},
                     {{"nav", "Turn left and take the striped mug"}, {"asm", "Put the mug on top of the bowl"}}}}};
    ImportMapping m{json{{"id", "/instruction_id"},
                         {"episode_ref", "/episode"},
                         {"section_id", "/meta/section"},
                         {"author_id", "/meta/worker"},
                         {"nav_instructions", {"/turns/0/nav", "/turns/1/nav"}},
                         {"asm_instructions", {"/turns/0/asm", "/turns/1/asm"}}}};
    std::stringstream in(rec.dump() + "\n");
    const auto sets = import_records(in, m);
    REQUIRE(sets.size() == 1);
    CHECK(sets[0].id == "17");
    CHECK(sets[0].episode_ref == "w1-s3-e9");
    CHECK(sets[0].section_id == 3);
    CHECK(sets[0].author_id == "A1");
    CHECK(sets[0].language_tag == "en");
    CHECK(sets[0].asm_instructions[1] == "Put the mug on top of the bowl");

    json broken = rec;
    broken["turns"][1].erase("asm");
    std::stringstream in2(rec.dump() + "\n" + broken.dump() + "\n");
    try {
        import_records(in2, m);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.line() == 2);
    }

    std::stringstream ident(to_record(make_set(5, 2)).dump() + "\n");
    const auto back = import_records(ident, ImportMapping::identity());
    REQUIRE(back.size() == 1);
    CHECK(back[0].nav_instructions == make_set(5, 2).nav_instructions);
}
