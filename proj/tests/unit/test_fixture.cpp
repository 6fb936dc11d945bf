#include <gtest/gtest.h>

#include <set>

#include "probcoh/catalog.hpp"
#include "probcoh/io.hpp"
#include "replay_fixture.hpp"

using namespace probcoh;

// The committed fixture is regenerated by make_replay_fixture; it must stay
// in sync with the generator.
TEST(ReplayFixture, CommittedFileMatchesGenerator) {
    const std::string committed = io::read_file(std::string(PROBCOH_FIXTURE_DIR) + "/replay_24x6x5.jsonl");
    EXPECT_TRUE(committed == fixture::jsonl()) << "run make_replay_fixture to refresh tests/fixtures";
}

// Identical prompts share a fingerprint, so the fixture holds one record
// per distinct (prompt, rep) and still answers every cell of the design.
TEST(ReplayFixture, CoversTheFullDesign) {
    const auto records = fixture::records();
    std::set<std::string> fps;
    for (const auto& r : records) fps.insert(r.request_fingerprint);
    EXPECT_EQ(fps.size(), records.size());
    std::set<std::string> needed;
    for (const auto& pair : builtin_catalog()) {
        for (QueryKind q : kAllQueries) {
            for (std::uint32_t rep = 0; rep < fixture::kReps; ++rep) {
                needed.insert(request_fingerprint(fixture::provider(), render_prompt(pair, q), rep));
            }
        }
    }
    EXPECT_EQ(fps, needed);
}
