#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <set>

#include "chesslab/corpus.hpp"
#include "chesslab/corpusgen.hpp"
#include "chesslab/tokenizer.hpp"

using namespace chesslab;

namespace {

std::string make_stream(int n_games, uint64_t seed) {
    CorpusGenConfig cfg;
    cfg.n_games = n_games;
    cfg.seed = seed;
    cfg.max_turns = 30;
    const std::string path =
        (std::filesystem::temp_directory_path() / ("ds_stream_" + std::to_string(seed) + ".pgn"))
            .string();
    generate_corpus_pgn(cfg, path);
    const std::string text = read_text_file(path);
    std::filesystem::remove(path);
    return text;
}

}  // namespace

TEST_CASE("ingest parses, filters and counts skips") {
    std::string stream = make_stream(3, 11);
    stream += "\n[WhiteElo \"1500\"]\n[BlackElo \"1500\"]\n\n1.e4 e9 1-0\n\n";  // malformed
    IngestFilters filters;
    filters.min_plies = 2;
    IngestStats stats;
    const Corpus corpus = ingest(stream, filters, 1, SplitCounts{}, &stats);
    CHECK(corpus.records.size() == 3);
    CHECK(stats.accepted == 3);
    CHECK(stats.skipped_parse == 1);
}

TEST_CASE("ingest drops long games and games without Elo when required") {
    // A 1023+ character movetext is filtered by max_chars.
    std::string stream = make_stream(2, 12);
    stream += "\n1.e4 e5 2.Nf3 Nc6\n\n";  // headerless game lacking Elo
    IngestFilters filters;
    filters.require_elo = true;
    IngestStats stats;
    const Corpus corpus = ingest(stream, filters, 1, SplitCounts{}, &stats);
    CHECK(stats.skipped_filter == 1);
    CHECK(corpus.records.size() == 2);

    IngestFilters lenient = filters;
    lenient.require_elo = false;
    const Corpus corpus2 = ingest(stream, lenient, 1, SplitCounts{}, &stats);
    CHECK(corpus2.records.size() == 3);

    IngestFilters tight = filters;
    tight.max_chars = 40;
    IngestStats tight_stats;
    const Corpus corpus3 = ingest(stream, tight, 1, SplitCounts{}, &tight_stats);
    CHECK(tight_stats.skipped_filter >= 1);
}

TEST_CASE("split assignment is deterministic and disjoint") {
    const std::string stream = make_stream(40, 13);
    SplitCounts counts;
    counts.train = 20;
    counts.probe_train = 10;
    counts.probe_test = 10;
    const Corpus a = ingest(stream, IngestFilters{}, 7, counts);
    const Corpus b = ingest(stream, IngestFilters{}, 7, counts);
    REQUIRE(a.records.size() == 40);
    CHECK(a.records.size() == b.records.size());
    for (uint32_t id = 0; id < a.records.size(); ++id) {
        CHECK(a.split[id] == b.split[id]);
        CHECK(a.records[id].movetext == b.records[id].movetext);
    }
    CHECK(a.ids_of(SplitTag::train).size() == 20);
    CHECK(a.ids_of(SplitTag::probe_train).size() == 10);
    CHECK(a.ids_of(SplitTag::probe_test).size() == 10);

    // Pairwise disjoint by construction: each id carries exactly one tag.
    std::set<uint32_t> seen;
    for (SplitTag tag : {SplitTag::train, SplitTag::probe_train, SplitTag::probe_test})
        for (uint32_t id : a.ids_of(tag)) CHECK(seen.insert(id).second);
    CHECK(seen.size() == 40);

    // A different seed deals different splits.
    const Corpus c = ingest(stream, IngestFilters{}, 8, counts);
    bool any_diff = false;
    for (uint32_t id = 0; id < a.records.size() && !any_diff; ++id)
        any_diff = a.split[id] != c.split[id] || a.records[id].movetext != c.records[id].movetext;
    CHECK(any_diff);
}

TEST_CASE("oversubscribed splits fail loudly") {
    const std::string stream = make_stream(5, 14);
    SplitCounts counts;
    counts.train = 10;
    counts.probe_train = 2;
    counts.probe_test = 2;
    CHECK_THROWS_AS(ingest(stream, IngestFilters{}, 1, counts), Error);
}

TEST_CASE("corpus save/load round-trips") {
    const std::string stream = make_stream(12, 15);
    SplitCounts counts;
    counts.probe_train = 3;
    counts.probe_test = 3;
    const Corpus corpus = ingest(stream, IngestFilters{}, 3, counts);
    const std::string dir = (std::filesystem::temp_directory_path() / "corpus_rt").string();
    save_corpus(corpus, dir);
    const Corpus loaded = load_corpus(dir);
    REQUIRE(loaded.records.size() == corpus.records.size());
    for (uint32_t id = 0; id < corpus.records.size(); ++id) {
        CHECK(loaded.records[id].movetext == corpus.records[id].movetext);
        CHECK(loaded.records[id].white_elo == corpus.records[id].white_elo);
        CHECK(loaded.records[id].plies == corpus.records[id].plies);
        CHECK(loaded.split[id] == corpus.split[id]);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("skill partition respects the 1550/2050 thresholds") {
    Corpus corpus;
    auto add = [&](int elo) {
        CorpusRecord rec;
        rec.id = static_cast<uint32_t>(corpus.records.size());
        rec.movetext = "1.e4";
        rec.white_elo = elo;
        rec.black_elo = 1600;
        corpus.records.push_back(rec);
        corpus.split.push_back(SplitTag::train);
    };
    add(1400);
    add(2100);
    add(1700);
    add(1550);  // boundary: excluded
    add(2050);  // boundary: excluded
    const SkillPartition part = skill_partition(corpus, Color::white);
    CHECK(part.low == std::vector<uint32_t>{0});
    CHECK(part.high == std::vector<uint32_t>{1});
    CHECK(part.excluded == std::vector<uint32_t>{2, 3, 4});

    CorpusRecord no_elo;
    no_elo.id = 5;
    no_elo.movetext = "1.d4";
    corpus.records.push_back(no_elo);
    corpus.split.push_back(SplitTag::train);
    CHECK_THROWS_AS(skill_partition(corpus, Color::white), Error);
}

TEST_CASE("uniqueness audit distinguishes planted and novel games") {
    const std::string stream = make_stream(30, 16);
    Corpus corpus = ingest(stream, IngestFilters{}, 2, SplitCounts{});

    // Planted: samples drawn from the training corpus itself are never unique.
    std::vector<std::string> planted;
    for (int i = 0; i < 10; ++i) planted.push_back(corpus.records[i].movetext);
    const UniquenessReport bad = uniqueness_check(planted, corpus, 10, 10);
    CHECK(bad.fraction_unique() == 0.0);

    // Random 20-ply openings are effectively never in a tiny corpus.
    std::vector<std::string> fresh;
    for (uint64_t seed = 0; seed < 10; ++seed)
        fresh.push_back(random_opening_resample(seed, 20).pgn_prefix);
    const UniquenessReport good = uniqueness_check(fresh, corpus, 10, 10);
    CHECK(good.fraction_unique() == 1.0);

    CHECK_THROWS_AS(uniqueness_check(planted, corpus, 10, 100), Error);
}

TEST_CASE("generated corpus movetexts stay within one block and parse back") {
    CorpusGenConfig cfg;
    cfg.n_games = 30;
    cfg.seed = 17;
    cfg.max_turns = 45;
    cfg.max_chars = 510;
    for (int i = 0; i < cfg.n_games; ++i) {
        const GeneratedGame g = generate_game(cfg, i);
        CHECK(int(g.movetext.size()) <= cfg.max_chars);
        const GameRecord rec = parse_pgn(g.movetext);
        CHECK(rec.plies() == g.plies);
        CHECK(serialize_movetext(rec) == g.movetext);
    }
}
