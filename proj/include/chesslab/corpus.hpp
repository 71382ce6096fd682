#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "chesslab/pgn.hpp"

namespace chesslab {

enum class SplitTag : uint8_t { train = 0, probe_train = 1, probe_test = 2 };

const char* split_name(SplitTag tag);
SplitTag parse_split_name(const std::string& name);

// Slim per-game record. Full GameRecords (with per-ply boards) are
// re-materialized on demand by parsing the stored normalized movetext;
// keeping boards for every game would dwarf the corpus itself.
struct CorpusRecord {
    uint32_t id = 0;
    std::string movetext;  // normalized, no delimiter
    std::optional<int> white_elo;
    std::optional<int> black_elo;
    GameOutcome result = GameOutcome::unknown;
    uint16_t plies = 0;
    uint16_t full_turns = 0;  // completed turns by White (ceil(plies/2) from White's view)
};

struct Corpus {
    std::vector<CorpusRecord> records;   // record id == index
    std::vector<SplitTag> split;         // parallel to records

    std::vector<uint32_t> ids_of(SplitTag tag) const;
    const CorpusRecord& record(uint32_t id) const { return records.at(id); }
    GameRecord materialize(uint32_t id) const;

    // Prefix index over the train split: normalized movetext through the
    // first `turns` full turns -> record ids.
    void build_prefix_index(int turns = 10);
    const std::unordered_map<std::string, std::vector<uint32_t>>& prefix_index() const {
        return prefix_index_;
    }
    int prefix_turns() const { return prefix_turns_; }

private:
    std::unordered_map<std::string, std::vector<uint32_t>> prefix_index_;
    int prefix_turns_ = 0;
};

struct IngestFilters {
    int min_plies = 2;
    bool require_elo = true;
    int max_chars = 1023;  // normalized movetext length budget
};

struct SplitCounts {
    // -1 means "all remaining games" and is only valid for train.
    int64_t train = -1;
    int64_t probe_train = 0;
    int64_t probe_test = 0;
};

struct IngestStats {
    int64_t accepted = 0;
    int64_t skipped_parse = 0;
    int64_t skipped_filter = 0;
};

// Splits a concatenated PGN stream into per-game chunks (header blocks
// and/or movetext paragraphs).
std::vector<std::string> split_pgn_stream(const std::string& stream);

// Parses, filters and deterministically splits a PGN stream. Games that
// fail to parse or fail a filter are counted and skipped. Split assignment
// shuffles accepted records with mt19937_64(seed) and deals the requested
// counts, so identical inputs and seed give identical corpora.
Corpus ingest(const std::string& pgn_stream, const IngestFilters& filters, uint64_t seed,
              const SplitCounts& counts, IngestStats* stats = nullptr);

Corpus ingest_file(const std::string& path, const IngestFilters& filters, uint64_t seed,
                   const SplitCounts& counts, IngestStats* stats = nullptr);

// Directory layout: corpus.txt (";movetext" per line, ids are line numbers),
// corpus.meta.tsv (id, plies, turns, white_elo, black_elo, result),
// splits.tsv (id, split).
void save_corpus(const Corpus& corpus, const std::string& dir);
Corpus load_corpus(const std::string& dir);

// --- skill partition --------------------------------------------------------

constexpr int kLowEloThreshold = 1550;
constexpr int kHighEloThreshold = 2050;

struct SkillPartition {
    std::vector<uint32_t> low;       // player Elo < 1550
    std::vector<uint32_t> high;      // player Elo > 2050
    std::vector<uint32_t> excluded;  // [1550, 2050]
};

// Partition by the chosen player's Elo. Throws MissingElo when a candidate
// record lacks the header. `ids` limits scope (defaults to every record).
SkillPartition skill_partition(const Corpus& corpus, Color player);
SkillPartition skill_partition(const Corpus& corpus, Color player,
                               const std::vector<uint32_t>& ids);

// --- uniqueness audit -------------------------------------------------------

struct UniquenessReport {
    int sampled = 0;
    int unique = 0;
    double fraction_unique() const { return sampled == 0 ? 0.0 : double(unique) / sampled; }
};

// Fraction of sampled movetexts whose first-`turns` prefix does not occur in
// the corpus train-split index. Throws SampleTooSmall when fewer than
// sample_size movetexts are supplied.
UniquenessReport uniqueness_check(const std::vector<std::string>& sample_movetexts,
                                  Corpus& corpus, int turns = 10, int sample_size = 100);

}  // namespace chesslab
