#include "chesslab/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace chesslab {

const char* split_name(SplitTag tag) {
    switch (tag) {
        case SplitTag::train: return "train";
        case SplitTag::probe_train: return "probe_train";
        case SplitTag::probe_test: return "probe_test";
    }
    return "?";
}

SplitTag parse_split_name(const std::string& name) {
    if (name == "train") return SplitTag::train;
    if (name == "probe_train") return SplitTag::probe_train;
    if (name == "probe_test") return SplitTag::probe_test;
    fail(ErrorKind::IoFailure, "unknown split tag: " + name);
}

std::vector<uint32_t> Corpus::ids_of(SplitTag tag) const {
    std::vector<uint32_t> out;
    for (uint32_t id = 0; id < records.size(); ++id)
        if (split[id] == tag) out.push_back(id);
    return out;
}

GameRecord Corpus::materialize(uint32_t id) const {
    const CorpusRecord& rec = record(id);
    GameRecord game = parse_pgn(rec.movetext);
    game.white_elo = rec.white_elo;
    game.black_elo = rec.black_elo;
    game.result = rec.result;
    return game;
}

void Corpus::build_prefix_index(int turns) {
    prefix_index_.clear();
    prefix_turns_ = turns;
    for (uint32_t id = 0; id < records.size(); ++id) {
        if (split[id] != SplitTag::train) continue;
        prefix_index_[movetext_prefix(records[id].movetext, turns)].push_back(id);
    }
}

std::vector<std::string> split_pgn_stream(const std::string& stream) {
    // A game chunk is a run of header lines plus the following movetext
    // paragraph; a '[' at the start of a line after movetext opens the next
    // game, as does a blank line following movetext.
    std::vector<std::string> games;
    std::string current;
    bool in_movetext = false;
    std::istringstream in(stream);
    std::string line;
    auto flush = [&] {
        // Only keep chunks that contain something besides whitespace.
        if (current.find_first_not_of(" \t\r\n") != std::string::npos)
            games.push_back(current);
        current.clear();
        in_movetext = false;
    };
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const bool blank = line.find_first_not_of(" \t") == std::string::npos;
        if (blank) {
            if (in_movetext) flush();
            continue;
        }
        if (line[0] == '[' && in_movetext) flush();
        if (line[0] != '[') in_movetext = true;
        current += line;
        current += '\n';
    }
    flush();
    return games;
}

Corpus ingest(const std::string& pgn_stream, const IngestFilters& filters, uint64_t seed,
              const SplitCounts& counts, IngestStats* stats) {
    IngestStats local;
    Corpus corpus;
    for (const std::string& chunk : split_pgn_stream(pgn_stream)) {
        GameRecord game;
        try {
            game = parse_pgn(chunk);
        } catch (const Error&) {
            ++local.skipped_parse;
            continue;
        }
        const std::string movetext = serialize_movetext(game);
        const bool want_elo = filters.require_elo && !(game.white_elo && game.black_elo);
        if (game.plies() < filters.min_plies || int(movetext.size()) > filters.max_chars ||
            want_elo) {
            ++local.skipped_filter;
            continue;
        }
        CorpusRecord rec;
        rec.id = static_cast<uint32_t>(corpus.records.size());
        rec.movetext = movetext;
        rec.white_elo = game.white_elo;
        rec.black_elo = game.black_elo;
        rec.result = game.result;
        rec.plies = static_cast<uint16_t>(game.plies());
        rec.full_turns = static_cast<uint16_t>(game.plies() / 2);
        corpus.records.push_back(std::move(rec));
        ++local.accepted;
    }
    if (corpus.records.empty()) fail(ErrorKind::EmptyCorpus, "no games survived ingest");

    const int64_t n = static_cast<int64_t>(corpus.records.size());
    const int64_t want_probe = counts.probe_train + counts.probe_test;
    const int64_t want_train = counts.train < 0 ? n - want_probe : counts.train;
    if (want_train < 0 || want_train + want_probe > n)
        fail(ErrorKind::SampleTooSmall,
             "split wants " + std::to_string(want_train + want_probe) + " games but only " +
                 std::to_string(n) + " were accepted");

    std::vector<uint32_t> order(corpus.records.size());
    for (uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(splitmix64(seed));
    std::shuffle(order.begin(), order.end(), rng);

    // Deal splits off the shuffled order; accepted games beyond the
    // requested totals are dropped so the corpus is exactly its splits.
    constexpr uint8_t kDropped = 255;
    std::vector<uint8_t> assignment(corpus.records.size(), kDropped);
    int64_t cursor = 0;
    for (int64_t i = 0; i < counts.probe_train; ++i)
        assignment[order[cursor++]] = static_cast<uint8_t>(SplitTag::probe_train);
    for (int64_t i = 0; i < counts.probe_test; ++i)
        assignment[order[cursor++]] = static_cast<uint8_t>(SplitTag::probe_test);
    for (int64_t i = 0; i < want_train; ++i)
        assignment[order[cursor++]] = static_cast<uint8_t>(SplitTag::train);

    Corpus kept;
    for (uint32_t id = 0; id < corpus.records.size(); ++id) {
        if (assignment[id] == kDropped) continue;
        CorpusRecord rec = std::move(corpus.records[id]);
        rec.id = static_cast<uint32_t>(kept.records.size());
        kept.records.push_back(std::move(rec));
        kept.split.push_back(static_cast<SplitTag>(assignment[id]));
    }
    if (stats) *stats = local;
    return kept;
}

Corpus ingest_file(const std::string& path, const IngestFilters& filters, uint64_t seed,
                   const SplitCounts& counts, IngestStats* stats) {
    return ingest(read_text_file(path), filters, seed, counts, stats);
}

namespace {

std::string opt_int(const std::optional<int>& v) { return v ? std::to_string(*v) : "-"; }

std::optional<int> parse_opt_int(const std::string& s) {
    if (s == "-") return std::nullopt;
    return std::stoi(s);
}

GameOutcome parse_outcome(const std::string& s) {
    if (s == "1-0") return GameOutcome::white_wins;
    if (s == "0-1") return GameOutcome::black_wins;
    if (s == "1/2-1/2") return GameOutcome::draw;
    return GameOutcome::unknown;
}

}  // namespace

void save_corpus(const Corpus& corpus, const std::string& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream txt(dir + "/corpus.txt", std::ios::binary | std::ios::trunc);
        if (!txt) fail(ErrorKind::IoFailure, "cannot write corpus.txt in " + dir);
        for (const CorpusRecord& r : corpus.records) txt << ';' << r.movetext << '\n';
    }
    {
        std::ofstream meta(dir + "/corpus.meta.tsv", std::ios::binary | std::ios::trunc);
        if (!meta) fail(ErrorKind::IoFailure, "cannot write corpus.meta.tsv in " + dir);
        meta << "id\tplies\tturns\twhite_elo\tblack_elo\tresult\n";
        for (const CorpusRecord& r : corpus.records) {
            meta << r.id << '\t' << r.plies << '\t' << r.full_turns << '\t'
                 << opt_int(r.white_elo) << '\t' << opt_int(r.black_elo) << '\t'
                 << outcome_string(r.result) << '\n';
        }
    }
    {
        std::ofstream splits(dir + "/splits.tsv", std::ios::binary | std::ios::trunc);
        if (!splits) fail(ErrorKind::IoFailure, "cannot write splits.tsv in " + dir);
        splits << "id\tsplit\n";
        for (uint32_t id = 0; id < corpus.records.size(); ++id)
            splits << id << '\t' << split_name(corpus.split[id]) << '\n';
    }
}

Corpus load_corpus(const std::string& dir) {
    Corpus corpus;
    {
        std::ifstream txt(dir + "/corpus.txt", std::ios::binary);
        if (!txt) fail(ErrorKind::IoFailure, "cannot read corpus.txt in " + dir);
        std::string line;
        while (std::getline(txt, line)) {
            if (line.empty() || line[0] != ';')
                fail(ErrorKind::IoFailure, "corpus.txt line must start with ';'");
            CorpusRecord rec;
            rec.id = static_cast<uint32_t>(corpus.records.size());
            rec.movetext = line.substr(1);
            corpus.records.push_back(std::move(rec));
        }
    }
    {
        std::ifstream meta(dir + "/corpus.meta.tsv", std::ios::binary);
        if (!meta) fail(ErrorKind::IoFailure, "cannot read corpus.meta.tsv in " + dir);
        std::string line;
        std::getline(meta, line);  // header
        while (std::getline(meta, line)) {
            std::istringstream ls(line);
            std::string id_s, plies_s, turns_s, we_s, be_s, res_s;
            std::getline(ls, id_s, '\t');
            std::getline(ls, plies_s, '\t');
            std::getline(ls, turns_s, '\t');
            std::getline(ls, we_s, '\t');
            std::getline(ls, be_s, '\t');
            std::getline(ls, res_s, '\t');
            const uint32_t id = static_cast<uint32_t>(std::stoul(id_s));
            if (id >= corpus.records.size())
                fail(ErrorKind::IoFailure, "meta id out of range: " + id_s);
            CorpusRecord& rec = corpus.records[id];
            rec.plies = static_cast<uint16_t>(std::stoul(plies_s));
            rec.full_turns = static_cast<uint16_t>(std::stoul(turns_s));
            rec.white_elo = parse_opt_int(we_s);
            rec.black_elo = parse_opt_int(be_s);
            rec.result = parse_outcome(res_s);
        }
    }
    {
        std::ifstream splits(dir + "/splits.tsv", std::ios::binary);
        if (!splits) fail(ErrorKind::IoFailure, "cannot read splits.tsv in " + dir);
        corpus.split.assign(corpus.records.size(), SplitTag::train);
        std::string line;
        std::getline(splits, line);  // header
        while (std::getline(splits, line)) {
            std::istringstream ls(line);
            std::string id_s, tag_s;
            std::getline(ls, id_s, '\t');
            std::getline(ls, tag_s, '\t');
            corpus.split.at(std::stoul(id_s)) = parse_split_name(tag_s);
        }
    }
    return corpus;
}

SkillPartition skill_partition(const Corpus& corpus, Color player) {
    std::vector<uint32_t> all(corpus.records.size());
    for (uint32_t i = 0; i < all.size(); ++i) all[i] = i;
    return skill_partition(corpus, player, all);
}

SkillPartition skill_partition(const Corpus& corpus, Color player,
                               const std::vector<uint32_t>& ids) {
    SkillPartition part;
    for (uint32_t id : ids) {
        const CorpusRecord& rec = corpus.record(id);
        const std::optional<int>& elo = player == Color::white ? rec.white_elo : rec.black_elo;
        if (!elo)
            fail(ErrorKind::MissingElo, "record " + std::to_string(id) + " has no Elo header");
        if (*elo < kLowEloThreshold) {
            part.low.push_back(id);
        } else if (*elo > kHighEloThreshold) {
            part.high.push_back(id);
        } else {
            part.excluded.push_back(id);
        }
    }
    return part;
}

UniquenessReport uniqueness_check(const std::vector<std::string>& sample_movetexts,
                                  Corpus& corpus, int turns, int sample_size) {
    if (int(sample_movetexts.size()) < sample_size)
        fail(ErrorKind::SampleTooSmall,
             "uniqueness check wants " + std::to_string(sample_size) + " games, got " +
                 std::to_string(sample_movetexts.size()));
    if (corpus.prefix_index().empty() || corpus.prefix_turns() != turns)
        corpus.build_prefix_index(turns);
    UniquenessReport report;
    report.sampled = sample_size;
    for (int i = 0; i < sample_size; ++i) {
        const std::string prefix = movetext_prefix(sample_movetexts[i], turns);
        if (corpus.prefix_index().find(prefix) == corpus.prefix_index().end()) ++report.unique;
    }
    return report;
}

}  // namespace chesslab
