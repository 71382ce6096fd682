#pragma once

#include <cstdint>
#include <string>

#include "chesslab/pgn.hpp"

namespace chesslab {

// Desk-scale corpus synthesis: engine-vs-engine games at sampled skill
// levels, labelled with the pseudo-Elo of each player. Stronger settings
// genuinely play better chess, so game text carries a real skill signal for
// the probes to find, and the Elo headers supply their supervision.
struct CorpusGenConfig {
    int n_games = 1000;
    uint64_t seed = 1;
    int max_turns = 45;        // hard cap; leftover games adjudicated by material
    int max_chars = 510;       // movetext budget, keeps ";"+game inside one block
    int elo_mean = 1700;
    int elo_sd = 400;
    int elo_pair_sd = 200;     // Black's Elo is drawn around White's
    int adjudicate_cp = 100;   // material margin that decides capped games
    int workers = 1;
};

struct GeneratedGame {
    std::string movetext;  // normalized, no delimiter, no result token
    int white_elo = 0;
    int black_elo = 0;
    GameOutcome result = GameOutcome::unknown;
    int plies = 0;
};

// Deterministic in (config.seed, game index) regardless of worker count.
GeneratedGame generate_game(const CorpusGenConfig& config, uint64_t game_index);

// Generates config.n_games games and writes them as a PGN stream
// (WhiteElo/BlackElo/Result headers + movetext) to `path`.
void generate_corpus_pgn(const CorpusGenConfig& config, const std::string& path);

}  // namespace chesslab
