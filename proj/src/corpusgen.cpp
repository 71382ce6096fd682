#include "chesslab/corpusgen.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "chesslab/engine.hpp"

namespace chesslab {

GeneratedGame generate_game(const CorpusGenConfig& config, uint64_t game_index) {
    std::mt19937_64 rng(derive_seed(config.seed, game_index));

    std::normal_distribution<double> elo_dist(config.elo_mean, config.elo_sd);
    std::normal_distribution<double> pair_dist(0.0, config.elo_pair_sd);
    GeneratedGame game;
    game.white_elo = std::clamp(int(std::lround(elo_dist(rng))), MaterialEngine::kMinElo + 100,
                                MaterialEngine::kMaxElo - 100);
    game.black_elo = std::clamp(int(std::lround(game.white_elo + pair_dist(rng))),
                                MaterialEngine::kMinElo + 100, MaterialEngine::kMaxElo - 100);

    MaterialEngine white(game.white_elo, rng());
    MaterialEngine black(game.black_elo, rng());

    BoardState board = BoardState::initial();
    std::string movetext;
    while (board.fullmove_number <= config.max_turns) {
        if (!has_legal_move(board)) {
            if (in_check(board, board.side_to_move)) {
                game.result = board.side_to_move == Color::white ? GameOutcome::black_wins
                                                                 : GameOutcome::white_wins;
            } else {
                game.result = GameOutcome::draw;  // stalemate
            }
            game.movetext = movetext;
            return game;
        }
        MaterialEngine& mover = board.side_to_move == Color::white ? white : black;
        const Move m = mover.choose_move(board);

        std::string appended = movetext;
        append_ply(appended, board.fullmove_number, board.side_to_move, m.san);
        if (int(appended.size()) > config.max_chars) break;
        movetext = std::move(appended);
        board = apply_move(board, m);
        ++game.plies;
    }

    // Capped: adjudicate the leftover position by static evaluation.
    const int cp_stm = MaterialEngine::eval_cp(board);
    const int cp_white = board.side_to_move == Color::white ? cp_stm : -cp_stm;
    if (cp_white > config.adjudicate_cp) {
        game.result = GameOutcome::white_wins;
    } else if (cp_white < -config.adjudicate_cp) {
        game.result = GameOutcome::black_wins;
    } else {
        game.result = GameOutcome::draw;
    }
    game.movetext = movetext;
    return game;
}

void generate_corpus_pgn(const CorpusGenConfig& config, const std::string& path) {
    std::vector<GeneratedGame> games(static_cast<std::size_t>(config.n_games));
    parallel_for(games.size(), config.workers,
                 [&](std::size_t i) { games[i] = generate_game(config, i); });

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::IoFailure, "cannot open for writing: " + path);
    for (const GeneratedGame& g : games) {
        out << "[WhiteElo \"" << g.white_elo << "\"]\n";
        out << "[BlackElo \"" << g.black_elo << "\"]\n";
        out << "[Result \"" << outcome_string(g.result) << "\"]\n\n";
        out << g.movetext << ' ' << outcome_string(g.result) << "\n\n";
    }
    if (!out) fail(ErrorKind::IoFailure, "write failed: " + path);
}

}  // namespace chesslab
