#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chesslab/chess.hpp"

namespace chesslab {

enum class GameOutcome { white_wins, black_wins, draw, unknown };

std::string outcome_string(GameOutcome o);

struct GameRecord {
    std::map<std::string, std::string> headers;
    std::optional<int> white_elo;
    std::optional<int> black_elo;
    GameOutcome result = GameOutcome::unknown;

    std::vector<Move> moves;          // resolved moves, canonical SAN
    std::vector<BoardState> states;   // states[i] = position before moves[i]; .back() = final
    std::string raw_movetext;         // input movetext as given

    int plies() const { return static_cast<int>(moves.size()); }
    const BoardState& final_board() const { return states.back(); }
};

// Parses a single PGN game: optional `[Key "Value"]` headers followed by
// movetext. Movetext may span lines, contain `{...}` comments, `$n` NAGs
// and a trailing result token; variations are rejected. Errors:
// MalformedSan, IllegalMove, AmbiguousSan.
GameRecord parse_pgn(const std::string& text);

// Canonical movetext: "1.e4 e5 2.Nf3" — number + '.' glued to White's move,
// single spaces, minimal SAN, no result token. This is the exact textual
// form the tokenizer and the training pipeline consume.
std::string serialize_movetext(const GameRecord& record);
std::string movetext_from_moves(const std::vector<std::string>& san_moves);

// Appends one ply to an in-progress movetext string (used by arenas and
// samplers that build game text incrementally).
void append_ply(std::string& movetext, int fullmove_number, Color mover, const std::string& san);

// Movetext prefix through the first `turns` full turns (2*turns plies),
// used by the uniqueness audit. Shorter games return their full movetext.
std::string movetext_prefix(const std::string& normalized_movetext, int turns);

// Full PGN export with the headers the corpus carries.
std::string serialize_pgn(const GameRecord& record);

}  // namespace chesslab
