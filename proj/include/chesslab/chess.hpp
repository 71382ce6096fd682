#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chesslab/common.hpp"

namespace chesslab {

enum class Color : uint8_t { white = 0, black = 1 };

inline Color opposite(Color c) { return c == Color::white ? Color::black : Color::white; }

enum class PieceType : uint8_t { none = 0, pawn, knight, bishop, rook, queen, king };

// One byte per square: 0 for empty, otherwise type in the low 3 bits and
// color in bit 3.
using Piece = uint8_t;

constexpr Piece kEmpty = 0;

inline Piece make_piece(Color c, PieceType t) {
    return static_cast<Piece>(static_cast<uint8_t>(t) | (static_cast<uint8_t>(c) << 3));
}
inline PieceType piece_type(Piece p) { return static_cast<PieceType>(p & 7); }
inline Color piece_color(Piece p) { return static_cast<Color>((p >> 3) & 1); }

// Squares are 0..63, a1 = 0, h8 = 63, index = rank*8 + file.
using Square = int;

constexpr Square kNoSquare = -1;

inline int file_of(Square s) { return s & 7; }
inline int rank_of(Square s) { return s >> 3; }
inline Square make_square(int file, int rank) { return rank * 8 + file; }
inline bool square_ok(Square s) { return s >= 0 && s < 64; }

std::string square_name(Square s);
// Returns kNoSquare for anything that is not a two-character board name.
Square parse_square(const std::string& name);

// Castling right bits.
enum CastlingRight : uint8_t {
    kWhiteKingside = 1,
    kWhiteQueenside = 2,
    kBlackKingside = 4,
    kBlackQueenside = 8,
};

struct Move {
    Square from = kNoSquare;
    Square to = kNoSquare;
    PieceType piece = PieceType::none;
    PieceType promotion = PieceType::none;
    bool is_capture = false;
    bool is_en_passant = false;
    bool is_castle_kingside = false;
    bool is_castle_queenside = false;
    std::string san;  // canonical SAN, filled by legal_moves / apply paths

    bool same_action(const Move& other) const {
        return from == other.from && to == other.to && promotion == other.promotion;
    }
};

struct BoardState {
    std::array<Piece, 64> squares{};
    Color side_to_move = Color::white;
    uint8_t castling = kWhiteKingside | kWhiteQueenside | kBlackKingside | kBlackQueenside;
    Square en_passant_target = kNoSquare;
    int halfmove_clock = 0;
    int fullmove_number = 1;

    static BoardState initial();

    Piece at(Square s) const { return squares[static_cast<std::size_t>(s)]; }
    void set(Square s, Piece p) { squares[static_cast<std::size_t>(s)] = p; }

    Square king_square(Color c) const;

    bool operator==(const BoardState& other) const = default;
};

// Validates the BoardState invariants (one king per side, pawn ranks,
// en-passant plausibility, opponent not in check). Returns an explanation
// for the first violation found.
std::optional<std::string> validate_board(const BoardState& board);

// --- move generation ------------------------------------------------------

bool is_square_attacked(const BoardState& board, Square s, Color by);
bool in_check(const BoardState& board, Color c);

// Applies a move without legality checking (the move must come from the
// generator). Updates castling rights, en passant, clocks.
BoardState apply_move(const BoardState& board, const Move& m);

// Complete legal move list with canonical SAN attached to each move.
std::vector<Move> legal_moves(const BoardState& board);

// Same list without SAN strings; much cheaper when only the actions matter
// (engine search, perft-style enumeration).
std::vector<Move> legal_moves_raw(const BoardState& board);

// True iff the side to move has at least one legal move. Cheaper than
// materializing the full list.
bool has_legal_move(const BoardState& board);

uint64_t perft(const BoardState& board, int depth);

// --- SAN ------------------------------------------------------------------

// Canonical SAN for a legal move: minimal disambiguation, "x" on captures,
// "=Q" promotions, "O-O"/"O-O-O" castling, "+"/"#" suffixes.
std::string move_to_san(const BoardState& board, const Move& m);

// Resolves a SAN token against the current position. Lenient on input
// (optional suffixes, missing capture marks, redundant disambiguation) but
// the returned Move carries the canonical SAN. Throws MalformedSan,
// IllegalMove or AmbiguousSan.
Move parse_san(const BoardState& board, const std::string& san);

// parse_san + apply_move in one step.
std::pair<BoardState, Move> apply_san_move(const BoardState& board, const std::string& san);

// Long algebraic form used by the UCI protocol ("e2e4", "e7e8q").
std::string move_to_uci(const Move& m);
Move parse_uci_move(const BoardState& board, const std::string& uci);

// --- FEN ------------------------------------------------------------------

std::string board_to_fen(const BoardState& board);
BoardState board_from_fen(const std::string& fen);

// --- probe labels ---------------------------------------------------------

// 13 square states from the mover's perspective: 0 empty, 1..6 the side to
// move's pawn/knight/bishop/rook/queen/king, 7..12 the opponent's in the
// same order.
constexpr int kNumPieceClasses = 13;

uint8_t square_label(const BoardState& board, Square s);
std::array<uint8_t, 64> board_to_labels(const BoardState& board);

const char* piece_class_name(int piece_class);

// --- random openings ------------------------------------------------------

struct RandomOpening {
    BoardState board;
    std::string pgn_prefix;           // normalized movetext, no leading ";"
    std::vector<Move> moves;
};

// Each ply is drawn uniformly from the legal moves of the current position.
// Throws GameEnded if the game terminates before `plies` moves were made.
RandomOpening random_opening(uint64_t seed, int plies);

// random_opening with automatic reseeding on GameEnded (seed', attempt+1).
// Gives up after `max_attempts`.
RandomOpening random_opening_resample(uint64_t seed, int plies, int max_attempts = 32);

}  // namespace chesslab
