#include "chesslab/chess.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <random>
#include <sstream>

namespace chesslab {

namespace {

constexpr int kKnightSteps[8][2] = {{1, 2},  {2, 1},  {2, -1}, {1, -2},
                                    {-1, -2}, {-2, -1}, {-2, 1}, {-1, 2}};
constexpr int kKingSteps[8][2] = {{1, 0},  {1, 1},  {0, 1},  {-1, 1},
                                  {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
constexpr int kBishopDirs[4][2] = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
constexpr int kRookDirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};

char piece_letter(PieceType t) {
    switch (t) {
        case PieceType::knight: return 'N';
        case PieceType::bishop: return 'B';
        case PieceType::rook: return 'R';
        case PieceType::queen: return 'Q';
        case PieceType::king: return 'K';
        default: return '?';
    }
}

PieceType letter_piece(char c) {
    switch (c) {
        case 'N': return PieceType::knight;
        case 'B': return PieceType::bishop;
        case 'R': return PieceType::rook;
        case 'Q': return PieceType::queen;
        case 'K': return PieceType::king;
        default: return PieceType::none;
    }
}

int pawn_dir(Color c) { return c == Color::white ? 1 : -1; }
int pawn_start_rank(Color c) { return c == Color::white ? 1 : 6; }
int pawn_promo_rank(Color c) { return c == Color::white ? 7 : 0; }

void push_pawn_move(std::vector<Move>& out, Square from, Square to, bool capture, bool ep,
                    Color us) {
    Move m;
    m.from = from;
    m.to = to;
    m.piece = PieceType::pawn;
    m.is_capture = capture;
    m.is_en_passant = ep;
    if (rank_of(to) == pawn_promo_rank(us)) {
        for (PieceType promo :
             {PieceType::queen, PieceType::rook, PieceType::bishop, PieceType::knight}) {
            Move pm = m;
            pm.promotion = promo;
            out.push_back(pm);
        }
    } else {
        out.push_back(m);
    }
}

// Pseudo-legal moves: everything except the "own king left in check" filter.
// Castling is emitted fully checked (rights, emptiness, attacked squares)
// because its legality does not reduce to the king-safety filter.
std::vector<Move> pseudo_moves(const BoardState& board) {
    std::vector<Move> out;
    out.reserve(48);
    const Color us = board.side_to_move;
    const Color them = opposite(us);

    for (Square from = 0; from < 64; ++from) {
        const Piece p = board.at(from);
        if (p == kEmpty || piece_color(p) != us) continue;
        const PieceType t = piece_type(p);
        const int f = file_of(from);
        const int r = rank_of(from);

        if (t == PieceType::pawn) {
            const int dir = pawn_dir(us);
            const Square one = make_square(f, r + dir);
            if (board.at(one) == kEmpty) {
                push_pawn_move(out, from, one, false, false, us);
                if (r == pawn_start_rank(us)) {
                    const Square two = make_square(f, r + 2 * dir);
                    if (board.at(two) == kEmpty) push_pawn_move(out, from, two, false, false, us);
                }
            }
            for (int df : {-1, 1}) {
                const int nf = f + df;
                const int nr = r + dir;
                if (nf < 0 || nf > 7 || nr < 0 || nr > 7) continue;
                const Square to = make_square(nf, nr);
                const Piece target = board.at(to);
                if (target != kEmpty && piece_color(target) == them) {
                    push_pawn_move(out, from, to, true, false, us);
                } else if (to == board.en_passant_target) {
                    push_pawn_move(out, from, to, true, true, us);
                }
            }
        } else if (t == PieceType::knight || t == PieceType::king) {
            const auto& steps = (t == PieceType::knight) ? kKnightSteps : kKingSteps;
            for (const auto& d : steps) {
                const int nf = f + d[0];
                const int nr = r + d[1];
                if (nf < 0 || nf > 7 || nr < 0 || nr > 7) continue;
                const Square to = make_square(nf, nr);
                const Piece target = board.at(to);
                if (target != kEmpty && piece_color(target) == us) continue;
                Move m;
                m.from = from;
                m.to = to;
                m.piece = t;
                m.is_capture = target != kEmpty;
                out.push_back(m);
            }
        } else {
            const bool diag = (t == PieceType::bishop || t == PieceType::queen);
            const bool ortho = (t == PieceType::rook || t == PieceType::queen);
            for (int set = 0; set < 2; ++set) {
                if (set == 0 && !diag) continue;
                if (set == 1 && !ortho) continue;
                const auto& dirs = (set == 0) ? kBishopDirs : kRookDirs;
                for (const auto& d : dirs) {
                    int nf = f + d[0];
                    int nr = r + d[1];
                    while (nf >= 0 && nf <= 7 && nr >= 0 && nr <= 7) {
                        const Square to = make_square(nf, nr);
                        const Piece target = board.at(to);
                        if (target != kEmpty && piece_color(target) == us) break;
                        Move m;
                        m.from = from;
                        m.to = to;
                        m.piece = t;
                        m.is_capture = target != kEmpty;
                        out.push_back(m);
                        if (target != kEmpty) break;
                        nf += d[0];
                        nr += d[1];
                    }
                }
            }
        }
    }

    // Castling. Home squares are fixed (no Chess960).
    const int home_rank = (us == Color::white) ? 0 : 7;
    const Square king_from = make_square(4, home_rank);
    if (board.at(king_from) == make_piece(us, PieceType::king) && !in_check(board, us)) {
        const uint8_t ks_right = (us == Color::white) ? kWhiteKingside : kBlackKingside;
        const uint8_t qs_right = (us == Color::white) ? kWhiteQueenside : kBlackQueenside;
        if ((board.castling & ks_right) != 0 &&
            board.at(make_square(7, home_rank)) == make_piece(us, PieceType::rook) &&
            board.at(make_square(5, home_rank)) == kEmpty &&
            board.at(make_square(6, home_rank)) == kEmpty &&
            !is_square_attacked(board, make_square(5, home_rank), them) &&
            !is_square_attacked(board, make_square(6, home_rank), them)) {
            Move m;
            m.from = king_from;
            m.to = make_square(6, home_rank);
            m.piece = PieceType::king;
            m.is_castle_kingside = true;
            out.push_back(m);
        }
        if ((board.castling & qs_right) != 0 &&
            board.at(make_square(0, home_rank)) == make_piece(us, PieceType::rook) &&
            board.at(make_square(1, home_rank)) == kEmpty &&
            board.at(make_square(2, home_rank)) == kEmpty &&
            board.at(make_square(3, home_rank)) == kEmpty &&
            !is_square_attacked(board, make_square(3, home_rank), them) &&
            !is_square_attacked(board, make_square(2, home_rank), them)) {
            Move m;
            m.from = king_from;
            m.to = make_square(2, home_rank);
            m.piece = PieceType::king;
            m.is_castle_queenside = true;
            out.push_back(m);
        }
    }
    return out;
}

bool leaves_king_in_check(const BoardState& board, const Move& m) {
    const BoardState next = apply_move(board, m);
    return in_check(next, board.side_to_move);
}

std::vector<Move> legal_moves_no_san(const BoardState& board) {
    std::vector<Move> out = pseudo_moves(board);
    out.erase(std::remove_if(out.begin(), out.end(),
                             [&](const Move& m) { return leaves_king_in_check(board, m); }),
              out.end());
    return out;
}

}  // namespace

std::string square_name(Square s) {
    std::string name(2, ' ');
    name[0] = static_cast<char>('a' + file_of(s));
    name[1] = static_cast<char>('1' + rank_of(s));
    return name;
}

Square parse_square(const std::string& name) {
    if (name.size() != 2 || name[0] < 'a' || name[0] > 'h' || name[1] < '1' || name[1] > '8')
        return kNoSquare;
    return make_square(name[0] - 'a', name[1] - '1');
}

BoardState BoardState::initial() {
    BoardState b;
    const PieceType back[8] = {PieceType::rook, PieceType::knight, PieceType::bishop,
                               PieceType::queen, PieceType::king, PieceType::bishop,
                               PieceType::knight, PieceType::rook};
    for (int f = 0; f < 8; ++f) {
        b.set(make_square(f, 0), make_piece(Color::white, back[f]));
        b.set(make_square(f, 1), make_piece(Color::white, PieceType::pawn));
        b.set(make_square(f, 6), make_piece(Color::black, PieceType::pawn));
        b.set(make_square(f, 7), make_piece(Color::black, back[f]));
    }
    return b;
}

Square BoardState::king_square(Color c) const {
    const Piece k = make_piece(c, PieceType::king);
    for (Square s = 0; s < 64; ++s)
        if (squares[static_cast<std::size_t>(s)] == k) return s;
    return kNoSquare;
}

std::optional<std::string> validate_board(const BoardState& board) {
    int kings[2] = {0, 0};
    for (Square s = 0; s < 64; ++s) {
        const Piece p = board.at(s);
        if (p == kEmpty) continue;
        const PieceType t = piece_type(p);
        if (t == PieceType::king) kings[static_cast<int>(piece_color(p))]++;
        if (t == PieceType::pawn && (rank_of(s) == 0 || rank_of(s) == 7))
            return "pawn on back rank at " + square_name(s);
    }
    if (kings[0] != 1 || kings[1] != 1) return "each side must have exactly one king";
    if (board.en_passant_target != kNoSquare) {
        const int r = rank_of(board.en_passant_target);
        if (board.side_to_move == Color::white ? r != 5 : r != 2)
            return "en passant target on impossible rank";
        // The pushed pawn must be sitting in front of the target square.
        const int pawn_rank = board.side_to_move == Color::white ? 4 : 3;
        const Square pawn_sq = make_square(file_of(board.en_passant_target), pawn_rank);
        if (board.at(pawn_sq) != make_piece(opposite(board.side_to_move), PieceType::pawn))
            return "en passant target without a double-pushed pawn";
    }
    if (in_check(board, opposite(board.side_to_move)))
        return "side not to move is in check";
    return std::nullopt;
}

bool is_square_attacked(const BoardState& board, Square s, Color by) {
    const int f = file_of(s);
    const int r = rank_of(s);

    // Pawns attack s from one rank "behind" it relative to their push direction.
    const int pr = r - pawn_dir(by);
    if (pr >= 0 && pr <= 7) {
        for (int df : {-1, 1}) {
            const int pf = f + df;
            if (pf < 0 || pf > 7) continue;
            if (board.at(make_square(pf, pr)) == make_piece(by, PieceType::pawn)) return true;
        }
    }
    for (const auto& d : kKnightSteps) {
        const int nf = f + d[0];
        const int nr = r + d[1];
        if (nf < 0 || nf > 7 || nr < 0 || nr > 7) continue;
        if (board.at(make_square(nf, nr)) == make_piece(by, PieceType::knight)) return true;
    }
    for (const auto& d : kKingSteps) {
        const int nf = f + d[0];
        const int nr = r + d[1];
        if (nf < 0 || nf > 7 || nr < 0 || nr > 7) continue;
        if (board.at(make_square(nf, nr)) == make_piece(by, PieceType::king)) return true;
    }
    for (const auto& d : kBishopDirs) {
        int nf = f + d[0];
        int nr = r + d[1];
        while (nf >= 0 && nf <= 7 && nr >= 0 && nr <= 7) {
            const Piece p = board.at(make_square(nf, nr));
            if (p != kEmpty) {
                if (piece_color(p) == by &&
                    (piece_type(p) == PieceType::bishop || piece_type(p) == PieceType::queen))
                    return true;
                break;
            }
            nf += d[0];
            nr += d[1];
        }
    }
    for (const auto& d : kRookDirs) {
        int nf = f + d[0];
        int nr = r + d[1];
        while (nf >= 0 && nf <= 7 && nr >= 0 && nr <= 7) {
            const Piece p = board.at(make_square(nf, nr));
            if (p != kEmpty) {
                if (piece_color(p) == by &&
                    (piece_type(p) == PieceType::rook || piece_type(p) == PieceType::queen))
                    return true;
                break;
            }
            nf += d[0];
            nr += d[1];
        }
    }
    return false;
}

bool in_check(const BoardState& board, Color c) {
    const Square k = board.king_square(c);
    return k != kNoSquare && is_square_attacked(board, k, opposite(c));
}

BoardState apply_move(const BoardState& board, const Move& m) {
    BoardState next = board;
    const Color us = board.side_to_move;
    const Piece moving = board.at(m.from);

    next.en_passant_target = kNoSquare;
    next.halfmove_clock = board.halfmove_clock + 1;
    if (m.is_capture || m.piece == PieceType::pawn) next.halfmove_clock = 0;

    next.set(m.from, kEmpty);
    if (m.is_en_passant) {
        // Captured pawn sits beside the destination, not on it.
        next.set(make_square(file_of(m.to), rank_of(m.from)), kEmpty);
    }
    if (m.promotion != PieceType::none) {
        next.set(m.to, make_piece(us, m.promotion));
    } else {
        next.set(m.to, moving);
    }

    if (m.is_castle_kingside || m.is_castle_queenside) {
        const int home_rank = (us == Color::white) ? 0 : 7;
        const Square rook_from = make_square(m.is_castle_kingside ? 7 : 0, home_rank);
        const Square rook_to = make_square(m.is_castle_kingside ? 5 : 3, home_rank);
        next.set(rook_from, kEmpty);
        next.set(rook_to, make_piece(us, PieceType::rook));
    }

    if (m.piece == PieceType::pawn && std::abs(rank_of(m.to) - rank_of(m.from)) == 2) {
        next.en_passant_target = make_square(file_of(m.from), (rank_of(m.from) + rank_of(m.to)) / 2);
    }

    // Castling rights: lost when the king or a rook moves, or a rook is captured.
    auto clear_right = [&](Square rook_home, uint8_t bit) {
        if (m.from == rook_home || m.to == rook_home) next.castling &= static_cast<uint8_t>(~bit);
    };
    if (m.piece == PieceType::king) {
        next.castling &= static_cast<uint8_t>(
            us == Color::white ? ~(kWhiteKingside | kWhiteQueenside)
                               : ~(kBlackKingside | kBlackQueenside));
    }
    clear_right(make_square(7, 0), kWhiteKingside);
    clear_right(make_square(0, 0), kWhiteQueenside);
    clear_right(make_square(7, 7), kBlackKingside);
    clear_right(make_square(0, 7), kBlackQueenside);

    next.side_to_move = opposite(us);
    if (us == Color::black) next.fullmove_number = board.fullmove_number + 1;
    return next;
}

bool has_legal_move(const BoardState& board) {
    for (const Move& m : pseudo_moves(board))
        if (!leaves_king_in_check(board, m)) return true;
    return false;
}

std::string move_to_san(const BoardState& board, const Move& m) {
    std::string san;
    if (m.is_castle_kingside) {
        san = "O-O";
    } else if (m.is_castle_queenside) {
        san = "O-O-O";
    } else if (m.piece == PieceType::pawn) {
        if (m.is_capture) {
            san += static_cast<char>('a' + file_of(m.from));
            san += 'x';
        }
        san += square_name(m.to);
        if (m.promotion != PieceType::none) {
            san += '=';
            san += piece_letter(m.promotion);
        }
    } else {
        san += piece_letter(m.piece);
        // Minimal disambiguation against other legal moves of the same piece
        // type to the same square.
        bool need_any = false, file_unique = true, rank_unique = true;
        for (const Move& other : legal_moves_no_san(board)) {
            if (other.piece != m.piece || other.to != m.to || other.from == m.from) continue;
            need_any = true;
            if (file_of(other.from) == file_of(m.from)) file_unique = false;
            if (rank_of(other.from) == rank_of(m.from)) rank_unique = false;
        }
        if (need_any) {
            if (file_unique) {
                san += static_cast<char>('a' + file_of(m.from));
            } else if (rank_unique) {
                san += static_cast<char>('1' + rank_of(m.from));
            } else {
                san += square_name(m.from);
            }
        }
        if (m.is_capture) san += 'x';
        san += square_name(m.to);
    }

    const BoardState next = apply_move(board, m);
    if (in_check(next, next.side_to_move)) {
        san += has_legal_move(next) ? '+' : '#';
    }
    return san;
}

std::vector<Move> legal_moves(const BoardState& board) {
    std::vector<Move> out = legal_moves_no_san(board);
    for (Move& m : out) m.san = move_to_san(board, m);
    return out;
}

std::vector<Move> legal_moves_raw(const BoardState& board) { return legal_moves_no_san(board); }

uint64_t perft(const BoardState& board, int depth) {
    if (depth <= 0) return 1;
    uint64_t nodes = 0;
    for (const Move& m : legal_moves_no_san(board)) {
        if (depth == 1) {
            ++nodes;
        } else {
            nodes += perft(apply_move(board, m), depth - 1);
        }
    }
    return nodes;
}

namespace {

struct SanPattern {
    PieceType piece = PieceType::pawn;
    int from_file = -1;
    int from_rank = -1;
    Square to = kNoSquare;
    PieceType promotion = PieceType::none;
    bool castle_kingside = false;
    bool castle_queenside = false;
};

SanPattern parse_san_pattern(const std::string& raw) {
    std::string s = raw;
    // Strip check/mate marks and annotation glyphs; they are re-derived.
    while (!s.empty() && (s.back() == '+' || s.back() == '#' || s.back() == '!' || s.back() == '?'))
        s.pop_back();
    if (s.empty()) fail(ErrorKind::MalformedSan, "empty SAN token");

    SanPattern pat;
    if (s == "O-O" || s == "0-0") {
        pat.castle_kingside = true;
        return pat;
    }
    if (s == "O-O-O" || s == "0-0-0") {
        pat.castle_queenside = true;
        return pat;
    }

    std::size_t i = 0;
    if (letter_piece(s[0]) != PieceType::none) {
        pat.piece = letter_piece(s[0]);
        ++i;
    }

    // Promotion suffix ("=Q", lenient "Q").
    if (s.size() >= i + 1) {
        std::size_t end = s.size();
        if (end >= 2 && s[end - 2] == '=' && letter_piece(s[end - 1]) != PieceType::none) {
            pat.promotion = letter_piece(s[end - 1]);
            if (pat.promotion == PieceType::king)
                fail(ErrorKind::MalformedSan, "cannot promote to king: " + raw);
            s = s.substr(0, end - 2);
        }
    }

    // Remainder: [file][rank] optional disambiguation, optional 'x', target square.
    std::string body = s.substr(i);
    if (body.size() < 2) fail(ErrorKind::MalformedSan, "truncated SAN token: " + raw);
    const std::string target = body.substr(body.size() - 2);
    if (target[0] < 'a' || target[0] > 'h' || target[1] < '1' || target[1] > '9')
        fail(ErrorKind::MalformedSan, "bad target square in: " + raw);
    if (target[1] == '9') fail(ErrorKind::IllegalMove, "target square off board: " + raw);
    pat.to = parse_square(target);
    body = body.substr(0, body.size() - 2);
    if (!body.empty() && body.back() == 'x') body.pop_back();
    for (char c : body) {
        if (c >= 'a' && c <= 'h' && pat.from_file < 0) {
            pat.from_file = c - 'a';
        } else if (c >= '1' && c <= '8' && pat.from_rank < 0) {
            pat.from_rank = c - '1';
        } else {
            fail(ErrorKind::MalformedSan, "unparseable SAN token: " + raw);
        }
    }
    if (pat.piece == PieceType::pawn && pat.from_rank >= 0 && pat.from_file < 0)
        fail(ErrorKind::MalformedSan, "pawn move with rank-only disambiguation: " + raw);
    return pat;
}

}  // namespace

Move parse_san(const BoardState& board, const std::string& san) {
    const SanPattern pat = parse_san_pattern(san);
    std::vector<Move> candidates;
    for (const Move& m : legal_moves_no_san(board)) {
        if (pat.castle_kingside) {
            if (!m.is_castle_kingside) continue;
        } else if (pat.castle_queenside) {
            if (!m.is_castle_queenside) continue;
        } else {
            if (m.is_castle_kingside || m.is_castle_queenside) continue;
            if (m.piece != pat.piece || m.to != pat.to) continue;
            if (m.promotion != pat.promotion) continue;
            if (pat.from_file >= 0 && file_of(m.from) != pat.from_file) continue;
            if (pat.from_rank >= 0 && rank_of(m.from) != pat.from_rank) continue;
        }
        candidates.push_back(m);
    }
    if (candidates.empty())
        fail(ErrorKind::IllegalMove, "no legal move matches '" + san + "' in " + board_to_fen(board));
    if (candidates.size() > 1)
        fail(ErrorKind::AmbiguousSan,
             "'" + san + "' matches " + std::to_string(candidates.size()) + " moves in " +
                 board_to_fen(board));
    Move m = candidates.front();
    m.san = move_to_san(board, m);
    return m;
}

std::pair<BoardState, Move> apply_san_move(const BoardState& board, const std::string& san) {
    const Move m = parse_san(board, san);
    return {apply_move(board, m), m};
}

std::string move_to_uci(const Move& m) {
    std::string s = square_name(m.from) + square_name(m.to);
    if (m.promotion != PieceType::none)
        s += static_cast<char>(std::tolower(piece_letter(m.promotion)));
    return s;
}

Move parse_uci_move(const BoardState& board, const std::string& uci) {
    if (uci.size() < 4 || uci.size() > 5)
        fail(ErrorKind::MalformedSan, "bad UCI move: " + uci);
    const Square from = parse_square(uci.substr(0, 2));
    const Square to = parse_square(uci.substr(2, 2));
    if (from == kNoSquare || to == kNoSquare)
        fail(ErrorKind::MalformedSan, "bad UCI move: " + uci);
    PieceType promo = PieceType::none;
    if (uci.size() == 5) {
        promo = letter_piece(static_cast<char>(std::toupper(uci[4])));
        if (promo == PieceType::none) fail(ErrorKind::MalformedSan, "bad UCI promotion: " + uci);
    }
    for (const Move& m : legal_moves_no_san(board)) {
        if (m.from == from && m.to == to && m.promotion == promo) {
            Move out = m;
            out.san = move_to_san(board, out);
            return out;
        }
    }
    fail(ErrorKind::IllegalMove, "UCI move not legal here: " + uci);
}

std::string board_to_fen(const BoardState& board) {
    std::ostringstream out;
    for (int r = 7; r >= 0; --r) {
        int empties = 0;
        for (int f = 0; f < 8; ++f) {
            const Piece p = board.at(make_square(f, r));
            if (p == kEmpty) {
                ++empties;
                continue;
            }
            if (empties > 0) {
                out << empties;
                empties = 0;
            }
            char c = piece_type(p) == PieceType::pawn ? 'P' : piece_letter(piece_type(p));
            if (piece_color(p) == Color::black) c = static_cast<char>(std::tolower(c));
            out << c;
        }
        if (empties > 0) out << empties;
        if (r > 0) out << '/';
    }
    out << (board.side_to_move == Color::white ? " w " : " b ");
    if (board.castling == 0) {
        out << '-';
    } else {
        if (board.castling & kWhiteKingside) out << 'K';
        if (board.castling & kWhiteQueenside) out << 'Q';
        if (board.castling & kBlackKingside) out << 'k';
        if (board.castling & kBlackQueenside) out << 'q';
    }
    out << ' ';
    out << (board.en_passant_target == kNoSquare ? "-" : square_name(board.en_passant_target));
    out << ' ' << board.halfmove_clock << ' ' << board.fullmove_number;
    return out.str();
}

BoardState board_from_fen(const std::string& fen) {
    std::istringstream in(fen);
    std::string placement, stm, castling, ep;
    in >> placement >> stm >> castling >> ep;
    if (!in) fail(ErrorKind::InvalidFen, "FEN needs at least 4 fields: " + fen);

    BoardState b;
    b.squares.fill(kEmpty);
    b.castling = 0;
    int r = 7, f = 0;
    for (char c : placement) {
        if (c == '/') {
            if (f != 8) fail(ErrorKind::InvalidFen, "short rank in FEN: " + fen);
            --r;
            f = 0;
            if (r < 0) fail(ErrorKind::InvalidFen, "too many ranks in FEN: " + fen);
            continue;
        }
        if (c >= '1' && c <= '8') {
            f += c - '0';
            if (f > 8) fail(ErrorKind::InvalidFen, "rank overflow in FEN: " + fen);
            continue;
        }
        const Color color = std::isupper(static_cast<unsigned char>(c)) ? Color::white : Color::black;
        const PieceType t = [&] {
            switch (std::toupper(static_cast<unsigned char>(c))) {
                case 'P': return PieceType::pawn;
                case 'N': return PieceType::knight;
                case 'B': return PieceType::bishop;
                case 'R': return PieceType::rook;
                case 'Q': return PieceType::queen;
                case 'K': return PieceType::king;
                default: fail(ErrorKind::InvalidFen, std::string("bad piece '") + c + "' in FEN");
            }
        }();
        if (f > 7) fail(ErrorKind::InvalidFen, "rank overflow in FEN: " + fen);
        b.set(make_square(f, r), make_piece(color, t));
        ++f;
    }
    if (r != 0 || f != 8) fail(ErrorKind::InvalidFen, "incomplete placement in FEN: " + fen);

    if (stm == "w") {
        b.side_to_move = Color::white;
    } else if (stm == "b") {
        b.side_to_move = Color::black;
    } else {
        fail(ErrorKind::InvalidFen, "bad side to move in FEN: " + fen);
    }

    if (castling != "-") {
        for (char c : castling) {
            switch (c) {
                case 'K': b.castling |= kWhiteKingside; break;
                case 'Q': b.castling |= kWhiteQueenside; break;
                case 'k': b.castling |= kBlackKingside; break;
                case 'q': b.castling |= kBlackQueenside; break;
                default: fail(ErrorKind::InvalidFen, "bad castling field in FEN: " + fen);
            }
        }
    }
    if (ep != "-") {
        b.en_passant_target = parse_square(ep);
        if (b.en_passant_target == kNoSquare)
            fail(ErrorKind::InvalidFen, "bad en passant square in FEN: " + fen);
    }
    // Clocks are optional in test fixtures.
    int half = 0, full = 1;
    if (in >> half) b.halfmove_clock = half;
    if (in >> full) b.fullmove_number = full;
    return b;
}

uint8_t square_label(const BoardState& board, Square s) {
    const Piece p = board.at(s);
    if (p == kEmpty) return 0;
    const uint8_t base = static_cast<uint8_t>(piece_type(p));
    return piece_color(p) == board.side_to_move ? base : static_cast<uint8_t>(base + 6);
}

std::array<uint8_t, 64> board_to_labels(const BoardState& board) {
    std::array<uint8_t, 64> labels{};
    for (Square s = 0; s < 64; ++s) labels[static_cast<std::size_t>(s)] = square_label(board, s);
    return labels;
}

const char* piece_class_name(int piece_class) {
    static const char* names[kNumPieceClasses] = {
        "empty",      "mine-pawn",  "mine-knight", "mine-bishop", "mine-rook",
        "mine-queen", "mine-king",  "yours-pawn",  "yours-knight", "yours-bishop",
        "yours-rook", "yours-queen", "yours-king"};
    if (piece_class < 0 || piece_class >= kNumPieceClasses) return "invalid";
    return names[piece_class];
}

RandomOpening random_opening(uint64_t seed, int plies) {
    std::mt19937_64 rng(splitmix64(seed));
    RandomOpening out;
    out.board = BoardState::initial();
    std::ostringstream text;
    for (int ply = 0; ply < plies; ++ply) {
        const std::vector<Move> moves = legal_moves(out.board);
        if (moves.empty())
            fail(ErrorKind::GameEnded,
                 "game ended after " + std::to_string(ply) + " plies (requested " +
                     std::to_string(plies) + ")");
        const std::size_t pick =
            std::uniform_int_distribution<std::size_t>(0, moves.size() - 1)(rng);
        const Move& m = moves[pick];
        if (out.board.side_to_move == Color::white) {
            if (ply > 0) text << ' ';
            text << out.board.fullmove_number << '.';
        } else {
            text << ' ';
        }
        text << m.san;
        out.moves.push_back(m);
        out.board = apply_move(out.board, m);
    }
    out.pgn_prefix = text.str();
    return out;
}

RandomOpening random_opening_resample(uint64_t seed, int plies, int max_attempts) {
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        try {
            return random_opening(attempt == 0 ? seed : derive_seed(seed, static_cast<uint64_t>(attempt)),
                                  plies);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::GameEnded) throw;
        }
    }
    fail(ErrorKind::GameEnded, "could not draw a " + std::to_string(plies) +
                                   "-ply opening in " + std::to_string(max_attempts) + " attempts");
}

}  // namespace chesslab
