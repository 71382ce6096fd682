#include "chesslab/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace chesslab {

namespace {

constexpr int kPieceValue[7] = {0, 100, 300, 310, 500, 900, 0};

// Small placement terms so strong settings develop and push pawns instead
// of shuffling: center occupation for minor pieces and pawn advancement.
int placement_cp(const BoardState& board, Color c) {
    int score = 0;
    for (Square s = 0; s < 64; ++s) {
        const Piece p = board.at(s);
        if (p == kEmpty || piece_color(p) != c) continue;
        const int f = file_of(s);
        const int r = rank_of(s);
        const int center = 3 - std::max(std::abs(2 * f - 7), std::abs(2 * r - 7)) / 2;
        switch (piece_type(p)) {
            case PieceType::pawn: {
                const int advance = (c == Color::white) ? r - 1 : 6 - r;
                score += 2 * advance + 2 * center;
                break;
            }
            case PieceType::knight:
            case PieceType::bishop: {
                score += 4 * center;
                // Undeveloped minor pieces on the home rank.
                const int home = (c == Color::white) ? 0 : 7;
                if (r == home) score -= 6;
                break;
            }
            case PieceType::queen:
                score += center;
                break;
            default:
                break;
        }
    }
    return score;
}

int material_cp(const BoardState& board, Color c) {
    int total = 0;
    for (Square s = 0; s < 64; ++s) {
        const Piece p = board.at(s);
        if (p != kEmpty && piece_color(p) == c)
            total += kPieceValue[static_cast<int>(piece_type(p))];
    }
    return total;
}

}  // namespace

MaterialEngine::MaterialEngine(int pseudo_elo, uint64_t seed)
    : elo_(std::clamp(pseudo_elo, kMinElo, kMaxElo)),
      temperature_(temperature_cp(elo_)),
      rng_(splitmix64(seed)) {}

void MaterialEngine::reseed(uint64_t seed) { rng_.seed(splitmix64(seed)); }

double MaterialEngine::temperature_cp(int pseudo_elo) {
    const double lo = 4.0, hi = 700.0;
    const double t = double(std::clamp(pseudo_elo, kMinElo, kMaxElo) - kMinElo) /
                     double(kMaxElo - kMinElo);
    return hi * std::pow(lo / hi, t);
}

int MaterialEngine::eval_cp(const BoardState& board) {
    const Color us = board.side_to_move;
    const Color them = opposite(us);
    return material_cp(board, us) - material_cp(board, them) + placement_cp(board, us) -
           placement_cp(board, them);
}

int MaterialEngine::move_score_cp(const BoardState& board, const Move& m) {
    const BoardState next = apply_move(board, m);
    // Mate/stalemate handling only when the move gives check or the reply
    // set is plausibly empty; has_legal_move early-exits quickly.
    if (in_check(next, next.side_to_move)) {
        if (!has_legal_move(next)) return kMateScore;
        // Mild bonus: checks force replies.
        return -eval_cp(next) + 5;
    }
    int bonus = 0;
    if (m.is_castle_kingside || m.is_castle_queenside) bonus += 25;
    return -eval_cp(next) + bonus;
}

Move MaterialEngine::choose_move(const BoardState& board) {
    const std::vector<Move> moves = legal_moves_raw(board);
    if (moves.empty()) fail(ErrorKind::GameEnded, "no legal moves to choose from");

    std::uniform_real_distribution<double> uniform(std::numeric_limits<double>::min(), 1.0);
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    for (std::size_t i = 0; i < moves.size(); ++i) {
        const double gumbel = -std::log(-std::log(uniform(rng_)));
        const double s = double(move_score_cp(board, moves[i])) + temperature_ * gumbel;
        if (s > best) {
            best = s;
            best_idx = i;
        }
    }
    Move chosen = moves[best_idx];
    chosen.san = move_to_san(board, chosen);
    return chosen;
}

}  // namespace chesslab
