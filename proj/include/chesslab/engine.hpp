#pragma once

#include <cstdint>
#include <random>

#include "chesslab/chess.hpp"

namespace chesslab {

// Deterministic weak chess engine: material counting plus a one-ply search,
// with a pseudo-Elo knob that scales move-selection noise. Strong settings
// play near-greedy material chess; weak settings approach uniform random.
// The same component backs corpus generation, the bundled UCI engine binary
// and the arena opponent, so everything downstream runs without any external
// engine installed.
class MaterialEngine {
public:
    static constexpr int kMinElo = 800;
    static constexpr int kMaxElo = 2800;

    explicit MaterialEngine(int pseudo_elo, uint64_t seed);

    // Softmax temperature in centipawns for a given pseudo-Elo. Log-linear
    // between (kMinElo -> 700cp) and (kMaxElo -> 4cp); monotone decreasing.
    static double temperature_cp(int pseudo_elo);

    int pseudo_elo() const { return elo_; }
    void reseed(uint64_t seed);

    // Samples a move via the Gumbel-max trick over one-ply scores, which is
    // exactly softmax(score / temperature) sampling. Throws GameEnded when
    // no legal move exists.
    Move choose_move(const BoardState& board);

    // Static evaluation in centipawns from the side to move's perspective
    // (UCI sign convention). Material plus small placement terms.
    static int eval_cp(const BoardState& board);

    // One-ply score of a candidate move from the mover's perspective,
    // including mate detection for checking moves.
    static int move_score_cp(const BoardState& board, const Move& m);

    static constexpr int kMateScore = 100000;

private:
    int elo_;
    double temperature_;
    std::mt19937_64 rng_;
};

}  // namespace chesslab
