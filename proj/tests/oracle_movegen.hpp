#pragma once

// Independent chess move generator used only as a test oracle. It shares no
// code with chesslab: 0x88 board indexing, pseudo-legal generation with a
// brute-force "can any enemy piece capture the king" legality filter, and
// its own FEN reader. Slow and simple on purpose.

#include <cstdint>
#include <string>
#include <vector>

namespace oracle {

struct OMove {
    int from = 0;      // 0..63, a1 = 0
    int to = 0;
    char promo = 0;    // 'q','r','b','n' or 0
    bool operator<(const OMove& o) const {
        if (from != o.from) return from < o.from;
        if (to != o.to) return to < o.to;
        return promo < o.promo;
    }
    bool operator==(const OMove& o) const = default;
};

struct OBoard {
    // 0x88 layout, '.' for empty, FEN piece letters otherwise.
    char sq[128];
    bool white_to_move = true;
    bool cwk = false, cwq = false, cbk = false, cbq = false;
    int ep = -1;  // 0x88 index or -1
};

OBoard oboard_from_fen(const std::string& fen);
std::vector<OMove> olegal_moves(const OBoard& b);
OBoard oapply(const OBoard& b, const OMove& m);
uint64_t operft(const OBoard& b, int depth);
bool oin_check(const OBoard& b, bool white_king);

}  // namespace oracle
