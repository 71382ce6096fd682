#include "chesslab/pgn.hpp"

#include <cctype>
#include <sstream>

namespace chesslab {

namespace {

bool is_move_number_token(const std::string& tok) {
    // "12." / "12..." / bare "12" (some exporters drop the dot).
    std::size_t i = 0;
    while (i < tok.size() && std::isdigit(static_cast<unsigned char>(tok[i]))) ++i;
    if (i == 0) return false;
    for (; i < tok.size(); ++i)
        if (tok[i] != '.') return false;
    return true;
}

bool is_result_token(const std::string& tok, GameOutcome& out) {
    if (tok == "1-0") { out = GameOutcome::white_wins; return true; }
    if (tok == "0-1") { out = GameOutcome::black_wins; return true; }
    if (tok == "1/2-1/2") { out = GameOutcome::draw; return true; }
    if (tok == "*") { out = GameOutcome::unknown; return true; }
    return false;
}

std::optional<int> parse_elo(const std::map<std::string, std::string>& headers,
                             const std::string& key) {
    auto it = headers.find(key);
    if (it == headers.end()) return std::nullopt;
    try {
        return std::stoi(it->second);
    } catch (...) {
        return std::nullopt;
    }
}

}  // namespace

std::string outcome_string(GameOutcome o) {
    switch (o) {
        case GameOutcome::white_wins: return "1-0";
        case GameOutcome::black_wins: return "0-1";
        case GameOutcome::draw: return "1/2-1/2";
        case GameOutcome::unknown: return "*";
    }
    return "*";
}

GameRecord parse_pgn(const std::string& text) {
    GameRecord record;
    std::size_t pos = 0;
    const std::size_t n = text.size();

    // Header section: lines of the form [Key "Value"].
    while (pos < n) {
        std::size_t line_start = pos;
        while (line_start < n && std::isspace(static_cast<unsigned char>(text[line_start])))
            ++line_start;
        if (line_start >= n || text[line_start] != '[') break;
        const std::size_t close = text.find(']', line_start);
        if (close == std::string::npos)
            fail(ErrorKind::MalformedSan, "unterminated PGN header");
        const std::string inside = text.substr(line_start + 1, close - line_start - 1);
        const std::size_t sp = inside.find(' ');
        const std::size_t q1 = inside.find('"');
        const std::size_t q2 = inside.rfind('"');
        if (sp == std::string::npos || q1 == std::string::npos || q2 <= q1)
            fail(ErrorKind::MalformedSan, "malformed PGN header: [" + inside + "]");
        record.headers[inside.substr(0, sp)] = inside.substr(q1 + 1, q2 - q1 - 1);
        pos = close + 1;
    }

    record.raw_movetext = text.substr(pos);

    // Movetext tokenization. Comments in braces are skipped; variations are
    // out of scope for this corpus and rejected loudly.
    std::vector<std::string> san_tokens;
    GameOutcome result = GameOutcome::unknown;
    bool saw_result = false;
    std::string tok;
    auto flush = [&] {
        if (tok.empty()) return;
        GameOutcome o;
        if (is_result_token(tok, o)) {
            result = o;
            saw_result = true;
        } else if (!is_move_number_token(tok) && tok[0] != '$') {
            if (saw_result)
                fail(ErrorKind::MalformedSan, "moves after result token: " + tok);
            san_tokens.push_back(tok);
        }
        tok.clear();
    };
    for (std::size_t i = pos; i < n; ++i) {
        const char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else if (c == '{') {
            flush();
            const std::size_t close = text.find('}', i);
            if (close == std::string::npos)
                fail(ErrorKind::MalformedSan, "unterminated comment in movetext");
            i = close;
        } else if (c == '(' || c == ')') {
            fail(ErrorKind::MalformedSan, "variations are not supported");
        } else if (c == ';') {
            fail(ErrorKind::MalformedSan, "';' is reserved as the corpus game delimiter");
        } else if (c == '.' && is_move_number_token(tok + '.')) {
            tok += c;
            // "1.e4" glues the number to the move; split here.
            if (i + 1 < n && text[i + 1] != '.') flush();
        } else {
            tok += c;
        }
    }
    flush();

    record.result = result;
    if (record.headers.count("Result")) {
        GameOutcome o;
        if (is_result_token(record.headers.at("Result"), o)) record.result = o;
    }
    record.white_elo = parse_elo(record.headers, "WhiteElo");
    record.black_elo = parse_elo(record.headers, "BlackElo");

    record.states.push_back(BoardState::initial());
    for (const std::string& san : san_tokens) {
        auto [next, move] = apply_san_move(record.states.back(), san);
        record.moves.push_back(move);
        record.states.push_back(next);
    }
    return record;
}

void append_ply(std::string& movetext, int fullmove_number, Color mover, const std::string& san) {
    if (mover == Color::white) {
        if (!movetext.empty()) movetext += ' ';
        movetext += std::to_string(fullmove_number);
        movetext += '.';
    } else {
        movetext += ' ';
    }
    movetext += san;
}

std::string serialize_movetext(const GameRecord& record) {
    std::string out;
    for (std::size_t i = 0; i < record.moves.size(); ++i) {
        const BoardState& before = record.states[i];
        append_ply(out, before.fullmove_number, before.side_to_move, record.moves[i].san);
    }
    return out;
}

std::string movetext_from_moves(const std::vector<std::string>& san_moves) {
    std::string out;
    BoardState board = BoardState::initial();
    for (const std::string& san : san_moves) {
        auto [next, move] = apply_san_move(board, san);
        append_ply(out, board.fullmove_number, board.side_to_move, move.san);
        board = next;
    }
    return out;
}

std::string movetext_prefix(const std::string& normalized_movetext, int turns) {
    // Count plies by spaces: ply k ends at the k-th space (the last ply has
    // no terminator). 2*turns plies cover `turns` full turns.
    const int target_plies = 2 * turns;
    int plies = 0;
    for (std::size_t i = 0; i < normalized_movetext.size(); ++i) {
        if (normalized_movetext[i] == ' ') {
            ++plies;
            if (plies == target_plies) return normalized_movetext.substr(0, i);
        }
    }
    return normalized_movetext;
}

std::string serialize_pgn(const GameRecord& record) {
    std::ostringstream out;
    auto emit = [&](const std::string& key, const std::string& value) {
        out << '[' << key << " \"" << value << "\"]\n";
    };
    if (record.white_elo) emit("WhiteElo", std::to_string(*record.white_elo));
    if (record.black_elo) emit("BlackElo", std::to_string(*record.black_elo));
    emit("Result", outcome_string(record.result));
    out << '\n' << serialize_movetext(record);
    const std::string res = outcome_string(record.result);
    out << ' ' << res << '\n';
    return out.str();
}

}  // namespace chesslab
