#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "chesslab/common.hpp"

namespace chesslab {

using TokenId = uint8_t;
using TokenSequence = std::vector<TokenId>;

// Fixed character vocabulary. Ids are assigned in code-point order so the
// mapping is reproducible from the character set alone.
class Vocab {
public:
    static constexpr int kExpectedSize = 32;

    Vocab() = default;
    explicit Vocab(const std::string& characters);  // deduplicates + sorts

    // The full movetext alphabet: space # + - . 0-9 ; = B K N O Q R a-h x.
    // Derived from the character census of normalized PGN movetext plus the
    // ';' game delimiter; build_vocab validates any real corpus against it.
    static const Vocab& standard();

    int size() const { return static_cast<int>(chars_.size()); }
    bool contains(char c) const { return id_of_[static_cast<unsigned char>(c)] >= 0; }
    char char_of(TokenId id) const;
    int id_of(char c) const { return id_of_[static_cast<unsigned char>(c)]; }

    TokenSequence encode(const std::string& text) const;
    std::string decode(const TokenSequence& ids) const;

    // 32-line text file, one character per line; space escaped as "\s".
    void save(const std::string& path) const;
    static Vocab load(const std::string& path);

    bool operator==(const Vocab& other) const { return chars_ == other.chars_; }

private:
    std::string chars_;                 // sorted, unique
    std::array<int, 256> id_of_{};      // -1 when absent

    void rebuild_index();
};

// Census over an iterable of movetext strings plus the ';' delimiter.
// strict (default) enforces the 32-character contract and throws
// UnexpectedVocabSize on any deviation — a mismatch signals a
// normalization bug upstream, not a tokenizer problem.
Vocab build_vocab(const std::vector<std::string>& movetexts, bool strict = true);

}  // namespace chesslab
