#include "chesslab/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace chesslab {

Vocab::Vocab(const std::string& characters) {
    std::set<char> uniq(characters.begin(), characters.end());
    chars_.assign(uniq.begin(), uniq.end());
    rebuild_index();
}

void Vocab::rebuild_index() {
    id_of_.fill(-1);
    for (std::size_t i = 0; i < chars_.size(); ++i)
        id_of_[static_cast<unsigned char>(chars_[i])] = static_cast<int>(i);
}

const Vocab& Vocab::standard() {
    static const Vocab v(" #+-.0123456789;=BKNOQRabcdefghx");
    return v;
}

char Vocab::char_of(TokenId id) const {
    if (id >= chars_.size())
        fail(ErrorKind::InvalidTokenId,
             "token id " + std::to_string(int(id)) + " out of range (vocab size " +
                 std::to_string(size()) + ")");
    return chars_[id];
}

TokenSequence Vocab::encode(const std::string& text) const {
    TokenSequence ids;
    ids.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        const int id = id_of(text[i]);
        if (id < 0)
            fail(ErrorKind::UnknownCharacter,
                 "character '" + std::string(1, text[i]) + "' (byte " +
                     std::to_string(int(static_cast<unsigned char>(text[i]))) +
                     ") at index " + std::to_string(i) + " not in vocabulary");
        ids.push_back(static_cast<TokenId>(id));
    }
    return ids;
}

std::string Vocab::decode(const TokenSequence& ids) const {
    std::string text;
    text.reserve(ids.size());
    for (TokenId id : ids) text += char_of(id);
    return text;
}

void Vocab::save(const std::string& path) const {
    std::ostringstream out;
    for (char c : chars_) {
        if (c == ' ') {
            out << "\\s\n";
        } else {
            out << c << '\n';
        }
    }
    write_text_file(path, out.str());
}

Vocab Vocab::load(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::string line, chars;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line == "\\s") {
            chars += ' ';
        } else if (line.size() == 1) {
            chars += line[0];
        } else {
            fail(ErrorKind::IoFailure, "bad vocab line '" + line + "' in " + path);
        }
    }
    return Vocab(chars);
}

Vocab build_vocab(const std::vector<std::string>& movetexts, bool strict) {
    if (movetexts.empty()) fail(ErrorKind::EmptyCorpus, "cannot build a vocabulary from nothing");
    std::set<char> census;
    census.insert(';');  // game delimiter is always part of the packed stream
    for (const std::string& text : movetexts) census.insert(text.begin(), text.end());
    Vocab v(std::string(census.begin(), census.end()));
    if (strict) {
        if (v.size() != Vocab::kExpectedSize)
            fail(ErrorKind::UnexpectedVocabSize,
                 "movetext census has " + std::to_string(v.size()) + " characters, expected " +
                     std::to_string(Vocab::kExpectedSize) +
                     " — normalization is emitting the wrong alphabet");
        if (!(v == Vocab::standard()))
            fail(ErrorKind::UnexpectedVocabSize,
                 "movetext census size is 32 but the character set differs from the movetext alphabet");
    }
    return v;
}

}  // namespace chesslab
