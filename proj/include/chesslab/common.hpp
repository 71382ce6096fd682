#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace chesslab {

// Error taxonomy. Every failure the library reports carries one of these
// kinds so callers (and the CLI exit-code mapping) can dispatch without
// string matching.
enum class ErrorKind {
    // chess_core
    MalformedSan,
    IllegalMove,
    AmbiguousSan,
    GameEnded,
    InvalidFen,
    // dataset
    EmptyCorpus,
    IoFailure,
    SampleTooSmall,
    MissingElo,
    SplitOverlap,
    // tokenizer
    UnexpectedVocabSize,
    UnknownCharacter,
    InvalidTokenId,
    // model
    InvalidConfig,
    SequenceTooLong,
    Divergence,
    LayerOutOfRange,
    NonterminatingGeneration,
    // probes / interventions
    EmptyPartition,
    IndexOutOfRange,
    EmptyGameSet,
    DegenerateDirection,
    NoPieceToRemove,
    // evaluation
    EngineCrashed,
    ProtocolViolation,
    WindowUnreachable,
    // cli
    UsageError,
    Internal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

const char* error_kind_name(ErrorKind kind);

// SplitMix64. Used wherever we need a cheap deterministic stream derived
// from a (seed, index) pair, e.g. per-game seeds in corpus generation.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t seed, uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream + 0x51ed2701ULL));
}

// Runs fn(i) for i in [0, n) on `workers` threads. Work is dealt in
// contiguous chunks so runs are reproducible as long as fn(i) depends
// only on i. workers <= 1 runs inline.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

// Hash of a byte string, for config fingerprints in run manifests.
uint64_t fnv1a64(const std::string& bytes);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace chesslab
