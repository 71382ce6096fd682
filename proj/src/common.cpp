#include "chesslab/common.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <sstream>

namespace chesslab {

const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MalformedSan: return "MalformedSan";
        case ErrorKind::IllegalMove: return "IllegalMove";
        case ErrorKind::AmbiguousSan: return "AmbiguousSan";
        case ErrorKind::GameEnded: return "GameEnded";
        case ErrorKind::InvalidFen: return "InvalidFen";
        case ErrorKind::EmptyCorpus: return "EmptyCorpus";
        case ErrorKind::IoFailure: return "IoFailure";
        case ErrorKind::SampleTooSmall: return "SampleTooSmall";
        case ErrorKind::MissingElo: return "MissingElo";
        case ErrorKind::SplitOverlap: return "SplitOverlap";
        case ErrorKind::UnexpectedVocabSize: return "UnexpectedVocabSize";
        case ErrorKind::UnknownCharacter: return "UnknownCharacter";
        case ErrorKind::InvalidTokenId: return "InvalidTokenId";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::SequenceTooLong: return "SequenceTooLong";
        case ErrorKind::Divergence: return "Divergence";
        case ErrorKind::LayerOutOfRange: return "LayerOutOfRange";
        case ErrorKind::NonterminatingGeneration: return "NonterminatingGeneration";
        case ErrorKind::EmptyPartition: return "EmptyPartition";
        case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorKind::EmptyGameSet: return "EmptyGameSet";
        case ErrorKind::DegenerateDirection: return "DegenerateDirection";
        case ErrorKind::NoPieceToRemove: return "NoPieceToRemove";
        case ErrorKind::EngineCrashed: return "EngineCrashed";
        case ErrorKind::ProtocolViolation: return "ProtocolViolation";
        case ErrorKind::WindowUnreachable: return "WindowUnreachable";
        case ErrorKind::UsageError: return "UsageError";
        case ErrorKind::Internal: return "Internal";
    }
    return "Unknown";
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    if (workers <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (std::size_t t = 0; t < nthreads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n || failed.load(std::memory_order_relaxed)) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    failed.store(true, std::memory_order_relaxed);
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

uint64_t fnv1a64(const std::string& bytes) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::IoFailure, "cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) fail(ErrorKind::IoFailure, "read failed: " + path);
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::IoFailure, "cannot open for writing: " + path);
    out << contents;
    if (!out) fail(ErrorKind::IoFailure, "write failed: " + path);
}

}  // namespace chesslab
