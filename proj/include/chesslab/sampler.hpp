#pragma once

#include <random>
#include <string>

#include "chesslab/model.hpp"

namespace chesslab {

// Incremental decoding session with a KV cache. Tokens are processed one at
// a time; hooks are applied to each token as it is processed (positions=all
// applies everywhere, positions=last applies to every token appended while
// the hook is installed — the "current generation position" semantics board
// edits want). truncate() rewinds to a previous length so one prefilled
// context can branch into many sampled continuations.
class SamplingSession {
public:
    explicit SamplingSession(const Model& model, HookList hooks = {});

    const Model& model() const { return *model_; }
    int length() const { return len_; }

    void set_hooks(HookList hooks) { hooks_ = std::move(hooks); }
    const HookList& hooks() const { return hooks_; }

    void append(TokenId tok);
    void append_tokens(const TokenSequence& toks);
    void truncate(int new_len);

    // Next-token logits from the last appended position.
    const std::vector<float>& last_logits() const;
    // Residual stream after `layer` at the last appended position.
    const std::vector<float>& last_residual(int layer) const;

private:
    const Model* model_;
    HookList hooks_;
    int len_ = 0;
    bool has_logits_ = false;
    std::vector<std::vector<float>> k_cache_, v_cache_;  // per layer [block, d_model]
    std::vector<std::vector<float>> last_resid_;         // per layer [d_model]
    std::vector<float> logits_;
    std::vector<float> x_, ln_, qkv_, att_, mix_, fc_;
};

enum class SampleMode { greedy, temperature };

struct MoveSampleConfig {
    SampleMode mode = SampleMode::greedy;
    double temperature = 1.0;
    int max_chars = 12;  // generation cap before NonterminatingGeneration
};

int sample_from_logits(const std::vector<float>& logits, SampleMode mode, double temperature,
                       std::mt19937_64& rng);

// Generates characters from the current session state until the move-
// terminating space (returned without it). The session is left rewound to
// its pre-call length. Throws NonterminatingGeneration at the char cap.
std::string sample_move_from_session(SamplingSession& session, const Vocab& vocab,
                                     const MoveSampleConfig& cfg, std::mt19937_64& rng);

// One-shot variant: prefills `pgn_context` (cropped from the left to fit the
// block when oversized) and samples one move. Greedy mode ignores the seed.
std::string sample_move(const Model& model, const std::string& pgn_context,
                        const MoveSampleConfig& cfg, uint64_t seed, const HookList& hooks = {});

// "12.Nf3" -> "Nf3"; leaves bare SAN untouched.
std::string strip_move_number(const std::string& generated);

}  // namespace chesslab
