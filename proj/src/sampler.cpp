#include "chesslab/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace chesslab {

namespace {

constexpr float kLnEps = 1e-5f;
constexpr float kGeluC = 0.7978845608028654f;
constexpr float kGeluA = 0.044715f;

void layernorm_row(const float* x, const float* g, const float* b, int d, float* y) {
    float mu = 0;
    for (int i = 0; i < d; ++i) mu += x[i];
    mu /= float(d);
    float var = 0;
    for (int i = 0; i < d; ++i) {
        const float c = x[i] - mu;
        var += c * c;
    }
    var /= float(d);
    const float rs = 1.0f / std::sqrt(var + kLnEps);
    for (int i = 0; i < d; ++i) y[i] = (x[i] - mu) * rs * g[i] + b[i];
}

void apply_hook_row(const Hook& h, float* row, int d) {
    if (h.dynamic) {
        float ap = 0;
        for (int i = 0; i < d; ++i) ap += row[i] * h.probe_dir[i];
        const float s = (ap - h.target_logit) / h.dir_dot;
        for (int i = 0; i < d; ++i) row[i] -= s * h.vector[i];
    } else {
        for (int i = 0; i < d; ++i) row[i] += h.vector[i];
    }
}

}  // namespace

SamplingSession::SamplingSession(const Model& model, HookList hooks)
    : model_(&model), hooks_(std::move(hooks)) {
    const ModelConfig& cfg = model.config();
    k_cache_.assign(cfg.n_layers, std::vector<float>(std::size_t(cfg.block_size) * cfg.d_model));
    v_cache_.assign(cfg.n_layers, std::vector<float>(std::size_t(cfg.block_size) * cfg.d_model));
    last_resid_.assign(cfg.n_layers, std::vector<float>(cfg.d_model));
    logits_.assign(cfg.vocab_size, 0.0f);
    x_.assign(cfg.d_model, 0.0f);
    ln_.assign(cfg.d_model, 0.0f);
    qkv_.assign(3 * cfg.d_model, 0.0f);
    att_.assign(cfg.block_size, 0.0f);
    mix_.assign(cfg.d_model, 0.0f);
    fc_.assign(cfg.mlp_dim(), 0.0f);
}

void SamplingSession::append(TokenId tok) {
    const ModelConfig& cfg = model_->config();
    const int d = cfg.d_model;
    const int H = cfg.n_heads;
    const int hd = cfg.head_dim();
    const int M = cfg.mlp_dim();
    const int pos = len_;
    if (pos >= cfg.block_size)
        fail(ErrorKind::SequenceTooLong, "session is full at block size " +
                                             std::to_string(cfg.block_size));
    if (tok >= cfg.vocab_size) fail(ErrorKind::InvalidTokenId, "token id out of range");

    const float* wte = model_->tensor("wte");
    const float* wpe = model_->tensor("wpe");
    for (int i = 0; i < d; ++i)
        x_[i] = wte[std::size_t(tok) * d + i] + wpe[std::size_t(pos) * d + i];

    const float scale = 1.0f / std::sqrt(float(hd));
    for (int l = 0; l < cfg.n_layers; ++l) {
        const std::string pre = "layer" + std::to_string(l) + ".";
        layernorm_row(x_.data(), model_->tensor(pre + "ln1.g"), model_->tensor(pre + "ln1.b"), d,
                      ln_.data());
        const float* b_qkv = model_->tensor(pre + "attn.b_qkv");
        std::copy(b_qkv, b_qkv + 3 * d, qkv_.begin());
        gemv<float>(false, 3 * d, d, 1.0f, model_->tensor(pre + "attn.w_qkv"), d, ln_.data(), 1.0f,
                    qkv_.data());
        float* krow = k_cache_[l].data() + std::size_t(pos) * d;
        float* vrow = v_cache_[l].data() + std::size_t(pos) * d;
        std::copy(qkv_.begin() + d, qkv_.begin() + 2 * d, krow);
        std::copy(qkv_.begin() + 2 * d, qkv_.begin() + 3 * d, vrow);

        for (int h = 0; h < H; ++h) {
            const float* q = qkv_.data() + std::size_t(h) * hd;
            float mx = -std::numeric_limits<float>::infinity();
            for (int j = 0; j <= pos; ++j) {
                const float* kj = k_cache_[l].data() + std::size_t(j) * d + std::size_t(h) * hd;
                float s = 0;
                for (int i = 0; i < hd; ++i) s += q[i] * kj[i];
                att_[j] = s * scale;
                mx = std::max(mx, att_[j]);
            }
            float sum = 0;
            for (int j = 0; j <= pos; ++j) {
                att_[j] = std::exp(att_[j] - mx);
                sum += att_[j];
            }
            const float inv = 1.0f / sum;
            float* out = mix_.data() + std::size_t(h) * hd;
            std::fill(out, out + hd, 0.0f);
            for (int j = 0; j <= pos; ++j) {
                const float w = att_[j] * inv;
                const float* vj = v_cache_[l].data() + std::size_t(j) * d + std::size_t(h) * hd;
                for (int i = 0; i < hd; ++i) out[i] += w * vj[i];
            }
        }
        // x += attn out projection
        const float* b_out = model_->tensor(pre + "attn.b_out");
        for (int i = 0; i < d; ++i) x_[i] += b_out[i];
        gemv<float>(false, d, d, 1.0f, model_->tensor(pre + "attn.w_out"), d, mix_.data(), 1.0f,
                    x_.data());

        layernorm_row(x_.data(), model_->tensor(pre + "ln2.g"), model_->tensor(pre + "ln2.b"), d,
                      ln_.data());
        const float* b_fc = model_->tensor(pre + "mlp.b_fc");
        std::copy(b_fc, b_fc + M, fc_.begin());
        gemv<float>(false, M, d, 1.0f, model_->tensor(pre + "mlp.w_fc"), d, ln_.data(), 1.0f,
                    fc_.data());
        for (int i = 0; i < M; ++i) {
            const float u = kGeluC * (fc_[i] + kGeluA * fc_[i] * fc_[i] * fc_[i]);
            fc_[i] = 0.5f * fc_[i] * (1.0f + std::tanh(u));
        }
        const float* b_proj = model_->tensor(pre + "mlp.b_proj");
        for (int i = 0; i < d; ++i) x_[i] += b_proj[i];
        gemv<float>(false, d, M, 1.0f, model_->tensor(pre + "mlp.w_proj"), M, fc_.data(), 1.0f,
                    x_.data());

        for (const Hook& h : hooks_)
            if (h.layer == l) apply_hook_row(h, x_.data(), d);
        std::copy(x_.begin(), x_.end(), last_resid_[l].begin());
    }

    layernorm_row(x_.data(), model_->tensor("lnf.g"), model_->tensor("lnf.b"), d, ln_.data());
    gemv<float>(false, cfg.vocab_size, d, 1.0f, model_->tensor("unembed"), d, ln_.data(), 0.0f,
                logits_.data());
    len_ = pos + 1;
    has_logits_ = true;
}

void SamplingSession::append_tokens(const TokenSequence& toks) {
    for (TokenId t : toks) append(t);
}

void SamplingSession::truncate(int new_len) {
    if (new_len < 0 || new_len > len_)
        fail(ErrorKind::Internal, "bad truncation length " + std::to_string(new_len));
    len_ = new_len;
    has_logits_ = false;  // logits belong to the removed tail
}

const std::vector<float>& SamplingSession::last_logits() const {
    if (!has_logits_) fail(ErrorKind::Internal, "no logits: append a token first");
    return logits_;
}

const std::vector<float>& SamplingSession::last_residual(int layer) const {
    if (layer < 0 || layer >= int(last_resid_.size()))
        fail(ErrorKind::LayerOutOfRange, "layer " + std::to_string(layer));
    if (!has_logits_) fail(ErrorKind::Internal, "no residuals: append a token first");
    return last_resid_[layer];
}

int sample_from_logits(const std::vector<float>& logits, SampleMode mode, double temperature,
                       std::mt19937_64& rng) {
    if (mode == SampleMode::greedy) {
        return int(std::max_element(logits.begin(), logits.end()) - logits.begin());
    }
    const double tau = std::max(temperature, 1e-6);
    double mx = -std::numeric_limits<double>::infinity();
    for (float l : logits) mx = std::max(mx, double(l) / tau);
    std::vector<double> p(logits.size());
    double sum = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(double(logits[i]) / tau - mx);
        sum += p[i];
    }
    std::uniform_real_distribution<double> uni(0.0, sum);
    double r = uni(rng);
    for (std::size_t i = 0; i < p.size(); ++i) {
        r -= p[i];
        if (r <= 0) return int(i);
    }
    return int(p.size()) - 1;
}

std::string sample_move_from_session(SamplingSession& session, const Vocab& vocab,
                                     const MoveSampleConfig& cfg, std::mt19937_64& rng) {
    const int start_len = session.length();
    if (start_len == 0) fail(ErrorKind::Internal, "sample_move needs a prefilled context");
    std::string out;
    for (int i = 0; i < cfg.max_chars; ++i) {
        const int id = sample_from_logits(session.last_logits(), cfg.mode, cfg.temperature, rng);
        const char c = vocab.char_of(TokenId(id));
        if (c == ' ') {
            session.truncate(start_len);
            return out;
        }
        out += c;
        if (session.length() >= session.model().config().block_size) break;
        session.append(TokenId(id));
    }
    session.truncate(start_len);
    fail(ErrorKind::NonterminatingGeneration,
         "no move delimiter within " + std::to_string(cfg.max_chars) + " characters: '" + out +
             "'");
}

std::string sample_move(const Model& model, const std::string& pgn_context,
                        const MoveSampleConfig& cfg, uint64_t seed, const HookList& hooks) {
    const Vocab& vocab = Vocab::standard();
    std::string context = pgn_context;
    // Crop from the left so the context plus a full generation fits the block.
    const int budget = model.config().block_size - cfg.max_chars - 1;
    if (int(context.size()) > budget) context = context.substr(context.size() - budget);
    SamplingSession session(model, hooks);
    session.append_tokens(vocab.encode(context));
    std::mt19937_64 rng(splitmix64(seed));
    return sample_move_from_session(session, vocab, cfg, rng);
}

std::string strip_move_number(const std::string& generated) {
    std::size_t i = 0;
    while (i < generated.size() && generated[i] >= '0' && generated[i] <= '9') ++i;
    if (i == 0) return generated;  // no number prefix
    if (i < generated.size() && generated[i] == '.') return generated.substr(i + 1);
    return generated;
}

}  // namespace chesslab
