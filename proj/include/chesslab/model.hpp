#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "chesslab/common.hpp"
#include "chesslab/tensor.hpp"
#include "chesslab/tokenizer.hpp"

namespace chesslab {

// Decoder-only pre-norm transformer over the 32-character vocabulary.
// Residual capture convention: "activations after layer l" is the stream
// immediately after layer l's MLP output (and any hooks on l) is added,
// before the next layer's first LayerNorm and before the final LayerNorm.

struct ModelConfig {
    int d_model = 128;
    int n_layers = 4;
    int n_heads = 4;
    int vocab_size = Vocab::kExpectedSize;
    int block_size = 511;
    float dropout = 0.0f;  // architecture family keeps the knob; only 0 is supported

    int head_dim() const { return d_model / n_heads; }
    int mlp_dim() const { return 4 * d_model; }
    void validate() const;
    std::string to_json() const;
    static ModelConfig from_json(const std::string& json);
};

// --- hooks ------------------------------------------------------------------

enum class HookSite : uint8_t { residual_stream, mlp_bias };
enum class HookPositions : uint8_t { all, last };

// Dynamic scaling: instead of a fixed vector, apply x' = x - s*V with
// s = (x.P - t) / (V.P), which drives the probe logit x'.P to exactly t.
struct DynamicTarget {
    std::vector<float> probe_dir;  // P
    float target_logit = -10.0f;   // t
};

struct HookSpec {
    std::vector<int> layers;
    HookSite site = HookSite::residual_stream;
    HookPositions positions = HookPositions::all;
    std::vector<float> vector;  // d_model; additive vector (ignored magnitude-wise when dynamic)
    std::optional<DynamicTarget> dynamic;
};

// Resolved single-layer hook, produced by install_hook.
struct Hook {
    int layer = 0;
    HookSite site = HookSite::residual_stream;
    HookPositions positions = HookPositions::all;
    std::vector<float> vector;
    bool dynamic = false;
    std::vector<float> probe_dir;
    float target_logit = 0.0f;
    float dir_dot = 0.0f;  // V.P, validated nonzero at install time
};

using HookList = std::vector<Hook>;

// --- activation capture ------------------------------------------------------

struct ActivationTrace {
    std::vector<int> layers;  // capture layer ids, ascending
    int d_model = 0;
    int n_positions = 0;
    std::vector<float> data;  // [layer][position][d_model]

    const float* row(int layer_index, int position) const {
        return data.data() +
               (static_cast<std::size_t>(layer_index) * n_positions + position) * d_model;
    }
};

// --- model ------------------------------------------------------------------

// Offsets of every named tensor inside the flat parameter vector.
struct TensorView {
    std::string name;
    std::size_t offset = 0;
    std::vector<int> shape;
    std::size_t size = 0;
    bool decayed = false;  // participates in weight decay (ndim >= 2)
};

template <typename T>
class Gpt {
public:
    Gpt() = default;
    explicit Gpt(const ModelConfig& config);

    const ModelConfig& config() const { return config_; }
    std::vector<T>& params() { return params_; }
    const std::vector<T>& params() const { return params_; }
    const std::vector<TensorView>& tensors() const { return tensors_; }
    std::size_t n_params() const { return params_.size(); }

    // Deterministic Gaussian init: N(0, 0.02^2) everywhere, residual output
    // projections scaled by 1/sqrt(2*n_layers), biases zero, LayerNorm gains 1.
    void init_weights(uint64_t seed);

    T* tensor(const std::string& name);
    const T* tensor(const std::string& name) const;
    const TensorView& view(const std::string& name) const;

    template <typename U>
    Gpt<U> cast() const {
        Gpt<U> out(config_);
        for (std::size_t i = 0; i < params_.size(); ++i)
            out.params()[i] = static_cast<U>(params_[i]);
        return out;
    }

    // Parameter names in layout order (checkpoint order).
    static std::vector<TensorView> layout(const ModelConfig& config);

private:
    ModelConfig config_;
    std::vector<T> params_;
    std::vector<TensorView> tensors_;
};

using Model = Gpt<float>;

HookList install_hook(const Gpt<float>& model, const HookSpec& spec);

// --- batched forward/backward -------------------------------------------------

// Scratch buffers for a (batch, length) forward; reusable across calls.
template <typename T>
struct Workspace {
    int batch = 0, length = 0;
    bool training = false;
    // Per layer activations (kept for backward; inference keeps them too —
    // memory at inference sizes is trivial).
    std::vector<std::vector<T>> x_in, ln1_mean, ln1_rstd, ln1_out, qkv, att, att_mix, x_mid,
        ln2_mean, ln2_rstd, ln2_out, fc_pre, fc_act;
    std::vector<T> x_final, lnf_mean, lnf_rstd, lnf_out, logits, probs;
    // backward scratch
    std::vector<T> d_x, d_tmp, d_qkv, d_att, d_mix, d_fc;
    std::vector<T> grad;  // parameter gradients, same layout as params

    void ensure(const ModelConfig& cfg, int batch_size, int seq_len, bool for_training);
};

struct ForwardStats {
    double loss = 0.0;  // mean next-token cross entropy (only when targets given)
};

// Runs the model over `tokens` ([batch * length], row-major). When `targets`
// is non-null, computes mean cross-entropy into stats and (training mode)
// fills ws.grad via backward. Capture layers request an ActivationTrace of
// batch row 0 (callers that trace use batch 1).
template <typename T>
ForwardStats gpt_forward(const Gpt<T>& model, Workspace<T>& ws, const int* tokens, int batch,
                         int length, const int* targets, bool backward, const HookList& hooks = {},
                         const std::vector<int>& capture = {}, ActivationTrace* trace = nullptr);

// Single-sequence convenience wrapper: returns logits [length x vocab].
std::vector<float> forward(const Gpt<float>& model, const TokenSequence& tokens,
                           const std::vector<int>& capture = {}, ActivationTrace* trace = nullptr,
                           const HookList& hooks = {});

// --- factory ------------------------------------------------------------------

Model init_model(const ModelConfig& config, uint64_t seed);

// --- gradient check -------------------------------------------------------------

struct GradCheckReport {
    double max_rel_error = 0.0;   // per-tensor max |ga-gn| / max-|g| of that tensor
    double mean_abs_error = 0.0;
    int n_sampled = 0;
};

// Compares analytic gradients of the T-precision model against central
// finite differences evaluated in double precision. Relative error is
// normalized per tensor by the largest sampled gradient magnitude of that
// tensor, so a dead backward path cannot hide behind small entries.
template <typename T>
GradCheckReport gradcheck(const Gpt<T>& model, const std::vector<int>& tokens,
                          const std::vector<int>& targets, int batch, int length, double epsilon,
                          int n_samples, uint64_t seed);

}  // namespace chesslab
