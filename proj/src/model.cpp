#include "chesslab/model.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>

#include <json.hpp>

namespace chesslab {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

template <typename T>
T gelu(T x) {
    const T u = T(kGeluC) * (x + T(kGeluA) * x * x * x);
    return T(0.5) * x * (T(1) + std::tanh(u));
}

template <typename T>
T gelu_grad(T x) {
    const T u = T(kGeluC) * (x + T(kGeluA) * x * x * x);
    const T th = std::tanh(u);
    const T sech2 = T(1) - th * th;
    return T(0.5) * (T(1) + th) + T(0.5) * x * sech2 * T(kGeluC) * (T(1) + T(3) * T(kGeluA) * x * x);
}

// y = LN(x) with per-row mean/rstd cached.
template <typename T>
void layernorm_forward(const T* x, const T* g, const T* b, int rows, int d, T* y, T* mean,
                       T* rstd) {
    for (int r = 0; r < rows; ++r) {
        const T* xr = x + std::size_t(r) * d;
        T* yr = y + std::size_t(r) * d;
        T mu = 0;
        for (int i = 0; i < d; ++i) mu += xr[i];
        mu /= T(d);
        T var = 0;
        for (int i = 0; i < d; ++i) {
            const T c = xr[i] - mu;
            var += c * c;
        }
        var /= T(d);
        const T rs = T(1) / std::sqrt(var + T(kLnEps));
        for (int i = 0; i < d; ++i) yr[i] = (xr[i] - mu) * rs * g[i] + b[i];
        mean[r] = mu;
        rstd[r] = rs;
    }
}

// dx += backward(dy); dg/db accumulated.
template <typename T>
void layernorm_backward(const T* dy, const T* x, const T* g, const T* mean, const T* rstd,
                        int rows, int d, T* dx, T* dg, T* db) {
    for (int r = 0; r < rows; ++r) {
        const T* dyr = dy + std::size_t(r) * d;
        const T* xr = x + std::size_t(r) * d;
        T* dxr = dx + std::size_t(r) * d;
        const T mu = mean[r], rs = rstd[r];
        T sum_dxhat = 0, sum_dxhat_xhat = 0;
        for (int i = 0; i < d; ++i) {
            const T xhat = (xr[i] - mu) * rs;
            const T dxhat = dyr[i] * g[i];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xhat;
            dg[i] += dyr[i] * xhat;
            db[i] += dyr[i];
        }
        const T inv_d = T(1) / T(d);
        for (int i = 0; i < d; ++i) {
            const T xhat = (xr[i] - mu) * rs;
            const T dxhat = dyr[i] * g[i];
            dxr[i] += rs * (dxhat - inv_d * sum_dxhat - xhat * inv_d * sum_dxhat_xhat);
        }
    }
}

template <typename T>
void column_sums(const T* a, int rows, int cols, T* out) {
    for (int r = 0; r < rows; ++r) {
        const T* ar = a + std::size_t(r) * cols;
        for (int j = 0; j < cols; ++j) out[j] += ar[j];
    }
}

// Applies one hook to one stream row.
template <typename T>
void apply_hook_row(const Hook& h, T* row, int d) {
    if (h.dynamic) {
        T ap = 0;
        for (int i = 0; i < d; ++i) ap += row[i] * T(h.probe_dir[i]);
        const T s = (ap - T(h.target_logit)) / T(h.dir_dot);
        for (int i = 0; i < d; ++i) row[i] -= s * T(h.vector[i]);
    } else {
        for (int i = 0; i < d; ++i) row[i] += T(h.vector[i]);
    }
}

}  // namespace

void ModelConfig::validate() const {
    if (d_model <= 0 || n_layers <= 0 || n_heads <= 0 || block_size <= 0)
        fail(ErrorKind::InvalidConfig, "model dimensions must be positive");
    if (d_model % n_heads != 0)
        fail(ErrorKind::InvalidConfig,
             "d_model " + std::to_string(d_model) + " not divisible by n_heads " +
                 std::to_string(n_heads));
    if (vocab_size != Vocab::kExpectedSize)
        fail(ErrorKind::InvalidConfig, "vocab_size must be 32");
    if (block_size > 1023) fail(ErrorKind::InvalidConfig, "block_size must be <= 1023");
    if (dropout != 0.0f)
        fail(ErrorKind::InvalidConfig, "only dropout 0.0 is supported at desk scale");
}

std::string ModelConfig::to_json() const {
    nlohmann::json j;
    j["d_model"] = d_model;
    j["n_layers"] = n_layers;
    j["n_heads"] = n_heads;
    j["vocab_size"] = vocab_size;
    j["block_size"] = block_size;
    j["dropout"] = dropout;
    return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& json) {
    const auto j = nlohmann::json::parse(json);
    ModelConfig c;
    c.d_model = j.at("d_model");
    c.n_layers = j.at("n_layers");
    c.n_heads = j.at("n_heads");
    c.vocab_size = j.at("vocab_size");
    c.block_size = j.at("block_size");
    c.dropout = j.at("dropout");
    return c;
}

template <typename T>
std::vector<TensorView> Gpt<T>::layout(const ModelConfig& cfg) {
    std::vector<TensorView> views;
    std::size_t cursor = 0;
    auto add = [&](const std::string& name, std::vector<int> shape) {
        TensorView v;
        v.name = name;
        v.shape = std::move(shape);
        v.offset = cursor;
        v.size = 1;
        for (int s : v.shape) v.size *= std::size_t(s);
        v.decayed = v.shape.size() >= 2;
        cursor += v.size;
        views.push_back(std::move(v));
    };
    add("wte", {cfg.vocab_size, cfg.d_model});
    add("wpe", {cfg.block_size, cfg.d_model});
    for (int l = 0; l < cfg.n_layers; ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        add(p + "ln1.g", {cfg.d_model});
        add(p + "ln1.b", {cfg.d_model});
        add(p + "attn.w_qkv", {3 * cfg.d_model, cfg.d_model});
        add(p + "attn.b_qkv", {3 * cfg.d_model});
        add(p + "attn.w_out", {cfg.d_model, cfg.d_model});
        add(p + "attn.b_out", {cfg.d_model});
        add(p + "ln2.g", {cfg.d_model});
        add(p + "ln2.b", {cfg.d_model});
        add(p + "mlp.w_fc", {cfg.mlp_dim(), cfg.d_model});
        add(p + "mlp.b_fc", {cfg.mlp_dim()});
        add(p + "mlp.w_proj", {cfg.d_model, cfg.mlp_dim()});
        add(p + "mlp.b_proj", {cfg.d_model});
    }
    add("lnf.g", {cfg.d_model});
    add("lnf.b", {cfg.d_model});
    add("unembed", {cfg.vocab_size, cfg.d_model});
    return views;
}

template <typename T>
Gpt<T>::Gpt(const ModelConfig& config) : config_(config) {
    config_.validate();
    tensors_ = layout(config_);
    std::size_t total = 0;
    for (const auto& v : tensors_) total += v.size;
    params_.assign(total, T(0));
}

template <typename T>
T* Gpt<T>::tensor(const std::string& name) {
    return params_.data() + view(name).offset;
}

template <typename T>
const T* Gpt<T>::tensor(const std::string& name) const {
    return params_.data() + view(name).offset;
}

template <typename T>
const TensorView& Gpt<T>::view(const std::string& name) const {
    for (const auto& v : tensors_)
        if (v.name == name) return v;
    fail(ErrorKind::Internal, "no tensor named " + name);
}

template <typename T>
void Gpt<T>::init_weights(uint64_t seed) {
    std::mt19937_64 rng(splitmix64(seed));
    std::normal_distribution<double> base(0.0, 0.02);
    const double resid_std = 0.02 / std::sqrt(2.0 * config_.n_layers);
    std::normal_distribution<double> resid(0.0, resid_std);
    for (const TensorView& v : tensors_) {
        T* p = params_.data() + v.offset;
        const bool is_gain = v.name.size() > 2 && v.name.compare(v.name.size() - 2, 2, ".g") == 0;
        const bool is_bias = v.shape.size() == 1 && !is_gain;
        const bool is_resid_proj = v.name.find("attn.w_out") != std::string::npos ||
                                   v.name.find("mlp.w_proj") != std::string::npos;
        if (is_gain) {
            std::fill(p, p + v.size, T(1));
        } else if (is_bias) {
            std::fill(p, p + v.size, T(0));
        } else if (is_resid_proj) {
            for (std::size_t i = 0; i < v.size; ++i) p[i] = T(resid(rng));
        } else {
            for (std::size_t i = 0; i < v.size; ++i) p[i] = T(base(rng));
        }
    }
}

template class Gpt<float>;
template class Gpt<double>;

Model init_model(const ModelConfig& config, uint64_t seed) {
    Model m(config);
    m.init_weights(seed);
    return m;
}

HookList install_hook(const Gpt<float>& model, const HookSpec& spec) {
    const ModelConfig& cfg = model.config();
    HookList out;
    for (int layer : spec.layers) {
        if (layer < 0 || layer >= cfg.n_layers)
            fail(ErrorKind::LayerOutOfRange,
                 "hook layer " + std::to_string(layer) + " outside [0, " +
                     std::to_string(cfg.n_layers) + ")");
        Hook h;
        h.layer = layer;
        h.site = spec.site;
        h.positions = spec.positions;
        h.vector = spec.vector;
        if (int(h.vector.size()) != cfg.d_model)
            fail(ErrorKind::InvalidConfig, "hook vector must have d_model entries");
        for (float x : h.vector)
            if (!std::isfinite(x)) fail(ErrorKind::InvalidConfig, "hook vector must be finite");
        if (spec.dynamic) {
            if (spec.site != HookSite::residual_stream)
                fail(ErrorKind::InvalidConfig,
                     "dynamic scaling needs per-position state; use site=residual_stream");
            h.dynamic = true;
            h.probe_dir = spec.dynamic->probe_dir;
            h.target_logit = spec.dynamic->target_logit;
            if (int(h.probe_dir.size()) != cfg.d_model)
                fail(ErrorKind::InvalidConfig, "probe direction must have d_model entries");
            h.dir_dot = dot<float>(h.vector.size(), h.vector.data(), h.probe_dir.data());
            if (std::abs(h.dir_dot) < 1e-9f)
                fail(ErrorKind::DegenerateDirection,
                     "intervention vector is orthogonal to the probe direction (V.P ~ 0)");
        }
        if (h.site == HookSite::mlp_bias && h.positions != HookPositions::all)
            fail(ErrorKind::InvalidConfig, "an MLP bias term applies at every position");
        out.push_back(std::move(h));
    }
    return out;
}

template <typename T>
void Workspace<T>::ensure(const ModelConfig& cfg, int b, int t, bool for_training) {
    if (batch == b && length == t && training == for_training && !x_in.empty()) return;
    batch = b;
    length = t;
    training = for_training;
    const std::size_t rows = std::size_t(b) * t;
    const std::size_t rd = rows * cfg.d_model;
    const std::size_t rm = rows * cfg.mlp_dim();
    const std::size_t att_sz = std::size_t(b) * cfg.n_heads * t * t;
    const int L = cfg.n_layers;
    auto resize_all = [&](std::vector<std::vector<T>>& vs, std::size_t sz) {
        vs.resize(L);
        for (auto& v : vs) v.assign(sz, T(0));
    };
    resize_all(x_in, rd);
    resize_all(ln1_mean, rows);
    resize_all(ln1_rstd, rows);
    resize_all(ln1_out, rd);
    resize_all(qkv, rows * 3 * cfg.d_model);
    resize_all(att, att_sz);
    resize_all(att_mix, rd);
    resize_all(x_mid, rd);
    resize_all(ln2_mean, rows);
    resize_all(ln2_rstd, rows);
    resize_all(ln2_out, rd);
    resize_all(fc_pre, rm);
    resize_all(fc_act, rm);
    x_final.assign(rd, T(0));
    lnf_mean.assign(rows, T(0));
    lnf_rstd.assign(rows, T(0));
    lnf_out.assign(rd, T(0));
    logits.assign(rows * cfg.vocab_size, T(0));
    probs.assign(rows * cfg.vocab_size, T(0));
    if (for_training) {
        d_x.assign(rd, T(0));
        d_tmp.assign(rd, T(0));
        d_qkv.assign(rows * 3 * cfg.d_model, T(0));
        d_att.assign(att_sz, T(0));
        d_mix.assign(rd, T(0));
        d_fc.assign(rm, T(0));
    }
}

template <typename T>
ForwardStats gpt_forward(const Gpt<T>& model, Workspace<T>& ws, const int* tokens, int batch,
                         int length, const int* targets, bool backward, const HookList& hooks,
                         const std::vector<int>& capture, ActivationTrace* trace) {
    const ModelConfig& cfg = model.config();
    if (length > cfg.block_size)
        fail(ErrorKind::SequenceTooLong,
             std::to_string(length) + " tokens exceed block size " +
                 std::to_string(cfg.block_size));
    if (backward && !hooks.empty())
        fail(ErrorKind::Internal, "training under hooks is not supported");
    if (trace && batch != 1) fail(ErrorKind::Internal, "activation capture wants batch 1");

    ws.ensure(cfg, batch, length, backward);
    const int d = cfg.d_model;
    const int H = cfg.n_heads;
    const int hd = cfg.head_dim();
    const int M = cfg.mlp_dim();
    const int V = cfg.vocab_size;
    const int rows = batch * length;
    const T scale = T(1) / std::sqrt(T(hd));

    if (trace) {
        trace->layers = capture;
        std::sort(trace->layers.begin(), trace->layers.end());
        trace->d_model = d;
        trace->n_positions = length;
        trace->data.assign(capture.size() * std::size_t(length) * d, 0.0f);
    }

    const T* wte = model.tensor("wte");
    const T* wpe = model.tensor("wpe");
    for (int b = 0; b < batch; ++b) {
        for (int t = 0; t < length; ++t) {
            const int tok = tokens[std::size_t(b) * length + t];
            if (tok < 0 || tok >= V) fail(ErrorKind::InvalidTokenId, "token id out of range");
            T* xr = ws.x_in[0].data() + (std::size_t(b) * length + t) * d;
            const T* e = wte + std::size_t(tok) * d;
            const T* p = wpe + std::size_t(t) * d;
            for (int i = 0; i < d; ++i) xr[i] = e[i] + p[i];
        }
    }

    for (int l = 0; l < cfg.n_layers; ++l) {
        const std::string pre = "layer" + std::to_string(l) + ".";
        const T* ln1_g = model.tensor(pre + "ln1.g");
        const T* ln1_b = model.tensor(pre + "ln1.b");
        const T* w_qkv = model.tensor(pre + "attn.w_qkv");
        const T* b_qkv = model.tensor(pre + "attn.b_qkv");
        const T* w_out = model.tensor(pre + "attn.w_out");
        const T* b_out = model.tensor(pre + "attn.b_out");
        const T* ln2_g = model.tensor(pre + "ln2.g");
        const T* ln2_b = model.tensor(pre + "ln2.b");
        const T* w_fc = model.tensor(pre + "mlp.w_fc");
        const T* b_fc = model.tensor(pre + "mlp.b_fc");
        const T* w_proj = model.tensor(pre + "mlp.w_proj");
        const T* b_proj = model.tensor(pre + "mlp.b_proj");

        layernorm_forward(ws.x_in[l].data(), ln1_g, ln1_b, rows, d, ws.ln1_out[l].data(),
                          ws.ln1_mean[l].data(), ws.ln1_rstd[l].data());
        gemm<T>(false, true, rows, 3 * d, d, T(1), ws.ln1_out[l].data(), d, w_qkv, d, T(0),
                ws.qkv[l].data(), 3 * d);
        for (int r = 0; r < rows; ++r)
            for (int i = 0; i < 3 * d; ++i) ws.qkv[l][std::size_t(r) * 3 * d + i] += b_qkv[i];

        for (int b = 0; b < batch; ++b) {
            const T* qkv_b = ws.qkv[l].data() + std::size_t(b) * length * 3 * d;
            for (int h = 0; h < H; ++h) {
                const T* q = qkv_b + std::size_t(h) * hd;
                const T* k = qkv_b + d + std::size_t(h) * hd;
                const T* v = qkv_b + 2 * d + std::size_t(h) * hd;
                T* att = ws.att[l].data() + (std::size_t(b) * H + h) * length * length;
                gemm<T>(false, true, length, length, hd, scale, q, 3 * d, k, 3 * d, T(0), att,
                        length);
                for (int t = 0; t < length; ++t) {
                    T* row = att + std::size_t(t) * length;
                    T mx = row[0];
                    for (int j = 1; j <= t; ++j) mx = std::max(mx, row[j]);
                    T sum = 0;
                    for (int j = 0; j <= t; ++j) {
                        row[j] = std::exp(row[j] - mx);
                        sum += row[j];
                    }
                    const T inv = T(1) / sum;
                    for (int j = 0; j <= t; ++j) row[j] *= inv;
                    for (int j = t + 1; j < length; ++j) row[j] = T(0);
                }
                T* mix = ws.att_mix[l].data() + std::size_t(b) * length * d + std::size_t(h) * hd;
                gemm<T>(false, false, length, hd, length, T(1), att, length, v, 3 * d, T(0), mix,
                        d);
            }
        }

        std::copy(ws.x_in[l].begin(), ws.x_in[l].end(), ws.x_mid[l].begin());
        gemm<T>(false, true, rows, d, d, T(1), ws.att_mix[l].data(), d, w_out, d, T(1),
                ws.x_mid[l].data(), d);
        for (int r = 0; r < rows; ++r)
            for (int i = 0; i < d; ++i) ws.x_mid[l][std::size_t(r) * d + i] += b_out[i];

        layernorm_forward(ws.x_mid[l].data(), ln2_g, ln2_b, rows, d, ws.ln2_out[l].data(),
                          ws.ln2_mean[l].data(), ws.ln2_rstd[l].data());
        gemm<T>(false, true, rows, M, d, T(1), ws.ln2_out[l].data(), d, w_fc, d, T(0),
                ws.fc_pre[l].data(), M);
        for (int r = 0; r < rows; ++r)
            for (int i = 0; i < M; ++i) ws.fc_pre[l][std::size_t(r) * M + i] += b_fc[i];
        for (std::size_t i = 0; i < ws.fc_pre[l].size(); ++i)
            ws.fc_act[l][i] = gelu(ws.fc_pre[l][i]);

        T* x_next = (l + 1 < cfg.n_layers) ? ws.x_in[l + 1].data() : ws.x_final.data();
        std::copy(ws.x_mid[l].begin(), ws.x_mid[l].end(), x_next);
        gemm<T>(false, true, rows, d, M, T(1), ws.fc_act[l].data(), M, w_proj, M, T(1), x_next, d);
        for (int r = 0; r < rows; ++r)
            for (int i = 0; i < d; ++i) x_next[std::size_t(r) * d + i] += b_proj[i];

        // Hooks land on the stream exactly where layer l's output is added:
        // an mlp_bias hook folds into that sum, a residual hook adds after it.
        for (const Hook& h : hooks) {
            if (h.layer != l) continue;
            if (h.positions == HookPositions::all) {
                for (int r = 0; r < rows; ++r) apply_hook_row(h, x_next + std::size_t(r) * d, d);
            } else {
                for (int b = 0; b < batch; ++b)
                    apply_hook_row(h, x_next + (std::size_t(b) * length + length - 1) * d, d);
            }
        }

        if (trace) {
            auto it = std::find(trace->layers.begin(), trace->layers.end(), l);
            if (it != trace->layers.end()) {
                const std::size_t li = std::size_t(it - trace->layers.begin());
                float* dst = trace->data.data() + li * std::size_t(length) * d;
                for (std::size_t i = 0; i < std::size_t(length) * d; ++i) dst[i] = float(x_next[i]);
            }
        }
    }

    layernorm_forward(ws.x_final.data(), model.tensor("lnf.g"), model.tensor("lnf.b"), rows, d,
                      ws.lnf_out.data(), ws.lnf_mean.data(), ws.lnf_rstd.data());
    gemm<T>(false, true, rows, V, d, T(1), ws.lnf_out.data(), d, model.tensor("unembed"), d, T(0),
            ws.logits.data(), V);

    ForwardStats stats;
    if (targets) {
        double loss = 0.0;
        for (int r = 0; r < rows; ++r) {
            const T* lr = ws.logits.data() + std::size_t(r) * V;
            T* pr = ws.probs.data() + std::size_t(r) * V;
            T mx = lr[0];
            for (int i = 1; i < V; ++i) mx = std::max(mx, lr[i]);
            T sum = 0;
            for (int i = 0; i < V; ++i) {
                pr[i] = std::exp(lr[i] - mx);
                sum += pr[i];
            }
            const T inv = T(1) / sum;
            for (int i = 0; i < V; ++i) pr[i] *= inv;
            loss += -std::log(double(std::max(pr[targets[r]], T(1e-12))));
        }
        stats.loss = loss / rows;
    }

    if (!backward) return stats;

    std::vector<T>& grad = ws.grad;
    grad.assign(model.n_params(), T(0));
    auto g = [&](const std::string& name) { return grad.data() + model.view(name).offset; };

    const T inv_rows = T(1) / T(rows);
    for (int r = 0; r < rows; ++r) {
        T* pr = ws.probs.data() + std::size_t(r) * V;
        pr[targets[r]] -= T(1);
        for (int i = 0; i < V; ++i) pr[i] *= inv_rows;
    }
    gemm<T>(true, false, V, d, rows, T(1), ws.probs.data(), V, ws.lnf_out.data(), d, T(1),
            g("unembed"), d);
    gemm<T>(false, false, rows, d, V, T(1), ws.probs.data(), V, model.tensor("unembed"), d, T(0),
            ws.d_tmp.data(), d);
    std::fill(ws.d_x.begin(), ws.d_x.end(), T(0));
    layernorm_backward(ws.d_tmp.data(), ws.x_final.data(), model.tensor("lnf.g"),
                       ws.lnf_mean.data(), ws.lnf_rstd.data(), rows, d, ws.d_x.data(), g("lnf.g"),
                       g("lnf.b"));

    for (int l = cfg.n_layers - 1; l >= 0; --l) {
        const std::string pre = "layer" + std::to_string(l) + ".";
        const T* w_out = model.tensor(pre + "attn.w_out");
        const T* w_qkv = model.tensor(pre + "attn.w_qkv");
        const T* w_fc = model.tensor(pre + "mlp.w_fc");
        const T* w_proj = model.tensor(pre + "mlp.w_proj");

        // d_x currently holds the gradient of the stream after layer l.
        gemm<T>(false, false, rows, M, d, T(1), ws.d_x.data(), d, w_proj, M, T(0), ws.d_fc.data(),
                M);
        gemm<T>(true, false, d, M, rows, T(1), ws.d_x.data(), d, ws.fc_act[l].data(), M, T(1),
                g(pre + "mlp.w_proj"), M);
        column_sums(ws.d_x.data(), rows, d, g(pre + "mlp.b_proj"));
        for (std::size_t i = 0; i < ws.d_fc.size(); ++i) ws.d_fc[i] *= gelu_grad(ws.fc_pre[l][i]);
        gemm<T>(true, false, M, d, rows, T(1), ws.d_fc.data(), M, ws.ln2_out[l].data(), d, T(1),
                g(pre + "mlp.w_fc"), d);
        column_sums(ws.d_fc.data(), rows, M, g(pre + "mlp.b_fc"));
        gemm<T>(false, false, rows, d, M, T(1), ws.d_fc.data(), M, w_fc, d, T(0), ws.d_tmp.data(),
                d);
        layernorm_backward(ws.d_tmp.data(), ws.x_mid[l].data(), model.tensor(pre + "ln2.g"),
                           ws.ln2_mean[l].data(), ws.ln2_rstd[l].data(), rows, d, ws.d_x.data(),
                           g(pre + "ln2.g"), g(pre + "ln2.b"));

        // d_x is now the gradient of x_mid.
        gemm<T>(false, false, rows, d, d, T(1), ws.d_x.data(), d, w_out, d, T(0), ws.d_mix.data(),
                d);
        gemm<T>(true, false, d, d, rows, T(1), ws.d_x.data(), d, ws.att_mix[l].data(), d, T(1),
                g(pre + "attn.w_out"), d);
        column_sums(ws.d_x.data(), rows, d, g(pre + "attn.b_out"));

        std::fill(ws.d_qkv.begin(), ws.d_qkv.end(), T(0));
        for (int b = 0; b < batch; ++b) {
            const T* qkv_b = ws.qkv[l].data() + std::size_t(b) * length * 3 * d;
            T* d_qkv_b = ws.d_qkv.data() + std::size_t(b) * length * 3 * d;
            for (int h = 0; h < H; ++h) {
                const T* q = qkv_b + std::size_t(h) * hd;
                const T* k = qkv_b + d + std::size_t(h) * hd;
                const T* v = qkv_b + 2 * d + std::size_t(h) * hd;
                T* dq = d_qkv_b + std::size_t(h) * hd;
                T* dk = d_qkv_b + d + std::size_t(h) * hd;
                T* dv = d_qkv_b + 2 * d + std::size_t(h) * hd;
                const T* att = ws.att[l].data() + (std::size_t(b) * H + h) * length * length;
                T* datt = ws.d_att.data() + (std::size_t(b) * H + h) * length * length;
                const T* dmix =
                    ws.d_mix.data() + std::size_t(b) * length * d + std::size_t(h) * hd;
                gemm<T>(true, false, length, hd, length, T(1), att, length, dmix, d, T(0), dv,
                        3 * d);
                gemm<T>(false, true, length, length, hd, T(1), dmix, d, v, 3 * d, T(0), datt,
                        length);
                for (int t = 0; t < length; ++t) {
                    const T* pa = att + std::size_t(t) * length;
                    T* da = datt + std::size_t(t) * length;
                    T acc = 0;
                    for (int j = 0; j <= t; ++j) acc += da[j] * pa[j];
                    for (int j = 0; j <= t; ++j) da[j] = pa[j] * (da[j] - acc);
                    for (int j = t + 1; j < length; ++j) da[j] = T(0);
                }
                gemm<T>(false, false, length, hd, length, scale, datt, length, k, 3 * d, T(0), dq,
                        3 * d);
                gemm<T>(true, false, length, hd, length, scale, datt, length, q, 3 * d, T(0), dk,
                        3 * d);
            }
        }
        gemm<T>(true, false, 3 * d, d, rows, T(1), ws.d_qkv.data(), 3 * d, ws.ln1_out[l].data(), d,
                T(1), g(pre + "attn.w_qkv"), d);
        column_sums(ws.d_qkv.data(), rows, 3 * d, g(pre + "attn.b_qkv"));
        gemm<T>(false, false, rows, d, 3 * d, T(1), ws.d_qkv.data(), 3 * d, w_qkv, d, T(0),
                ws.d_tmp.data(), d);
        layernorm_backward(ws.d_tmp.data(), ws.x_in[l].data(), model.tensor(pre + "ln1.g"),
                           ws.ln1_mean[l].data(), ws.ln1_rstd[l].data(), rows, d, ws.d_x.data(),
                           g(pre + "ln1.g"), g(pre + "ln1.b"));
    }

    T* d_wte = g("wte");
    T* d_wpe = g("wpe");
    for (int b = 0; b < batch; ++b) {
        for (int t = 0; t < length; ++t) {
            const int tok = tokens[std::size_t(b) * length + t];
            const T* dxr = ws.d_x.data() + (std::size_t(b) * length + t) * d;
            axpy<T>(std::size_t(d), T(1), dxr, d_wte + std::size_t(tok) * d);
            axpy<T>(std::size_t(d), T(1), dxr, d_wpe + std::size_t(t) * d);
        }
    }
    return stats;
}

template struct Workspace<float>;
template struct Workspace<double>;

template ForwardStats gpt_forward<float>(const Gpt<float>&, Workspace<float>&, const int*, int,
                                         int, const int*, bool, const HookList&,
                                         const std::vector<int>&, ActivationTrace*);
template ForwardStats gpt_forward<double>(const Gpt<double>&, Workspace<double>&, const int*, int,
                                          int, const int*, bool, const HookList&,
                                          const std::vector<int>&, ActivationTrace*);

std::vector<float> forward(const Gpt<float>& model, const TokenSequence& tokens,
                           const std::vector<int>& capture, ActivationTrace* trace,
                           const HookList& hooks) {
    if (tokens.empty()) fail(ErrorKind::Internal, "forward needs at least one token");
    std::vector<int> toks(tokens.begin(), tokens.end());
    Workspace<float> ws;
    gpt_forward<float>(model, ws, toks.data(), 1, int(toks.size()), nullptr, false, hooks, capture,
                       trace);
    return ws.logits;
}

template <typename T>
GradCheckReport gradcheck(const Gpt<T>& model, const std::vector<int>& tokens,
                          const std::vector<int>& targets, int batch, int length, double epsilon,
                          int n_samples, uint64_t seed) {
    Workspace<T> ws;
    gpt_forward<T>(model, ws, tokens.data(), batch, length, targets.data(), true);

    // Finite differences run on a double-precision copy of the same weights,
    // which keeps the FD quotient itself far from roundoff.
    Gpt<double> dm = model.template cast<double>();
    Workspace<double> dws;
    std::mt19937_64 rng(splitmix64(seed));
    std::uniform_int_distribution<std::size_t> pick(0, model.n_params() - 1);

    struct Sample {
        std::size_t index;
        double analytic, numeric;
    };
    std::vector<Sample> samples;
    samples.reserve(n_samples);
    for (int s = 0; s < n_samples; ++s) {
        const std::size_t i = pick(rng);
        const double saved = dm.params()[i];
        dm.params()[i] = saved + epsilon;
        const double lp =
            gpt_forward<double>(dm, dws, tokens.data(), batch, length, targets.data(), false).loss;
        dm.params()[i] = saved - epsilon;
        const double lm =
            gpt_forward<double>(dm, dws, tokens.data(), batch, length, targets.data(), false).loss;
        dm.params()[i] = saved;
        samples.push_back({i, double(ws.grad[i]), (lp - lm) / (2 * epsilon)});
    }

    // Per-tensor normalization: |ga - gn| relative to the largest sampled
    // gradient magnitude inside the same tensor, so a dead backward path in
    // one tensor cannot hide behind globally large gradients elsewhere.
    // Tensors whose sampled gradients sit near the measurement floor
    // (e.g. embedding rows of tokens absent from the batch, where both
    // sides are zero up to FD noise) are normalized by that floor instead
    // of dividing noise by noise; a structurally dead backward path still
    // surfaces as an error orders of magnitude above any threshold here.
    GradCheckReport report;
    report.n_sampled = n_samples;
    double abs_sum = 0, global_scale = 0;
    for (const Sample& s : samples) {
        global_scale = std::max({global_scale, std::abs(s.analytic), std::abs(s.numeric)});
        abs_sum += std::abs(s.analytic - s.numeric);
    }
    const double floor = std::max(global_scale * 1e-3, 1e-12);
    for (const TensorView& v : model.tensors()) {
        double scale = 0, max_abs_err = 0;
        bool any = false;
        for (const Sample& s : samples) {
            if (s.index < v.offset || s.index >= v.offset + v.size) continue;
            any = true;
            scale = std::max({scale, std::abs(s.analytic), std::abs(s.numeric)});
            max_abs_err = std::max(max_abs_err, std::abs(s.analytic - s.numeric));
        }
        if (any)
            report.max_rel_error =
                std::max(report.max_rel_error, max_abs_err / std::max(scale, floor));
    }
    report.mean_abs_error = abs_sum / n_samples;
    return report;
}

template GradCheckReport gradcheck<float>(const Gpt<float>&, const std::vector<int>&,
                                          const std::vector<int>&, int, int, double, int,
                                          uint64_t);
template GradCheckReport gradcheck<double>(const Gpt<double>&, const std::vector<int>&,
                                           const std::vector<int>&, int, int, double, int,
                                           uint64_t);

}  // namespace chesslab
