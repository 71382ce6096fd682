#include "chesslab/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "chesslab/checkpoint.hpp"

namespace chesslab {

BlockSet pack_blocks(const std::vector<std::string>& movetexts, const Vocab& vocab,
                     int block_size, uint64_t seed) {
    if (movetexts.empty()) fail(ErrorKind::EmptyCorpus, "no games to pack");
    BlockSet blocks;
    blocks.row_len = block_size + 1;

    std::vector<uint32_t> order(movetexts.size());
    for (uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(splitmix64(seed));
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<uint8_t> row;
    row.reserve(blocks.row_len);
    for (uint32_t idx : order) {
        const std::string& text = movetexts[idx];
        TokenSequence ids = vocab.encode(";" + text);
        if (int(row.size()) + int(ids.size()) <= blocks.row_len) {
            row.insert(row.end(), ids.begin(), ids.end());
            if (int(row.size()) == blocks.row_len) {
                blocks.data.insert(blocks.data.end(), row.begin(), row.end());
                row.clear();
            }
        } else if (!row.empty()) {
            // Truncate this game to close the row; the next row starts with
            // the following game so every row begins at a game boundary.
            const std::size_t take = blocks.row_len - row.size();
            row.insert(row.end(), ids.begin(), ids.begin() + take);
            blocks.data.insert(blocks.data.end(), row.begin(), row.end());
            row.clear();
        } else {
            // A single game longer than the row: hard-truncate.
            row.assign(ids.begin(), ids.begin() + blocks.row_len);
            blocks.data.insert(blocks.data.end(), row.begin(), row.end());
            row.clear();
        }
    }
    // The trailing partial row is dropped; a padded row would need a pad
    // token the 32-character vocabulary does not have.
    if (blocks.n_rows() == 0)
        fail(ErrorKind::EmptyCorpus, "corpus too small to fill a single training block");
    return blocks;
}

namespace {

struct AdamState {
    std::vector<float> m, v;
    double beta1_pow = 1.0, beta2_pow = 1.0;
};

double schedule_lr(const TrainConfig& cfg, int64_t step) {
    if (step < cfg.warmup_iters) return cfg.lr_max * double(step + 1) / double(cfg.warmup_iters);
    const double span = double(std::max<int64_t>(1, cfg.iterations - cfg.warmup_iters));
    const double t = double(step - cfg.warmup_iters) / span;
    return cfg.lr_min + 0.5 * (cfg.lr_max - cfg.lr_min) * (1.0 + std::cos(t * M_PI));
}

void fill_batch(const BlockSet& blocks, const std::vector<std::size_t>& rows, int block_size,
                std::vector<int>& tokens, std::vector<int>& targets) {
    const int B = int(rows.size());
    tokens.resize(std::size_t(B) * block_size);
    targets.resize(std::size_t(B) * block_size);
    for (int b = 0; b < B; ++b) {
        const uint8_t* src = blocks.row(rows[b]);
        for (int t = 0; t < block_size; ++t) {
            tokens[std::size_t(b) * block_size + t] = src[t];
            targets[std::size_t(b) * block_size + t] = src[t + 1];
        }
    }
}

}  // namespace

TrainResult train_model(Model& model, const BlockSet& blocks, const TrainConfig& cfg) {
    const ModelConfig& mc = model.config();
    if (blocks.row_len != mc.block_size + 1)
        fail(ErrorKind::InvalidConfig, "block set row length does not match model block size");
    set_blas_threads(cfg.blas_threads);

    const std::size_t n_rows = blocks.n_rows();
    const std::size_t n_val = std::min<std::size_t>(
        n_rows / 2, std::max<std::size_t>(1, std::size_t(double(n_rows) * cfg.val_fraction)));
    const std::size_t n_train = n_rows - n_val;
    if (n_train == 0) fail(ErrorKind::EmptyCorpus, "no training rows after the val split");

    std::mt19937_64 rng(splitmix64(cfg.seed ^ 0xfeedULL));
    std::uniform_int_distribution<std::size_t> pick_train(0, n_train - 1);

    AdamState adam;
    adam.m.assign(model.n_params(), 0.0f);
    adam.v.assign(model.n_params(), 0.0f);

    // Per-parameter weight decay mask from the tensor views (matrices only).
    std::vector<uint8_t> decayed(model.n_params(), 0);
    for (const TensorView& v : model.tensors())
        if (v.decayed) std::fill(decayed.begin() + v.offset, decayed.begin() + v.offset + v.size, 1);

    Workspace<float> ws;
    std::vector<int> tokens, targets;
    std::vector<std::size_t> batch_rows(cfg.batch_size);

    auto eval_val_loss = [&](uint64_t eval_seed) {
        std::mt19937_64 vr(splitmix64(eval_seed));
        std::uniform_int_distribution<std::size_t> pick_val(n_train, n_rows - 1);
        double total = 0.0;
        Workspace<float> vws;
        std::vector<int> vt, vy;
        for (int i = 0; i < cfg.eval_batches; ++i) {
            std::vector<std::size_t> rows(cfg.batch_size);
            for (auto& r : rows) r = pick_val(vr);
            fill_batch(blocks, rows, mc.block_size, vt, vy);
            total += gpt_forward<float>(model, vws, vt.data(), cfg.batch_size, mc.block_size,
                                        vy.data(), false)
                         .loss;
        }
        return total / cfg.eval_batches;
    };

    TrainResult result;
    if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);

    for (int64_t step = 0; step < cfg.iterations; ++step) {
        for (auto& r : batch_rows) r = pick_train(rng);
        fill_batch(blocks, batch_rows, mc.block_size, tokens, targets);
        const ForwardStats stats = gpt_forward<float>(model, ws, tokens.data(), cfg.batch_size,
                                                      mc.block_size, targets.data(), true);
        if (!std::isfinite(stats.loss))
            fail(ErrorKind::Divergence,
                 "loss became non-finite at step " + std::to_string(step));

        // Global gradient norm clip.
        double norm_sq = 0.0;
        for (float g : ws.grad) norm_sq += double(g) * g;
        const double norm = std::sqrt(norm_sq);
        const float clip_scale =
            (cfg.grad_clip > 0 && norm > cfg.grad_clip) ? float(cfg.grad_clip / norm) : 1.0f;

        const double lr = schedule_lr(cfg, step);
        adam.beta1_pow *= cfg.beta1;
        adam.beta2_pow *= cfg.beta2;
        const double bias1 = 1.0 / (1.0 - adam.beta1_pow);
        const double bias2 = 1.0 / (1.0 - adam.beta2_pow);
        float* p = model.params().data();
        const float* g = ws.grad.data();
        for (std::size_t i = 0; i < model.n_params(); ++i) {
            const float gi = g[i] * clip_scale;
            adam.m[i] = float(cfg.beta1) * adam.m[i] + float(1.0 - cfg.beta1) * gi;
            adam.v[i] = float(cfg.beta2) * adam.v[i] + float(1.0 - cfg.beta2) * gi * gi;
            const double mhat = adam.m[i] * bias1;
            const double vhat = adam.v[i] * bias2;
            double update = lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
            if (decayed[i]) update += lr * cfg.weight_decay * p[i];
            p[i] -= float(update);
        }

        const bool log_now = (step % cfg.log_interval == 0) || step + 1 == cfg.iterations;
        const bool eval_now = (step % cfg.eval_interval == 0) || step + 1 == cfg.iterations;
        if (log_now || eval_now) {
            LossPoint pt;
            pt.step = step;
            pt.lr = lr;
            pt.train_loss = stats.loss;
            pt.val_loss = eval_now ? eval_val_loss(cfg.seed ^ uint64_t(step))
                                   : std::numeric_limits<double>::quiet_NaN();
            result.curve.push_back(pt);
            result.final_train_loss = stats.loss;
            if (eval_now) result.final_val_loss = pt.val_loss;
            if (!cfg.out_dir.empty())
                write_text_file(cfg.out_dir + "/loss_curve.tsv", loss_curve_tsv(result.curve));
        }
        if (!cfg.out_dir.empty() &&
            ((cfg.checkpoint_interval > 0 && step > 0 && step % cfg.checkpoint_interval == 0) ||
             step + 1 == cfg.iterations)) {
            save_model(model, cfg.out_dir + "/model.ckpt");
        }
    }
    return result;
}

std::string loss_curve_tsv(const std::vector<LossPoint>& curve) {
    std::ostringstream out;
    out << "step\tlr\ttrain_loss\tval_loss\n";
    char buf[128];
    for (const LossPoint& pt : curve) {
        if (std::isnan(pt.val_loss)) {
            snprintf(buf, sizeof buf, "%lld\t%.8f\t%.6f\t-\n", (long long)pt.step, pt.lr,
                     pt.train_loss);
        } else {
            snprintf(buf, sizeof buf, "%lld\t%.8f\t%.6f\t%.6f\n", (long long)pt.step, pt.lr,
                     pt.train_loss, pt.val_loss);
        }
        out << buf;
    }
    return out.str();
}

}  // namespace chesslab
