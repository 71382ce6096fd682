#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chesslab/model.hpp"

namespace chesslab {

// Optimizer and schedule defaults follow the GPT training recipe this
// project standardizes on: AdamW with betas (0.9, 0.95), weight decay 0.1
// applied to matrices only, cosine learning rate from 3e-4 down to 3e-5.
struct TrainConfig {
    int batch_size = 8;
    int64_t iterations = 10000;
    double lr_max = 3e-4;
    double lr_min = 3e-5;
    int warmup_iters = 100;
    double weight_decay = 0.1;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double adam_eps = 1e-8;
    double grad_clip = 1.0;
    uint64_t seed = 0;
    double val_fraction = 0.01;  // trailing fraction of blocks held out for val loss
    int log_interval = 50;
    int eval_interval = 500;
    int eval_batches = 4;
    int checkpoint_interval = 2000;
    int blas_threads = 2;
    std::string out_dir;  // when set: loss_curve.tsv + model.ckpt live here
};

// Token blocks of (block_size + 1) characters; position t trains on
// predicting position t+1. Every block starts with the ';' game delimiter.
struct BlockSet {
    int row_len = 0;  // block_size + 1
    std::vector<uint8_t> data;
    std::size_t n_rows() const { return row_len == 0 ? 0 : data.size() / row_len; }
    const uint8_t* row(std::size_t r) const { return data.data() + r * row_len; }
};

// Greedy block packing: games (prefixed with ';') fill a row until one no
// longer fits; that game is truncated to close the row and the next row
// starts fresh with the following game. Game order is shuffled by `seed`.
BlockSet pack_blocks(const std::vector<std::string>& movetexts, const Vocab& vocab,
                     int block_size, uint64_t seed);

struct LossPoint {
    int64_t step = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_loss = 0.0;  // NaN outside eval steps
};

struct TrainResult {
    std::vector<LossPoint> curve;
    double final_train_loss = 0.0;
    double final_val_loss = 0.0;
};

// Trains in place. Deterministic for a fixed (seed, blas_threads) pair:
// identical loss curves, identical weights. Throws Divergence if the loss
// leaves the reals.
TrainResult train_model(Model& model, const BlockSet& blocks, const TrainConfig& config);

std::string loss_curve_tsv(const std::vector<LossPoint>& curve);

}  // namespace chesslab
