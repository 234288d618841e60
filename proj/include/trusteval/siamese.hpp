#pragma once

#include <cstdint>
#include <vector>

#include "trusteval/acfg.hpp"
#include "trusteval/embed.hpp"

namespace trusteval {

// A labeled comparison: the trusted-state graph against one slot graph.
// label +1 means "same behavior", -1 means "anomalous".
struct PairExample {
    Acfg g_ref;
    Acfg g_slot;
    int label = 1;
};

struct TrainConfig {
    double learning_rate = 0.001;
    std::size_t batch_size = 32;
    std::size_t epochs = 20;
    std::uint64_t shuffle_seed = 0;
    double degenerate_epsilon = 1e-12;
};

// Cosine similarity with an explicit degenerate flag instead of a silent 0
// or NaN when an embedding has (near-)zero norm.
struct Similarity {
    double value = 0.0;
    bool degenerate = false;
};

Similarity cosine_similarity(const Vec& u, const Vec& v, double eps = 1e-12);

struct PairEval {
    double loss = 0.0;
    double similarity = 0.0;
    bool degenerate = false;
};

// (similarity - label)^2 for one pair under the current parameters.
PairEval pair_loss(const ModelParams& m, const PairExample& pair);

// Gradient of the mean batch loss. relu' at exactly 0 is taken as 0.
// Degenerate pairs contribute zero gradient and set the flag.
struct Gradients {
    Mat W1;
    std::vector<Mat> P;
    Mat W2;
    double mean_loss = 0.0;
    bool degenerate = false;
};

Gradients gradients(const ModelParams& m, const std::vector<PairExample>& batch);

struct TrainResult {
    ModelParams params;
    std::vector<double> loss_history; // per-epoch mean loss
};

// Mini-batch SGD, theta <- theta - lr * grad, reshuffling each epoch from
// shuffle_seed. Deterministic. Throws training_error on a non-finite loss.
TrainResult train(ModelParams m, const std::vector<PairExample>& data, const TrainConfig& cfg);

struct GradCheckResult {
    double max_rel_err = 0.0;
    bool degenerate = false;
};

// Central finite differences of pair_loss over every parameter entry,
// compared against gradients(); relative error uses max(1, |numeric|).
GradCheckResult grad_check(const ModelParams& m, const PairExample& pair, double step);

} // namespace trusteval
