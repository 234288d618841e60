#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "trusteval/acfg.hpp"
#include "trusteval/linalg.hpp"

namespace trusteval {

// Parameters of the iterative graph-embedding network.
//
// Per vertex k, starting from u0 = 0, the recursion runs L rounds:
//   u[l][k] = tanh(W1 * R_k + sigma(sum of u[l-1][j] over in-neighbors j))
// where sigma is an H-deep relu chain of p x p maps,
//   sigma(x) = P1 * relu(P2 * ... relu(PH * x)),
// and the graph embedding pools the final round: U = W2 * (u[L][0] + u[L][1] + u[L][2]).
struct ModelParams {
    std::size_t p = 0;       // embedding width
    std::size_t d = kFeatureDim;
    std::size_t L = 1;       // recursion rounds
    std::size_t H = 2;       // sigma depth
    Mat W1;                  // p x d input map
    std::vector<Mat> P;      // H maps, each p x p; P[0] is applied last
    Mat W2;                  // p x p pooling map
    NormStats norm_stats;    // invalid until bound by the training pipeline
};

struct Embedding {
    Vec U;                                    // pooled graph embedding, length p
    std::array<Vec, kVertexCount> u;          // final per-vertex embeddings
};

// Every intermediate the backward pass needs.
struct ForwardCache {
    // u[l][k]: vertex k after round l; u[0] is the all-zero start.
    std::vector<std::array<Vec, kVertexCount>> u;
    // sig_in[l-1][k]: aggregated neighbor sum fed to sigma in round l.
    std::vector<std::array<Vec, kVertexCount>> sig_in;
    // t[l-1][k][h-1]: sigma's pre-relu value at depth h in round l, where
    // depth H is the innermost map (applied first) and depth 1 the output.
    std::vector<std::array<std::vector<Vec>, kVertexCount>> t;
    Vec sum_uL;
    Vec U;
};

// Throws validation_error when dimensions are inconsistent.
void validate_params(const ModelParams& m);

Vec sigma(const ModelParams& m, const Vec& x);

Embedding forward(const ModelParams& m, const Acfg& g);
ForwardCache forward_cached(const ModelParams& m, const Acfg& g);

// Entries uniform in [-1/sqrt(p), 1/sqrt(p)], deterministic per seed.
// norm_stats starts invalid; the trainer binds it.
ModelParams init_params(std::size_t p, std::size_t d, std::size_t L, std::size_t H,
                        std::uint64_t seed);

// Single-document JSON model file. Emission is byte-stable: saving the same
// params twice produces identical files.
std::string model_to_json(const ModelParams& m);
void save_model(const ModelParams& m, const std::string& path);
ModelParams load_model(const std::string& path);

bool params_equal(const ModelParams& a, const ModelParams& b);

} // namespace trusteval
