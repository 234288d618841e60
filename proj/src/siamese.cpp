#include "trusteval/siamese.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trusteval/errors.hpp"
#include "trusteval/rng.hpp"

namespace trusteval {

Similarity cosine_similarity(const Vec& u, const Vec& v, double eps) {
    if (u.size() != v.size()) throw validation_error("cosine_similarity: length mismatch");
    const double nu = norm(u);
    const double nv = norm(v);
    if (nu < eps || nv < eps) return {0.0, true};
    return {dot(u, v) / (nu * nv), false};
}

PairEval pair_loss(const ModelParams& m, const PairExample& pair) {
    if (pair.label != 1 && pair.label != -1) throw validation_error("pair label must be +1 or -1");
    const Vec ua = forward(m, pair.g_ref).U;
    const Vec ub = forward(m, pair.g_slot).U;
    const Similarity s = cosine_similarity(ua, ub);
    const double diff = s.value - static_cast<double>(pair.label);
    return {diff * diff, s.value, s.degenerate};
}

namespace {

// Backpropagate d(loss)/dU through one branch's forward cache, accumulating
// into g. Mirrors forward_cached exactly; the recursion unrolls backwards
// with h_cur[k] holding d(loss)/d(u[l][k]).
void branch_backward(const ModelParams& m, const Acfg& g_in, const ForwardCache& c, const Vec& gU,
                     Gradients& g) {
    outer_acc(g.W2, gU, c.sum_uL);
    const Vec g_sum = mat_t_vec(m.W2, gU);

    std::array<Vec, kVertexCount> h_cur;
    h_cur.fill(g_sum);

    for (std::size_t l = m.L; l >= 1; --l) {
        std::array<Vec, kVertexCount> h_prev;
        if (l > 1)
            for (auto& h : h_prev) h.assign(m.p, 0.0);

        for (std::size_t k = 0; k < kVertexCount; ++k) {
            // through tanh
            Vec delta(m.p);
            for (std::size_t i = 0; i < m.p; ++i) {
                const double u = c.u[l][k][i];
                delta[i] = h_cur[k][i] * (1.0 - u * u);
            }

            const Vec feat(g_in.r[k].begin(), g_in.r[k].end());
            outer_acc(g.W1, delta, feat);

            // through sigma: depth 1 (outermost) down to depth H
            Vec gc = delta;
            const auto& tk = c.t[l - 1][k];
            for (std::size_t h = 1; h <= m.H; ++h) {
                const Vec inp = (h < m.H) ? relu(tk[h]) : c.sig_in[l - 1][k];
                outer_acc(g.P[h - 1], gc, inp);
                Vec gn = mat_t_vec(m.P[h - 1], gc);
                if (h < m.H)
                    for (std::size_t i = 0; i < m.p; ++i)
                        if (!(tk[h][i] > 0.0)) gn[i] = 0.0;
                gc = std::move(gn);
            }

            if (l > 1)
                for (int j : Acfg::in_neighbors(k)) add_in_place(h_prev[j], gc);
        }
        h_cur = h_prev;
    }
}

Gradients zero_gradients(const ModelParams& m) {
    Gradients g;
    g.W1 = Mat(m.p, m.d);
    g.P.assign(m.H, Mat(m.p, m.p));
    g.W2 = Mat(m.p, m.p);
    return g;
}

} // namespace

Gradients gradients(const ModelParams& m, const std::vector<PairExample>& batch) {
    validate_params(m);
    if (batch.empty()) throw validation_error("gradients: empty batch");

    Gradients acc = zero_gradients(m);
    Gradients per_pair = zero_gradients(m);
    double loss_sum = 0.0;

    for (const auto& pair : batch) {
        if (pair.label != 1 && pair.label != -1)
            throw validation_error("pair label must be +1 or -1");
        const ForwardCache ca = forward_cached(m, pair.g_ref);
        const ForwardCache cb = forward_cached(m, pair.g_slot);
        const Similarity s = cosine_similarity(ca.U, cb.U);
        const double y = static_cast<double>(pair.label);
        const double diff = s.value - y;
        loss_sum += diff * diff;
        if (s.degenerate) {
            // similarity is pinned to 0 here, so the loss is locally constant
            acc.degenerate = true;
            continue;
        }

        const double na = norm(ca.U);
        const double nb = norm(cb.U);
        const double dLds = 2.0 * diff;
        Vec gUA(m.p), gUB(m.p);
        for (std::size_t i = 0; i < m.p; ++i) {
            gUA[i] = dLds * (cb.U[i] / (na * nb) - s.value * ca.U[i] / (na * na));
            gUB[i] = dLds * (ca.U[i] / (na * nb) - s.value * cb.U[i] / (nb * nb));
        }

        for (auto& mat : per_pair.P) std::fill(mat.a.begin(), mat.a.end(), 0.0);
        std::fill(per_pair.W1.a.begin(), per_pair.W1.a.end(), 0.0);
        std::fill(per_pair.W2.a.begin(), per_pair.W2.a.end(), 0.0);
        branch_backward(m, pair.g_ref, ca, gUA, per_pair);
        branch_backward(m, pair.g_slot, cb, gUB, per_pair);

        scale_acc(acc.W1, 1.0, per_pair.W1);
        for (std::size_t h = 0; h < m.H; ++h) scale_acc(acc.P[h], 1.0, per_pair.P[h]);
        scale_acc(acc.W2, 1.0, per_pair.W2);
    }

    const double inv = 1.0 / static_cast<double>(batch.size());
    for (auto& v : acc.W1.a) v *= inv;
    for (auto& P : acc.P)
        for (auto& v : P.a) v *= inv;
    for (auto& v : acc.W2.a) v *= inv;
    acc.mean_loss = loss_sum * inv;
    return acc;
}

namespace {

// Deterministic Fisher-Yates; std::shuffle's draw sequence is
// implementation-defined, which would break the bit-identical-runs contract
// across standard libraries.
void shuffle_indices(std::vector<std::size_t>& idx, std::mt19937_64& rng) {
    for (std::size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
}

} // namespace

TrainResult train(ModelParams m, const std::vector<PairExample>& data, const TrainConfig& cfg) {
    validate_params(m);
    if (data.empty()) throw validation_error("train: empty dataset");
    if (cfg.learning_rate <= 0.0 || cfg.batch_size == 0 || cfg.epochs == 0 ||
        cfg.degenerate_epsilon <= 0.0)
        throw validation_error("train: config fields must be positive");

    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 shuffle_rng(cfg.shuffle_seed);

    TrainResult result;
    result.loss_history.reserve(cfg.epochs);

    std::vector<PairExample> batch;
    batch.reserve(cfg.batch_size);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_indices(idx, shuffle_rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < idx.size(); start += cfg.batch_size) {
            batch.clear();
            const std::size_t end = std::min(start + cfg.batch_size, idx.size());
            for (std::size_t i = start; i < end; ++i) batch.push_back(data[idx[i]]);

            const Gradients g = gradients(m, batch);
            if (!std::isfinite(g.mean_loss))
                throw training_error("train: non-finite loss at epoch " + std::to_string(epoch + 1));
            loss_sum += g.mean_loss * static_cast<double>(batch.size());

            scale_acc(m.W1, -cfg.learning_rate, g.W1);
            for (std::size_t h = 0; h < m.H; ++h) scale_acc(m.P[h], -cfg.learning_rate, g.P[h]);
            scale_acc(m.W2, -cfg.learning_rate, g.W2);
        }
        result.loss_history.push_back(loss_sum / static_cast<double>(data.size()));
    }

    result.params = std::move(m);
    return result;
}

GradCheckResult grad_check(const ModelParams& m, const PairExample& pair, double step) {
    if (step <= 0.0) throw validation_error("grad_check: step must be positive");

    const Gradients analytic = gradients(m, {pair});
    if (analytic.degenerate) return {0.0, true};

    ModelParams probe = m;
    double max_rel = 0.0;
    auto check_entry = [&](double& slot, double analytic_value) {
        const double saved = slot;
        slot = saved + step;
        const double up = pair_loss(probe, pair).loss;
        slot = saved - step;
        const double down = pair_loss(probe, pair).loss;
        slot = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double rel = std::abs(analytic_value - numeric) / std::max(1.0, std::abs(numeric));
        max_rel = std::max(max_rel, rel);
    };

    for (std::size_t i = 0; i < probe.W1.a.size(); ++i) check_entry(probe.W1.a[i], analytic.W1.a[i]);
    for (std::size_t h = 0; h < probe.H; ++h)
        for (std::size_t i = 0; i < probe.P[h].a.size(); ++i)
            check_entry(probe.P[h].a[i], analytic.P[h].a[i]);
    for (std::size_t i = 0; i < probe.W2.a.size(); ++i) check_entry(probe.W2.a[i], analytic.W2.a[i]);

    return {max_rel, false};
}

} // namespace trusteval
