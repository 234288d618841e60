#include "trusteval/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "trusteval/errors.hpp"
#include "trusteval/siamese.hpp"

namespace trusteval {

RocCurve roc_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw validation_error("roc_curve: length mismatch");
    if (scores.empty()) throw validation_error("roc_curve: empty input");
    std::size_t pos = 0, neg = 0;
    for (int l : labels) {
        if (l == 1)
            ++pos;
        else if (l == -1)
            ++neg;
        else
            throw validation_error("roc_curve: labels must be +1 or -1");
    }
    if (pos == 0 || neg == 0) throw validation_error("roc_curve: need both classes");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        // consume the whole tie group at this score
        while (i < order.size() && scores[order[i]] == s) {
            if (labels[order[i]] == 1)
                ++tp;
            else
                ++fp;
            ++i;
        }
        curve.points.push_back({s, static_cast<double>(fp) / static_cast<double>(neg),
                                static_cast<double>(tp) / static_cast<double>(pos)});
    }
    return curve;
}

double auc(const RocCurve& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        area += (b.fpr - a.fpr) * 0.5 * (a.tpr + b.tpr);
    }
    return area;
}

std::vector<TrustVerdict> evaluate_stream(const ModelParams& m, const SlotRecord& reference,
                                          const std::vector<SlotRecord>& stream, double delta) {
    if (!(delta > 0.0 && delta <= 1.0)) throw validation_error("evaluate_stream: delta must be in (0, 1]");
    if (!m.norm_stats.valid) throw validation_error("evaluate_stream: model carries no norm stats");
    validate_params(m);

    const Vec ref_emb = forward(m, build_acfg(reference, m.norm_stats)).U;

    std::vector<TrustVerdict> out;
    out.reserve(stream.size());
    for (const auto& slot : stream) {
        const Vec emb = forward(m, build_acfg(slot, m.norm_stats)).U;
        const Similarity s = cosine_similarity(ref_emb, emb);
        TrustVerdict v;
        v.slot_index = slot.slot_index;
        v.similarity = s.value;
        v.threshold = delta;
        v.degenerate = s.degenerate;
        v.trusted = !s.degenerate && s.value >= delta;
        out.push_back(v);
    }
    return out;
}

DetectionReport detection_report(const std::vector<TrustVerdict>& verdicts,
                                 const std::set<std::uint64_t>& anomaly_slots) {
    DetectionReport r;
    for (const auto& v : verdicts) {
        const bool anomalous = anomaly_slots.count(v.slot_index) > 0;
        if (!v.trusted && anomalous)
            ++r.true_detections;
        else if (v.trusted && anomalous)
            ++r.missed;
        else if (!v.trusted && !anomalous)
            ++r.false_alarms;
    }
    return r;
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

std::string roc_to_csv(const RocCurve& curve) {
    std::string out = "threshold,fpr,tpr\n";
    for (const auto& p : curve.points)
        out += fmt(p.threshold) + "," + fmt(p.fpr) + "," + fmt(p.tpr) + "\n";
    return out;
}

std::string verdicts_to_csv(const std::vector<TrustVerdict>& verdicts) {
    std::string out = "slot,similarity,trusted\n";
    for (const auto& v : verdicts)
        out += std::to_string(v.slot_index) + "," + fmt(v.similarity) + "," +
               (v.trusted ? "1" : "0") + "\n";
    return out;
}

std::string loss_history_to_csv(const std::vector<double>& history) {
    std::string out = "epoch,mean_loss\n";
    for (std::size_t i = 0; i < history.size(); ++i)
        out += std::to_string(i + 1) + "," + fmt(history[i]) + "\n";
    return out;
}

} // namespace trusteval
