#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "trusteval/embed.hpp"
#include "trusteval/telemetry.hpp"

namespace trusteval {

// One slot's trust decision. trusted <=> similarity >= threshold, except
// that a degenerate (near-zero-norm) embedding is never trusted.
struct TrustVerdict {
    std::uint64_t slot_index = 0;
    double similarity = 0.0;
    double threshold = 0.0;
    bool trusted = false;
    bool degenerate = false;
};

struct RocPoint {
    double threshold = 0.0;  // classify positive when score >= threshold
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // from (0,0) at +inf down to (1,1)
};

// Threshold sweep over the distinct scores in descending order, ties
// grouped. Positives are label +1. Throws on single-class input.
RocCurve roc_curve(const std::vector<double>& scores, const std::vector<int>& labels);

// Trapezoidal area over fpr; equals the Mann-Whitney statistic with ties
// counted one half.
double auc(const RocCurve& curve);

// Embed the trusted reference once, then score every slot of the stream
// against it. Evaluation continues past untrusted slots; termination policy
// is the service layer's business.
std::vector<TrustVerdict> evaluate_stream(const ModelParams& m, const SlotRecord& reference,
                                          const std::vector<SlotRecord>& stream, double delta);

struct DetectionReport {
    std::size_t true_detections = 0;  // untrusted and actually anomalous
    std::size_t missed = 0;           // trusted but actually anomalous
    std::size_t false_alarms = 0;     // untrusted but actually normal
};

DetectionReport detection_report(const std::vector<TrustVerdict>& verdicts,
                                 const std::set<std::uint64_t>& anomaly_slots);

// Plot-ready emission.
std::string roc_to_csv(const RocCurve& curve);          // threshold,fpr,tpr
std::string verdicts_to_csv(const std::vector<TrustVerdict>& verdicts); // slot,similarity,trusted
std::string loss_history_to_csv(const std::vector<double>& history);    // epoch,mean_loss

} // namespace trusteval
