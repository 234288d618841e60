#include "trusteval/cli.hpp"

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "trusteval/acfg.hpp"
#include "trusteval/dataset.hpp"
#include "trusteval/embed.hpp"
#include "trusteval/errors.hpp"
#include "trusteval/evaluation.hpp"
#include "trusteval/rng.hpp"
#include "trusteval/service.hpp"
#include "trusteval/siamese.hpp"
#include "trusteval/telemetry.hpp"

namespace trusteval {
namespace {

// Seed stream tags, one per independent consumer of the user-facing seed.
constexpr std::uint64_t kScenarioStream = 0x73636e;   // stream + reference profile
constexpr std::uint64_t kSlotPickStream = 0x736c6f74; // which slots turn anomalous
constexpr std::uint64_t kShuffleStream = 0x73687566;  // epoch shuffling

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw file_missing_error("cannot open for writing: " + path);
    out << content;
    if (!out)
        throw file_corrupt_error("short write: " + path);
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
    auto slash = path.find_last_of('/');
    auto dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return path + suffix;
    return path.substr(0, dot) + suffix + path.substr(dot);
}

void require_delta(double delta) {
    if (!(delta > 0.0 && delta <= 1.0))
        throw validation_error("delta must be in (0, 1]");
}

// Distinct anomaly slots plus a kind for each, deterministic per seed.
std::map<std::uint64_t, AnomalyKind> pick_anomaly_slots(std::uint64_t n_slots,
                                                        std::uint64_t n_anomalies,
                                                        std::uint64_t seed) {
    if (n_anomalies > n_slots)
        throw validation_error("more anomalies than slots");
    auto rng = make_engine(seed, kSlotPickStream);
    std::vector<std::uint64_t> slots(n_slots);
    for (std::uint64_t i = 0; i < n_slots; ++i)
        slots[i] = i;
    for (std::uint64_t i = 0; i < n_anomalies; ++i) {
        auto j = i + uniform_index(rng, slots.size() - i);
        std::swap(slots[i], slots[j]);
    }
    std::map<std::uint64_t, AnomalyKind> out;
    for (std::uint64_t i = 0; i < n_anomalies; ++i)
        out[slots[i]] = static_cast<AnomalyKind>(rng() % 3);
    return out;
}

std::string truth_to_json(const std::map<std::uint64_t, AnomalyKind>& anomalies) {
    nlohmann::json j;
    j["anomaly_slots"] = nlohmann::json::array();
    for (const auto& [slot, kind] : anomalies) {
        (void)kind;
        j["anomaly_slots"].push_back(slot);
    }
    return j.dump() + "\n";
}

std::set<std::uint64_t> truth_from_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw file_missing_error("cannot open truth file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw file_corrupt_error("truth file is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object() || !j.contains("anomaly_slots") || !j["anomaly_slots"].is_array())
        throw file_corrupt_error("truth file needs an anomaly_slots array");
    std::set<std::uint64_t> out;
    for (const auto& v : j["anomaly_slots"]) {
        if (!v.is_number_unsigned())
            throw file_corrupt_error("anomaly_slots entries must be nonnegative integers");
        out.insert(v.get<std::uint64_t>());
    }
    return out;
}

// Scores every stored pair under the model's own normalization stats, so a
// held-out set is judged exactly the way live telemetry would be.
void score_pairs(const ModelParams& m, const Dataset& ds, std::vector<double>& scores,
                 std::vector<int>& labels) {
    auto examples = build_pair_examples(ds.pairs, m.norm_stats);
    scores.clear();
    labels.clear();
    scores.reserve(examples.size());
    labels.reserve(examples.size());
    for (const auto& ex : examples) {
        auto ea = forward(m, ex.g_ref);
        auto eb = forward(m, ex.g_slot);
        scores.push_back(cosine_similarity(ea.U, eb.U).value);
        labels.push_back(ex.label);
    }
}

int cmd_synth(const std::string& out, std::size_t n_raw, std::size_t q, std::size_t s,
              std::size_t k, std::size_t kmeans_iters, std::uint64_t seed,
              const std::string& stream_out, std::uint64_t stream_slots,
              std::uint64_t stream_anomalies, const std::string& reference_out,
              const std::string& truth_out) {
    TrustedProfile profile;
    profile.seed = seed;
    DatasetConfig cfg;
    cfg.n_raw = n_raw;
    cfg.q_select = q;
    cfg.s_anomalies = s;
    cfg.k = k;
    cfg.kmeans_iters = kmeans_iters;
    cfg.seed = seed;
    auto ds = make_dataset(cfg, profile);
    save_dataset(ds, out);
    std::size_t positives = 0;
    for (const auto& pr : ds.pairs)
        if (pr.label == 1)
            ++positives;
    std::cout << "dataset " << out << " pairs " << ds.pairs.size() << " (" << positives
              << " positive, " << (ds.pairs.size() - positives) << " negative)\n";

    if (!stream_out.empty()) {
        TrustedProfile scn = profile;
        scn.seed = mix_seed(seed, kScenarioStream);
        auto anomalies = pick_anomaly_slots(stream_slots, stream_anomalies, seed);
        auto stream = simulate_stream(scn, stream_slots, anomalies);
        save_records(stream, stream_out);
        std::cout << "stream " << stream_out << " slots " << stream_slots << " anomalies "
                  << anomalies.size() << "\n";
        if (!reference_out.empty()) {
            // Reserved slot index just past the stream: same profile, fresh draw.
            save_records({simulate_trusted_slot(scn, stream_slots)}, reference_out);
            std::cout << "reference " << reference_out << "\n";
        }
        if (!truth_out.empty()) {
            write_file(truth_out, truth_to_json(anomalies));
            std::cout << "truth " << truth_out << "\n";
        }
    } else if (!reference_out.empty() || !truth_out.empty()) {
        throw validation_error("--reference-out/--truth-out need --stream-out");
    }
    return 0;
}

int cmd_train(const std::string& data, const std::string& out, const std::string& loss_csv,
              std::size_t p, std::size_t L, std::size_t H, double lr, std::size_t batch,
              std::size_t epochs, std::uint64_t seed) {
    auto ds = load_dataset(data);
    auto m = init_params(p, kFeatureDim, L, H, seed);
    m.norm_stats = ds.stats;
    auto examples = build_pair_examples(ds.pairs, ds.stats);
    TrainConfig cfg;
    cfg.learning_rate = lr;
    cfg.batch_size = batch;
    cfg.epochs = epochs;
    cfg.shuffle_seed = mix_seed(seed, kShuffleStream);
    auto result = train(std::move(m), examples, cfg);
    save_model(result.params, out);
    for (std::size_t e = 0; e < result.loss_history.size(); ++e)
        std::cout << "epoch " << (e + 1) << " mean_loss " << result.loss_history[e] << "\n";
    if (result.loss_history.size() >= 2 && result.loss_history.front() > 0.0)
        std::cout << "loss_ratio " << result.loss_history.back() / result.loss_history.front()
                  << "\n";
    std::cout << "model " << out << "\n";
    if (!loss_csv.empty())
        write_file(loss_csv, loss_history_to_csv(result.loss_history));
    return 0;
}

int cmd_eval(const std::string& data, const std::string& model_path, const std::string& roc_csv,
             const std::vector<std::size_t>& sweep_h, const std::string& train_data,
             std::size_t p, std::size_t L, double lr, std::size_t batch, std::size_t epochs,
             std::uint64_t seed) {
    auto ds = load_dataset(data);
    std::vector<double> scores;
    std::vector<int> labels;
    if (sweep_h.empty()) {
        if (model_path.empty())
            throw validation_error("eval needs --model (or --sweep-h with --train-data)");
        auto m = load_model(model_path);
        score_pairs(m, ds, scores, labels);
        auto curve = roc_curve(scores, labels);
        std::cout << "pairs " << scores.size() << " auc " << auc(curve) << "\n";
        if (!roc_csv.empty())
            write_file(roc_csv, roc_to_csv(curve));
        return 0;
    }
    if (!model_path.empty())
        throw validation_error("--model and --sweep-h are mutually exclusive");
    if (train_data.empty())
        throw validation_error("--sweep-h needs --train-data");
    auto train_ds = load_dataset(train_data);
    auto train_examples = build_pair_examples(train_ds.pairs, train_ds.stats);
    for (auto H : sweep_h) {
        auto m = init_params(p, kFeatureDim, L, H, seed);
        m.norm_stats = train_ds.stats;
        TrainConfig cfg;
        cfg.learning_rate = lr;
        cfg.batch_size = batch;
        cfg.epochs = epochs;
        cfg.shuffle_seed = mix_seed(seed, kShuffleStream);
        auto result = train(std::move(m), train_examples, cfg);
        score_pairs(result.params, ds, scores, labels);
        auto curve = roc_curve(scores, labels);
        std::cout << "H " << H << " auc " << auc(curve) << "\n";
        if (!roc_csv.empty())
            write_file(with_suffix(roc_csv, "_H" + std::to_string(H)), roc_to_csv(curve));
    }
    return 0;
}

int cmd_run(const std::string& model_path, const std::string& reference_path,
            const std::string& stream_path, double delta, const std::string& out,
            const std::string& truth_path) {
    require_delta(delta);
    auto m = load_model(model_path);
    auto refs = load_records(reference_path);
    if (refs.empty())
        throw validation_error("reference file has no records");
    auto stream = load_records(stream_path);
    auto verdicts = evaluate_stream(m, refs.front(), stream, delta);
    auto csv = verdicts_to_csv(verdicts);
    if (out.empty())
        std::cout << csv;
    else
        write_file(out, csv);
    std::size_t untrusted = 0;
    for (const auto& v : verdicts)
        if (!v.trusted)
            ++untrusted;
    std::cout << "slots " << verdicts.size() << " untrusted " << untrusted << "\n";
    if (!truth_path.empty()) {
        auto report = detection_report(verdicts, truth_from_json(truth_path));
        std::cout << "detected " << report.true_detections << " missed " << report.missed
                  << " false_alarms " << report.false_alarms << "\n";
    }
    return 0;
}

int cmd_serve(const std::string& model_path, const std::string& host, std::uint16_t port) {
    auto m = load_model(model_path);
    return serve(host, port, m);
}

} // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"continuous trust evaluation over collaboration telemetry"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "generate a labeled pair dataset");
    std::string synth_out;
    std::size_t n_raw = 5000, q = 4000, s = 1000, k = 8, kmeans_iters = 100;
    std::uint64_t synth_seed = 42;
    std::string stream_out, reference_out, truth_out;
    std::uint64_t stream_slots = 30, stream_anomalies = 10;
    synth->add_option("--out", synth_out, "dataset output path")->required();
    synth->add_option("--n-raw", n_raw, "simulated normal records");
    synth->add_option("--q", q, "similar records kept for positive pairs");
    synth->add_option("--s", s, "anomalous records / negative pairs");
    synth->add_option("--k", k, "clusters used during selection");
    synth->add_option("--kmeans-iters", kmeans_iters, "clustering iteration cap");
    synth->add_option("--seed", synth_seed, "master seed");
    synth->add_option("--stream-out", stream_out, "also emit a telemetry stream");
    synth->add_option("--stream-slots", stream_slots, "slots in the stream");
    synth->add_option("--stream-anomalies", stream_anomalies, "anomalous slots in the stream");
    synth->add_option("--reference-out", reference_out, "trusted reference record for the stream");
    synth->add_option("--truth-out", truth_out, "ground-truth anomaly slots for the stream");

    auto* train_cmd = app.add_subcommand("train", "fit a model on a dataset");
    std::string train_data, train_out, loss_csv;
    std::size_t train_p = 64, train_L = 2, train_H = 2, train_batch = 32, train_epochs = 20;
    double train_lr = 0.001;
    std::uint64_t train_seed = 1;
    train_cmd->add_option("--data", train_data, "dataset path")->required();
    train_cmd->add_option("--out", train_out, "model output path")->required();
    train_cmd->add_option("--loss-csv", loss_csv, "per-epoch mean loss CSV");
    train_cmd->add_option("--p", train_p, "embedding width");
    train_cmd->add_option("--L", train_L, "recursion rounds");
    train_cmd->add_option("--H", train_H, "sigma depth");
    train_cmd->add_option("--lr", train_lr, "learning rate");
    train_cmd->add_option("--batch", train_batch, "batch size");
    train_cmd->add_option("--epochs", train_epochs, "epochs");
    train_cmd->add_option("--seed", train_seed, "init and shuffle seed");

    auto* eval_cmd = app.add_subcommand("eval", "score a dataset, report ROC AUC");
    std::string eval_data, eval_model, roc_csv, eval_train_data;
    std::vector<std::size_t> sweep_h;
    std::size_t eval_p = 64, eval_L = 2, eval_batch = 32, eval_epochs = 20;
    double eval_lr = 0.001;
    std::uint64_t eval_seed = 1;
    eval_cmd->add_option("--data", eval_data, "dataset to score")->required();
    eval_cmd->add_option("--model", eval_model, "trained model path");
    eval_cmd->add_option("--roc-csv", roc_csv, "ROC curve CSV (per-H suffixed under --sweep-h)");
    eval_cmd->add_option("--sweep-h", sweep_h, "train and score one model per sigma depth")
        ->delimiter(',');
    eval_cmd->add_option("--train-data", eval_train_data, "training dataset for --sweep-h");
    eval_cmd->add_option("--p", eval_p, "embedding width for --sweep-h");
    eval_cmd->add_option("--L", eval_L, "recursion rounds for --sweep-h");
    eval_cmd->add_option("--lr", eval_lr, "learning rate for --sweep-h");
    eval_cmd->add_option("--batch", eval_batch, "batch size for --sweep-h");
    eval_cmd->add_option("--epochs", eval_epochs, "epochs for --sweep-h");
    eval_cmd->add_option("--seed", eval_seed, "init and shuffle seed for --sweep-h");

    auto* run_cmd = app.add_subcommand("run", "replay a recorded stream against a reference");
    std::string run_model, run_reference, run_stream, run_out, run_truth;
    double run_delta = 0.85;
    run_cmd->add_option("--model", run_model, "trained model path")->required();
    run_cmd->add_option("--reference", run_reference, "trusted reference record file")->required();
    run_cmd->add_option("--stream", run_stream, "telemetry stream file")->required();
    run_cmd->add_option("--delta", run_delta, "trust threshold in (0, 1]");
    run_cmd->add_option("--out", run_out, "verdict CSV path (stdout when omitted)");
    run_cmd->add_option("--truth", run_truth, "ground-truth file for a detection report");

    auto* serve_cmd = app.add_subcommand("serve", "speak the session protocol over TCP");
    std::string serve_model, serve_host = "127.0.0.1";
    std::uint16_t serve_port = 8787;
    serve_cmd->add_option("--model", serve_model, "trained model path")->required();
    serve_cmd->add_option("--host", serve_host, "bind address");
    serve_cmd->add_option("--port", serve_port, "bind port");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (synth->parsed())
            return cmd_synth(synth_out, n_raw, q, s, k, kmeans_iters, synth_seed, stream_out,
                             stream_slots, stream_anomalies, reference_out, truth_out);
        if (train_cmd->parsed())
            return cmd_train(train_data, train_out, loss_csv, train_p, train_L, train_H, train_lr,
                             train_batch, train_epochs, train_seed);
        if (eval_cmd->parsed())
            return cmd_eval(eval_data, eval_model, roc_csv, sweep_h, eval_train_data, eval_p,
                            eval_L, eval_lr, eval_batch, eval_epochs, eval_seed);
        if (run_cmd->parsed())
            return cmd_run(run_model, run_reference, run_stream, run_delta, run_out, run_truth);
        if (serve_cmd->parsed())
            return cmd_serve(serve_model, serve_host, serve_port);
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace trusteval
