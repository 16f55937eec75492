// End-to-end acceptance checks. Each criterion prints exactly one
// PASS/FAIL/SKIP line; the process exit code is the number of failures.
//
//   acceptance [--runs N] [--data DIR] [--scratch DIR] [--keep]
//
// --data (or the PCGKIT_DATA environment variable) points at a real
// heart-sound dataset laid out as subset directories with REFERENCE.csv
// files; without it the real-data criterion is skipped with a notice.
// --runs shrinks the real-data protocol from its default 50 runs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include "oracles.hpp"
#include "pcgkit/dataset.hpp"
#include "pcgkit/evaluation.hpp"
#include "pcgkit/feature_csv.hpp"
#include "pcgkit/mfcc.hpp"
#include "pcgkit/pipeline.hpp"
#include "pcgkit/preprocess.hpp"
#include "pcgkit/rng.hpp"
#include "pcgkit/segmentation.hpp"
#include "pcgkit/synth.hpp"

using namespace pcgkit;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Options {
    std::size_t runs = 50;
    fs::path data_root;
    fs::path scratch;
    bool keep_scratch = false;
};

int report(int index, bool pass, const std::string& name, const std::string& detail) {
    std::printf("criterion %d %s %s (%s)\n", index, pass ? "PASS" : "FAIL",
                name.c_str(), detail.c_str());
    std::fflush(stdout);
    return pass ? 0 : 1;
}

void report_skip(int index, const std::string& name, const std::string& reason) {
    std::printf("criterion %d SKIP %s (%s)\n", index, name.c_str(), reason.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* format, ...) {
    va_list args;
    va_start(args, format);
    char buffer[512];
    std::vsnprintf(buffer, sizeof(buffer), format, args);
    va_end(args);
    return buffer;
}

// ---------------------------------------------------------------- criterion 1

int criterion_transform_oracles() {
    const auto start = Clock::now();
    Rng rng(101);
    double worst_fft = 0.0;
    double worst_dct = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> frame(64);
        for (double& v : frame) {
            v = rng.uniform(-1.0, 1.0);
        }
        const std::vector<double> fast = frame_power_spectrum(frame);
        const std::vector<double> slow = oracles::dft_power(frame);
        double peak = 0.0;
        for (double v : slow) {
            peak = std::max(peak, std::abs(v));
        }
        for (std::size_t k = 0; k < fast.size(); ++k) {
            worst_fft = std::max(worst_fft, std::abs(fast[k] - slow[k]) / peak);
        }

        std::vector<double> bands(20);
        for (double& v : bands) {
            v = rng.uniform(-120.0, 20.0);
        }
        const std::vector<double> c_fast = dct_ii(bands);
        const std::vector<double> c_slow = oracles::dct_ii(bands);
        for (std::size_t k = 0; k < c_fast.size(); ++k) {
            worst_dct = std::max(worst_dct, std::abs(c_fast[k] - c_slow[k]));
        }
    }
    const double elapsed = seconds_since(start);
    const bool pass = worst_fft <= 1e-9 && worst_dct <= 1e-12 && elapsed < 5.0;
    return report(1, pass, "spectrum and cosine transforms match direct summation",
                  fmt("1000 frames, fft rel %.2e <= 1e-9, dct %.2e <= 1e-12, %.1f s",
                      worst_fft, worst_dct, elapsed));
}

// ---------------------------------------------------------------- criterion 2

int criterion_mel_math() {
    const double mel700 = hz_to_mel(700.0);
    const bool anchor_ok = std::abs(mel700 - 781.17) <= 0.01;

    double worst_roundtrip = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double f = 500.0 * static_cast<double>(i) / 999.0;
        worst_roundtrip = std::max(worst_roundtrip,
                                   std::abs(mel_to_hz(hz_to_mel(f)) - f));
    }
    const bool roundtrip_ok = worst_roundtrip < 1e-9;

    const MelFilterBank bank = build_filterbank(0.0, 400.0, 20, 64, 1000.0);
    const bool edge_ok = !bank.bin_points.empty() && bank.bin_points.back() == 26;

    const bool pass = anchor_ok && roundtrip_ok && edge_ok;
    return report(2, pass, "mel scale anchors, inversion, and band edge",
                  fmt("mel(700)=%.6f, roundtrip %.2e < 1e-9, top band bin %zu == 26",
                      mel700, worst_roundtrip,
                      bank.bin_points.empty() ? std::size_t(0) : bank.bin_points.back()));
}

// ---------------------------------------------------------------- criterion 3

int criterion_metrics() {
    bool examples_ok = true;

    ConfusionMatrix worked;
    worked.tp = 9;
    worked.fn = 1;
    worked.fp = 2;
    worked.tn = 8;
    const Metrics w = metrics_from_confusion(worked);
    examples_ok &= std::abs(w.acc - 85.0) < 1e-12 && std::abs(w.se - 90.0) < 1e-12 &&
                   std::abs(w.sp - 80.0) < 1e-12 && std::abs(w.macc - 85.0) < 1e-12;

    ConfusionMatrix perfect;
    perfect.tp = 5;
    perfect.tn = 5;
    const Metrics p = metrics_from_confusion(perfect);
    examples_ok &= p.acc == 100.0 && p.se == 100.0 && p.sp == 100.0 && p.macc == 100.0;

    ConfusionMatrix constant_normal;
    constant_normal.fn = 5;
    constant_normal.tn = 5;
    const Metrics c = metrics_from_confusion(constant_normal);
    examples_ok &= c.acc == 50.0 && c.se == 0.0 && c.sp == 100.0 && c.macc == 50.0;

    Rng rng(303);
    double worst = 0.0;
    std::size_t tested = 0;
    while (tested < 10000) {
        ConfusionMatrix cm;
        cm.tp = rng.below(200);
        cm.fn = rng.below(200);
        cm.fp = rng.below(200);
        cm.tn = rng.below(200);
        if (cm.tp + cm.fn == 0 || cm.fp + cm.tn == 0) {
            continue;
        }
        const Metrics m = metrics_from_confusion(cm);
        const double se = 100.0 * static_cast<double>(cm.tp) /
                          static_cast<double>(cm.tp + cm.fn);
        const double sp = 100.0 * static_cast<double>(cm.tn) /
                          static_cast<double>(cm.fp + cm.tn);
        worst = std::max(worst, std::abs(m.macc - (se + sp) / 2.0));
        ++tested;
    }
    const bool identity_ok = worst <= 1e-12;

    return report(3, examples_ok && identity_ok,
                  "confusion metrics match worked examples and the mean identity",
                  fmt("examples %s, balanced-accuracy deviation %.2e over 10000 matrices",
                      examples_ok ? "exact" : "WRONG", worst));
}

// ---------------------------------------------------------------- criterion 4

std::vector<LabeledSample> cluster_samples(std::size_t count, std::size_t dim,
                                           double separation, Rng& rng) {
    std::vector<LabeledSample> data(count);
    for (std::size_t i = 0; i < count; ++i) {
        const bool abnormal = i % 2 == 0;
        data[i].label = abnormal ? Label::abnormal : Label::normal;
        data[i].features.resize(dim);
        for (double& f : data[i].features) {
            f = rng.normal(abnormal ? separation : 0.0, 1.0);
        }
    }
    return data;
}

int criterion_classifier_oracles() {
    // Nearest neighbors against the exhaustive oracle.
    Rng rng(404);
    std::size_t knn_checks = 0;
    std::size_t knn_wrong = 0;
    for (int dataset = 0; dataset < 100; ++dataset) {
        const std::size_t n = 10 + rng.below(191); // up to 200
        const std::size_t dim = 52;
        std::vector<LabeledSample> data(n);
        for (std::size_t i = 0; i < n; ++i) {
            data[i].features.resize(dim);
            for (double& f : data[i].features) {
                f = rng.normal(0.0, 2.0);
            }
            data[i].label = rng.below(2) == 0 ? Label::normal : Label::abnormal;
        }
        data[0].label = Label::abnormal;
        data[1].label = Label::normal;

        ClassifierConfig config;
        config.kind = ClassifierKind::knn;
        config.knn_k = 1 + 2 * rng.below(5);
        const TrainedModel model = fit(config, data);

        std::vector<std::vector<double>> z_points;
        std::vector<Label> labels;
        for (const LabeledSample& s : data) {
            z_points.push_back(model.standardization.apply(s.features));
            labels.push_back(s.label);
        }
        for (int q = 0; q < 10; ++q) {
            std::vector<double> query(dim);
            for (double& f : query) {
                f = rng.uniform(-4.0, 4.0);
            }
            const Label expect = oracles::brute_knn(
                config.knn_k, z_points, labels, model.standardization.apply(query));
            knn_wrong += model.predict(query) != expect;
            ++knn_checks;
        }
    }

    // Support vector machines: every fit must pass the optimality audit, and
    // the separable set must be learned perfectly.
    double worst_gap = 0.0;
    double worst_violation = 0.0;
    std::size_t svm_fits = 0;
    std::size_t toy_errors = 0;
    const auto audit_fit = [&](const ClassifierConfig& config,
                               const std::vector<LabeledSample>& data,
                               bool expect_perfect) {
        const TrainedModel model = fit(config, data);
        worst_gap = std::max(worst_gap, model.svm->diagnostics.kkt_gap);
        worst_violation =
            std::max(worst_violation, oracles::svm_kkt_violation(*model.svm));
        ++svm_fits;
        if (expect_perfect) {
            for (const LabeledSample& s : data) {
                toy_errors += model.predict(s.features) != s.label;
            }
        }
    };
    for (SvmKernel kernel :
         {SvmKernel::linear, SvmKernel::gaussian, SvmKernel::polynomial}) {
        Rng toy_rng(505);
        ClassifierConfig config;
        config.kind = ClassifierKind::svm;
        config.kernel = kernel;
        audit_fit(config, cluster_samples(40, 3, 8.0, toy_rng), true);
    }
    {
        Rng hard_rng(506);
        ClassifierConfig config;
        config.kind = ClassifierKind::svm;
        config.kernel = SvmKernel::polynomial;
        audit_fit(config, cluster_samples(60, 4, 1.0, hard_rng), false);
        config.kernel = SvmKernel::gaussian;
        config.svm_c = 10.0;
        audit_fit(config, cluster_samples(60, 4, 1.0, hard_rng), false);
    }
    const bool svm_ok = worst_gap <= 1e-3 && worst_violation <= 1e-3 && toy_errors == 0;

    // Decision trees: perfect recall of distinct points and a full impurity
    // audit of every split.
    std::size_t dt_errors = 0;
    std::size_t dt_audited = 0;
    bool dt_audit_ok = true;
    for (int dataset = 0; dataset < 5; ++dataset) {
        Rng dt_rng(600 + static_cast<std::uint64_t>(dataset));
        std::vector<LabeledSample> data(80);
        for (LabeledSample& s : data) {
            s.features.resize(6);
            for (double& f : s.features) {
                f = dt_rng.normal(0.0, 1.0);
            }
            s.label = dt_rng.below(2) == 0 ? Label::normal : Label::abnormal;
        }
        data[0].label = Label::abnormal;
        data[1].label = Label::normal;

        ClassifierConfig config;
        config.kind = ClassifierKind::dt;
        config.dt_min_leaf = 1;
        config.dt_max_depth = 64;
        const TrainedModel model = fit(config, data);

        std::vector<std::vector<double>> z_points;
        std::vector<Label> labels;
        for (const LabeledSample& s : data) {
            dt_errors += model.predict(s.features) != s.label;
            z_points.push_back(model.standardization.apply(s.features));
            labels.push_back(s.label);
        }
        const std::size_t audited = oracles::audit_tree_gini(*model.dt, z_points, labels);
        if (audited == static_cast<std::size_t>(-1)) {
            dt_audit_ok = false;
        } else {
            dt_audited += audited;
        }
    }
    const bool dt_ok = dt_errors == 0 && dt_audit_ok;

    const bool pass = knn_wrong == 0 && svm_ok && dt_ok;
    return report(4, pass, "classifiers match oracles and optimality audits",
                  fmt("knn %zu/%zu queries match; svm gap %.2e, audit %.2e over %zu fits, "
                      "toy errors %zu; dt errors %zu, %zu splits audited",
                      knn_checks - knn_wrong, knn_checks, worst_gap, worst_violation,
                      svm_fits, toy_errors, dt_errors, dt_audited));
}

// ---------------------------------------------------------------- criterion 5

int criterion_ensemble_vote() {
    // Nine 1-nearest-neighbor members over one feature: a beat value of -1
    // makes its member vote normal, +1 abnormal. Random vote vectors then
    // exercise the majority rule directly.
    ClassifierConfig member_config;
    member_config.kind = ClassifierKind::knn;
    member_config.knn_k = 1;
    const std::vector<LabeledSample> anchor{
        {{-1.0}, Label::normal},
        {{1.0}, Label::abnormal},
    };
    EnsembleModel ensemble;
    for (std::size_t m = 0; m < kBeatsPerRecord; ++m) {
        ensemble.members.push_back(fit(member_config, anchor));
    }

    Rng rng(707);
    std::size_t mismatches = 0;
    std::size_t ties = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        RecordFeatures rf;
        rf.record_id = "vote";
        rf.label = Label::normal;
        std::size_t normal_votes = 0;
        for (std::size_t b = 0; b < kBeatsPerRecord; ++b) {
            BeatFeatures bf;
            bf.beat_index = b;
            const bool vote_normal = rng.below(2) == 0;
            normal_votes += vote_normal;
            bf.values = {vote_normal ? -1.0 : 1.0};
            rf.beats.push_back(std::move(bf));
        }

        const std::vector<Label> votes = ensemble_votes(ensemble, rf);
        std::size_t seen_normal = 0;
        for (Label v : votes) {
            seen_normal += v == Label::normal;
        }
        if (seen_normal != normal_votes) {
            ++mismatches;
            continue;
        }
        // sign(normal_votes - 4.5) > 0 exactly when normal holds a majority;
        // nine voters make 4.5 unreachable.
        const double margin = static_cast<double>(normal_votes) - 4.5;
        ties += margin == 0.0;
        const Label expect = margin > 0.0 ? Label::normal : Label::abnormal;
        mismatches += predict_ensemble(ensemble, rf) != expect;
    }
    const bool pass = mismatches == 0 && ties == 0;
    return report(5, pass, "ensemble vote equals the 9-member majority sign rule",
                  fmt("10000 vote vectors, %zu mismatches, %zu ties", mismatches, ties));
}

// ------------------------------------------------------- criteria 6 and 8

constexpr std::uint64_t kSynthSeed = 11;
constexpr std::uint64_t kCvSeed = 1;

struct FlowResult {
    double pooled_agreement = 0.0;
    double worst_agreement = 1.0;
    std::string worst_id;
    double accuracy = 0.0;
    double elapsed_s = 0.0;
    fs::path features_csv;
    fs::path report_csv;
    fs::path report_json;
};

// The synthetic flow: generate a labeled dataset, run the real pipeline
// (resample, band-pass, segment, per-beat features), score segmentation
// against the generator's ground truth, then cross-validate the ensemble SVM.
FlowResult run_synth_flow(const fs::path& dir) {
    const auto start = Clock::now();
    FlowResult result;

    const fs::path data_dir = dir / "synth";
    write_synth_dataset(data_dir, 100, 100, kSynthSeed);

    const DatasetManifest manifest = load_manifest(data_dir);
    std::vector<RecordFeatures> features;
    std::size_t agree = 0;
    std::size_t total = 0;
    for (const ManifestEntry& entry : manifest.records) {
        const PcgRecord record = load_record(entry);
        const PreprocessResult pre = preprocess(record.samples, record.sample_rate);
        const StateSequence decoded = segment(pre.samples, pre.sample_rate);

        fs::path truth_path = entry.wav_path;
        truth_path.replace_extension(".states");
        const StateSequence truth =
            load_external_segmentation(truth_path, decoded.labels.size());
        std::size_t match = 0;
        for (std::size_t i = 0; i < truth.labels.size(); ++i) {
            match += decoded.labels[i] == truth.labels[i];
        }
        agree += match;
        total += truth.labels.size();
        const double record_agreement =
            static_cast<double>(match) / static_cast<double>(truth.labels.size());
        if (record_agreement < result.worst_agreement) {
            result.worst_agreement = record_agreement;
            result.worst_id = entry.id;
        }

        features.push_back(build_record_features(pre.samples, pre.sample_rate,
                                                 decoded, entry.id, entry.label));
    }
    result.pooled_agreement = static_cast<double>(agree) / static_cast<double>(total);

    result.features_csv = dir / "features.csv";
    write_feature_csv(features, result.features_csv);

    ClassifierConfig config;
    config.kind = ClassifierKind::svm;
    const CvReport report =
        repeated_cv(features, 1, 5, Strategy::ensemble, config, kCvSeed);
    result.accuracy = report.grand_mean.acc;

    result.report_csv = dir / "report.csv";
    result.report_json = dir / "report.json";
    write_report_csv({report}, result.report_csv);
    write_report_json({report}, result.report_json);

    result.elapsed_s = seconds_since(start);
    return result;
}

int criterion_synthetic_end_to_end(const FlowResult& flow) {
    const bool pass = flow.accuracy >= 95.0 && flow.pooled_agreement >= 0.90 &&
                      flow.elapsed_s < 120.0;
    return report(6, pass, "synthetic pipeline accuracy and segmentation agreement",
                  fmt("200 records, ensemble svm 5-fold acc %.2f%% >= 95%%, "
                      "agreement %.4f >= 0.90 (worst %.4f %s), %.0f s < 120 s",
                      flow.accuracy, flow.pooled_agreement, flow.worst_agreement,
                      flow.worst_id.c_str(), flow.elapsed_s));
}

std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int criterion_determinism(const FlowResult& first, const fs::path& second_dir) {
    const FlowResult second = run_synth_flow(second_dir);
    std::vector<std::string> differing;
    const auto compare = [&](const fs::path& a, const fs::path& b) {
        if (read_bytes(a) != read_bytes(b)) {
            differing.push_back(a.filename().string());
        }
    };
    compare(first.features_csv, second.features_csv);
    compare(first.report_csv, second.report_csv);
    compare(first.report_json, second.report_json);

    std::string detail;
    if (differing.empty()) {
        detail = "feature table and both reports byte-identical across reruns";
    } else {
        detail = "differs:";
        for (const std::string& name : differing) {
            detail += " " + name;
        }
    }
    return report(8, differing.empty(), "repeated synthetic flow is byte-stable", detail);
}

// ---------------------------------------------------------------- criterion 7

struct CellTarget {
    Strategy strategy;
    ClassifierKind kind;
    double reference_acc;
};

int criterion_real_data(const Options& options) {
    const char* name = "real-data accuracy within 5 points of reference cells";
    if (options.data_root.empty()) {
        report_skip(7, name,
                    "no dataset given; pass --data DIR or set PCGKIT_DATA to a "
                    "directory of subset folders with REFERENCE.csv files");
        return 0;
    }
    if (!fs::is_directory(options.data_root)) {
        return report(7, false, name,
                      "data root is not a directory: " + options.data_root.string());
    }

    const auto start = Clock::now();
    const DatasetManifest manifest = load_manifest(options.data_root);
    std::vector<RecordFeatures> features;
    std::size_t skipped = 0;
    for (const ManifestEntry& entry : manifest.records) {
        if (entry.label == Label::uncertain) {
            ++skipped;
            continue;
        }
        try {
            const PcgRecord record = load_record(entry);
            const PreprocessResult pre =
                preprocess(record.samples, record.sample_rate);
            const StateSequence decoded = segment(pre.samples, pre.sample_rate);
            features.push_back(build_record_features(pre.samples, pre.sample_rate,
                                                     decoded, entry.id, entry.label));
        } catch (const std::exception&) {
            ++skipped;
        }
    }
    if (features.empty()) {
        return report(7, false, name, "no usable records under " +
                                          options.data_root.string());
    }

    const std::vector<CellTarget> cells{
        {Strategy::single, ClassifierKind::knn, 91.90},
        {Strategy::single, ClassifierKind::svm, 91.95},
        {Strategy::single, ClassifierKind::dt, 87.33},
        {Strategy::ensemble, ClassifierKind::knn, 91.84},
        {Strategy::ensemble, ClassifierKind::svm, 93.59},
        {Strategy::ensemble, ClassifierKind::dt, 92.22},
    };
    std::string detail = fmt("%zu records (%zu skipped), %zu runs:", features.size(),
                             skipped, options.runs);
    bool within_band = true;
    double single_svm = 0.0;
    double ensemble_svm = 0.0;
    double single_dt = 0.0;
    double ensemble_dt = 0.0;
    for (const CellTarget& cell : cells) {
        ClassifierConfig config;
        config.kind = cell.kind;
        const CvReport cv = repeated_cv(features, options.runs, 10, cell.strategy,
                                        config, kCvSeed);
        const double acc = cv.grand_mean.acc;
        detail += fmt(" %s-%s %.2f (target %.2f)",
                      std::string(to_string(cell.strategy)).c_str(),
                      std::string(to_string(cell.kind)).c_str(), acc, cell.reference_acc);
        within_band &= std::abs(acc - cell.reference_acc) <= 5.0;
        if (cell.kind == ClassifierKind::svm) {
            (cell.strategy == Strategy::single ? single_svm : ensemble_svm) = acc;
        }
        if (cell.kind == ClassifierKind::dt) {
            (cell.strategy == Strategy::single ? single_dt : ensemble_dt) = acc;
        }
    }
    const bool ordinal_ok = ensemble_svm > single_svm && ensemble_dt > single_dt;
    detail += fmt("; ensembles beat singles: svm %s, dt %s; %.0f s",
                  ensemble_svm > single_svm ? "yes" : "NO",
                  ensemble_dt > single_dt ? "yes" : "NO", seconds_since(start));
    return report(7, within_band && ordinal_ok, name, detail);
}

} // namespace

int main(int argc, char** argv) {
    Options options;
    if (const char* env = std::getenv("PCGKIT_DATA"); env != nullptr && *env != '\0') {
        options.data_root = env;
    }
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        const auto next = [&]() -> const char* {
            if (i + 1 >= argc) {
                std::fprintf(stderr, "%s needs a value\n", arg.c_str());
                std::exit(2);
            }
            return argv[++i];
        };
        if (arg == "--runs") {
            options.runs = static_cast<std::size_t>(std::strtoull(next(), nullptr, 10));
        } else if (arg == "--data") {
            options.data_root = next();
        } else if (arg == "--scratch") {
            options.scratch = next();
        } else if (arg == "--keep") {
            options.keep_scratch = true;
        } else {
            std::fprintf(stderr,
                         "usage: acceptance [--runs N] [--data DIR] [--scratch DIR] "
                         "[--keep]\n");
            return 2;
        }
    }
    if (options.runs == 0) {
        std::fprintf(stderr, "--runs must be positive\n");
        return 2;
    }
    if (options.scratch.empty()) {
        options.scratch = fs::temp_directory_path() /
                          ("pcgkit-acceptance-" + std::to_string(::getpid()));
    }
    fs::create_directories(options.scratch);

    int failures = 0;
    try {
        failures += criterion_transform_oracles();
        failures += criterion_mel_math();
        failures += criterion_metrics();
        failures += criterion_classifier_oracles();
        failures += criterion_ensemble_vote();
        const FlowResult flow = run_synth_flow(options.scratch / "flow-a");
        failures += criterion_synthetic_end_to_end(flow);
        failures += criterion_real_data(options);
        failures += criterion_determinism(flow, options.scratch / "flow-b");
    } catch (const std::exception& error) {
        std::fprintf(stderr, "acceptance aborted: %s\n", error.what());
        if (!options.keep_scratch) {
            std::error_code ec;
            fs::remove_all(options.scratch, ec);
        }
        return 99;
    }

    if (!options.keep_scratch) {
        std::error_code ec;
        fs::remove_all(options.scratch, ec);
    }
    std::printf("%d of 8 criteria failed\n", failures);
    return failures;
}
