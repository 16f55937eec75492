#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "pcgkit/dataset.hpp"
#include "pcgkit/evaluation.hpp"
#include "pcgkit/feature_csv.hpp"
#include "pcgkit/pipeline.hpp"
#include "pcgkit/preprocess.hpp"
#include "pcgkit/rng.hpp"
#include "pcgkit/synth.hpp"
#include "pcgkit/wav.hpp"

using namespace pcgkit;

namespace {

struct SegmentationSource {
    bool external = false;
    std::filesystem::path dir;

    std::string describe() const {
        return external ? "external:" + dir.string() : "internal";
    }
};

SegmentationSource parse_segmentation(const std::string& text) {
    SegmentationSource source;
    if (text == "internal") {
        return source;
    }
    if (text.rfind("external:", 0) == 0) {
        source.external = true;
        source.dir = text.substr(9);
        if (source.dir.empty()) {
            throw CLI::ValidationError("--segmentation",
                                       "external form is external:<dir>");
        }
        return source;
    }
    throw CLI::ValidationError("--segmentation",
                               "expected internal or external:<dir>");
}

struct ExtractOptions {
    std::filesystem::path data_root;
    SegmentationSource segmentation;
    PreprocessConfig preprocess_config;
    std::size_t jobs = 0;
};

std::size_t resolve_workers(std::size_t jobs, std::size_t count) {
    std::size_t workers = jobs == 0 ? std::thread::hardware_concurrency() : jobs;
    workers = std::max<std::size_t>(1, workers);
    return std::min(workers, std::max<std::size_t>(1, count));
}

RecordFeatures extract_one(const ManifestEntry& entry, const ExtractOptions& options) {
    const PcgRecord record = load_record(entry);
    const PreprocessResult pre =
        preprocess(record.samples, record.sample_rate, options.preprocess_config);
    StateSequence states;
    if (options.segmentation.external) {
        states = load_external_segmentation(
            options.segmentation.dir / (entry.id + ".states"), pre.samples.size());
    } else {
        states = segment(pre.samples, pre.sample_rate);
    }
    return build_record_features(pre.samples, pre.sample_rate, states, entry.id,
                                 entry.label);
}

// Extracts features for every certain-label record, in manifest order.
// Per-record failures go to `failures`; they are not fatal.
std::vector<RecordFeatures> extract_features(const ExtractOptions& options,
                                             std::vector<std::string>& failures) {
    const DatasetManifest manifest = load_manifest(options.data_root);
    for (const std::string& issue : manifest.issues) {
        failures.push_back(issue);
    }
    std::vector<const ManifestEntry*> entries;
    for (const ManifestEntry& entry : manifest.records) {
        if (entry.label == Label::uncertain) {
            continue;
        }
        entries.push_back(&entry);
    }

    std::vector<std::optional<RecordFeatures>> results(entries.size());
    std::vector<std::string> errors(entries.size());
    const std::size_t workers = resolve_workers(options.jobs, entries.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= entries.size()) {
                return;
            }
            try {
                results[i] = extract_one(*entries[i], options);
            } catch (const std::exception& error) {
                errors[i] = "record " + entries[i]->id + ": " + error.what();
            }
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(worker);
        }
        for (std::thread& t : pool) {
            t.join();
        }
    }

    std::vector<RecordFeatures> features;
    features.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (results[i].has_value()) {
            features.push_back(std::move(*results[i]));
        } else {
            failures.push_back(errors[i]);
        }
    }
    return features;
}

// FNV-1a, 64-bit.
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t hash) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        hash ^= bytes[i];
        hash *= 1099511628211ull;
    }
    return hash;
}

std::uint64_t hash_text(const std::string& text, std::uint64_t hash) {
    return fnv1a64(text.data(), text.size(), hash);
}

std::uint64_t cache_key(const ExtractOptions& options) {
    std::uint64_t hash = 14695981039346656037ull;
    hash = hash_text("pcgkit-feature-cache-v1", hash);
    const PreprocessConfig& pc = options.preprocess_config;
    hash = hash_text(std::to_string(pc.band_low_hz) + "," +
                         std::to_string(pc.band_high_hz) + "," +
                         std::to_string(pc.band_taps) + "," +
                         std::to_string(pc.antialias_cutoff_hz) + "," +
                         std::to_string(pc.antialias_taps) + "," +
                         std::to_string(pc.target_rate_hz),
                     hash);
    hash = hash_text(options.segmentation.describe(), hash);

    const DatasetManifest manifest = load_manifest(options.data_root);
    for (const ManifestEntry& entry : manifest.records) {
        hash = hash_text(entry.id, hash);
        hash = hash_text(std::string(to_string(entry.label)), hash);
        std::ifstream wav(entry.wav_path, std::ios::binary);
        if (!wav) {
            continue;
        }
        char buffer[65536];
        while (wav.read(buffer, sizeof(buffer)) || wav.gcount() > 0) {
            hash = fnv1a64(buffer, static_cast<std::size_t>(wav.gcount()), hash);
            if (wav.eof()) {
                break;
            }
        }
    }
    return hash;
}

void atomic_rename_into_place(const std::filesystem::path& tmp,
                              const std::filesystem::path& path) {
    std::filesystem::rename(tmp, path);
}

std::filesystem::path tmp_path_for(const std::filesystem::path& path) {
    return path.string() + ".tmp";
}

std::vector<RecordFeatures> features_with_cache(const ExtractOptions& options,
                                                const std::filesystem::path& cache,
                                                std::vector<std::string>& failures) {
    const std::filesystem::path key_path = cache.string() + ".key";
    const std::string key = std::to_string(cache_key(options));
    if (std::filesystem::exists(cache) && std::filesystem::exists(key_path)) {
        std::ifstream key_in(key_path);
        std::string stored;
        key_in >> stored;
        if (stored == key) {
            std::cerr << "cache hit: " << cache.string() << "\n";
            return read_feature_csv(cache);
        }
    }
    std::vector<RecordFeatures> features = extract_features(options, failures);
    const std::filesystem::path tmp = tmp_path_for(cache);
    write_feature_csv(features, tmp);
    atomic_rename_into_place(tmp, cache);
    std::ofstream key_out(key_path, std::ios::trunc);
    key_out << key << '\n';
    return features;
}

void report_failures(const std::vector<std::string>& failures) {
    for (const std::string& failure : failures) {
        std::cerr << "skipped: " << failure << "\n";
    }
}

struct ClassifierFlags {
    std::size_t knn_k = 3;
    std::string kernel = "polynomial";
    double svm_c = 1.0;
    std::size_t poly_degree = 3;
    double gamma = 0.0;
    std::size_t dt_min_leaf = 5;
    std::size_t dt_max_depth = 12;

    ClassifierConfig config(ClassifierKind kind) const {
        ClassifierConfig out;
        out.kind = kind;
        out.knn_k = knn_k;
        out.kernel = svm_kernel_from_string(kernel);
        out.svm_c = svm_c;
        out.poly_degree = poly_degree;
        out.gamma = gamma;
        out.dt_min_leaf = dt_min_leaf;
        out.dt_max_depth = dt_max_depth;
        return out;
    }
};

void add_classifier_flags(CLI::App* cmd, ClassifierFlags& flags) {
    cmd->add_option("--knn-k", flags.knn_k, "kNN neighbor count (odd)")
        ->capture_default_str();
    cmd->add_option("--kernel", flags.kernel, "SVM kernel: linear|gaussian|polynomial")
        ->capture_default_str();
    cmd->add_option("--svm-c", flags.svm_c, "SVM soft-margin C")->capture_default_str();
    cmd->add_option("--poly-degree", flags.poly_degree, "polynomial kernel degree")
        ->capture_default_str();
    cmd->add_option("--gamma", flags.gamma,
                    "kernel gamma (0 = 1/(dim*mean variance))")
        ->capture_default_str();
    cmd->add_option("--dt-min-leaf", flags.dt_min_leaf, "decision tree leaf minimum")
        ->capture_default_str();
    cmd->add_option("--dt-max-depth", flags.dt_max_depth, "decision tree depth limit")
        ->capture_default_str();
}

void add_preprocess_flags(CLI::App* cmd, PreprocessConfig& config) {
    cmd->add_option("--band-low", config.band_low_hz, "band-pass low edge, Hz")
        ->capture_default_str();
    cmd->add_option("--band-high", config.band_high_hz, "band-pass high edge, Hz")
        ->capture_default_str();
    cmd->add_option("--band-taps", config.band_taps, "band-pass FIR taps (odd)")
        ->capture_default_str();
    cmd->add_option("--antialias-taps", config.antialias_taps,
                    "anti-alias FIR taps (odd)")
        ->capture_default_str();
}

int cmd_features(const ExtractOptions& options, const std::filesystem::path& output) {
    std::vector<std::string> failures;
    const std::vector<RecordFeatures> features = extract_features(options, failures);
    report_failures(failures);
    if (features.empty()) {
        std::cerr << "error: no record yielded features\n";
        return 1;
    }
    const std::filesystem::path tmp = tmp_path_for(output);
    write_feature_csv(features, tmp);
    atomic_rename_into_place(tmp, output);
    std::cerr << features.size() << " records written to " << output.string() << "\n";
    return 0;
}

int cmd_evaluate(const std::vector<RecordFeatures>& features,
                 const std::vector<std::string>& strategies,
                 const std::vector<std::string>& classifiers,
                 const ClassifierFlags& flags, std::size_t folds, std::size_t runs,
                 std::uint64_t seed, std::size_t jobs, const std::string& prefix,
                 const std::filesystem::path& save_model_path) {
    std::vector<CvReport> all_reports;
    for (const std::string& strategy_name : strategies) {
        const Strategy strategy = strategy_from_string(strategy_name);
        std::vector<CvReport> strategy_reports;
        for (const std::string& classifier_name : classifiers) {
            const ClassifierConfig config =
                flags.config(classifier_kind_from_string(classifier_name));
            CvReport report =
                repeated_cv(features, runs, folds, strategy, config, seed, jobs);
            strategy_reports.push_back(report);
            all_reports.push_back(std::move(report));
        }
        const std::filesystem::path csv = prefix + "_" + strategy_name + ".csv";
        const std::filesystem::path tmp = tmp_path_for(csv);
        write_report_csv(strategy_reports, tmp);
        atomic_rename_into_place(tmp, csv);
    }

    const std::filesystem::path json = prefix + ".json";
    const std::filesystem::path tmp = tmp_path_for(json);
    write_report_json(all_reports, tmp);
    atomic_rename_into_place(tmp, json);

    std::printf("%-9s %-5s %8s %8s %8s %8s\n", "strategy", "clf", "acc", "se", "sp",
                "macc");
    for (const CvReport& report : all_reports) {
        std::printf("%-9s %-5s %8.2f %8.2f %8.2f %8.2f  (ci95 acc ±%.2f)\n",
                    report.strategy.c_str(), report.classifier.c_str(),
                    report.grand_mean.acc, report.grand_mean.se, report.grand_mean.sp,
                    report.grand_mean.macc, report.ci95.acc);
    }

    if (!save_model_path.empty()) {
        if (strategies.size() != 1 || classifiers.size() != 1) {
            std::cerr << "error: --save-model needs exactly one strategy and one "
                         "classifier\n";
            return 1;
        }
        const Strategy strategy = strategy_from_string(strategies.front());
        const ClassifierConfig config =
            flags.config(classifier_kind_from_string(classifiers.front()));
        // The saved model trains on one balanced subset drawn from a stream
        // disjoint from every cross-validation run.
        const std::vector<std::size_t> subset_idx =
            balance_subset(features, derive_seed(seed, runs));
        std::vector<RecordFeatures> subset;
        subset.reserve(subset_idx.size());
        for (std::size_t idx : subset_idx) {
            subset.push_back(features[idx]);
        }
        const StrategyModel model = fit_strategy(strategy, config, subset);
        const std::filesystem::path model_tmp = tmp_path_for(save_model_path);
        save_strategy(model, model_tmp);
        atomic_rename_into_place(model_tmp, save_model_path);
        std::cerr << "model saved to " << save_model_path.string() << "\n";
    }
    return 0;
}

int cmd_classify(const std::filesystem::path& model_path,
                 const std::filesystem::path& wav_path,
                 const SegmentationSource& segmentation,
                 const PreprocessConfig& preprocess_config) {
    const StrategyModel model = load_strategy(model_path);
    const WavData wav = read_wav(wav_path);
    const PreprocessResult pre =
        preprocess(wav.samples, wav.sample_rate, preprocess_config);
    StateSequence states;
    if (segmentation.external) {
        const std::string id = wav_path.stem().string();
        states = load_external_segmentation(segmentation.dir / (id + ".states"),
                                            pre.samples.size());
    } else {
        states = segment(pre.samples, pre.sample_rate);
    }
    const RecordFeatures rf =
        build_record_features(pre.samples, pre.sample_rate, states,
                              wav_path.stem().string(), Label::normal);

    std::cout << to_string(model.predict(rf)) << "\n";
    if (model.strategy == Strategy::ensemble) {
        std::cout << "beat votes:";
        for (Label vote : model.votes(rf)) {
            std::cout << ' ' << to_string(vote);
        }
        std::cout << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Phonocardiogram screening toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "INI-style config file merged under flags");

    // features
    ExtractOptions feat_options;
    std::string feat_segmentation = "internal";
    std::filesystem::path feat_output;
    auto* features_cmd =
        app.add_subcommand("features", "Extract per-beat features to CSV");
    features_cmd->add_option("--data", feat_options.data_root, "dataset root directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    features_cmd->add_option("-o,--output", feat_output, "output CSV path")->required();
    features_cmd
        ->add_option("--segmentation", feat_segmentation, "internal or external:<dir>")
        ->capture_default_str();
    features_cmd->add_option("--jobs", feat_options.jobs, "worker threads (0 = cores)")
        ->capture_default_str();
    add_preprocess_flags(features_cmd, feat_options.preprocess_config);

    // evaluate
    ExtractOptions eval_options;
    std::string eval_segmentation = "internal";
    std::filesystem::path eval_features_csv;
    std::filesystem::path eval_cache;
    std::vector<std::string> eval_strategies{"single", "ensemble"};
    std::vector<std::string> eval_classifiers{"knn", "svm", "dt"};
    ClassifierFlags eval_flags;
    std::size_t eval_folds = 10;
    std::size_t eval_runs = 50;
    std::uint64_t eval_seed = 1;
    std::size_t eval_jobs = 1;
    std::string eval_prefix = "report";
    std::filesystem::path eval_save_model;
    auto* evaluate_cmd = app.add_subcommand(
        "evaluate", "Cross-validate classifier strategies and write reports");
    auto* eval_features_opt = evaluate_cmd->add_option(
        "--features", eval_features_csv, "feature CSV produced by `features`");
    auto* eval_data_opt =
        evaluate_cmd->add_option("--data", eval_options.data_root,
                                 "dataset root (features computed on demand)");
    eval_features_opt->excludes(eval_data_opt);
    evaluate_cmd
        ->add_option("--cache", eval_cache,
                     "feature CSV cache used with --data (content-keyed)")
        ->needs(eval_data_opt);
    evaluate_cmd
        ->add_option("--segmentation", eval_segmentation, "internal or external:<dir>")
        ->capture_default_str();
    evaluate_cmd->add_option("--strategy", eval_strategies, "single,ensemble")
        ->delimiter(',')
        ->capture_default_str();
    evaluate_cmd->add_option("--classifier", eval_classifiers, "knn,svm,dt")
        ->delimiter(',')
        ->capture_default_str();
    add_classifier_flags(evaluate_cmd, eval_flags);
    evaluate_cmd->add_option("--folds", eval_folds, "cross-validation folds")
        ->capture_default_str();
    evaluate_cmd->add_option("--runs", eval_runs, "repetitions")->capture_default_str();
    evaluate_cmd->add_option("--seed", eval_seed, "master seed")->capture_default_str();
    evaluate_cmd->add_option("--jobs", eval_jobs, "worker threads (0 = cores)")
        ->capture_default_str();
    evaluate_cmd->add_option("--output-prefix", eval_prefix, "report file prefix")
        ->capture_default_str();
    evaluate_cmd->add_option("--save-model", eval_save_model,
                             "fit the configured strategy on a balanced subset and "
                             "save it for `classify`");
    add_preprocess_flags(evaluate_cmd, eval_options.preprocess_config);

    // classify
    std::filesystem::path classify_model;
    std::filesystem::path classify_wav;
    std::string classify_segmentation = "internal";
    PreprocessConfig classify_preprocess;
    auto* classify_cmd =
        app.add_subcommand("classify", "Classify one recording with a saved model");
    classify_cmd->add_option("--model", classify_model, "model file from --save-model")
        ->required()
        ->check(CLI::ExistingFile);
    classify_cmd->add_option("--input", classify_wav, "WAV recording")
        ->required()
        ->check(CLI::ExistingFile);
    classify_cmd
        ->add_option("--segmentation", classify_segmentation,
                     "internal or external:<dir>")
        ->capture_default_str();
    add_preprocess_flags(classify_cmd, classify_preprocess);

    // synth
    std::filesystem::path synth_output;
    std::size_t synth_records = 0;
    std::size_t synth_normal = 100;
    std::size_t synth_abnormal = 100;
    std::uint64_t synth_seed = 1;
    SynthConfig synth_config;
    auto* synth_cmd =
        app.add_subcommand("synth", "Generate a labeled synthetic dataset");
    synth_cmd->add_option("-o,--output", synth_output, "output directory")->required();
    synth_cmd->add_option("--records", synth_records,
                          "total record count, split evenly between classes");
    synth_cmd->add_option("--normal", synth_normal, "normal record count")
        ->capture_default_str();
    synth_cmd->add_option("--abnormal", synth_abnormal, "abnormal record count")
        ->capture_default_str();
    synth_cmd->add_option("--seed", synth_seed, "master seed")->capture_default_str();
    synth_cmd->add_option("--bpm", synth_config.bpm, "heart rate")
        ->capture_default_str();
    synth_cmd->add_option("--duration", synth_config.duration_s, "record seconds")
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (features_cmd->parsed()) {
            feat_options.segmentation = parse_segmentation(feat_segmentation);
            return cmd_features(feat_options, feat_output);
        }
        if (evaluate_cmd->parsed()) {
            std::vector<RecordFeatures> features;
            if (!eval_features_csv.empty()) {
                features = read_feature_csv(eval_features_csv);
            } else if (!eval_options.data_root.empty()) {
                eval_options.segmentation = parse_segmentation(eval_segmentation);
                std::vector<std::string> failures;
                features = eval_cache.empty()
                               ? extract_features(eval_options, failures)
                               : features_with_cache(eval_options, eval_cache, failures);
                report_failures(failures);
            } else {
                std::cerr << "error: evaluate needs --features or --data\n";
                return 1;
            }
            if (features.empty()) {
                std::cerr << "error: no usable records\n";
                return 1;
            }
            return cmd_evaluate(features, eval_strategies, eval_classifiers, eval_flags,
                                eval_folds, eval_runs, eval_seed, eval_jobs, eval_prefix,
                                eval_save_model);
        }
        if (classify_cmd->parsed()) {
            return cmd_classify(classify_model, classify_wav,
                                parse_segmentation(classify_segmentation),
                                classify_preprocess);
        }
        if (synth_cmd->parsed()) {
            if (synth_records > 0) {
                if (synth_records % 2 != 0) {
                    std::cerr << "error: --records must be even\n";
                    return 1;
                }
                synth_normal = synth_records / 2;
                synth_abnormal = synth_records / 2;
            }
            write_synth_dataset(synth_output, synth_normal, synth_abnormal, synth_seed,
                                synth_config);
            std::cerr << "wrote " << (synth_normal + synth_abnormal) << " records to "
                      << synth_output.string() << "\n";
            return 0;
        }
    } catch (const std::exception& error) {
        std::cerr << "error: " << error.what() << "\n";
        return 2;
    }
    return 0;
}
