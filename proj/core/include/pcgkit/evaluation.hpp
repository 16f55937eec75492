#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "pcgkit/pipeline.hpp"

namespace pcgkit {

// Abnormal is the positive class.
struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fn = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;

    std::size_t total() const { return tp + fn + fp + tn; }
    void add(Label truth, Label predicted);
};

// Percentages. macc is always derived as (se + sp) / 2 from the same values.
struct Metrics {
    double acc = 0.0;
    double se = 0.0;
    double sp = 0.0;
    double macc = 0.0;
};

// Throws naming the metric whose denominator is zero.
Metrics metrics_from_confusion(const ConfusionMatrix& cm);

// All abnormal records plus an equal-size uniform sample of normal records.
// Returns indices into `records`, abnormal first, order deterministic for a
// given seed.
std::vector<std::size_t> balance_subset(const std::vector<RecordFeatures>& records,
                                        std::uint64_t seed);

// Strategy factory used by cross-validation: fits on a training split and
// returns a predictor. Lets tests substitute classifier stubs.
using FitFn = std::function<std::function<Label(const RecordFeatures&)>(
    const std::vector<RecordFeatures>&)>;

// Stratified k-fold cross-validation. Fold metrics are averaged across folds
// (not pooled). Shuffling is driven by `seed`.
Metrics kfold_cv_generic(const std::vector<RecordFeatures>& records, std::size_t k,
                         const FitFn& fit_fn, std::uint64_t seed);

Metrics kfold_cv(const std::vector<RecordFeatures>& records, std::size_t k,
                 Strategy strategy, const ClassifierConfig& config,
                 std::uint64_t seed);

struct CvReport {
    std::string strategy;
    std::string classifier;
    ClassifierConfig config;
    std::size_t folds = 10;
    std::size_t runs = 50;
    std::uint64_t master_seed = 0;
    std::string rng;
    // One fold-averaged Metrics per run.
    std::vector<Metrics> run_means;
    Metrics grand_mean;
    // 1.96 * sample std of run means / sqrt(runs); zero when runs < 2.
    Metrics ci95;
};

// Repeats balance + k-fold `runs` times; run r derives its seed from
// (master_seed, r), so results do not depend on execution order. `jobs`
// bounds worker threads (0 = hardware concurrency).
CvReport repeated_cv(const std::vector<RecordFeatures>& records, std::size_t runs,
                     std::size_t folds, Strategy strategy,
                     const ClassifierConfig& config, std::uint64_t master_seed,
                     std::size_t jobs = 1);

// Summary CSV row per report: classifier,acc,se,sp,macc,acc_ci,se_ci,sp_ci.
void write_report_csv(const std::vector<CvReport>& reports,
                      const std::filesystem::path& path);
// Full detail including per-run means.
void write_report_json(const std::vector<CvReport>& reports,
                       const std::filesystem::path& path);

} // namespace pcgkit
