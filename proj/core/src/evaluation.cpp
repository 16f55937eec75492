#include "pcgkit/evaluation.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "pcgkit/rng.hpp"

namespace pcgkit {

void ConfusionMatrix::add(Label truth, Label predicted) {
    if (truth == Label::abnormal) {
        predicted == Label::abnormal ? ++tp : ++fn;
    } else if (truth == Label::normal) {
        predicted == Label::abnormal ? ++fp : ++tn;
    } else {
        throw std::invalid_argument("confusion matrix: uncertain truth label");
    }
}

Metrics metrics_from_confusion(const ConfusionMatrix& cm) {
    if (cm.total() == 0) {
        throw std::invalid_argument("metrics: accuracy undefined on empty matrix");
    }
    if (cm.tp + cm.fn == 0) {
        throw std::invalid_argument("metrics: sensitivity undefined (no abnormal records)");
    }
    if (cm.fp + cm.tn == 0) {
        throw std::invalid_argument("metrics: specificity undefined (no normal records)");
    }
    Metrics m;
    m.acc = 100.0 * static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    m.se = 100.0 * static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
    m.sp = 100.0 * static_cast<double>(cm.tn) / static_cast<double>(cm.fp + cm.tn);
    m.macc = (m.se + m.sp) / 2.0;
    return m;
}

std::vector<std::size_t> balance_subset(const std::vector<RecordFeatures>& records,
                                        std::uint64_t seed) {
    std::vector<std::size_t> abnormal;
    std::vector<std::size_t> normal;
    for (std::size_t i = 0; i < records.size(); ++i) {
        switch (records[i].label) {
        case Label::abnormal: abnormal.push_back(i); break;
        case Label::normal: normal.push_back(i); break;
        case Label::uncertain:
            throw std::invalid_argument("balance_subset: uncertain label in record " +
                                        records[i].record_id);
        }
    }
    if (normal.size() < abnormal.size()) {
        throw std::invalid_argument("balance_subset: fewer normal than abnormal records");
    }

    Rng rng(seed);
    const std::vector<std::size_t> picks =
        rng.sample_indices(normal.size(), abnormal.size());
    std::vector<std::size_t> out = abnormal;
    out.reserve(2 * abnormal.size());
    for (std::size_t pick : picks) {
        out.push_back(normal[pick]);
    }
    return out;
}

namespace {

// Stratified assignment: shuffle each class, give every fold an equal share,
// then deal each remainder one record at a time to the currently smallest
// fold. 436 balanced records over 10 folds land as sizes 43 and 44.
std::vector<std::vector<std::size_t>>
make_stratified_folds(const std::vector<RecordFeatures>& records, std::size_t k,
                      Rng& rng) {
    std::vector<std::size_t> abnormal;
    std::vector<std::size_t> normal;
    for (std::size_t i = 0; i < records.size(); ++i) {
        (records[i].label == Label::abnormal ? abnormal : normal).push_back(i);
    }
    if (abnormal.size() < k || normal.size() < k) {
        throw std::invalid_argument("kfold_cv: need at least k records of each class");
    }
    rng.shuffle(abnormal);
    rng.shuffle(normal);

    std::vector<std::vector<std::size_t>> folds(k);
    for (const std::vector<std::size_t>* cls : {&abnormal, &normal}) {
        const std::size_t base = cls->size() / k;
        const std::size_t rem = cls->size() % k;
        std::size_t at = 0;
        for (std::size_t f = 0; f < k; ++f) {
            for (std::size_t c = 0; c < base; ++c) {
                folds[f].push_back((*cls)[at++]);
            }
        }
        for (std::size_t r = 0; r < rem; ++r) {
            std::size_t smallest = 0;
            for (std::size_t f = 1; f < k; ++f) {
                if (folds[f].size() < folds[smallest].size()) {
                    smallest = f;
                }
            }
            folds[smallest].push_back((*cls)[at++]);
        }
    }
    return folds;
}

} // namespace

Metrics kfold_cv_generic(const std::vector<RecordFeatures>& records, std::size_t k,
                         const FitFn& fit_fn, std::uint64_t seed) {
    if (k < 2) {
        throw std::invalid_argument("kfold_cv: need k >= 2");
    }
    Rng rng(seed);
    const auto folds = make_stratified_folds(records, k, rng);

    Metrics sum;
    for (std::size_t held_out = 0; held_out < k; ++held_out) {
        std::vector<RecordFeatures> training;
        training.reserve(records.size());
        for (std::size_t f = 0; f < k; ++f) {
            if (f == held_out) {
                continue;
            }
            for (std::size_t idx : folds[f]) {
                training.push_back(records[idx]);
            }
        }
        const auto predictor = fit_fn(training);

        ConfusionMatrix cm;
        for (std::size_t idx : folds[held_out]) {
            cm.add(records[idx].label, predictor(records[idx]));
        }
        const Metrics fold = metrics_from_confusion(cm);
        sum.acc += fold.acc;
        sum.se += fold.se;
        sum.sp += fold.sp;
    }
    Metrics mean;
    mean.acc = sum.acc / static_cast<double>(k);
    mean.se = sum.se / static_cast<double>(k);
    mean.sp = sum.sp / static_cast<double>(k);
    mean.macc = (mean.se + mean.sp) / 2.0;
    return mean;
}

Metrics kfold_cv(const std::vector<RecordFeatures>& records, std::size_t k,
                 Strategy strategy, const ClassifierConfig& config,
                 std::uint64_t seed) {
    const FitFn fit_fn = [strategy, &config](const std::vector<RecordFeatures>& training) {
        StrategyModel model = fit_strategy(strategy, config, training);
        return [model = std::move(model)](const RecordFeatures& rf) {
            return model.predict(rf);
        };
    };
    return kfold_cv_generic(records, k, fit_fn, seed);
}

CvReport repeated_cv(const std::vector<RecordFeatures>& records, std::size_t runs,
                     std::size_t folds, Strategy strategy,
                     const ClassifierConfig& config, std::uint64_t master_seed,
                     std::size_t jobs) {
    if (runs == 0) {
        throw std::invalid_argument("repeated_cv: need at least one run");
    }
    CvReport report;
    report.strategy = std::string(to_string(strategy));
    report.classifier = std::string(to_string(config.kind));
    report.config = config;
    report.folds = folds;
    report.runs = runs;
    report.master_seed = master_seed;
    report.rng = std::string(Rng::name());
    report.run_means.resize(runs);

    const auto run_one = [&](std::size_t r) {
        const std::uint64_t run_seed = derive_seed(master_seed, r);
        const std::vector<std::size_t> subset_idx =
            balance_subset(records, derive_seed(run_seed, 0));
        std::vector<RecordFeatures> subset;
        subset.reserve(subset_idx.size());
        for (std::size_t idx : subset_idx) {
            subset.push_back(records[idx]);
        }
        report.run_means[r] =
            kfold_cv(subset, folds, strategy, config, derive_seed(run_seed, 1));
    };

    std::size_t workers = jobs == 0 ? std::thread::hardware_concurrency() : jobs;
    workers = std::max<std::size_t>(1, std::min(workers, runs));
    if (workers == 1) {
        for (std::size_t r = 0; r < runs; ++r) {
            run_one(r);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&]() {
                while (true) {
                    const std::size_t r = next.fetch_add(1);
                    if (r >= runs) {
                        return;
                    }
                    try {
                        run_one(r);
                    } catch (...) {
                        const std::lock_guard<std::mutex> lock(failure_mutex);
                        if (!failure) {
                            failure = std::current_exception();
                        }
                        return;
                    }
                }
            });
        }
        for (std::thread& t : pool) {
            t.join();
        }
        if (failure) {
            std::rethrow_exception(failure);
        }
    }

    Metrics sum;
    for (const Metrics& m : report.run_means) {
        sum.acc += m.acc;
        sum.se += m.se;
        sum.sp += m.sp;
    }
    const auto n = static_cast<double>(runs);
    report.grand_mean.acc = sum.acc / n;
    report.grand_mean.se = sum.se / n;
    report.grand_mean.sp = sum.sp / n;
    report.grand_mean.macc = (report.grand_mean.se + report.grand_mean.sp) / 2.0;

    if (runs > 1) {
        Metrics var;
        for (const Metrics& m : report.run_means) {
            var.acc += (m.acc - report.grand_mean.acc) * (m.acc - report.grand_mean.acc);
            var.se += (m.se - report.grand_mean.se) * (m.se - report.grand_mean.se);
            var.sp += (m.sp - report.grand_mean.sp) * (m.sp - report.grand_mean.sp);
            var.macc +=
                (m.macc - report.grand_mean.macc) * (m.macc - report.grand_mean.macc);
        }
        const double scale = 1.96 / std::sqrt(n);
        report.ci95.acc = scale * std::sqrt(var.acc / (n - 1.0));
        report.ci95.se = scale * std::sqrt(var.se / (n - 1.0));
        report.ci95.sp = scale * std::sqrt(var.sp / (n - 1.0));
        report.ci95.macc = scale * std::sqrt(var.macc / (n - 1.0));
    }
    return report;
}

namespace {

std::string format_pct(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.2f", value);
    return buffer;
}

nlohmann::json metrics_to_json(const Metrics& m) {
    return {{"acc", m.acc}, {"se", m.se}, {"sp", m.sp}, {"macc", m.macc}};
}

} // namespace

void write_report_csv(const std::vector<CvReport>& reports,
                      const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path.string());
    }
    out << "classifier,acc,se,sp,macc,acc_ci,se_ci,sp_ci\n";
    for (const CvReport& report : reports) {
        out << report.classifier << ',' << format_pct(report.grand_mean.acc) << ','
            << format_pct(report.grand_mean.se) << ',' << format_pct(report.grand_mean.sp)
            << ',' << format_pct(report.grand_mean.macc) << ','
            << format_pct(report.ci95.acc) << ',' << format_pct(report.ci95.se) << ','
            << format_pct(report.ci95.sp) << '\n';
    }
    if (!out) {
        throw std::runtime_error("short write: " + path.string());
    }
}

void write_report_json(const std::vector<CvReport>& reports,
                       const std::filesystem::path& path) {
    nlohmann::json docs = nlohmann::json::array();
    for (const CvReport& report : reports) {
        nlohmann::json runs = nlohmann::json::array();
        for (const Metrics& m : report.run_means) {
            runs.push_back(metrics_to_json(m));
        }
        nlohmann::json config = {
            {"kind", std::string(to_string(report.config.kind))},
            {"knn_k", report.config.knn_k},
            {"kernel", std::string(to_string(report.config.kernel))},
            {"svm_c", report.config.svm_c},
            {"poly_degree", report.config.poly_degree},
            {"gamma", report.config.gamma},
            {"dt_min_leaf", report.config.dt_min_leaf},
            {"dt_max_depth", report.config.dt_max_depth},
        };
        docs.push_back({
            {"strategy", report.strategy},
            {"classifier", report.classifier},
            {"config", std::move(config)},
            {"folds", report.folds},
            {"runs", report.runs},
            {"master_seed", report.master_seed},
            {"rng", report.rng},
            {"run_means", std::move(runs)},
            {"grand_mean", metrics_to_json(report.grand_mean)},
            {"ci95", metrics_to_json(report.ci95)},
        });
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path.string());
    }
    out << docs.dump(2) << '\n';
    if (!out) {
        throw std::runtime_error("short write: " + path.string());
    }
}

} // namespace pcgkit
