#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "pcgkit/label.hpp"

namespace pcgkit {

enum class ClassifierKind { knn, svm, dt };
enum class SvmKernel { linear, gaussian, polynomial };

std::string_view to_string(ClassifierKind kind);
ClassifierKind classifier_kind_from_string(std::string_view text);
std::string_view to_string(SvmKernel kernel);
SvmKernel svm_kernel_from_string(std::string_view text);

struct ClassifierConfig {
    ClassifierKind kind = ClassifierKind::svm;
    // kNN: odd neighbor count.
    std::size_t knn_k = 3;
    // SVM: kernel and soft-margin parameters. gamma = 0 requests the
    // data-driven default 1 / (dim * mean feature variance).
    SvmKernel kernel = SvmKernel::polynomial;
    double svm_c = 1.0;
    std::size_t poly_degree = 3;
    double gamma = 0.0;
    // Decision tree growth limits.
    std::size_t dt_min_leaf = 5;
    std::size_t dt_max_depth = 12;
};

struct LabeledSample {
    std::vector<double> features;
    Label label = Label::normal;
};

double kernel_eval(SvmKernel kernel, std::span<const double> x,
                   std::span<const double> y, double gamma, std::size_t degree);

// Per-feature z-score parameters estimated from the training split.
struct Standardization {
    std::vector<double> mean;
    std::vector<double> stddev;
    // Features whose training variance was zero; their stddev is forced to 1.
    std::vector<std::size_t> zero_variance;

    std::vector<double> apply(std::span<const double> x) const;
};

struct KnnModel {
    std::size_t k = 3;
    std::vector<std::vector<double>> points;
    std::vector<Label> labels;
};

// Training-time convergence evidence, kept so callers can audit fits.
struct SvmDiagnostics {
    // Final maximal-violating-pair gap m(alpha) - M(alpha).
    double kkt_gap = 0.0;
    std::size_t pair_updates = 0;
    bool converged = true;
};

struct SvmModel {
    SvmKernel kernel = SvmKernel::polynomial;
    double gamma = 0.0;
    std::size_t degree = 3;
    double c = 1.0;
    double bias = 0.0;
    // Full training set in standardized space; alpha[i] = 0 for non-support
    // vectors. y: +1 abnormal, -1 normal.
    std::vector<std::vector<double>> points;
    std::vector<double> alpha;
    std::vector<int> y;
    SvmDiagnostics diagnostics;

    double decision(std::span<const double> standardized) const;
};

struct DtNode {
    bool leaf = true;
    Label label = Label::normal;
    std::size_t feature = 0;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
};

struct DtModel {
    std::vector<DtNode> nodes;
};

struct TrainedModel {
    ClassifierKind kind = ClassifierKind::svm;
    std::size_t dimension = 0;
    Standardization standardization;
    std::optional<KnnModel> knn;
    std::optional<SvmModel> svm;
    std::optional<DtModel> dt;

    Label predict(std::span<const double> features) const;
};

// Requires both classes present and NaN-free features of equal length.
TrainedModel fit(const ClassifierConfig& config,
                 const std::vector<LabeledSample>& data);

// Versioned JSON on disk.
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

} // namespace pcgkit
