#include "pcgkit/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "model_json.hpp"

namespace pcgkit {

namespace {

void validate_training_set(const std::vector<LabeledSample>& data) {
    if (data.size() < 2) {
        throw std::invalid_argument("fit: need at least 2 samples");
    }
    const std::size_t dim = data.front().features.size();
    if (dim == 0) {
        throw std::invalid_argument("fit: zero-dimensional features");
    }
    bool saw_normal = false;
    bool saw_abnormal = false;
    for (const LabeledSample& sample : data) {
        if (sample.features.size() != dim) {
            throw std::invalid_argument("fit: inconsistent feature dimensions");
        }
        for (double v : sample.features) {
            if (std::isnan(v)) {
                throw std::invalid_argument("fit: NaN feature value");
            }
        }
        if (sample.label == Label::normal) {
            saw_normal = true;
        } else if (sample.label == Label::abnormal) {
            saw_abnormal = true;
        } else {
            throw std::invalid_argument("fit: training labels must be normal or abnormal");
        }
    }
    if (!saw_normal || !saw_abnormal) {
        throw std::invalid_argument("fit: training set holds a single class");
    }
}

Standardization fit_standardization(const std::vector<LabeledSample>& data) {
    const std::size_t dim = data.front().features.size();
    const auto n = static_cast<double>(data.size());
    Standardization std_params;
    std_params.mean.assign(dim, 0.0);
    std_params.stddev.assign(dim, 0.0);
    for (const LabeledSample& sample : data) {
        for (std::size_t j = 0; j < dim; ++j) {
            std_params.mean[j] += sample.features[j];
        }
    }
    for (double& m : std_params.mean) {
        m /= n;
    }
    for (const LabeledSample& sample : data) {
        for (std::size_t j = 0; j < dim; ++j) {
            const double d = sample.features[j] - std_params.mean[j];
            std_params.stddev[j] += d * d;
        }
    }
    for (std::size_t j = 0; j < dim; ++j) {
        std_params.stddev[j] = std::sqrt(std_params.stddev[j] / n);
        if (std_params.stddev[j] == 0.0) {
            std_params.stddev[j] = 1.0;
            std_params.zero_variance.push_back(j);
        }
    }
    return std_params;
}

std::vector<std::vector<double>>
standardize_all(const std::vector<LabeledSample>& data,
                const Standardization& std_params) {
    std::vector<std::vector<double>> out;
    out.reserve(data.size());
    for (const LabeledSample& sample : data) {
        out.push_back(std_params.apply(sample.features));
    }
    return out;
}

double default_gamma(const std::vector<std::vector<double>>& points) {
    const std::size_t n = points.size();
    const std::size_t dim = points.front().size();
    double total_var = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
        double mean = 0.0;
        for (const auto& p : points) {
            mean += p[j];
        }
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (const auto& p : points) {
            const double d = p[j] - mean;
            var += d * d;
        }
        total_var += var / static_cast<double>(n);
    }
    const double mean_var = total_var / static_cast<double>(dim);
    if (mean_var <= 0.0) {
        return 1.0 / static_cast<double>(dim);
    }
    return 1.0 / (static_cast<double>(dim) * mean_var);
}

// Sequential minimal optimization with maximal-violating-pair selection.
SvmModel fit_svm(const ClassifierConfig& config,
                 std::vector<std::vector<double>> points,
                 const std::vector<LabeledSample>& data) {
    const std::size_t n = points.size();
    SvmModel model;
    model.kernel = config.kernel;
    model.degree = config.poly_degree;
    model.c = config.svm_c;
    model.gamma = config.gamma > 0.0 ? config.gamma : default_gamma(points);
    model.points = std::move(points);
    model.alpha.assign(n, 0.0);
    model.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        model.y[i] = label_to_challenge(data[i].label);
    }

    std::vector<double> gram(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double k = kernel_eval(model.kernel, model.points[i],
                                         model.points[j], model.gamma, model.degree);
            gram[i * n + j] = k;
            gram[j * n + i] = k;
        }
    }

    // grad[i] = d/d alpha_i of (1/2 a'Qa - e'a) with Q_ij = y_i y_j K_ij.
    std::vector<double> grad(n, -1.0);
    const double c = model.c;
    constexpr double kTol = 1e-3;
    const std::size_t max_updates = 10 * n * n;

    double gap = std::numeric_limits<double>::infinity();
    std::size_t updates = 0;
    while (updates < max_updates) {
        double m_up = -std::numeric_limits<double>::infinity();
        double m_low = std::numeric_limits<double>::infinity();
        std::size_t i_up = n;
        std::size_t i_low = n;
        for (std::size_t t = 0; t < n; ++t) {
            const double score = -static_cast<double>(model.y[t]) * grad[t];
            const bool in_up = (model.y[t] > 0 && model.alpha[t] < c) ||
                               (model.y[t] < 0 && model.alpha[t] > 0.0);
            const bool in_low = (model.y[t] < 0 && model.alpha[t] < c) ||
                                (model.y[t] > 0 && model.alpha[t] > 0.0);
            if (in_up && score > m_up) {
                m_up = score;
                i_up = t;
            }
            if (in_low && score < m_low) {
                m_low = score;
                i_low = t;
            }
        }
        gap = m_up - m_low;
        if (i_up == n || i_low == n || gap <= kTol) {
            break;
        }

        const std::size_t i = i_up;
        const std::size_t j = i_low;
        const double yi = model.y[i];
        const double yj = model.y[j];
        const double kii = gram[i * n + i];
        const double kjj = gram[j * n + j];
        const double kij = gram[i * n + j];
        const double eta = std::max(kii + kjj - 2.0 * kij, 1e-12);

        // Moving alpha_i by +yi*step and alpha_j by -yj*step keeps the
        // equality constraint; the pair's own gap closes at step = gap/eta
        // unless a box edge binds first. Edge hits assign the bound exactly,
        // so the membership tests above never see an alpha stranded within
        // rounding of a bound (which would stall selection on a dead pair).
        const double room_i = yi > 0 ? c - model.alpha[i] : model.alpha[i];
        const double room_j = yj > 0 ? model.alpha[j] : c - model.alpha[j];
        const double step = std::min({gap / eta, room_i, room_j});
        if (step <= 0.0) {
            break;
        }
        model.alpha[i] =
            step == room_i ? (yi > 0 ? c : 0.0) : model.alpha[i] + yi * step;
        model.alpha[j] =
            step == room_j ? (yj > 0 ? 0.0 : c) : model.alpha[j] - yj * step;
        for (std::size_t t = 0; t < n; ++t) {
            grad[t] += static_cast<double>(model.y[t]) * step *
                       (gram[i * n + t] - gram[j * n + t]);
        }
        ++updates;
    }

    // Recompute the final gap so diagnostics reflect the stored alphas.
    double m_up = -std::numeric_limits<double>::infinity();
    double m_low = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
        const double score = -static_cast<double>(model.y[t]) * grad[t];
        const bool in_up = (model.y[t] > 0 && model.alpha[t] < c) ||
                           (model.y[t] < 0 && model.alpha[t] > 0.0);
        const bool in_low = (model.y[t] < 0 && model.alpha[t] < c) ||
                            (model.y[t] > 0 && model.alpha[t] > 0.0);
        if (in_up) {
            m_up = std::max(m_up, score);
        }
        if (in_low) {
            m_low = std::min(m_low, score);
        }
    }
    model.bias = (m_up + m_low) / 2.0;
    model.diagnostics.kkt_gap = m_up - m_low;
    model.diagnostics.pair_updates = updates;
    model.diagnostics.converged = model.diagnostics.kkt_gap <= kTol;
    return model;
}

double gini(std::size_t normal, std::size_t abnormal) {
    const double total = static_cast<double>(normal + abnormal);
    if (total == 0.0) {
        return 0.0;
    }
    const double pn = static_cast<double>(normal) / total;
    const double pa = static_cast<double>(abnormal) / total;
    return 1.0 - pn * pn - pa * pa;
}

struct DtBuilder {
    const std::vector<LabeledSample>& data;
    std::size_t min_leaf;
    std::size_t max_depth;
    std::vector<DtNode> nodes;

    // Pre-order allocation keeps the root at index 0.
    std::int32_t build(std::vector<std::size_t> indices, std::size_t depth) {
        const auto self = static_cast<std::int32_t>(nodes.size());
        nodes.emplace_back();

        std::size_t normal = 0;
        for (std::size_t idx : indices) {
            normal += data[idx].label == Label::normal ? 1 : 0;
        }
        const std::size_t abnormal = indices.size() - normal;
        const double node_gini = gini(normal, abnormal);

        const auto make_leaf = [&]() {
            nodes[static_cast<std::size_t>(self)].leaf = true;
            // Tie goes to normal: screening errs toward the larger class.
            nodes[static_cast<std::size_t>(self)].label =
                abnormal > normal ? Label::abnormal : Label::normal;
            return self;
        };

        if (node_gini == 0.0 || depth >= max_depth || indices.size() < 2 * min_leaf) {
            return make_leaf();
        }

        const std::size_t dim = data.front().features.size();
        double best_impurity = std::numeric_limits<double>::infinity();
        std::size_t best_feature = dim;
        double best_threshold = 0.0;

        std::vector<std::size_t> order(indices);
        for (std::size_t feature = 0; feature < dim; ++feature) {
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return data[a].features[feature] < data[b].features[feature];
            });
            std::size_t left_normal = 0;
            std::size_t left_abnormal = 0;
            for (std::size_t pos = 0; pos + 1 < order.size(); ++pos) {
                const LabeledSample& sample = data[order[pos]];
                if (sample.label == Label::normal) {
                    ++left_normal;
                } else {
                    ++left_abnormal;
                }
                const double value = sample.features[feature];
                const double next = data[order[pos + 1]].features[feature];
                if (value == next) {
                    continue;
                }
                const std::size_t left_n = pos + 1;
                const std::size_t right_n = order.size() - left_n;
                if (left_n < min_leaf || right_n < min_leaf) {
                    continue;
                }
                const double weighted =
                    (static_cast<double>(left_n) * gini(left_normal, left_abnormal) +
                     static_cast<double>(right_n) *
                         gini(normal - left_normal, abnormal - left_abnormal)) /
                    static_cast<double>(order.size());
                if (weighted < best_impurity) {
                    best_impurity = weighted;
                    best_feature = feature;
                    best_threshold = (value + next) / 2.0;
                }
            }
        }

        // Zero-gain splits are still taken while the node is impure: children
        // are strictly smaller, so recursion terminates, and distinct points
        // eventually separate. The epsilon absorbs summation rounding.
        if (best_feature == dim || best_impurity > node_gini + 1e-12) {
            return make_leaf();
        }

        std::vector<std::size_t> left_idx;
        std::vector<std::size_t> right_idx;
        for (std::size_t idx : indices) {
            if (data[idx].features[best_feature] < best_threshold) {
                left_idx.push_back(idx);
            } else {
                right_idx.push_back(idx);
            }
        }

        const std::int32_t left = build(std::move(left_idx), depth + 1);
        const std::int32_t right = build(std::move(right_idx), depth + 1);
        DtNode& node = nodes[static_cast<std::size_t>(self)];
        node.leaf = false;
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.left = left;
        node.right = right;
        return self;
    }
};

} // namespace

std::string_view to_string(ClassifierKind kind) {
    switch (kind) {
    case ClassifierKind::knn: return "knn";
    case ClassifierKind::svm: return "svm";
    case ClassifierKind::dt: return "dt";
    }
    return "unknown";
}

ClassifierKind classifier_kind_from_string(std::string_view text) {
    if (text == "knn") return ClassifierKind::knn;
    if (text == "svm") return ClassifierKind::svm;
    if (text == "dt") return ClassifierKind::dt;
    throw std::invalid_argument("unknown classifier kind: " + std::string(text));
}

std::string_view to_string(SvmKernel kernel) {
    switch (kernel) {
    case SvmKernel::linear: return "linear";
    case SvmKernel::gaussian: return "gaussian";
    case SvmKernel::polynomial: return "polynomial";
    }
    return "unknown";
}

SvmKernel svm_kernel_from_string(std::string_view text) {
    if (text == "linear") return SvmKernel::linear;
    if (text == "gaussian") return SvmKernel::gaussian;
    if (text == "polynomial") return SvmKernel::polynomial;
    throw std::invalid_argument("unknown SVM kernel: " + std::string(text));
}

double kernel_eval(SvmKernel kernel, std::span<const double> x,
                   std::span<const double> y, double gamma, std::size_t degree) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("kernel_eval: dimension mismatch");
    }
    switch (kernel) {
    case SvmKernel::linear: {
        double dot = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            dot += x[i] * y[i];
        }
        return dot;
    }
    case SvmKernel::polynomial: {
        double dot = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            dot += x[i] * y[i];
        }
        return std::pow(gamma * dot + 1.0, static_cast<double>(degree));
    }
    case SvmKernel::gaussian: {
        double dist2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - y[i];
            dist2 += d * d;
        }
        return std::exp(-gamma * dist2);
    }
    }
    throw std::logic_error("kernel_eval: unreachable");
}

std::vector<double> Standardization::apply(std::span<const double> x) const {
    if (x.size() != mean.size()) {
        throw std::invalid_argument("standardization: dimension mismatch");
    }
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        out[j] = (x[j] - mean[j]) / stddev[j];
    }
    return out;
}

double SvmModel::decision(std::span<const double> standardized) const {
    double acc = bias;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (alpha[i] == 0.0) {
            continue;
        }
        acc += alpha[i] * static_cast<double>(y[i]) *
               kernel_eval(kernel, points[i], standardized, gamma, degree);
    }
    return acc;
}

TrainedModel fit(const ClassifierConfig& config,
                 const std::vector<LabeledSample>& data) {
    validate_training_set(data);

    TrainedModel model;
    model.kind = config.kind;
    model.dimension = data.front().features.size();

    switch (config.kind) {
    case ClassifierKind::knn: {
        if (config.knn_k == 0 || config.knn_k % 2 == 0) {
            throw std::invalid_argument("fit: kNN k must be odd and positive");
        }
        model.standardization = fit_standardization(data);
        KnnModel knn;
        knn.k = std::min(config.knn_k, data.size());
        knn.points = standardize_all(data, model.standardization);
        knn.labels.reserve(data.size());
        for (const LabeledSample& sample : data) {
            knn.labels.push_back(sample.label);
        }
        model.knn = std::move(knn);
        break;
    }
    case ClassifierKind::svm: {
        if (config.svm_c <= 0.0) {
            throw std::invalid_argument("fit: SVM C must be positive");
        }
        model.standardization = fit_standardization(data);
        model.svm = fit_svm(config, standardize_all(data, model.standardization), data);
        break;
    }
    case ClassifierKind::dt: {
        if (config.dt_min_leaf == 0) {
            throw std::invalid_argument("fit: dt_min_leaf must be at least 1");
        }
        // Axis-aligned thresholds are scale-invariant; trees skip z-scoring.
        model.standardization.mean.assign(model.dimension, 0.0);
        model.standardization.stddev.assign(model.dimension, 1.0);
        DtBuilder builder{data, config.dt_min_leaf, config.dt_max_depth, {}};
        std::vector<std::size_t> all(data.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        builder.build(std::move(all), 0);
        DtModel dt;
        dt.nodes = std::move(builder.nodes);
        model.dt = std::move(dt);
        break;
    }
    }
    return model;
}

Label TrainedModel::predict(std::span<const double> features) const {
    if (features.size() != dimension) {
        throw std::invalid_argument("predict: expected " + std::to_string(dimension) +
                                    " features, got " + std::to_string(features.size()));
    }
    switch (kind) {
    case ClassifierKind::knn: {
        const std::vector<double> x = standardization.apply(features);
        const KnnModel& m = *knn;
        std::vector<std::pair<double, std::size_t>> dist;
        dist.reserve(m.points.size());
        for (std::size_t i = 0; i < m.points.size(); ++i) {
            double d2 = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) {
                const double d = m.points[i][j] - x[j];
                d2 += d * d;
            }
            dist.emplace_back(d2, i);
        }
        std::sort(dist.begin(), dist.end());
        std::size_t votes_abnormal = 0;
        for (std::size_t r = 0; r < m.k; ++r) {
            votes_abnormal += m.labels[dist[r].second] == Label::abnormal ? 1 : 0;
        }
        const std::size_t votes_normal = m.k - votes_abnormal;
        if (votes_abnormal == votes_normal) {
            return m.labels[dist[0].second];
        }
        return votes_abnormal > votes_normal ? Label::abnormal : Label::normal;
    }
    case ClassifierKind::svm: {
        const std::vector<double> x = standardization.apply(features);
        // Exactly zero decision value maps to normal.
        return svm->decision(x) > 0.0 ? Label::abnormal : Label::normal;
    }
    case ClassifierKind::dt: {
        const DtModel& m = *dt;
        std::int32_t at = 0;
        while (!m.nodes[static_cast<std::size_t>(at)].leaf) {
            const DtNode& node = m.nodes[static_cast<std::size_t>(at)];
            at = features[node.feature] < node.threshold ? node.left : node.right;
        }
        return m.nodes[static_cast<std::size_t>(at)].label;
    }
    }
    throw std::logic_error("predict: unreachable");
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
    const nlohmann::json doc = model_to_json(model);
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path.string());
    }
    out << doc.dump(2) << '\n';
    if (!out) {
        throw std::runtime_error("short write: " + path.string());
    }
}

TrainedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open model file: " + path.string());
    }
    nlohmann::json doc;
    in >> doc;
    return model_from_json(doc);
}

} // namespace pcgkit
