#include "model_json.hpp"

#include <stdexcept>
#include <string>

namespace pcgkit {

namespace {

constexpr int kFormatVersion = 1;

nlohmann::json labels_to_json(const std::vector<Label>& labels) {
    nlohmann::json arr = nlohmann::json::array();
    for (Label label : labels) {
        arr.push_back(label_to_challenge(label));
    }
    return arr;
}

std::vector<Label> labels_from_json(const nlohmann::json& arr) {
    std::vector<Label> labels;
    labels.reserve(arr.size());
    for (const auto& v : arr) {
        labels.push_back(label_from_challenge(v.get<int>()));
    }
    return labels;
}

} // namespace

nlohmann::json model_to_json(const TrainedModel& model) {
    nlohmann::json doc;
    doc["format"] = "pcgkit-model";
    doc["version"] = kFormatVersion;
    doc["kind"] = std::string(to_string(model.kind));
    doc["dimension"] = model.dimension;
    doc["standardization"] = {
        {"mean", model.standardization.mean},
        {"stddev", model.standardization.stddev},
        {"zero_variance", model.standardization.zero_variance},
    };
    switch (model.kind) {
    case ClassifierKind::knn: {
        const KnnModel& m = *model.knn;
        doc["knn"] = {
            {"k", m.k},
            {"points", m.points},
            {"labels", labels_to_json(m.labels)},
        };
        break;
    }
    case ClassifierKind::svm: {
        const SvmModel& m = *model.svm;
        doc["svm"] = {
            {"kernel", std::string(to_string(m.kernel))},
            {"gamma", m.gamma},
            {"degree", m.degree},
            {"c", m.c},
            {"bias", m.bias},
            {"points", m.points},
            {"alpha", m.alpha},
            {"y", m.y},
        };
        break;
    }
    case ClassifierKind::dt: {
        const DtModel& m = *model.dt;
        nlohmann::json nodes = nlohmann::json::array();
        for (const DtNode& node : m.nodes) {
            nodes.push_back({
                {"leaf", node.leaf},
                {"label", label_to_challenge(node.label)},
                {"feature", node.feature},
                {"threshold", node.threshold},
                {"left", node.left},
                {"right", node.right},
            });
        }
        doc["dt"] = {{"nodes", std::move(nodes)}};
        break;
    }
    }
    return doc;
}

TrainedModel model_from_json(const nlohmann::json& doc) {
    if (doc.value("format", "") != "pcgkit-model") {
        throw std::runtime_error("model file: unrecognized format tag");
    }
    if (doc.value("version", 0) != kFormatVersion) {
        throw std::runtime_error("model file: unsupported version " +
                                 std::to_string(doc.value("version", 0)));
    }
    TrainedModel model;
    model.kind = classifier_kind_from_string(doc.at("kind").get<std::string>());
    model.dimension = doc.at("dimension").get<std::size_t>();
    const auto& std_doc = doc.at("standardization");
    model.standardization.mean = std_doc.at("mean").get<std::vector<double>>();
    model.standardization.stddev = std_doc.at("stddev").get<std::vector<double>>();
    model.standardization.zero_variance =
        std_doc.at("zero_variance").get<std::vector<std::size_t>>();

    switch (model.kind) {
    case ClassifierKind::knn: {
        const auto& m = doc.at("knn");
        KnnModel knn;
        knn.k = m.at("k").get<std::size_t>();
        knn.points = m.at("points").get<std::vector<std::vector<double>>>();
        knn.labels = labels_from_json(m.at("labels"));
        model.knn = std::move(knn);
        break;
    }
    case ClassifierKind::svm: {
        const auto& m = doc.at("svm");
        SvmModel svm;
        svm.kernel = svm_kernel_from_string(m.at("kernel").get<std::string>());
        svm.gamma = m.at("gamma").get<double>();
        svm.degree = m.at("degree").get<std::size_t>();
        svm.c = m.at("c").get<double>();
        svm.bias = m.at("bias").get<double>();
        svm.points = m.at("points").get<std::vector<std::vector<double>>>();
        svm.alpha = m.at("alpha").get<std::vector<double>>();
        svm.y = m.at("y").get<std::vector<int>>();
        model.svm = std::move(svm);
        break;
    }
    case ClassifierKind::dt: {
        const auto& m = doc.at("dt");
        DtModel dt;
        for (const auto& entry : m.at("nodes")) {
            DtNode node;
            node.leaf = entry.at("leaf").get<bool>();
            node.label = label_from_challenge(entry.at("label").get<int>());
            node.feature = entry.at("feature").get<std::size_t>();
            node.threshold = entry.at("threshold").get<double>();
            node.left = entry.at("left").get<std::int32_t>();
            node.right = entry.at("right").get<std::int32_t>();
            dt.nodes.push_back(node);
        }
        model.dt = std::move(dt);
        break;
    }
    }
    return model;
}

} // namespace pcgkit
