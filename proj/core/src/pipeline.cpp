#include "pcgkit/pipeline.hpp"

#include <fstream>

#include <json.hpp>

#include "model_json.hpp"

namespace pcgkit {

std::vector<Beat> extract_beats(const StateSequence& states) {
    const auto& labels = states.labels;
    std::vector<Beat> beats;
    std::size_t i = 0;
    const std::size_t n = labels.size();
    while (i < n) {
        // Find the next S1 onset: an S1 run starting after a state-4 sample
        // or at the very beginning of the record.
        while (i < n && !(labels[i] == 1 && (i == 0 || labels[i - 1] == 4))) {
            ++i;
        }
        if (i >= n) {
            break;
        }
        Beat beat;
        Interval* segments[4] = {&beat.s1, &beat.systole, &beat.s2, &beat.diastole};
        std::size_t at = i;
        bool complete = true;
        for (std::uint8_t state = 1; state <= 4; ++state) {
            if (at >= n || labels[at] != state) {
                complete = false;
                break;
            }
            segments[state - 1]->begin = at;
            while (at < n && labels[at] == state) {
                ++at;
            }
            segments[state - 1]->end = at;
        }
        // A trailing cycle cut off before reaching state 4 is dropped; one
        // whose diastole touches the record end still counts.
        if (complete) {
            beats.push_back(beat);
        }
        i = at;
    }
    return beats;
}

NotEnoughBeats::NotEnoughBeats(const std::string& record_id, std::size_t found)
    : std::runtime_error("record " + record_id + ": " + std::to_string(found) +
                         " complete beats, need " + std::to_string(kBeatsPerRecord)),
      found_(found) {}

RecordFeatures build_record_features(std::span<const double> samples,
                                     double sample_rate, const StateSequence& states,
                                     std::string record_id, Label label,
                                     const MfccConfig& config) {
    if (states.labels.size() != samples.size()) {
        throw std::invalid_argument("build_record_features: state/sample length mismatch");
    }
    const std::vector<Beat> beats = extract_beats(states);
    if (beats.size() < kBeatsPerRecord) {
        throw NotEnoughBeats(record_id, beats.size());
    }
    const std::vector<FrameMfcc> frames =
        compute_frame_mfccs(samples, sample_rate, config);

    RecordFeatures rf;
    rf.record_id = std::move(record_id);
    rf.label = label;
    rf.beats.reserve(kBeatsPerRecord);
    for (std::size_t b = 0; b < kBeatsPerRecord; ++b) {
        BeatFeatures features = beat_features(frames, beats[b], config.keep_coefficients);
        features.beat_index = b;
        rf.beats.push_back(std::move(features));
    }
    return rf;
}

std::vector<double> single_strategy_vector(const RecordFeatures& rf) {
    if (rf.beats.empty()) {
        throw std::invalid_argument("single_strategy_vector: no beats");
    }
    const std::size_t dim = rf.beats.front().values.size();
    std::vector<double> mean(dim, 0.0);
    for (const BeatFeatures& beat : rf.beats) {
        if (beat.values.size() != dim) {
            throw std::invalid_argument("single_strategy_vector: ragged beat features");
        }
        for (std::size_t j = 0; j < dim; ++j) {
            mean[j] += beat.values[j];
        }
    }
    for (double& v : mean) {
        v /= static_cast<double>(rf.beats.size());
    }
    return mean;
}

TrainedModel fit_single(const ClassifierConfig& config,
                        const std::vector<RecordFeatures>& training) {
    std::vector<LabeledSample> samples;
    samples.reserve(training.size());
    for (const RecordFeatures& rf : training) {
        samples.push_back({single_strategy_vector(rf), rf.label});
    }
    return fit(config, samples);
}

EnsembleModel fit_ensemble(const ClassifierConfig& config,
                           const std::vector<RecordFeatures>& training) {
    EnsembleModel model;
    model.members.reserve(kBeatsPerRecord);
    for (std::size_t position = 0; position < kBeatsPerRecord; ++position) {
        std::vector<LabeledSample> samples;
        samples.reserve(training.size());
        for (const RecordFeatures& rf : training) {
            if (rf.beats.size() != kBeatsPerRecord) {
                throw std::invalid_argument("fit_ensemble: record " + rf.record_id +
                                            " lacks " +
                                            std::to_string(kBeatsPerRecord) + " beats");
            }
            samples.push_back({rf.beats[position].values, rf.label});
        }
        model.members.push_back(fit(config, samples));
    }
    return model;
}

Label predict_single(const TrainedModel& model, const RecordFeatures& rf) {
    return model.predict(single_strategy_vector(rf));
}

std::vector<Label> ensemble_votes(const EnsembleModel& model,
                                  const RecordFeatures& rf) {
    if (rf.beats.size() != model.members.size()) {
        throw std::invalid_argument("ensemble_votes: beat count does not match members");
    }
    std::vector<Label> votes;
    votes.reserve(model.members.size());
    for (std::size_t i = 0; i < model.members.size(); ++i) {
        votes.push_back(model.members[i].predict(rf.beats[i].values));
    }
    return votes;
}

Label predict_ensemble(const EnsembleModel& model, const RecordFeatures& rf) {
    const std::vector<Label> votes = ensemble_votes(model, rf);
    std::size_t normal = 0;
    for (Label vote : votes) {
        normal += vote == Label::normal ? 1 : 0;
    }
    return 2 * normal >= votes.size() + 1 ? Label::normal : Label::abnormal;
}

std::string_view to_string(Strategy strategy) {
    return strategy == Strategy::single ? "single" : "ensemble";
}

Strategy strategy_from_string(std::string_view text) {
    if (text == "single") return Strategy::single;
    if (text == "ensemble") return Strategy::ensemble;
    throw std::invalid_argument("unknown strategy: " + std::string(text));
}

Label StrategyModel::predict(const RecordFeatures& rf) const {
    return strategy == Strategy::single ? predict_single(*single, rf)
                                        : predict_ensemble(*ensemble, rf);
}

std::vector<Label> StrategyModel::votes(const RecordFeatures& rf) const {
    if (strategy == Strategy::single) {
        return {predict_single(*single, rf)};
    }
    return ensemble_votes(*ensemble, rf);
}

StrategyModel fit_strategy(Strategy strategy, const ClassifierConfig& config,
                           const std::vector<RecordFeatures>& training) {
    StrategyModel model;
    model.strategy = strategy;
    if (strategy == Strategy::single) {
        model.single = fit_single(config, training);
    } else {
        model.ensemble = fit_ensemble(config, training);
    }
    return model;
}

void save_strategy(const StrategyModel& model, const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["format"] = "pcgkit-strategy";
    doc["version"] = 1;
    doc["strategy"] = std::string(to_string(model.strategy));
    if (model.strategy == Strategy::single) {
        doc["model"] = model_to_json(*model.single);
    } else {
        nlohmann::json members = nlohmann::json::array();
        for (const TrainedModel& member : model.ensemble->members) {
            members.push_back(model_to_json(member));
        }
        doc["members"] = std::move(members);
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path.string());
    }
    out << doc.dump(2) << '\n';
    if (!out) {
        throw std::runtime_error("short write: " + path.string());
    }
}

StrategyModel load_strategy(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open strategy file: " + path.string());
    }
    nlohmann::json doc;
    in >> doc;
    if (doc.value("format", "") != "pcgkit-strategy") {
        throw std::runtime_error("strategy file: unrecognized format tag");
    }
    if (doc.value("version", 0) != 1) {
        throw std::runtime_error("strategy file: unsupported version");
    }
    StrategyModel model;
    model.strategy = strategy_from_string(doc.at("strategy").get<std::string>());
    if (model.strategy == Strategy::single) {
        model.single = model_from_json(doc.at("model"));
    } else {
        EnsembleModel ensemble;
        for (const auto& entry : doc.at("members")) {
            ensemble.members.push_back(model_from_json(entry));
        }
        if (ensemble.members.size() != kBeatsPerRecord) {
            throw std::runtime_error("strategy file: expected " +
                                     std::to_string(kBeatsPerRecord) + " members");
        }
        model.ensemble = std::move(ensemble);
    }
    return model;
}

} // namespace pcgkit
