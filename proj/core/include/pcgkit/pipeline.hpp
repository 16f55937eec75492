#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcgkit/beat.hpp"
#include "pcgkit/classifiers.hpp"
#include "pcgkit/mfcc.hpp"
#include "pcgkit/segmentation.hpp"

namespace pcgkit {

inline constexpr std::size_t kBeatsPerRecord = 9;

// Every complete 1->2->3->4 run forms one beat; leading and trailing partial
// cycles are dropped.
std::vector<Beat> extract_beats(const StateSequence& states);

struct RecordFeatures {
    std::string record_id;
    // Exactly kBeatsPerRecord entries, ordered by beat position.
    std::vector<BeatFeatures> beats;
    Label label = Label::uncertain;
};

class NotEnoughBeats : public std::runtime_error {
  public:
    NotEnoughBeats(const std::string& record_id, std::size_t found);
    std::size_t found() const { return found_; }

  private:
    std::size_t found_;
};

// Features for the first kBeatsPerRecord beats. Throws NotEnoughBeats when
// the segmentation yields fewer complete cycles.
RecordFeatures build_record_features(std::span<const double> samples,
                                     double sample_rate, const StateSequence& states,
                                     std::string record_id, Label label,
                                     const MfccConfig& config = {});

// Element-wise mean of the beat feature vectors.
std::vector<double> single_strategy_vector(const RecordFeatures& rf);

struct EnsembleModel {
    // members[i] is trained on beat position i across all training records.
    std::vector<TrainedModel> members;
};

TrainedModel fit_single(const ClassifierConfig& config,
                        const std::vector<RecordFeatures>& training);
EnsembleModel fit_ensemble(const ClassifierConfig& config,
                           const std::vector<RecordFeatures>& training);

Label predict_single(const TrainedModel& model, const RecordFeatures& rf);
std::vector<Label> ensemble_votes(const EnsembleModel& model,
                                  const RecordFeatures& rf);
// Normal iff at least 5 of the 9 member votes are normal; 9 is odd, so the
// vote never ties.
Label predict_ensemble(const EnsembleModel& model, const RecordFeatures& rf);

enum class Strategy { single, ensemble };

std::string_view to_string(Strategy strategy);
Strategy strategy_from_string(std::string_view text);

// One fitted strategy bundled for saving and later classification.
struct StrategyModel {
    Strategy strategy = Strategy::single;
    std::optional<TrainedModel> single;
    std::optional<EnsembleModel> ensemble;

    Label predict(const RecordFeatures& rf) const;
    // Per-member votes for ensemble models; one entry for single models.
    std::vector<Label> votes(const RecordFeatures& rf) const;
};

StrategyModel fit_strategy(Strategy strategy, const ClassifierConfig& config,
                           const std::vector<RecordFeatures>& training);
void save_strategy(const StrategyModel& model, const std::filesystem::path& path);
StrategyModel load_strategy(const std::filesystem::path& path);

} // namespace pcgkit
