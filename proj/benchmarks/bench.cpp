// Micro benchmarks for the pipeline hot paths: the spectrum transform that
// runs per frame, the front-end filters that run per record, the state
// decoder, per-record feature extraction, and one classifier fit.

#include <cstdint>
#include <vector>

#include <benchmark/benchmark.h>

#include "pcgkit/classifiers.hpp"
#include "pcgkit/mfcc.hpp"
#include "pcgkit/pipeline.hpp"
#include "pcgkit/preprocess.hpp"
#include "pcgkit/rng.hpp"
#include "pcgkit/segmentation.hpp"
#include "pcgkit/synth.hpp"

using namespace pcgkit;

namespace {

std::vector<double> noise(std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> values(count);
    for (double& v : values) {
        v = rng.normal(0.0, 1.0);
    }
    return values;
}

SynthRecord example_record(Label label, std::uint64_t seed) {
    Rng rng(seed);
    return synth_record(SynthConfig{}, label, rng);
}

void frame_spectrum(benchmark::State& state) {
    const std::vector<double> frame = noise(64, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(frame_power_spectrum(frame));
    }
}
BENCHMARK(frame_spectrum);

void cosine_transform(benchmark::State& state) {
    const std::vector<double> bands = noise(20, 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dct_ii(bands));
    }
}
BENCHMARK(cosine_transform);

// Anti-alias decimation plus band-pass over a 12 s record sampled at 2 kHz.
void preprocess_record(benchmark::State& state) {
    const SynthRecord record = example_record(Label::abnormal, 21);
    for (auto _ : state) {
        benchmark::DoNotOptimize(preprocess(record.samples, 2000.0));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(record.samples.size()));
}
BENCHMARK(preprocess_record);

// Envelope, rate estimate, and duration-constrained decoding of 12 s.
void segment_record(benchmark::State& state) {
    const SynthRecord record = example_record(Label::abnormal, 22);
    const PreprocessResult pre = preprocess(record.samples, 2000.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(segment(pre.samples, pre.sample_rate));
    }
}
BENCHMARK(segment_record);

// Framing, filter bank, and per-beat coefficients for one record.
void record_features(benchmark::State& state) {
    const SynthRecord record = example_record(Label::abnormal, 23);
    const PreprocessResult pre = preprocess(record.samples, 2000.0);
    const StateSequence states = segment(pre.samples, pre.sample_rate);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            build_record_features(pre.samples, pre.sample_rate, states, "bench",
                                  Label::abnormal));
    }
}
BENCHMARK(record_features);

void svm_fit(benchmark::State& state) {
    Rng rng(24);
    std::vector<LabeledSample> data(100);
    for (std::size_t i = 0; i < data.size(); ++i) {
        data[i].label = i % 2 == 0 ? Label::abnormal : Label::normal;
        data[i].features.resize(52);
        for (double& f : data[i].features) {
            f = rng.normal(i % 2 == 0 ? 1.0 : 0.0, 1.0);
        }
    }
    ClassifierConfig config;
    config.kind = ClassifierKind::svm;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit(config, data));
    }
}
BENCHMARK(svm_fit);

} // namespace

BENCHMARK_MAIN();
