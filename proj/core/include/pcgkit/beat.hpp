#pragma once

#include <cstddef>

namespace pcgkit {

// Half-open sample range [begin, end).
struct Interval {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t length() const { return end - begin; }
    bool empty() const { return end <= begin; }
};

// One full cardiac cycle: S1, systole, S2, diastole, contiguous in time.
struct Beat {
    Interval s1;
    Interval systole;
    Interval s2;
    Interval diastole;
};

} // namespace pcgkit
