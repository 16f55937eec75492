#include "pcgkit/label.hpp"

#include <stdexcept>
#include <string>

namespace pcgkit {

std::string_view to_string(Label label) {
    switch (label) {
    case Label::normal: return "normal";
    case Label::abnormal: return "abnormal";
    case Label::uncertain: return "uncertain";
    }
    return "unknown";
}

Label label_from_string(std::string_view text) {
    if (text == "normal") return Label::normal;
    if (text == "abnormal") return Label::abnormal;
    if (text == "uncertain") return Label::uncertain;
    throw std::invalid_argument("unknown label: " + std::string(text));
}

int label_to_challenge(Label label) {
    switch (label) {
    case Label::normal: return -1;
    case Label::abnormal: return 1;
    case Label::uncertain: break;
    }
    throw std::invalid_argument("uncertain label has no challenge encoding");
}

Label label_from_challenge(int value) {
    if (value == -1) return Label::normal;
    if (value == 1) return Label::abnormal;
    throw std::invalid_argument("challenge label must be -1 or 1, got " +
                                std::to_string(value));
}

} // namespace pcgkit
