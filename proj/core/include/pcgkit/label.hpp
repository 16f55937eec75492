#pragma once

#include <string>
#include <string_view>

namespace pcgkit {

enum class Label { normal, abnormal, uncertain };

std::string_view to_string(Label label);
Label label_from_string(std::string_view text);

// Reference-file convention: -1 = normal, 1 = abnormal.
int label_to_challenge(Label label);
Label label_from_challenge(int value);

} // namespace pcgkit
