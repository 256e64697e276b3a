#pragma once

#include <string_view>

namespace dualloop::embedded {

std::string_view prompts_txt();
std::string_view style_phrases_txt();

}  // namespace dualloop::embedded
