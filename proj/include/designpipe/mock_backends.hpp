#pragma once

#include <optional>
#include <string>

#include "designpipe/clients.hpp"

namespace designpipe {

// Deterministic stand-ins for the model services, driven only by the prompt
// text, the attached image and the sampling seed.

// Answers design-plan prompts with a plan derived from the intention and
// intention-synthesis prompts with a request built from the listed metadata.
TextResponder mock_text_responder();

// Answers the four per-item extraction prompts from image statistics and the
// text list embedded in the headings prompt.
MultimodalResponder mock_extraction_responder();

// Answers typography requests by stacking the texts, centered, over the
// upper part of the canvas: even positions at 8% of the canvas height, odd
// ones at 5%, dark or white depending on the image's upper-third brightness.
MultimodalResponder mock_typography_responder(std::string font_family);

// Scores from a hash of prompt and image, or a constant when given.
MultimodalResponder mock_judge_responder(std::optional<double> constant = std::nullopt);

// Reply that never contains JSON; used to force a stage to fail.
inline constexpr const char* kMockRefusal = "I am unable to help with that request.";

}  // namespace designpipe
