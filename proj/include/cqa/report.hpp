#pragma once

#include <string>

#include <json.hpp>

#include "cqa/classify.hpp"
#include "cqa/model.hpp"

namespace cqa {

// JSON evidence for a classification: class name plus either the topological
// order (FO) or the witnessing 2-cycle with edge strengths.
nlohmann::json classification_json(const Query& q, const Classification& c);

// Envelope used by every CLI command: {command, class, evidence, result, stats}.
nlohmann::json report_envelope(const std::string& command);

} // namespace cqa
