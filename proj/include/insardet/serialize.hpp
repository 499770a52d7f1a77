#pragma once

#include <json.hpp>

#include "insardet/synth.hpp"

namespace insardet {

using Json = nlohmann::json;

// JSON round trips for configs and scene records. Readers reject unknown
// keys and keep defaults for missing ones.
void to_json(Json& j, const GridSpec& g);
void from_json(const Json& j, GridSpec& g);
void to_json(Json& j, const McParams& p);
void from_json(const Json& j, McParams& p);
void to_json(Json& j, const LayoutConfig& c);
void from_json(const Json& j, LayoutConfig& c);
void to_json(Json& j, const SynthConfig& c);
void from_json(const Json& j, SynthConfig& c);
void to_json(Json& j, const CovarianceModel& m);
void from_json(const Json& j, CovarianceModel& m);
void to_json(Json& j, const SceneRecord& r);
void from_json(const Json& j, SceneRecord& r);

/// Throws std::invalid_argument naming the first key of `j` not in `allowed`.
void reject_unknown_keys(const Json& j, std::initializer_list<const char*> allowed, const char* what);

}  // namespace insardet
