#pragma once

#include "json.hpp"

#include "hedgefair/dataset_io.hpp"
#include "hedgefair/sim_harness.hpp"

namespace hedgefair {

using nlohmann::json;

// Config documents. Every field is optional; unknown keys raise ValidationError.

json to_json(const hiring::ScenarioConfig& cfg);
/// With harness_owned set, `population` and `seed` are rejected because the
/// run derives them.
hiring::ScenarioConfig scenario_config_from_json(const json& j, bool harness_owned = false);

json to_json(const AuditConfig& cfg);
AuditConfig audit_config_from_json(const json& j);

json to_json(const EnhancementConfig& cfg);
EnhancementConfig enhancement_config_from_json(const json& j);

json to_json(const FunctionSpec& spec);
FunctionSpec function_spec_from_json(const json& j);

json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const json& j);

json to_json(const SchemaSidecar& sidecar);
SchemaSidecar sidecar_from_json(const json& j);

// Reports.

json to_json(const FlipFinding& f);
json to_json(const ParityReport& p);
/// At most max_findings flip findings are listed; counts are always complete.
json to_json(const AuditReport& r, std::size_t max_findings = 20);
json to_json(const FairnessConstraint& c);
json to_json(const DecisionFunction& f);
json to_json(const EnhancementOutcome& o);
json to_json(const SelectionRecord& r);
json to_json(const StepRecord& s);
json to_json(const RunEvent& e, bool canonical = false);
/// Canonical form omits wall-clock fields so identical runs give identical bytes.
json to_json(const RunReport& r, bool canonical = false);

}  // namespace hedgefair
