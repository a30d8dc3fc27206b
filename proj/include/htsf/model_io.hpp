#pragma once

#include <json.hpp>

#include "htsf/arima.hpp"
#include "htsf/gbdt.hpp"
#include "htsf/ses.hpp"

namespace htsf {

inline constexpr const char* kSesSchema = "htsf.ses.v1";
inline constexpr const char* kArimaSchema = "htsf.arima.v1";
inline constexpr const char* kGbdtSchema = "htsf.gbdt.v1";

// Versioned documents; doubles are written in shortest round-trip form.
nlohmann::json to_json(const SesParams& params);
nlohmann::json to_json(const ArimaModel& model);
nlohmann::json to_json(const GbdtParams& params);
// Tree nodes are encoded as [feature, threshold, left, right, value].
nlohmann::json to_json(const GbdtModel& model);

SesParams ses_from_json(const nlohmann::json& doc);
ArimaModel arima_from_json(const nlohmann::json& doc);
GbdtParams gbdt_params_from_json(const nlohmann::json& doc, GbdtParams defaults = {});
GbdtModel gbdt_from_json(const nlohmann::json& doc);

}  // namespace htsf
