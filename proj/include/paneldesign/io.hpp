#pragma once

#include <string>

#include <json.hpp>

#include "paneldesign/estimators.hpp"
#include "paneldesign/inference.hpp"
#include "paneldesign/selector.hpp"
#include "paneldesign/simlab.hpp"

namespace paneldesign {

nlohmann::json problem_to_json(const DesignProblem& p);
DesignProblem problem_from_json(const nlohmann::json& j);

nlohmann::json design_to_json(const Design& d, const std::vector<std::string>& unit_ids);
Design design_from_json(const nlohmann::json& j);

nlohmann::json estimate_to_json(const EffectEstimate& e);
nlohmann::json permutation_test_to_json(const PermutationTest& t);
nlohmann::json verify_report_to_json(const VerifyReport& r);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace paneldesign
