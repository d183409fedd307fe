#pragma once

#include <string>

#include "json.hpp"

#include "ssmlab/ssm.hpp"

namespace ssmlab {

// JSON round trip for fully declarative machines. Programmatic rules or
// embedders cannot be serialized and raise MismatchError; malformed input
// raises ConfigError.
nlohmann::ordered_json machine_to_config(const SSMachine& machine);
SSMachine machine_from_config(const nlohmann::json& config);

std::string machine_to_config_string(const SSMachine& machine);
SSMachine machine_from_config_string(const std::string& text);

}  // namespace ssmlab
