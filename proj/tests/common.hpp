#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "msldp/netmodel.hpp"
#include "msldp/scaling.hpp"

namespace msldp::test {

inline std::string model_text(const std::string& name) {
    std::ifstream in(std::string(MSLDP_MODEL_DIR) + "/" + name + ".rxn");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline ReactionNetwork model(const std::string& name) { return parse_network(model_text(name)); }
inline ScaledSystem scaled(const std::string& name) { return classify(model(name)); }

inline double rel_err(double a, double b) { return std::fabs(a - b) / std::max(1.0, std::fabs(b)); }

}  // namespace msldp::test
