#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "craftagent/world.hpp"

namespace testutil {

inline std::string source(const std::string& rel) { return std::string(CRAFTAGENT_SOURCE_DIR) + "/" + rel; }

inline const craftagent::WorldModel& default_world() {
    static const craftagent::WorldModel w = craftagent::load_world(source("worlds/plan4mc_default.json"));
    return w;
}

inline const craftagent::WorldModel& det_world() {
    static const craftagent::WorldModel w = craftagent::deterministic_world(default_world());
    return w;
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string fixture(const std::string& rel) { return slurp(source("fixtures/" + rel)); }

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("craftagent_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace testutil
