#pragma once

// Verdict JSON, run manifest and artifact helpers shared by the CLI and the acceptance runner.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <boost/version.hpp>
#include <json.hpp>
#include <Eigen/Core>

#include "qpsde/errors.hpp"

#ifndef QPSDE_VERSION
#define QPSDE_VERSION "0.1.0"
#endif

namespace qpsde {

inline constexpr const char* kVerdictSchema = "qpsde.verdict/1";
inline constexpr const char* kManifestSchema = "qpsde.manifest/1";

/// One check of a suite: measured value against a threshold.
struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
    nlohmann::json extra = nlohmann::json::object();
};

inline nlohmann::json to_json(const CheckResult& c) {
    nlohmann::json j;
    j["name"] = c.name;
    j["passed"] = c.passed;
    j["value"] = std::isfinite(c.value) ? nlohmann::json(c.value) : nlohmann::json(nullptr);
    j["threshold"] = std::isfinite(c.threshold) ? nlohmann::json(c.threshold) : nlohmann::json(nullptr);
    j["detail"] = c.detail;
    if (!c.extra.empty()) j["extra"] = c.extra;
    return j;
}

inline bool all_passed(const std::vector<CheckResult>& checks) {
    for (const auto& c : checks)
        if (!c.passed) return false;
    return true;
}

inline nlohmann::json verdict_json(const std::string& task, const std::vector<CheckResult>& checks) {
    nlohmann::json j;
    j["schema"] = kVerdictSchema;
    j["task"] = task;
    j["passed"] = all_passed(checks);
    j["checks"] = nlohmann::json::array();
    for (const auto& c : checks) j["checks"].push_back(to_json(c));
    return j;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline nlohmann::json manifest_json(const std::string& effective_config, const std::string& task,
                                    std::uint64_t seed_lo, std::uint64_t seed_hi) {
    nlohmann::json j;
    j["schema"] = kManifestSchema;
    j["task"] = task;
    j["config_hash"] = "fnv1a64:" + hex64(fnv1a(effective_config));
    j["seed_range"] = {seed_lo, seed_hi};
    j["versions"] = {{"qpsde", QPSDE_VERSION},
                     {"compiler", __VERSION__},
                     {"boost", BOOST_LIB_VERSION},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DomainError("cannot write " + path.string());
    os << text;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace qpsde
