#include "bgap/manifest.hpp"

#include <filesystem>
#include <fstream>

#include "bgap/error.hpp"
#include "bgap/sha256.hpp"
#include "json.hpp"

namespace bgap {

namespace fs = std::filesystem;
using nlohmann::json;

Manifest::Manifest(std::string run_dir) : run_dir_(std::move(run_dir)) {
    fs::create_directories(run_dir_);
}

std::string Manifest::abs_path(const std::string& rel_path) const {
    return (fs::path(run_dir_) / rel_path).string();
}

void Manifest::load() {
    std::ifstream in(abs_path("manifest.json"));
    if (!in) return;
    json j = json::parse(in);
    stages_.clear();
    for (auto& [stage, e] : j.at("stages").items()) {
        Entry entry;
        entry.path = e.at("path").get<std::string>();
        entry.sha256 = e.at("sha256").get<std::string>();
        entry.config_hash = e.at("config_hash").get<std::string>();
        entry.seed = e.at("seed").get<uint64_t>();
        stages_[stage] = std::move(entry);
    }
}

void Manifest::save() const {
    json stages = json::object();
    for (const auto& [stage, e] : stages_) {
        stages[stage] = {{"path", e.path},
                         {"sha256", e.sha256},
                         {"config_hash", e.config_hash},
                         {"seed", e.seed}};
    }
    json j;
    j["stages"] = std::move(stages);
    std::ofstream out(abs_path("manifest.json"), std::ios::trunc);
    if (!out) throw ValidationError("cannot write manifest in " + run_dir_);
    out << j.dump(2) << "\n";
}

void Manifest::record(const std::string& stage, const std::string& rel_path,
                      const std::string& config_hash, uint64_t seed) {
    Entry e;
    e.path = rel_path;
    e.sha256 = sha256_file_hex(abs_path(rel_path));
    e.config_hash = config_hash;
    e.seed = seed;
    stages_[stage] = std::move(e);
    save();
}

bool Manifest::verify(const std::string& stage, const std::string& config_hash,
                      uint64_t seed) const {
    auto it = stages_.find(stage);
    if (it == stages_.end()) return false;
    const Entry& e = it->second;
    if (e.config_hash != config_hash || e.seed != seed) return false;
    std::string p = abs_path(e.path);
    if (!fs::exists(p)) return false;
    return sha256_file_hex(p) == e.sha256;
}

bool Manifest::verify_all() const {
    for (const auto& [stage, e] : stages_) {
        std::string p = abs_path(e.path);
        if (!fs::exists(p) || sha256_file_hex(p) != e.sha256) return false;
    }
    return true;
}

std::optional<Manifest::Entry> Manifest::entry(const std::string& stage) const {
    auto it = stages_.find(stage);
    if (it == stages_.end()) return std::nullopt;
    return it->second;
}

}  // namespace bgap
