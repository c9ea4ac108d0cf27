#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bgap {

// Records what each pipeline stage produced, keyed by stage name. A stage is
// resumable when its artifact still exists, hashes to the recorded value, and
// was produced under the same config hash and seed.
class Manifest {
public:
    struct Entry {
        std::string path;        // relative to the run directory
        std::string sha256;
        std::string config_hash;
        uint64_t seed = 0;
    };

    explicit Manifest(std::string run_dir);

    // Loads manifest.json from the run directory if present.
    void load();
    void save() const;

    // Hashes the artifact and records the stage.
    void record(const std::string& stage, const std::string& rel_path,
                const std::string& config_hash, uint64_t seed);

    // True iff the stage is recorded, the artifact exists, and both content
    // and config hashes match.
    bool verify(const std::string& stage, const std::string& config_hash,
                uint64_t seed) const;

    // True iff every recorded artifact matches its hash.
    bool verify_all() const;

    std::optional<Entry> entry(const std::string& stage) const;
    std::string abs_path(const std::string& rel_path) const;
    const std::string& run_dir() const { return run_dir_; }

private:
    std::string run_dir_;
    std::map<std::string, Entry> stages_;
};

}  // namespace bgap
