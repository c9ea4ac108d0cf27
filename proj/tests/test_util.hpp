#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "bgap/corpus.hpp"
#include "bgap/rng.hpp"

namespace bgap::test {

// Unique scratch directory, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("bgap_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline Conversation make_conversation(const std::string& id,
                                      const std::vector<std::string>& user_turns,
                                      const std::string& goal = "do the thing") {
    Conversation conv;
    conv.id = id;
    conv.goal = goal;
    for (size_t i = 0; i < user_turns.size(); ++i) {
        conv.turns.push_back({Role::user, user_turns[i]});
        conv.turns.push_back({Role::assistant, "reply " + std::to_string(i)});
    }
    return conv;
}

inline MatD random_matrix(Eigen::Index n, Eigen::Index d, uint64_t seed) {
    Rng rng(seed);
    MatD m(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) m(i, j) = rng.normal();
    return m;
}

}  // namespace bgap::test
