#pragma once

// Synthetic conversation populations over discrete behavioral archetypes.
// Each archetype pins the surface features the offline describer buckets on
// (verbosity, politeness, turn count), so conversations from one archetype
// produce identical behavior descriptions and the pipeline sees a clean
// discrete behavior distribution. A population is a weight vector over the
// eight archetypes.

#include <array>
#include <string>
#include <vector>

#include "bgap/corpus.hpp"
#include "bgap/rng.hpp"

namespace bgap::test {

struct Archetype {
    bool verbose;
    bool polite;
    int user_turns;
};

inline const std::array<Archetype, 8>& archetypes() {
    static const std::array<Archetype, 8> kArchetypes = {{
        {false, false, 1},
        {false, false, 3},
        {false, true, 1},
        {false, true, 3},
        {true, false, 1},
        {true, false, 3},
        {true, true, 1},
        {true, true, 3},
    }};
    return kArchetypes;
}

inline Conversation archetype_conversation(int archetype_id, size_t index) {
    const Archetype& a = archetypes()[size_t(archetype_id)];
    static const std::string kLong =
        "I have been working on reorganizing the project for a while now and I keep running "
        "into the same issue with the setup, so I collected all the relevant details, earlier "
        "attempts, partial results and my current thinking below in the hope that it helps "
        "to resolve this for good and move on to the remaining parts of the plan for this "
        "quarter without further detours.";

    Conversation conv;
    conv.id = "a" + std::to_string(archetype_id) + "-" + std::to_string(index);
    conv.source = "synthetic";
    conv.goal = "resolve task item " + std::to_string(index % 17);

    for (int t = 0; t < a.user_turns; ++t) {
        std::string text;
        if (a.verbose) {
            text = kLong + " Detail code " + std::to_string(index % 5) + ".";
        } else {
            static const char* kTerse[] = {"fix the widget", "update the config now",
                                           "remove that part", "rename those fields",
                                           "merge the two lists"};
            text = kTerse[(index + size_t(t)) % 5];
        }
        if (a.polite) {
            text = (t == 0 ? "hello! " : "thanks! ") + text + " please";
        }
        conv.turns.push_back({Role::user, text});
        conv.turns.push_back({Role::assistant, "done: step " + std::to_string(t)});
    }
    return conv;
}

// Samples a corpus of `n` conversations from the archetype weights.
inline Corpus sample_population(const std::array<double, 8>& weights, size_t n, uint64_t seed,
                                const std::string& name) {
    Rng rng(seed);
    Corpus corpus;
    corpus.name = name;
    corpus.kind = Corpus::Kind::simulated;
    for (size_t i = 0; i < n; ++i) {
        double u = rng.next01(), acc = 0;
        int pick = 7;
        for (int a = 0; a < 8; ++a) {
            acc += weights[size_t(a)];
            if (u < acc) {
                pick = a;
                break;
            }
        }
        Conversation conv = archetype_conversation(pick, i);
        conv.id = name + "-" + conv.id;
        corpus.conversations.push_back(std::move(conv));
    }
    return corpus;
}

inline const std::array<double, 8>& population_a() {
    static const std::array<double, 8> kA = {0.30, 0.20, 0.15, 0.10, 0.09, 0.08, 0.05, 0.03};
    return kA;
}

inline const std::array<double, 8>& population_b() {
    static const std::array<double, 8> kB = {0.03, 0.05, 0.08, 0.09, 0.10, 0.15, 0.20, 0.30};
    return kB;
}

}  // namespace bgap::test
