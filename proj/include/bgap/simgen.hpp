#pragma once

#include <memory>
#include <string>
#include <vector>

#include "bgap/corpus.hpp"
#include "bgap/gateway.hpp"

namespace bgap {

inline constexpr const char* kDefaultTerminationSignal = "<|TERMINATE_CONVERSATION|>";

struct ActorSpec {
    enum class Kind { simulator, assistant };

    Kind kind = Kind::simulator;
    std::string name;
    std::shared_ptr<ChatProvider> provider;
    std::string system_template;
    // Simulator only: emitting this (exact match after trimming) ends the
    // conversation; the terminating reply is not stored.
    std::string termination_signal = kDefaultTerminationSignal;
};

ActorSpec make_simulator(std::string name, std::shared_ptr<ChatProvider> provider);
ActorSpec make_assistant(std::shared_ptr<ChatProvider> provider);

// One goal-conditioned self-play conversation: the simulator opens, actors
// alternate, and the loop stops at the termination signal or after max_turns
// user turns. The simulator sees the session with roles flipped (its own
// utterances as "assistant", the interlocutor as "user"). Provider failures
// mark the conversation failed and keep the partial transcript.
Conversation run_conversation(const std::string& goal, const ActorSpec& simulator,
                              const ActorSpec& assistant, int max_turns,
                              const std::string& conversation_id);

struct WeightedSimulator {
    ActorSpec actor;
    double weight = 0;
};

struct MixtureRun {
    Corpus corpus;
    // conversation id -> simulator name, in generation order
    std::vector<std::pair<std::string, std::string>> assignments;
};

// Per goal, draws the simulator from the weighted distribution with a seeded
// generator, then generates all conversations (parallel across goals, ordered
// output). Weights must sum to 1.
MixtureRun run_mixture(const std::vector<std::string>& goals,
                       const std::vector<WeightedSimulator>& simulators,
                       const ActorSpec& assistant, int max_turns, uint64_t seed,
                       int parallelism = 8);

void save_assignments(const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& assignments);

}  // namespace bgap
