#include "bgap/simgen.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

#include "bgap/error.hpp"
#include "bgap/prompts.hpp"
#include "bgap/rng.hpp"
#include "json.hpp"

namespace bgap {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// The simulator session needs an opening interlocutor message before the
// simulator's first utterance; it is never stored in the transcript.
constexpr const char* kSessionOpener = "Hello! How can I assist you today?";

}  // namespace

ActorSpec make_simulator(std::string name, std::shared_ptr<ChatProvider> provider) {
    ActorSpec spec;
    spec.kind = ActorSpec::Kind::simulator;
    spec.name = std::move(name);
    spec.provider = std::move(provider);
    spec.system_template = prompts::simulator_system();
    return spec;
}

ActorSpec make_assistant(std::shared_ptr<ChatProvider> provider) {
    ActorSpec spec;
    spec.kind = ActorSpec::Kind::assistant;
    spec.name = "assistant";
    spec.provider = std::move(provider);
    spec.system_template = prompts::assistant_system();
    return spec;
}

Conversation run_conversation(const std::string& goal, const ActorSpec& simulator,
                              const ActorSpec& assistant, int max_turns,
                              const std::string& conversation_id) {
    if (trim(goal).empty()) throw ValidationError("run_conversation: goal must be non-empty");
    if (max_turns < 1) throw ValidationError("run_conversation: max_turns must be >= 1");
    if (simulator.kind != ActorSpec::Kind::simulator || !simulator.provider)
        throw ValidationError("run_conversation: bad simulator spec");
    if (simulator.system_template.find("{intent}") == std::string::npos ||
        simulator.system_template.find("{termination_signal}") == std::string::npos)
        throw ValidationError(
            "run_conversation: simulator template must contain {intent} and "
            "{termination_signal}");

    std::string sim_system =
        prompts::render(simulator.system_template,
                        {{"intent", goal}, {"termination_signal", simulator.termination_signal}});

    Conversation conv;
    conv.id = conversation_id;
    conv.source = simulator.name;
    conv.goal = goal;

    try {
        for (int t = 0; t < max_turns; ++t) {
            // Simulator sees the history with roles flipped.
            std::vector<ChatMessage> sim_messages = {{"user", kSessionOpener}};
            for (const auto& turn : conv.turns)
                sim_messages.push_back(
                    {turn.role == Role::user ? "assistant" : "user", turn.content});

            std::string reply = trim(simulator.provider->chat(sim_system, sim_messages).text);
            if (reply == simulator.termination_signal) return conv;  // signal never stored
            if (reply.empty()) {
                conv.failed = true;
                return conv;
            }
            conv.turns.push_back({Role::user, reply});

            std::vector<ChatMessage> asst_messages;
            for (const auto& turn : conv.turns)
                asst_messages.push_back({to_string(turn.role), turn.content});
            std::string answer =
                trim(assistant.provider->chat(assistant.system_template, asst_messages).text);
            if (answer.empty()) {
                conv.failed = true;
                return conv;
            }
            conv.turns.push_back({Role::assistant, answer});
        }
    } catch (const ProviderError&) {
        conv.failed = true;  // partial transcript retained
    }
    if (conv.turns.empty()) conv.failed = true;
    return conv;
}

MixtureRun run_mixture(const std::vector<std::string>& goals,
                       const std::vector<WeightedSimulator>& simulators,
                       const ActorSpec& assistant, int max_turns, uint64_t seed,
                       int parallelism) {
    if (goals.empty()) throw ValidationError("run_mixture: goals must be non-empty");
    if (simulators.size() < 2)
        throw ValidationError("run_mixture: need at least 2 simulators");
    double total_weight = 0;
    for (const auto& s : simulators) {
        if (s.weight < 0) throw ValidationError("run_mixture: negative weight");
        total_weight += s.weight;
    }
    if (std::abs(total_weight - 1.0) > 1e-9)
        throw ValidationError("run_mixture: weights must sum to 1");

    // Draw every assignment up front with the seeded generator so results do
    // not depend on the parallel schedule.
    Rng rng(seed);
    std::vector<size_t> assignment(goals.size());
    for (size_t i = 0; i < goals.size(); ++i) {
        double u = rng.next01();
        double acc = 0;
        size_t pick = simulators.size() - 1;
        for (size_t s = 0; s < simulators.size(); ++s) {
            acc += simulators[s].weight;
            if (u < acc) {
                pick = s;
                break;
            }
        }
        assignment[i] = pick;
    }

    MixtureRun run;
    run.corpus.kind = Corpus::Kind::simulated;
    run.corpus.name = "mixture";
    run.corpus.conversations.resize(goals.size());

    auto id_of = [](size_t i) {
        char buf[24];
        std::snprintf(buf, sizeof(buf), "sim-%06zu", i);
        return std::string(buf);
    };

    std::atomic<size_t> next{0};
    std::exception_ptr first_error;
    std::mutex err_mu;
    int workers = std::max(1, std::min<int>(parallelism, int(goals.size())));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= goals.size()) return;
                try {
                    run.corpus.conversations[i] =
                        run_conversation(goals[i], simulators[assignment[i]].actor, assistant,
                                         max_turns, id_of(i));
                } catch (...) {
                    std::lock_guard lock(err_mu);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);

    for (size_t i = 0; i < goals.size(); ++i)
        run.assignments.emplace_back(id_of(i), simulators[assignment[i]].actor.name);
    return run;
}

void save_assignments(const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& assignments) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + path);
    for (const auto& [conv_id, sim] : assignments) {
        nlohmann::json j;
        j["conversation_id"] = conv_id;
        j["simulator"] = sim;
        out << j.dump() << "\n";
    }
}

}  // namespace bgap
