#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>

#include "hcsim/client.hpp"
#include "hcsim/rl.hpp"

namespace hcsim {

enum class EpisodeMode { Learn, Exploit };

// Episode mechanics shared by the agent and the baseline. The terminal
// limits are expressed in readout units (they must match whatever scaling
// the machine applies on its outputs).
struct EpisodeConfig {
    double x_limit = 1.0;
    double phi_limit = 0.5;
    std::uint64_t impulse_ms = 20;
    std::uint64_t max_steps = 0; // 0 = unlimited
    double reward_per_step = 1.0;
};

struct EpisodeResult {
    std::uint64_t steps = 0; // surviving (non-terminal) transitions
    double reward = 0.0;
    bool terminated = false; // false = stopped by the step cap
};

// Drives one IC -> Operate -> ... -> Halt episode with an arbitrary policy.
EpisodeResult run_policy_episode(HcClient& client,
                                 const std::function<int(const std::array<double, 4>&)>& policy,
                                 const EpisodeConfig& cfg);

// One episode under the brain's policy. Learn mode applies a q_update per
// transition (the terminal transition trains toward target = 0).
EpisodeResult run_episode(HcClient& client, Brain& brain, const EpisodeConfig& cfg,
                          EpisodeMode mode, double eps, std::mt19937_64& rng);

struct TrainOptions {
    int episodes = 500;
    std::uint64_t seed = 0;
    std::string brain_path;     // empty = no snapshots/final save
    std::ostream* metrics = nullptr; // CSV sink, header written by train()
    std::ostream* progress = nullptr; // optional human-readable per-episode log
    EpisodeConfig episode;
};

struct TrainResult {
    Brain brain;
    std::uint64_t total_steps = 0;
    std::uint64_t median_last50 = 0;
};

// Full training run: fresh brain, epsilon schedule, per-episode metrics
// rows, brain snapshots every hyper.probe episodes plus a final save.
TrainResult train(HcClient& client, const Hyperparams& hyper, const TrainOptions& opts);

struct BaselineResult {
    std::array<double, 4> theta{};
    std::uint64_t best_steps = 0;
};

// Random search over linear threshold policies a = (theta . s > 0):
// `tries` samples of theta ~ U[-1,1]^4, best episode length wins.
BaselineResult random_search_baseline(HcClient& client, int tries, std::uint64_t seed,
                                      const EpisodeConfig& cfg);

inline constexpr const char* kMetricsHeader = "episode,steps,reward,epsilon,eta";

} // namespace hcsim
