#include "hcsim/agent.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "hcsim/errors.hpp"

namespace hcsim {

namespace {

bool out_of_bounds(const std::array<double, 4>& s, const EpisodeConfig& cfg) {
    return std::abs(s[0]) > cfg.x_limit || std::abs(s[2]) > cfg.phi_limit;
}

} // namespace

EpisodeResult run_policy_episode(HcClient& client,
                                 const std::function<int(const std::array<double, 4>&)>& policy,
                                 const EpisodeConfig& cfg) {
    EpisodeResult result;
    client.ic();
    client.op();
    std::array<double, 4> s = client.get_sim_state();
    if (out_of_bounds(s, cfg)) {
        client.halt();
        result.terminated = true;
        return result;
    }
    while (true) {
        if (cfg.max_steps != 0 && result.steps >= cfg.max_steps)
            break;
        const int action = policy(s);
        client.influence(action, cfg.impulse_ms);
        const std::array<double, 4> s_next = client.get_sim_state();
        if (out_of_bounds(s_next, cfg)) {
            result.terminated = true;
            break;
        }
        ++result.steps;
        result.reward += cfg.reward_per_step;
        s = s_next;
    }
    client.halt();
    return result;
}

EpisodeResult run_episode(HcClient& client, Brain& brain, const EpisodeConfig& cfg,
                          EpisodeMode mode, double eps, std::mt19937_64& rng) {
    EpisodeResult result;
    client.ic();
    client.op();
    std::array<double, 4> s = client.get_sim_state();
    if (out_of_bounds(s, cfg)) {
        client.halt();
        result.terminated = true;
        return result;
    }
    while (true) {
        if (cfg.max_steps != 0 && result.steps >= cfg.max_steps)
            break;
        const int action = choose_action(brain, s, eps, rng);
        client.influence(action, cfg.impulse_ms);
        const std::array<double, 4> s_next = client.get_sim_state();
        const bool terminal = out_of_bounds(s_next, cfg);
        const double r = terminal ? 0.0 : cfg.reward_per_step;
        if (mode == EpisodeMode::Learn)
            q_update(brain, s, action, r, s_next, terminal);
        if (terminal) {
            result.terminated = true;
            break;
        }
        ++result.steps;
        result.reward += r;
        s = s_next;
    }
    client.halt();
    return result;
}

TrainResult train(HcClient& client, const Hyperparams& hyper, const TrainOptions& opts) {
    hyper.validate();
    if (opts.episodes < 1)
        throw UsageError("train: episodes must be at least 1");

    TrainResult result;
    result.brain = make_brain(hyper, opts.seed);
    Brain& brain = result.brain;

    // Exploration draws come from their own stream, decoupled from the
    // feature-map construction stream.
    std::mt19937_64 explore_rng(opts.seed ^ 0xa5c1e0u);

    if (client.dialect() == Dialect::Extension)
        client.seed(opts.seed);
    client.define_default_group();

    if (opts.metrics)
        *opts.metrics << kMetricsHeader << "\n";

    std::vector<std::uint64_t> steps_history;
    steps_history.reserve(static_cast<std::size_t>(opts.episodes));

    for (int k = 0; k < opts.episodes; ++k) {
        const double eps = epsilon_schedule(hyper, static_cast<std::uint64_t>(k));
        const EpisodeResult ep =
            run_episode(client, brain, opts.episode, EpisodeMode::Learn, eps, explore_rng);
        ++brain.episodes_trained;
        result.total_steps += ep.steps;
        steps_history.push_back(ep.steps);

        if (opts.metrics) {
            char row[160];
            std::snprintf(row, sizeof(row), "%d,%llu,%.17g,%.17g,%.17g", k + 1,
                          static_cast<unsigned long long>(ep.steps), ep.reward, eps,
                          brain.regressors[0].next_eta());
            *opts.metrics << row << "\n";
            opts.metrics->flush();
        }
        if (opts.progress) {
            char line[160];
            std::snprintf(line, sizeof(line), "episode %4d  steps %6llu  eps %.4f", k + 1,
                          static_cast<unsigned long long>(ep.steps), eps);
            *opts.progress << line << "\n";
            opts.progress->flush();
        }
        if (!opts.brain_path.empty() && hyper.probe > 0 && (k + 1) % hyper.probe == 0 &&
            k + 1 < opts.episodes)
            save_brain(brain, opts.brain_path + ".ep" + std::to_string(k + 1));
    }

    if (!opts.brain_path.empty())
        save_brain(brain, opts.brain_path);

    const std::size_t window = std::min<std::size_t>(50, steps_history.size());
    std::vector<std::uint64_t> tail(steps_history.end() - window, steps_history.end());
    std::sort(tail.begin(), tail.end());
    result.median_last50 = tail[tail.size() / 2];
    return result;
}

BaselineResult random_search_baseline(HcClient& client, int tries, std::uint64_t seed,
                                      const EpisodeConfig& cfg) {
    if (tries < 1)
        throw UsageError("baseline: tries must be at least 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    BaselineResult best;
    bool have_best = false;
    for (int i = 0; i < tries; ++i) {
        std::array<double, 4> theta;
        for (double& c : theta)
            c = unit(rng);
        const auto policy = [&theta](const std::array<double, 4>& s) {
            const double dot =
                theta[0] * s[0] + theta[1] * s[1] + theta[2] * s[2] + theta[3] * s[3];
            return dot > 0.0 ? 1 : 0;
        };
        const EpisodeResult ep = run_policy_episode(client, policy, cfg);
        if (!have_best || ep.steps > best.best_steps) {
            best.theta = theta;
            best.best_steps = ep.steps;
            have_best = true;
        }
    }
    return best;
}

} // namespace hcsim
