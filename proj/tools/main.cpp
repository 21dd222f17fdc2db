#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hcsim/agent.hpp"
#include "hcsim/client.hpp"
#include "hcsim/errors.hpp"
#include "hcsim/net.hpp"

namespace {

using namespace hcsim;

constexpr const char* kListenEnvVar = "HCSIM_LISTEN";
constexpr const char* kDefaultListen = "127.0.0.1:5555";

std::string default_listen_address() {
    if (const char* env = std::getenv(kListenEnvVar))
        return env;
    return kDefaultListen;
}

// Readout divisors that map the plant signals onto the analog machine's
// [-1, 1] unit range; the terminal bounds become |x| > 1, |phi| > 1 in
// readout units.
ReadoutScale machine_unit_scale() {
    return ReadoutScale{1.0, 2.0, 0.5, 2.0};
}

struct DisturbSpec {
    double accel = 0.0;
    std::uint64_t ms = 0;
    double at_s = 0.0;
};

// "<mag>:<ms>@<s>", e.g. "5.0:100@2.0".
DisturbSpec parse_disturb(const std::string& text) {
    DisturbSpec spec;
    const auto colon = text.find(':');
    const auto at = text.find('@');
    if (colon == std::string::npos || at == std::string::npos || at < colon)
        throw UsageError("disturbance must be <mag>:<ms>@<s>, got '" + text + "'");
    try {
        std::size_t used = 0;
        spec.accel = std::stod(text.substr(0, colon), &used);
        if (used != colon)
            throw std::invalid_argument(text);
        const std::string ms_part = text.substr(colon + 1, at - colon - 1);
        spec.ms = std::stoull(ms_part, &used);
        if (used != ms_part.size())
            throw std::invalid_argument(text);
        const std::string at_part = text.substr(at + 1);
        spec.at_s = std::stod(at_part, &used);
        if (used != at_part.size())
            throw std::invalid_argument(text);
    } catch (const std::exception&) {
        throw UsageError("disturbance must be <mag>:<ms>@<s>, got '" + text + "'");
    }
    if (spec.at_s < 0.0)
        throw UsageError("disturbance time must be nonnegative");
    return spec;
}

struct EmulatorFlags {
    bool virtual_time = false;
    double speed = 1.0;
    double dt = 1e-3;
    double accel_amplitude = 10.0;
    double noise_sigma = 0.0;
    double phi0_max = kDefaultPhi0Max;
    int quantize_decimals = 4;
    std::uint64_t seed = 0;
    bool raw_units = false; // keep identity readout scaling
};

void add_emulator_flags(CLI::App& cmd, EmulatorFlags& flags) {
    cmd.add_flag("--virtual-time", flags.virtual_time,
                 "deterministic clock: time advances only on wait commands");
    cmd.add_option("--speed", flags.speed, "realtime pacing factor")->capture_default_str();
    cmd.add_option("--dt", flags.dt, "integration step [s]")->capture_default_str();
    cmd.add_option("--accel-amplitude", flags.accel_amplitude,
                   "cart acceleration while the impulse line is set")
        ->capture_default_str();
    cmd.add_option("--noise-sigma", flags.noise_sigma, "Gaussian readout noise std")
        ->capture_default_str();
    cmd.add_option("--phi0-max", flags.phi0_max, "initial tilt bound [rad]")
        ->capture_default_str();
    cmd.add_option("--quantize", flags.quantize_decimals, "readout decimal places")
        ->capture_default_str();
    cmd.add_option("--seed", flags.seed, "seed for tilt and noise streams")
        ->capture_default_str();
}

EmulatorConfig make_emulator_config(const EmulatorFlags& flags, bool machine_units) {
    EmulatorConfig cfg;
    cfg.clock = flags.virtual_time ? ClockMode::Virtual : ClockMode::Realtime;
    cfg.speed = flags.speed;
    cfg.dt = flags.dt;
    cfg.accel_amplitude = flags.accel_amplitude;
    cfg.noise_sigma = flags.noise_sigma;
    cfg.phi0_max = flags.phi0_max;
    cfg.quantize_decimals = flags.quantize_decimals;
    cfg.seed = flags.seed;
    if (machine_units && !flags.raw_units)
        cfg.readout_scale = machine_unit_scale();
    cfg.validate();
    return cfg;
}

EpisodeConfig make_episode_config(bool machine_units, const EmulatorFlags& flags) {
    EpisodeConfig ep;
    if (machine_units && !flags.raw_units) {
        ep.x_limit = 1.0;   // |x| > 1 m in units of the track half-length
        ep.phi_limit = 1.0; // |phi| > 0.5 rad scaled onto +-1
    }
    return ep;
}

// Owns the connection used by the agent commands: in-process by default,
// TCP when --connect is given.
struct AgentLink {
    std::unique_ptr<Connection> conn;
    std::unique_ptr<HcClient> client;
};

AgentLink make_agent_link(const std::string& connect_address, const EmulatorFlags& flags,
                          bool machine_units) {
    AgentLink link;
    if (connect_address.empty()) {
        link.conn = std::make_unique<InProcessConnection>(
            make_emulator_config(flags, machine_units), Dialect::Extension);
    } else {
        link.conn = std::make_unique<TcpConnection>(connect_address);
    }
    link.client = std::make_unique<HcClient>(*link.conn, Dialect::Extension);
    return link;
}

int cmd_emulate(const EmulatorFlags& flags, bool machine_units, bool use_stdio,
                const std::string& listen, bool strict) {
    AnalogEmulator machine(make_emulator_config(flags, machine_units));
    const Dialect dialect = strict ? Dialect::Strict : Dialect::Extension;
    if (use_stdio)
        serve_stdio(machine, dialect);
    else
        serve_tcp(listen, machine, dialect);
    return 0;
}

int cmd_train(const EmulatorFlags& flags, bool machine_units, const std::string& connect,
              Hyperparams hyper, int episodes, std::uint64_t seed,
              const std::string& brain_path, const std::string& metrics_path, bool quiet) {
    AgentLink link = make_agent_link(connect, flags, machine_units);

    std::ofstream metrics(metrics_path, std::ios::trunc);
    if (!metrics)
        throw UsageError("cannot open metrics file '" + metrics_path + "'");

    TrainOptions opts;
    opts.episodes = episodes;
    opts.seed = seed;
    opts.brain_path = brain_path;
    opts.metrics = &metrics;
    opts.progress = quiet ? nullptr : &std::cerr;
    opts.episode = make_episode_config(machine_units, flags);
    opts.episode.impulse_ms = hyper.impulse_ms;
    opts.episode.reward_per_step = hyper.reward_per_step;
    opts.episode.max_steps = hyper.max_steps;

    const TrainResult result = train(*link.client, hyper, opts);
    std::printf("trained %d episodes, median steps over last 50: %llu\n", episodes,
                static_cast<unsigned long long>(result.median_last50));
    return 0;
}

struct ThetaPolicy {
    std::array<double, 4> theta{};
    int operator()(const std::array<double, 4>& s) const {
        return theta[0] * s[0] + theta[1] * s[1] + theta[2] * s[2] + theta[3] * s[3] > 0.0
                   ? 1
                   : 0;
    }
};

std::array<double, 4> load_theta(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw BrainIoError("cannot open theta file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
        if (j.at("format").get<std::string>() != "hcsim-theta")
            throw BrainIoError("'" + path + "' is not a theta file");
        const auto v = j.at("theta").get<std::vector<double>>();
        if (v.size() != 4)
            throw BrainIoError("theta file must hold 4 coefficients");
        return {v[0], v[1], v[2], v[3]};
    } catch (const nlohmann::json::exception& e) {
        throw BrainIoError("corrupt theta file '" + path + "': " + e.what());
    }
}

void save_theta(const std::array<double, 4>& theta, const std::string& path) {
    nlohmann::json j;
    j["format"] = "hcsim-theta";
    j["theta"] = std::vector<double>(theta.begin(), theta.end());
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw BrainIoError("cannot open '" + path + "' for writing");
    out << j.dump() << "\n";
}

// One exploit episode with optional timed disturbance; time is counted as
// steps * impulse duration.
EpisodeResult run_exploit_episode(HcClient& client,
                                  const std::function<int(const std::array<double, 4>&)>& policy,
                                  const EpisodeConfig& cfg,
                                  const std::optional<DisturbSpec>& disturb) {
    EpisodeResult result;
    client.ic();
    client.op();
    std::array<double, 4> s = client.get_sim_state();
    if (std::abs(s[0]) > cfg.x_limit || std::abs(s[2]) > cfg.phi_limit) {
        client.halt();
        result.terminated = true;
        return result;
    }
    bool disturb_pending = disturb.has_value();
    while (true) {
        if (cfg.max_steps != 0 && result.steps >= cfg.max_steps)
            break;
        const double t = static_cast<double>(result.steps) * cfg.impulse_ms / 1000.0;
        if (disturb_pending && t >= disturb->at_s) {
            client.disturb(disturb->accel, disturb->ms);
            std::printf("disturbance %.3g m/s^2 for %llu ms injected at t=%.3f s\n",
                        disturb->accel, static_cast<unsigned long long>(disturb->ms), t);
            disturb_pending = false;
        }
        client.influence(policy(s), cfg.impulse_ms);
        const std::array<double, 4> s_next = client.get_sim_state();
        if (std::abs(s_next[0]) > cfg.x_limit || std::abs(s_next[2]) > cfg.phi_limit) {
            result.terminated = true;
            break;
        }
        ++result.steps;
        s = s_next;
    }
    client.halt();
    return result;
}

int cmd_run(const EmulatorFlags& flags, bool machine_units, const std::string& connect,
            const std::string& brain_path, const std::string& theta_path, int episodes,
            std::uint64_t max_steps, const std::string& disturb_text) {
    std::optional<Brain> brain;
    ThetaPolicy theta_policy;
    if (!theta_path.empty())
        theta_policy.theta = load_theta(theta_path);
    else
        brain = load_brain(brain_path);

    std::optional<DisturbSpec> disturb;
    if (!disturb_text.empty())
        disturb = parse_disturb(disturb_text);

    AgentLink link = make_agent_link(connect, flags, machine_units);
    link.client->seed(flags.seed);
    link.client->define_default_group();

    EpisodeConfig ep = make_episode_config(machine_units, flags);
    ep.max_steps = max_steps;
    if (brain)
        ep.impulse_ms = brain->hyper.impulse_ms;

    std::function<int(const std::array<double, 4>&)> policy;
    if (brain) {
        policy = [&brain](const std::array<double, 4>& s) {
            return predict_q(*brain, s, 1) > predict_q(*brain, s, 0) ? 1 : 0;
        };
    } else {
        policy = theta_policy;
    }

    for (int k = 0; k < episodes; ++k) {
        const EpisodeResult result = run_exploit_episode(*link.client, policy, ep, disturb);
        std::printf("episode %d: %llu steps%s\n", k + 1,
                    static_cast<unsigned long long>(result.steps),
                    result.terminated ? "" : " (step cap reached)");
    }
    return 0;
}

int cmd_baseline(const EmulatorFlags& flags, bool machine_units, const std::string& connect,
                 int tries, std::uint64_t seed, std::uint64_t max_steps,
                 const std::string& save_path) {
    AgentLink link = make_agent_link(connect, flags, machine_units);
    link.client->seed(flags.seed);
    link.client->define_default_group();

    EpisodeConfig ep = make_episode_config(machine_units, flags);
    ep.max_steps = max_steps;

    const BaselineResult best = random_search_baseline(*link.client, tries, seed, ep);
    std::printf("best theta: [%.6f, %.6f, %.6f, %.6f]\n", best.theta[0], best.theta[1],
                best.theta[2], best.theta[3]);
    std::printf("best episode length: %llu steps%s\n",
                static_cast<unsigned long long>(best.best_steps),
                max_steps != 0 && best.best_steps >= max_steps ? " (step cap)" : "");
    if (!save_path.empty())
        save_theta(best.theta, save_path);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Analog pendulum machine emulator and Q-learning agent"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value config file; flags override it");

    EmulatorFlags flags;
    bool machine_units = true;

    // --- emulate ---
    auto* emulate = app.add_subcommand("emulate", "serve one protocol session");
    EmulatorFlags em_flags;
    std::string listen = default_listen_address();
    bool use_stdio = false;
    bool strict = false;
    bool em_machine_units = false;
    add_emulator_flags(*emulate, em_flags);
    emulate->add_option("--listen", listen, "TCP listen address host:port")
        ->capture_default_str();
    emulate->add_flag("--stdio", use_stdio, "serve over stdin/stdout instead of TCP");
    emulate->add_flag("--strict", strict, "disable the '!' extension commands");
    emulate->add_flag("--machine-units", em_machine_units,
                      "scale readouts onto the analog unit range [-1, 1]");
    emulate->add_flag("--raw-units", em_flags.raw_units,
                      "keep raw physical readout values");

    // --- train ---
    auto* train_cmd = app.add_subcommand("train", "train the Q-learning agent");
    Hyperparams hyper;
    // Training defaults beyond the core hyperparameters: the regressor
    // regularization and exploration schedule that make alpha=0.6 stable.
    hyper.l2_reg = 1e-4;
    hyper.grad_clip = 1e6;
    hyper.epsilon_hold_episodes = 400;
    hyper.epsilon_halflife = 25.0;
    hyper.max_steps = 2000;
    hyper.probe = 0;
    int episodes = 500;
    std::uint64_t train_seed = 0;
    std::string connect;
    std::string brain_path = "brain.json";
    std::string metrics_path = "metrics.csv";
    bool quiet = false;
    add_emulator_flags(*train_cmd, flags);
    train_cmd->add_option("--episodes", episodes, "training episodes")->capture_default_str();
    train_cmd->add_option("--train-seed", train_seed,
                          "agent seed (features + exploration); defaults to --seed");
    train_cmd->add_option("--connect", connect,
                          "host:port of a running emulator (default: in-process)");
    train_cmd->add_option("--brain", brain_path, "output brain file")->capture_default_str();
    train_cmd->add_option("--metrics", metrics_path, "output metrics CSV")
        ->capture_default_str();
    train_cmd->add_option("--probe", hyper.probe, "brain snapshot every N episodes");
    train_cmd->add_flag("--quiet", quiet, "suppress per-episode progress on stderr");
    train_cmd->add_flag("--raw-units", flags.raw_units, "keep raw physical readout values");
    train_cmd->add_option("--gamma", hyper.gamma, "discount factor")->capture_default_str();
    train_cmd->add_option("--alpha", hyper.alpha, "initial learning rate")
        ->capture_default_str();
    train_cmd->add_option("--alpha-decay", hyper.alpha_decay, "learning rate decay exponent")
        ->capture_default_str();
    train_cmd->add_option("--epsilon", hyper.epsilon, "initial exploration probability")
        ->capture_default_str();
    train_cmd->add_option("--eps-decay-t", hyper.epsilon_decay_t, "epsilon decay exponent")
        ->capture_default_str();
    train_cmd->add_option("--eps-decay-m", hyper.epsilon_decay_m, "epsilon decay scale")
        ->capture_default_str();
    train_cmd->add_option("--eps-hold", hyper.epsilon_hold_episodes,
                          "episodes before epsilon starts decaying")
        ->capture_default_str();
    train_cmd->add_option("--eps-halflife", hyper.epsilon_halflife,
                          "halve epsilon every N episodes after the hold (0 = power law)")
        ->capture_default_str();
    train_cmd->add_option("--exemplars", hyper.rbf_exemplars, "features per kernel width")
        ->capture_default_str();
    train_cmd->add_option("--gamma-count", hyper.rbf_gamma_count, "number of kernel widths")
        ->capture_default_str();
    train_cmd->add_option("--gamma-min", hyper.rbf_gamma_min, "smallest kernel width")
        ->capture_default_str();
    train_cmd->add_option("--gamma-max", hyper.rbf_gamma_max, "largest kernel width")
        ->capture_default_str();
    train_cmd->add_option("--impulse-ms", hyper.impulse_ms, "impulse duration [ms]")
        ->capture_default_str();
    train_cmd->add_option("--reward-per-step", hyper.reward_per_step,
                          "reward per surviving step")
        ->capture_default_str();
    train_cmd->add_option("--l2-reg", hyper.l2_reg, "regressor weight decay")
        ->capture_default_str();
    train_cmd->add_option("--grad-clip", hyper.grad_clip, "regressor error clamp (0 = off)")
        ->capture_default_str();
    train_cmd->add_option("--max-steps", hyper.max_steps, "episode step cap (0 = unlimited)")
        ->capture_default_str();

    // --- run ---
    auto* run_cmd = app.add_subcommand("run", "exploit episodes with a saved brain");
    EmulatorFlags run_flags;
    std::string run_connect;
    std::string run_brain = "brain.json";
    std::string run_theta;
    int run_episodes = 1;
    std::uint64_t run_max_steps = 0;
    std::string disturb_text;
    add_emulator_flags(*run_cmd, run_flags);
    run_cmd->add_option("--brain", run_brain, "brain file to load")->capture_default_str();
    run_cmd->add_option("--theta", run_theta,
                        "theta file from the baseline (overrides --brain)");
    run_cmd->add_option("--episodes", run_episodes, "episodes to run")->capture_default_str();
    run_cmd->add_option("--max-steps", run_max_steps, "episode step cap (0 = unlimited)");
    run_cmd->add_option("--connect", run_connect,
                        "host:port of a running emulator (default: in-process)");
    run_cmd->add_option("--disturb", disturb_text,
                        "inject <mag>:<ms>@<s>, e.g. 5.0:100@2.0");
    run_cmd->add_flag("--raw-units", run_flags.raw_units, "keep raw physical readout values");

    // --- baseline ---
    auto* base_cmd = app.add_subcommand("baseline", "random search over linear policies");
    EmulatorFlags base_flags;
    std::string base_connect;
    std::string base_save;
    int tries = 2000;
    std::uint64_t base_seed = 0;
    std::uint64_t base_max_steps = 2000;
    add_emulator_flags(*base_cmd, base_flags);
    base_cmd->add_option("--tries", tries, "number of random policies")->capture_default_str();
    base_cmd->add_option("--search-seed", base_seed,
                         "policy sampling seed; defaults to --seed");
    base_cmd->add_option("--max-steps", base_max_steps, "episode step cap (0 = unlimited)")
        ->capture_default_str();
    base_cmd->add_option("--save", base_save, "write the best theta to this file");
    base_cmd->add_option("--connect", base_connect,
                         "host:port of a running emulator (default: in-process)");
    base_cmd->add_flag("--raw-units", base_flags.raw_units,
                       "keep raw physical readout values");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2; // bad usage
    }

    try {
        if (emulate->parsed())
            return cmd_emulate(em_flags, em_machine_units, use_stdio, listen, strict);
        if (train_cmd->parsed()) {
            if (train_cmd->count("--train-seed") == 0)
                train_seed = flags.seed;
            return cmd_train(flags, machine_units, connect, hyper, episodes, train_seed,
                             brain_path, metrics_path, quiet);
        }
        if (run_cmd->parsed())
            return cmd_run(run_flags, machine_units, run_connect, run_brain, run_theta,
                           run_episodes, run_max_steps, disturb_text);
        if (base_cmd->parsed()) {
            if (base_cmd->count("--search-seed") == 0)
                base_seed = base_flags.seed;
            return cmd_baseline(base_flags, machine_units, base_connect, tries, base_seed,
                                base_max_steps, base_save);
        }
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const BrainIoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
