#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace hcsim {

struct Hyperparams {
    double gamma = 0.999;        // discount factor
    double alpha = 0.6;          // initial learning rate
    double alpha_decay = 0.1;    // step-size exponent: eta_t = alpha * t^-alpha_decay
    double epsilon = 0.5;        // initial exploration probability
    double epsilon_decay_t = 0.1;
    double epsilon_decay_m = 10.0;
    int rbf_exemplars = 250;     // features per kernel width
    int rbf_gamma_count = 10;    // number of kernel widths
    double rbf_gamma_min = 0.05;
    double rbf_gamma_max = 4.0;
    std::uint64_t impulse_ms = 20;
    int probe = 0;               // brain snapshot every `probe` episodes (0 = final only)
    double reward_per_step = 1.0;

    // Regularization knobs matching the reference stack's regressor defaults;
    // both off by default so the plain gradient step above holds exactly.
    double l2_reg = 0.0;    // per-update weight decay factor eta*l2_reg
    double grad_clip = 0.0; // clamp |prediction error| (0 = off)

    // Alternative exploration schedule: hold epsilon flat for
    // `epsilon_hold_episodes`, then halve it every `epsilon_halflife`
    // episodes. Active only when epsilon_halflife > 0; otherwise the
    // power-law schedule driven by epsilon_decay_t/m applies.
    int epsilon_hold_episodes = 0;
    double epsilon_halflife = 0.0;

    std::uint64_t max_steps = 0; // episode step cap (0 = unlimited)

    void validate() const;
};

// Random-Fourier approximation of a bank of RBF kernels: one projection
// block per kernel width, block j approximating exp(-width_j * ||x - y||^2).
struct FeatureMap {
    std::uint64_t seed = 0;
    int exemplars = 0;
    std::vector<double> widths;
    std::vector<double> frequencies; // widths.size() * exemplars rows of 4
    std::vector<double> phases;      // widths.size() * exemplars

    int dim() const { return static_cast<int>(widths.size()) * exemplars; }

    std::vector<double> transform(const std::array<double, 4>& s) const;
};

FeatureMap build_feature_map(const Hyperparams& hyper, std::uint64_t seed);

// Linear model fitted online by SGD on squared error with an
// inverse-scaling step size.
struct OnlineRegressor {
    double intercept = 0.0;
    std::vector<double> weights;
    std::uint64_t t = 0; // update count

    double alpha = 0.6;
    double alpha_decay = 0.1;
    double l2_reg = 0.0;
    double grad_clip = 0.0;

    double predict(const std::vector<double>& features) const;
    void partial_fit(const std::vector<double>& features, double target);

    // Step size the next partial_fit call will use.
    double next_eta() const;
};

struct Brain {
    static constexpr int kFormatVersion = 1;
    static constexpr int kNumActions = 2;

    FeatureMap map;
    std::array<OnlineRegressor, kNumActions> regressors;
    Hyperparams hyper;
    std::uint64_t episodes_trained = 0;
};

Brain make_brain(const Hyperparams& hyper, std::uint64_t seed);

double predict_q(const Brain& brain, const std::array<double, 4>& s, int action);

// One Q-learning step: fit regressor[a] toward r + gamma * max_a' Q(s',a'),
// or toward r alone when s' is terminal.
void q_update(Brain& brain, const std::array<double, 4>& s, int action, double reward,
              const std::array<double, 4>& s_next, bool terminal);

// Epsilon-greedy over the two actions; exact ties resolve to action 0.
int choose_action(const Brain& brain, const std::array<double, 4>& s, double eps,
                  std::mt19937_64& rng);

double epsilon_schedule(const Hyperparams& hyper, std::uint64_t episode_index);

void save_brain(const Brain& brain, const std::string& path);
Brain load_brain(const std::string& path);

} // namespace hcsim
