#include "hcsim/rl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "hcsim/errors.hpp"

namespace hcsim {

using nlohmann::json;

void Hyperparams::validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw DomainError("gamma must lie in (0, 1]");
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw DomainError("alpha must lie in (0, 1]");
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
        throw DomainError("epsilon must lie in [0, 1]");
    if (rbf_gamma_min > rbf_gamma_max)
        throw DomainError("rbf_gamma_min must not exceed rbf_gamma_max");
    if (rbf_exemplars < 1 || rbf_gamma_count < 1)
        throw DomainError("RBF feature counts must be at least 1");
    if (alpha_decay < 0.0 || epsilon_decay_t < 0.0)
        throw DomainError("decay exponents must be nonnegative");
    if (epsilon_decay_m <= 0.0)
        throw DomainError("epsilon_decay_m must be positive");
    if (l2_reg < 0.0 || grad_clip < 0.0 || epsilon_hold_episodes < 0 ||
        epsilon_halflife < 0.0)
        throw DomainError("regularization/schedule knobs must be nonnegative");
}

FeatureMap build_feature_map(const Hyperparams& hyper, std::uint64_t seed) {
    hyper.validate();
    FeatureMap map;
    map.seed = seed;
    map.exemplars = hyper.rbf_exemplars;

    const int count = hyper.rbf_gamma_count;
    map.widths.resize(count);
    for (int i = 0; i < count; ++i) {
        map.widths[i] = count == 1
                            ? hyper.rbf_gamma_min
                            : hyper.rbf_gamma_min + (hyper.rbf_gamma_max - hyper.rbf_gamma_min) *
                                                        static_cast<double>(i) / (count - 1);
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
    map.frequencies.reserve(static_cast<std::size_t>(count) * map.exemplars * 4);
    map.phases.reserve(static_cast<std::size_t>(count) * map.exemplars);
    for (double width : map.widths) {
        // cos(w.s + b) features approximate exp(-width*||x-y||^2) when the
        // frequencies are drawn with per-coordinate variance 2*width.
        std::normal_distribution<double> freq(0.0, std::sqrt(2.0 * width));
        for (int e = 0; e < map.exemplars; ++e)
            for (int d = 0; d < 4; ++d)
                map.frequencies.push_back(freq(rng));
        for (int e = 0; e < map.exemplars; ++e)
            map.phases.push_back(phase(rng));
    }
    return map;
}

std::vector<double> FeatureMap::transform(const std::array<double, 4>& s) const {
    for (double v : s)
        if (!std::isfinite(v))
            throw DomainError("feature transform: non-finite state component");

    const std::size_t n = phases.size();
    std::vector<double> out(n);
    const double scale = std::sqrt(2.0 / exemplars);
    for (std::size_t i = 0; i < n; ++i) {
        const double* w = &frequencies[i * 4];
        const double arg = w[0] * s[0] + w[1] * s[1] + w[2] * s[2] + w[3] * s[3] + phases[i];
        out[i] = scale * std::cos(arg);
    }
    return out;
}

double OnlineRegressor::predict(const std::vector<double>& features) const {
    if (features.size() != weights.size())
        throw UsageError("regressor: feature dimension mismatch");
    double acc = intercept;
    for (std::size_t i = 0; i < features.size(); ++i)
        acc += weights[i] * features[i];
    return acc;
}

double OnlineRegressor::next_eta() const {
    return alpha * std::pow(static_cast<double>(t + 1), -alpha_decay);
}

void OnlineRegressor::partial_fit(const std::vector<double>& features, double target) {
    ++t;
    const double eta = alpha * std::pow(static_cast<double>(t), -alpha_decay);
    double err = predict(features) - target;
    if (grad_clip > 0.0)
        err = std::clamp(err, -grad_clip, grad_clip);
    const double decay = 1.0 - eta * l2_reg; // weights only, intercept undecayed
    for (std::size_t i = 0; i < weights.size(); ++i)
        weights[i] = weights[i] * decay - eta * err * features[i];
    intercept -= eta * err;
}

Brain make_brain(const Hyperparams& hyper, std::uint64_t seed) {
    Brain brain;
    brain.hyper = hyper;
    brain.map = build_feature_map(hyper, seed);
    for (OnlineRegressor& reg : brain.regressors) {
        reg.weights.assign(brain.map.dim(), 0.0);
        reg.alpha = hyper.alpha;
        reg.alpha_decay = hyper.alpha_decay;
        reg.l2_reg = hyper.l2_reg;
        reg.grad_clip = hyper.grad_clip;
    }
    return brain;
}

double predict_q(const Brain& brain, const std::array<double, 4>& s, int action) {
    if (action < 0 || action >= Brain::kNumActions)
        throw UsageError("action out of range");
    return brain.regressors[action].predict(brain.map.transform(s));
}

void q_update(Brain& brain, const std::array<double, 4>& s, int action, double reward,
              const std::array<double, 4>& s_next, bool terminal) {
    double target = reward;
    if (!terminal) {
        const std::vector<double> f_next = brain.map.transform(s_next);
        double best = brain.regressors[0].predict(f_next);
        for (int a = 1; a < Brain::kNumActions; ++a)
            best = std::max(best, brain.regressors[a].predict(f_next));
        target += brain.hyper.gamma * best;
    }
    if (action < 0 || action >= Brain::kNumActions)
        throw UsageError("action out of range");
    brain.regressors[action].partial_fit(brain.map.transform(s), target);
}

int choose_action(const Brain& brain, const std::array<double, 4>& s, double eps,
                  std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) < eps)
        return static_cast<int>(rng() & 1u);
    const std::vector<double> f = brain.map.transform(s);
    const double q0 = brain.regressors[0].predict(f);
    const double q1 = brain.regressors[1].predict(f);
    return q1 > q0 ? 1 : 0;
}

double epsilon_schedule(const Hyperparams& hyper, std::uint64_t k) {
    if (hyper.epsilon_halflife > 0.0) {
        const auto hold = static_cast<std::uint64_t>(hyper.epsilon_hold_episodes);
        if (k <= hold)
            return hyper.epsilon;
        return hyper.epsilon *
               std::pow(2.0, -static_cast<double>(k - hold) / hyper.epsilon_halflife);
    }
    return hyper.epsilon *
           std::pow(1.0 + static_cast<double>(k) / hyper.epsilon_decay_m,
                    -hyper.epsilon_decay_t);
}

namespace {

json hyper_to_json(const Hyperparams& h) {
    return json{{"gamma", h.gamma},
                {"alpha", h.alpha},
                {"alpha_decay", h.alpha_decay},
                {"epsilon", h.epsilon},
                {"epsilon_decay_t", h.epsilon_decay_t},
                {"epsilon_decay_m", h.epsilon_decay_m},
                {"rbf_exemplars", h.rbf_exemplars},
                {"rbf_gamma_count", h.rbf_gamma_count},
                {"rbf_gamma_min", h.rbf_gamma_min},
                {"rbf_gamma_max", h.rbf_gamma_max},
                {"impulse_ms", h.impulse_ms},
                {"probe", h.probe},
                {"reward_per_step", h.reward_per_step},
                {"l2_reg", h.l2_reg},
                {"grad_clip", h.grad_clip},
                {"epsilon_hold_episodes", h.epsilon_hold_episodes},
                {"epsilon_halflife", h.epsilon_halflife},
                {"max_steps", h.max_steps}};
}

Hyperparams hyper_from_json(const json& j) {
    Hyperparams h;
    j.at("gamma").get_to(h.gamma);
    j.at("alpha").get_to(h.alpha);
    j.at("alpha_decay").get_to(h.alpha_decay);
    j.at("epsilon").get_to(h.epsilon);
    j.at("epsilon_decay_t").get_to(h.epsilon_decay_t);
    j.at("epsilon_decay_m").get_to(h.epsilon_decay_m);
    j.at("rbf_exemplars").get_to(h.rbf_exemplars);
    j.at("rbf_gamma_count").get_to(h.rbf_gamma_count);
    j.at("rbf_gamma_min").get_to(h.rbf_gamma_min);
    j.at("rbf_gamma_max").get_to(h.rbf_gamma_max);
    j.at("impulse_ms").get_to(h.impulse_ms);
    j.at("probe").get_to(h.probe);
    j.at("reward_per_step").get_to(h.reward_per_step);
    j.at("l2_reg").get_to(h.l2_reg);
    j.at("grad_clip").get_to(h.grad_clip);
    j.at("epsilon_hold_episodes").get_to(h.epsilon_hold_episodes);
    j.at("epsilon_halflife").get_to(h.epsilon_halflife);
    j.at("max_steps").get_to(h.max_steps);
    return h;
}

json regressor_to_json(const OnlineRegressor& r) {
    return json{{"intercept", r.intercept},
                {"weights", r.weights},
                {"t", r.t},
                {"alpha", r.alpha},
                {"alpha_decay", r.alpha_decay},
                {"l2_reg", r.l2_reg},
                {"grad_clip", r.grad_clip}};
}

OnlineRegressor regressor_from_json(const json& j) {
    OnlineRegressor r;
    j.at("intercept").get_to(r.intercept);
    j.at("weights").get_to(r.weights);
    j.at("t").get_to(r.t);
    j.at("alpha").get_to(r.alpha);
    j.at("alpha_decay").get_to(r.alpha_decay);
    j.at("l2_reg").get_to(r.l2_reg);
    j.at("grad_clip").get_to(r.grad_clip);
    return r;
}

} // namespace

void save_brain(const Brain& brain, const std::string& path) {
    json j;
    j["format"] = "hcsim-brain";
    j["version"] = Brain::kFormatVersion;
    j["episodes_trained"] = brain.episodes_trained;
    j["hyperparams"] = hyper_to_json(brain.hyper);
    j["feature_map"] = json{{"seed", brain.map.seed},
                            {"exemplars", brain.map.exemplars},
                            {"widths", brain.map.widths},
                            {"frequencies", brain.map.frequencies},
                            {"phases", brain.map.phases}};
    json regs = json::array();
    for (const OnlineRegressor& r : brain.regressors)
        regs.push_back(regressor_to_json(r));
    j["regressors"] = std::move(regs);

    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw BrainIoError("cannot open '" + path + "' for writing");
    out << j.dump() << "\n";
    if (!out)
        throw BrainIoError("write failed for '" + path + "'");
}

Brain load_brain(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw BrainIoError("cannot open brain file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw BrainIoError("corrupt brain file '" + path + "': " + e.what());
    }

    try {
        if (j.at("format").get<std::string>() != "hcsim-brain")
            throw BrainIoError("'" + path + "' is not a brain file");
        if (j.at("version").get<int>() != Brain::kFormatVersion)
            throw BrainIoError("unsupported brain format version in '" + path + "'");

        Brain brain;
        j.at("episodes_trained").get_to(brain.episodes_trained);
        brain.hyper = hyper_from_json(j.at("hyperparams"));

        const json& m = j.at("feature_map");
        m.at("seed").get_to(brain.map.seed);
        m.at("exemplars").get_to(brain.map.exemplars);
        m.at("widths").get_to(brain.map.widths);
        m.at("frequencies").get_to(brain.map.frequencies);
        m.at("phases").get_to(brain.map.phases);

        const json& regs = j.at("regressors");
        if (regs.size() != Brain::kNumActions)
            throw BrainIoError("brain file must hold exactly 2 regressors");
        for (int a = 0; a < Brain::kNumActions; ++a)
            brain.regressors[a] = regressor_from_json(regs[a]);

        const auto dim = static_cast<std::size_t>(brain.map.dim());
        if (brain.map.phases.size() != dim || brain.map.frequencies.size() != dim * 4 ||
            brain.regressors[0].weights.size() != dim ||
            brain.regressors[1].weights.size() != dim)
            throw BrainIoError("inconsistent dimensions in brain file '" + path + "'");
        return brain;
    } catch (const json::exception& e) {
        throw BrainIoError("corrupt brain file '" + path + "': " + e.what());
    }
}

} // namespace hcsim
