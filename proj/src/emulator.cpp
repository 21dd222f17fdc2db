#include "hcsim/emulator.hpp"

#include <algorithm>
#include <cmath>

#include "hcsim/errors.hpp"

namespace hcsim {

void EmulatorConfig::validate() const {
    plant.validate();
    if (!(dt > 0.0))
        throw DomainError("emulator: dt must be positive");
    if (!(accel_amplitude >= 0.0))
        throw DomainError("emulator: accel_amplitude must be nonnegative");
    if (quantize_decimals < 0)
        throw DomainError("emulator: quantize_decimals must be nonnegative");
    if (!(speed > 0.0))
        throw DomainError("emulator: speed factor must be positive");
    if (!(readout_scale.x > 0.0) || !(readout_scale.x_dot > 0.0) ||
        !(readout_scale.phi > 0.0) || !(readout_scale.phi_dot > 0.0))
        throw DomainError("emulator: readout scales must be positive");
}

ElementAddressMap ElementAddressMap::defaults() {
    ElementAddressMap map;
    map.entries_ = {
        {"0223", Readable::X},
        {"0222", Readable::XDot},
        {"0161", Readable::Phi},
        {"0160", Readable::PhiDot},
    };
    return map;
}

Readable ElementAddressMap::lookup(const std::string& address) const {
    for (const auto& [addr, q] : entries_)
        if (addr == address)
            return q;
    throw AddressError("unknown element address: " + address);
}

bool ElementAddressMap::contains(const std::string& address) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const auto& e) { return e.first == address; });
}

double quantize(double value, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::round(value * scale) / scale;
}

AnalogEmulator::AnalogEmulator(EmulatorConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    reseed(cfg_.seed);
    set_mode(MachineMode::InitialCondition);
}

void AnalogEmulator::reseed(std::uint64_t seed) {
    // Two independent streams so readout noise does not perturb the
    // episode initial conditions.
    init_rng_.seed(seed);
    noise_rng_.seed(seed ^ 0x9e3779b97f4a7c15ull);
}

void AnalogEmulator::set_mode(MachineMode mode) {
    catch_up();
    switch (mode) {
    case MachineMode::InitialCondition:
        state_ = initial_state(cfg_.phi0_max, init_rng_);
        disturb_accel_ = 0.0;
        disturb_until_ = 0.0;
        break;
    case MachineMode::Operate:
        wall_anchor_ = std::chrono::steady_clock::now();
        wall_backlog_ = 0.0;
        break;
    case MachineMode::Halt:
        break;
    }
    mode_ = mode;
}

void AnalogEmulator::reset() {
    group_.reset();
    douts_ = DigitalOutputs{};
    set_mode(MachineMode::InitialCondition);
}

void AnalogEmulator::set_digital_output(int channel, bool level) {
    catch_up();
    switch (channel) {
    case 0:
        douts_.direction = level;
        break;
    case 1:
        douts_.impulse = level;
        break;
    default:
        throw ProtocolError("digital output channel must be 0 or 1");
    }
}

double AnalogEmulator::current_input() const {
    double u = 0.0;
    if (mode_ == MachineMode::Operate) {
        if (douts_.impulse)
            u += douts_.direction ? cfg_.accel_amplitude : -cfg_.accel_amplitude;
        if (state_.t < disturb_until_)
            u += disturb_accel_;
    }
    return u;
}

void AnalogEmulator::integrate_steps(std::uint64_t n) {
    for (std::uint64_t i = 0; i < n; ++i)
        state_ = step(state_, current_input(), cfg_.dt, cfg_.plant);
}

void AnalogEmulator::catch_up() {
    if (cfg_.clock != ClockMode::Realtime || mode_ != MachineMode::Operate)
        return;
    const auto now = std::chrono::steady_clock::now();
    double elapsed = std::chrono::duration<double>(now - wall_anchor_).count() * cfg_.speed;
    wall_anchor_ = now;
    if (cfg_.realtime_jitter_sigma > 0.0) {
        std::normal_distribution<double> jitter(0.0, cfg_.realtime_jitter_sigma);
        elapsed = std::max(0.0, elapsed + jitter(noise_rng_));
    }
    wall_backlog_ += elapsed;
    const auto steps = static_cast<std::uint64_t>(wall_backlog_ / cfg_.dt);
    wall_backlog_ -= static_cast<double>(steps) * cfg_.dt;
    integrate_steps(steps);
}

double AnalogEmulator::raw_value(Readable q) const {
    switch (q) {
    case Readable::X:
        return state_.x / cfg_.readout_scale.x;
    case Readable::XDot:
        return state_.x_dot / cfg_.readout_scale.x_dot;
    case Readable::Phi:
        return state_.phi / cfg_.readout_scale.phi;
    case Readable::PhiDot:
        return state_.phi_dot / cfg_.readout_scale.phi_dot;
    }
    throw AddressError("unreachable readable");
}

double AnalogEmulator::read_element(const std::string& address) {
    catch_up();
    const Readable q = addresses_.lookup(address);
    double v = raw_value(q);
    if (cfg_.noise_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, cfg_.noise_sigma);
        v += noise(noise_rng_);
    }
    if (cfg_.clamp_machine_units)
        v = std::clamp(v, -1.0, 1.0);
    return quantize(v, cfg_.quantize_decimals);
}

void AnalogEmulator::define_readout_group(const std::vector<std::string>& addresses) {
    for (const auto& a : addresses)
        if (!addresses_.contains(a))
            throw AddressError("unknown element address: " + a);
    group_ = addresses;
}

std::vector<double> AnalogEmulator::fetch_readout_group() {
    catch_up();
    if (!group_)
        throw UsageError("no readout group defined");
    // One state snapshot for the whole group; noise is drawn per element.
    const SimState snapshot = state_;
    std::vector<double> out;
    out.reserve(group_->size());
    for (const auto& addr : *group_) {
        const Readable q = addresses_.lookup(addr);
        double v = 0.0;
        switch (q) {
        case Readable::X:
            v = snapshot.x / cfg_.readout_scale.x;
            break;
        case Readable::XDot:
            v = snapshot.x_dot / cfg_.readout_scale.x_dot;
            break;
        case Readable::Phi:
            v = snapshot.phi / cfg_.readout_scale.phi;
            break;
        case Readable::PhiDot:
            v = snapshot.phi_dot / cfg_.readout_scale.phi_dot;
            break;
        }
        if (cfg_.noise_sigma > 0.0) {
            std::normal_distribution<double> noise(0.0, cfg_.noise_sigma);
            v += noise(noise_rng_);
        }
        if (cfg_.clamp_machine_units)
            v = std::clamp(v, -1.0, 1.0);
        out.push_back(quantize(v, cfg_.quantize_decimals));
    }
    return out;
}

void AnalogEmulator::advance_time(double duration_s) {
    if (cfg_.clock != ClockMode::Virtual)
        throw UsageError("advance_time requires the virtual clock");
    if (duration_s < 0.0)
        throw UsageError("advance_time: negative duration");
    if (mode_ != MachineMode::Operate || duration_s == 0.0)
        return;
    const auto steps = static_cast<std::uint64_t>(std::ceil(duration_s / cfg_.dt - 1e-12));
    integrate_steps(steps);
}

void AnalogEmulator::inject_disturbance(double accel, double duration_s) {
    catch_up();
    if (mode_ != MachineMode::Operate)
        throw UsageError("disturbance requires Operate mode");
    if (duration_s < 0.0)
        throw UsageError("disturbance: negative duration");
    disturb_accel_ = accel;
    disturb_until_ = state_.t + duration_s;
}

} // namespace hcsim
