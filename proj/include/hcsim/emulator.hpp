#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hcsim/dynamics.hpp"

namespace hcsim {

enum class MachineMode { InitialCondition, Operate, Halt };

enum class ClockMode {
    Realtime, // wall-clock paced integration
    Virtual,  // time advances only through advance_time()
};

struct DigitalOutputs {
    bool direction = false; // D0
    bool impulse = false;   // D1: force applied while set
};

// Per-signal divisors applied to readouts. The analog patch panel presents
// every signal scaled to the machine-unit range [-1, 1]; identity scales
// reproduce raw physical values.
struct ReadoutScale {
    double x = 1.0;
    double x_dot = 1.0;
    double phi = 1.0;
    double phi_dot = 1.0;
};

struct EmulatorConfig {
    ClockMode clock = ClockMode::Realtime;
    double speed = 1.0;            // realtime pacing factor (2.0 = twice real speed)
    double dt = 1e-3;              // integration step [s]
    double accel_amplitude = 10.0; // |xdd| while the impulse output is set
    int quantize_decimals = 4;     // readout rounding (analog precision)
    double noise_sigma = 0.0;      // additive Gaussian readout noise std
    std::uint64_t seed = 0;
    PlantParams plant;
    double phi0_max = kDefaultPhi0Max; // initial tilt bound [rad]
    ReadoutScale readout_scale;
    bool clamp_machine_units = false; // clamp readouts to [-1, 1]
    double realtime_jitter_sigma = 0.0; // extra catch-up jitter [s], realtime only

    void validate() const;
};

// Quantity readable through a computing-element address.
enum class Readable { X, XDot, Phi, PhiDot };

// Address-string -> readable quantity. Unknown addresses throw AddressError.
class ElementAddressMap {
public:
    static ElementAddressMap defaults();

    Readable lookup(const std::string& address) const;
    bool contains(const std::string& address) const;

private:
    std::vector<std::pair<std::string, Readable>> entries_;
};

// Software stand-in for the Model-1 analog computer patched with the
// pendulum program, driven through the same machine modes and digital
// outputs as the real Hybrid Controller exposes.
class AnalogEmulator {
public:
    explicit AnalogEmulator(EmulatorConfig cfg);

    void set_mode(MachineMode mode);
    MachineMode mode() const { return mode_; }

    // Clears the readout group and digital outputs, re-enters IC.
    void reset();

    void set_digital_output(int channel, bool level);
    DigitalOutputs digital_outputs() const { return douts_; }

    double read_element(const std::string& address);

    void define_readout_group(const std::vector<std::string>& addresses);
    bool has_readout_group() const { return group_.has_value(); }
    std::vector<double> fetch_readout_group();

    // Virtual clock only: integrate ceil(duration/dt) steps in Operate.
    void advance_time(double duration_s);

    // Adds `accel` to the plant input for `duration_s` of simulation time.
    void inject_disturbance(double accel, double duration_s);

    // Reseed both the initial-tilt and the readout-noise streams.
    void reseed(std::uint64_t seed);

    // Realtime clock: integrate up to the current wall time. No-op for the
    // virtual clock or outside Operate.
    void catch_up();

    const SimState& state() const { return state_; }
    const EmulatorConfig& config() const { return cfg_; }

    // Plant input currently in effect (action impulse plus any disturbance).
    double current_input() const;

private:
    void integrate_steps(std::uint64_t n);
    double raw_value(Readable q) const;

    EmulatorConfig cfg_;
    ElementAddressMap addresses_ = ElementAddressMap::defaults();
    SimState state_;
    MachineMode mode_ = MachineMode::InitialCondition;
    DigitalOutputs douts_;
    std::optional<std::vector<std::string>> group_;
    double disturb_accel_ = 0.0;
    double disturb_until_ = 0.0; // simulation time
    std::mt19937_64 init_rng_;
    std::mt19937_64 noise_rng_;
    std::chrono::steady_clock::time_point wall_anchor_{};
    double wall_backlog_ = 0.0; // un-integrated fraction of a step [s]
};

// Round half away from zero to `decimals` places.
double quantize(double value, int decimals);

} // namespace hcsim
