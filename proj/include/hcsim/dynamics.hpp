#pragma once

#include <random>

namespace hcsim {

// State of the cart-pole plant. phi measures the pole angle from upright;
// phi = 0 is the (unstable) upright equilibrium.
struct SimState {
    double x = 0.0;       // cart position
    double x_dot = 0.0;   // cart velocity
    double phi = 0.0;     // pole angle [rad]
    double phi_dot = 0.0; // pole angular velocity [rad/s]
    double t = 0.0;       // simulation time [s]
};

struct DerivVector {
    double dx = 0.0;
    double dx_dot = 0.0;
    double dphi = 0.0;
    double dphi_dot = 0.0;
};

enum class PlantMode {
    // Massless bob: the cart follows M*xdd = F exactly and the input u is the
    // cart acceleration (force already divided by M).
    Simplified,
    // Full coupled cart/pole equations; u is the force F on the cart.
    Full,
};

struct PlantParams {
    double g = 9.81; // gravitational acceleration
    double l = 1.0;  // pole length
    double M = 1.0;  // cart mass
    double m = 0.1;  // bob mass (full mode only)
    PlantMode mode = PlantMode::Simplified;
    double beta_x = 0.0;   // cart velocity damping [1/s]
    double beta_phi = 0.0; // angular velocity damping [1/s]
    double x_max = 1.0;    // terminal bound on |x|
    double phi_max = 0.5;  // terminal bound on |phi| [rad]

    // Throws DomainError if any constraint is violated.
    void validate() const;
};

inline constexpr double kDefaultPhi0Max = 0.05;

// Time derivatives of the state under a held cart input u.
DerivVector derivatives(const SimState& state, double u, const PlantParams& params);

// One classical fourth-order Runge-Kutta step of size dt with u held constant.
SimState step(const SimState& state, double u, double dt, const PlantParams& params);

// True iff the cart left its track or the pole fell over.
bool is_terminal(const SimState& state, const PlantParams& params);

// Total mechanical energy T + V. In simplified mode the bob mass is taken
// as 1 (the bob is massless for the cart dynamics but still carries the
// pendulum energy). Used as a conservation oracle in tests.
double total_energy(const SimState& state, const PlantParams& params);

// Fresh episode start: everything zero except a uniform tilt in
// [-phi0_max, +phi0_max] drawn from rng.
SimState initial_state(double phi0_max, std::mt19937_64& rng);

// Exact upright start (phi0_max = 0).
SimState initial_state();

} // namespace hcsim
