#include "hcsim/dynamics.hpp"

#include <cmath>

#include "hcsim/errors.hpp"

namespace hcsim {

namespace {

bool finite(const SimState& s) {
    return std::isfinite(s.x) && std::isfinite(s.x_dot) && std::isfinite(s.phi) &&
           std::isfinite(s.phi_dot);
}

SimState advanced(const SimState& s, const DerivVector& d, double h) {
    SimState out = s;
    out.x += h * d.dx;
    out.x_dot += h * d.dx_dot;
    out.phi += h * d.dphi;
    out.phi_dot += h * d.dphi_dot;
    return out;
}

} // namespace

void PlantParams::validate() const {
    if (!(g > 0.0) || !(l > 0.0) || !(M > 0.0) || !(m >= 0.0))
        throw DomainError("plant: g, l, M must be positive and m nonnegative");
    if (!(x_max > 0.0))
        throw DomainError("plant: x_max must be positive");
    if (!(phi_max > 0.0) || !(phi_max < 1.5707963267948966))
        throw DomainError("plant: phi_max must lie in (0, pi/2)");
    if (!std::isfinite(beta_x) || !std::isfinite(beta_phi))
        throw DomainError("plant: damping coefficients must be finite");
}

DerivVector derivatives(const SimState& state, double u, const PlantParams& params) {
    if (!finite(state) || !std::isfinite(u))
        throw DomainError("derivatives: non-finite input");

    const double sin_phi = std::sin(state.phi);
    const double cos_phi = std::cos(state.phi);

    DerivVector d;
    d.dx = state.x_dot;
    if (params.mode == PlantMode::Simplified) {
        d.dx_dot = u - params.beta_x * state.x_dot;
    } else {
        // Coupled Euler-Lagrange pair solved for the cart acceleration.
        const double num = u - params.m * params.l * state.phi_dot * state.phi_dot * sin_phi +
                           params.m * params.g * sin_phi * cos_phi;
        const double den = params.M + params.m * sin_phi * sin_phi;
        d.dx_dot = num / den - params.beta_x * state.x_dot;
    }
    d.dphi = state.phi_dot;
    d.dphi_dot = (d.dx_dot * cos_phi + params.g * sin_phi) / params.l -
                 params.beta_phi * state.phi_dot;
    return d;
}

SimState step(const SimState& state, double u, double dt, const PlantParams& params) {
    if (!(dt > 0.0))
        throw DomainError("step: dt must be positive");

    const DerivVector k1 = derivatives(state, u, params);
    const DerivVector k2 = derivatives(advanced(state, k1, 0.5 * dt), u, params);
    const DerivVector k3 = derivatives(advanced(state, k2, 0.5 * dt), u, params);
    const DerivVector k4 = derivatives(advanced(state, k3, dt), u, params);

    SimState out = state;
    out.x += dt / 6.0 * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
    out.x_dot += dt / 6.0 * (k1.dx_dot + 2.0 * k2.dx_dot + 2.0 * k3.dx_dot + k4.dx_dot);
    out.phi += dt / 6.0 * (k1.dphi + 2.0 * k2.dphi + 2.0 * k3.dphi + k4.dphi);
    out.phi_dot += dt / 6.0 * (k1.dphi_dot + 2.0 * k2.dphi_dot + 2.0 * k3.dphi_dot + k4.dphi_dot);
    out.t = state.t + dt;
    return out;
}

bool is_terminal(const SimState& state, const PlantParams& params) {
    return std::abs(state.x) > params.x_max || std::abs(state.phi) > params.phi_max;
}

double total_energy(const SimState& state, const PlantParams& params) {
    const double m = params.mode == PlantMode::Simplified ? 1.0 : params.m;
    const double l = params.l;
    // Bob speed squared relative to the ground.
    const double vp2 = state.x_dot * state.x_dot -
                       2.0 * state.x_dot * state.phi_dot * l * std::cos(state.phi) +
                       l * l * state.phi_dot * state.phi_dot;
    const double kinetic = 0.5 * (params.M * state.x_dot * state.x_dot + m * vp2);
    const double potential = m * params.g * l * std::cos(state.phi);
    return kinetic + potential;
}

SimState initial_state(double phi0_max, std::mt19937_64& rng) {
    SimState s;
    if (phi0_max > 0.0) {
        std::uniform_real_distribution<double> tilt(-phi0_max, phi0_max);
        s.phi = tilt(rng);
    }
    return s;
}

SimState initial_state() {
    return SimState{};
}

} // namespace hcsim
