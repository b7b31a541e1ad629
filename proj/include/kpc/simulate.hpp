#pragma once

#include <cstdint>
#include <string>

#include "kpc/dataset.hpp"

namespace kpc {

enum class SimModelName {
    model_I,        // X,Z ~ N(0,1); Y = X + Z + N(1,1)
    model_II,       // X,Z ~ N(0,1); Y ~ Bernoulli(exp(-Z^2/2))
    model_III,      // X,Z ~ U[0,1]; Y = X + Z (mod 1)
    model_IV_so3,   // Y = R1(X) R3(Z)
    model_V_so3,    // Y = R1(X) R3(eps), eps ~ N(0,1)
    lm,             // Y = 3 X1 + 2 X2 - X3 + N(0,1)
    gam,            // Y = sin(X1) + 2 cos(X2) + exp(X3) + N(0,1)
    nonlin1,        // Y = X1 X2 + sin(X1 X3)
    nonlin2,        // Y = 2 log(X1^2 + X2^4) / (cos(X1) + sin(X3)) + t1
    nonlin3,        // Y = |X1 + U|^{sin(X2 - X3)}, U ~ U[0,1]
    so3_select,     // Y = R1(X1) R3(X2 X3)
    crt_additive,   // Z = X + U[-1,1]; Y = g sin(ZX) + (1-g)(e^X X^-2 + N(0,1))
    crt_multiplicative,  // Z = X N(0,1); Y = |tanh X + e|^{1-g} cosh(ZX)^g
};

struct SimModel {
    SimModelName name = SimModelName::model_I;
    std::size_t n = 100;
    std::size_t p = 10;        // predictor count for the selection models
    double gamma = 0.0;        // CRT models
    std::uint64_t seed = 0;
};

SimModelName sim_model_from_name(const std::string& name);
const char* sim_model_name(SimModelName name);

// Seeded, reproducible draws. Column layout:
//   model_I..III:            x, z, y
//   model_IV/V:              x, z, y (rotation)
//   lm/gam/nonlin*/so3_select: y, x1..xp
//   crt_*:                   x, z, y
Dataset simulate(const SimModel& model);

// Rotations about the x- and z-axis.
Rotation rotation_about_x(double angle);
Rotation rotation_about_z(double angle);
Rotation rotation_multiply(const Rotation& a, const Rotation& b);

}  // namespace kpc
