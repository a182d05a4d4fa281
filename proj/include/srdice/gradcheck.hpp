#pragma once

#include <functional>

#include "srdice/mdp.hpp"

namespace srdice {

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate.
Vector numeric_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h = 1e-5);

/// |a - n| / max(|a|, |n|) in the 2-norm; 0 when both are below `floor`.
double relative_error(const Vector& analytic, const Vector& numeric, double floor = 1e-10);

}  // namespace srdice
