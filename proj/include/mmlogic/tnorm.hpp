#pragma once

#include <vector>

namespace mmlogic::tnorm {

// Product t-norm pair: conj(a,b) = a*b, disj(a,b) = 1-(1-a)(1-b).
// Inputs outside [0,1] are rejected.
double conj(double a, double b);
double disj(double a, double b);

// n-ary versions fold left; empty input is rejected.
double conj_all(const std::vector<double>& values);
double disj_all(const std::vector<double>& values);

}  // namespace mmlogic::tnorm
