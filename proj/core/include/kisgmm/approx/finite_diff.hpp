#pragma once

#include <span>
#include <vector>

#include "kisgmm/approx/network.hpp"

namespace kisgmm::approx {

// Scalar probe loss used by the checker: sum of network outputs.
double probe_loss(Network& net, std::span<const double> input);

// Analytic parameter gradients of probe_loss, one vector per ParamTensor.
std::vector<std::vector<double>> analytic_gradients(Network& net, std::span<const double> input);

// Central-difference gradients of probe_loss with step eps.
std::vector<std::vector<double>> numeric_gradients(Network& net, std::span<const double> input,
                                                   double eps);

// max over entries of |a - b| / (|b| + 1e-8)
double max_relative_error(const std::vector<std::vector<double>>& a,
                          const std::vector<std::vector<double>>& b);

// Max relative disagreement between analytic and numeric gradients.
// eps must lie in (0, 1e-2].
double finite_diff_check(Network& net, std::span<const double> input, double eps);

}  // namespace kisgmm::approx
