#include "kisgmm/approx/finite_diff.hpp"

#include <cmath>

#include "kisgmm/common/errors.hpp"

namespace kisgmm::approx {

double probe_loss(Network& net, std::span<const double> input) {
    const auto out = net.forward(input, false);
    double s = 0.0;
    for (double v : out) s += v;
    return s;
}

std::vector<std::vector<double>> analytic_gradients(Network& net, std::span<const double> input) {
    net.zero_grad();
    const auto out = net.forward(input, true);
    net.backward(std::vector<double>(out.size(), 1.0));
    std::vector<std::vector<double>> grads;
    grads.reserve(net.params().size());
    for (const auto& p : net.params()) grads.push_back(p.grad);
    net.zero_grad();
    return grads;
}

std::vector<std::vector<double>> numeric_gradients(Network& net, std::span<const double> input,
                                                   double eps) {
    std::vector<std::vector<double>> grads;
    grads.reserve(net.params().size());
    for (auto& p : net.params()) {
        std::vector<double> g(p.values.size());
        for (size_t k = 0; k < p.values.size(); ++k) {
            const double saved = p.values[k];
            p.values[k] = saved + eps;
            const double hi = probe_loss(net, input);
            p.values[k] = saved - eps;
            const double lo = probe_loss(net, input);
            p.values[k] = saved;
            g[k] = (hi - lo) / (2.0 * eps);
        }
        grads.push_back(std::move(g));
    }
    return grads;
}

double max_relative_error(const std::vector<std::vector<double>>& a,
                          const std::vector<std::vector<double>>& b) {
    double worst = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        for (size_t k = 0; k < a[i].size(); ++k) {
            const double err = std::abs(a[i][k] - b[i][k]) / (std::abs(b[i][k]) + 1e-8);
            if (err > worst) worst = err;
        }
    }
    return worst;
}

double finite_diff_check(Network& net, std::span<const double> input, double eps) {
    if (!(eps > 0.0) || eps > 1e-2) throw ConfigError("finite_diff_check: eps must be in (0, 1e-2]");
    const auto analytic = analytic_gradients(net, input);
    const auto numeric = numeric_gradients(net, input, eps);
    return max_relative_error(analytic, numeric);
}

}  // namespace kisgmm::approx
