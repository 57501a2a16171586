#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "eosedit/errors.hpp"

namespace eosedit {

enum class BetaProfile { scaled_linear, linear };

inline std::string to_string(BetaProfile p) {
    return p == BetaProfile::scaled_linear ? "scaled-linear" : "linear";
}

struct NoiseSchedule {
    int num_train_steps = 0;
    std::vector<double> alphas_cumprod;   // length num_train_steps, strictly decreasing
    std::vector<int> selected_timesteps;  // strictly decreasing, length == inference steps

    bool contains(int t) const {
        return std::find(selected_timesteps.begin(), selected_timesteps.end(), t) !=
               selected_timesteps.end();
    }
};

// Cumulative alpha products for the chosen beta profile plus an evenly
// spaced descending timestep selection. steps == num_train_steps degenerates
// to [T-1, ..., 0].
inline NoiseSchedule build_schedule(int num_train_steps, int steps, BetaProfile profile) {
    if (num_train_steps < 1) {
        throw parameter_error("num_train_steps must be positive");
    }
    if (steps < 1 || steps > num_train_steps) {
        throw parameter_error("steps must be in [1, num_train_steps]; got " +
                              std::to_string(steps));
    }

    NoiseSchedule s;
    s.num_train_steps = num_train_steps;
    s.alphas_cumprod.reserve(static_cast<size_t>(num_train_steps));

    const double beta_start = profile == BetaProfile::scaled_linear ? 0.00085 : 0.0001;
    const double beta_end = profile == BetaProfile::scaled_linear ? 0.012 : 0.02;
    const double denom = num_train_steps > 1 ? static_cast<double>(num_train_steps - 1) : 1.0;
    double prod = 1.0;
    for (int t = 0; t < num_train_steps; ++t) {
        double frac = static_cast<double>(t) / denom;
        double beta;
        if (profile == BetaProfile::scaled_linear) {
            double root = std::sqrt(beta_start) + frac * (std::sqrt(beta_end) - std::sqrt(beta_start));
            beta = root * root;
        } else {
            beta = beta_start + frac * (beta_end - beta_start);
        }
        prod *= 1.0 - beta;
        s.alphas_cumprod.push_back(prod);
    }

    const int stride = num_train_steps / steps;
    s.selected_timesteps.reserve(static_cast<size_t>(steps));
    for (int k = steps - 1; k >= 0; --k) {
        s.selected_timesteps.push_back(k * stride);
    }
    return s;
}

}  // namespace eosedit
