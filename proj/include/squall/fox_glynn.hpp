#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "squall/errors.hpp"

namespace squall {

/// A truncated window of Poisson(lambda) probabilities: weights[k - left] is
/// proportional to the probability of k events, and dividing by total_weight
/// normalizes them. The mass outside [left, right] is below the requested
/// epsilon. Used to turn transient CTMC analysis into finitely many discrete
/// steps of the uniformized chain.
struct PoissonWindow {
    std::uint64_t left = 0;
    std::uint64_t right = 0;
    std::vector<double> weights;
    double total_weight = 0.0;

    double weight(std::uint64_t k) const { return weights[k - left]; }
};

/// Computes the truncation window by recursing outward from the mode, where
/// the weight is anchored at one — this keeps every intermediate quantity in
/// range even for very large lambda, where the true probabilities themselves
/// would underflow only far out in the tails. The two tails are cut off once
/// a geometric bound certifies that the remaining mass is below epsilon/2
/// relative to the weight already accumulated.
inline PoissonWindow poisson_window(double lambda, double epsilon) {
    if (!(lambda >= 0.0)) throw InputError("poisson_window: rate must be nonnegative");
    if (!(epsilon > 0.0) || epsilon >= 1.0) throw InputError("poisson_window: epsilon must be in (0,1)");

    PoissonWindow w;
    if (lambda == 0.0) {
        w.left = w.right = 0;
        w.weights = {1.0};
        w.total_weight = 1.0;
        return w;
    }

    std::uint64_t mode = static_cast<std::uint64_t>(lambda);
    // Downward recursion from the mode: weight(k-1) = weight(k) * k / lambda.
    std::vector<double> down;  // weights for mode, mode-1, ...
    down.push_back(1.0);
    double acc = 1.0;
    std::uint64_t left = mode;
    while (left > 0) {
        double next = down.back() * static_cast<double>(left) / lambda;
        // Ratios keep shrinking going down, so the remaining lower tail is
        // bounded by the geometric series with the current ratio.
        double ratio = static_cast<double>(left) / lambda;  // < 1 below the mode... see guard
        if (next == 0.0) break;
        down.push_back(next);
        acc += next;
        --left;
        if (left > 0 && ratio < 1.0) {
            double tail_bound = next * ratio / (1.0 - ratio);
            if (tail_bound <= 0.5 * epsilon * acc) break;
        }
    }
    // Upward recursion from the mode: weight(k+1) = weight(k) * lambda / (k+1).
    std::vector<double> up;  // weights for mode+1, mode+2, ...
    double cur = 1.0;
    std::uint64_t right = mode;
    while (true) {
        double next = cur * lambda / static_cast<double>(right + 1);
        if (next == 0.0) break;
        up.push_back(next);
        acc += next;
        cur = next;
        ++right;
        double ratio = lambda / static_cast<double>(right + 1);
        if (ratio < 1.0) {
            double tail_bound = next * ratio / (1.0 - ratio);
            if (tail_bound <= 0.5 * epsilon * acc) break;
        }
    }

    w.left = left;
    w.right = right;
    w.weights.reserve(right - left + 1);
    for (std::size_t i = down.size(); i-- > 0;) w.weights.push_back(down[i]);
    for (double v : up) w.weights.push_back(v);
    w.total_weight = 0.0;
    // Sum small-to-large from both ends toward the mode for accuracy.
    for (double v : w.weights) w.total_weight += v;
    return w;
}

}  // namespace squall
