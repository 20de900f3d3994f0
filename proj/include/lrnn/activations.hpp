#pragma once

// Activation families for the three neuron kinds that compute something:
// rule neurons (conjunction), aggregation neurons and atom neurons
// (disjunction). Every evaluation returns the value together with its
// input-wise partial derivatives so the trainer can run backprop without
// re-deriving anything.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lrnn/errors.hpp"

namespace lrnn {

enum class Family { Godel, MaxSigmoid, AvgSigmoid };

inline constexpr double kDefaultConjOffset = 1.0;
inline constexpr double kDefaultDisjOffset = 0.0;

inline std::string_view family_name(Family f) {
  switch (f) {
    case Family::Godel: return "godel";
    case Family::MaxSigmoid: return "ms";
    case Family::AvgSigmoid: return "as";
  }
  return "?";
}

inline std::optional<Family> parse_family(std::string_view s) {
  if (s == "godel") return Family::Godel;
  if (s == "ms") return Family::MaxSigmoid;
  if (s == "as") return Family::AvgSigmoid;
  return std::nullopt;
}

/// Offsets only enter the sigmoid families; Godel ignores them.
inline bool uses_offsets(Family f) { return f != Family::Godel; }

inline double sigm(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double sigm_prime(double x) {
  const double s = sigm(x);
  return s * (1.0 - s);
}

struct ActivationEval {
  double value = 0.0;
  std::vector<double> partials;
  // d value / d offset; zero for families that ignore the offset.
  double offset_partial = 0.0;
  // Winning input of a max/min; lowest index on ties.
  std::optional<std::size_t> argmax_index;
};

namespace detail {

inline void require_inputs(std::span<const double> inputs, const char* what) {
  if (inputs.empty()) {
    throw EmptyInputError(std::string(what) + ": activation needs at least one input");
  }
}

inline ActivationEval select_one(std::span<const double> inputs, bool want_max) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < inputs.size(); ++i) {
    if (want_max ? inputs[i] > inputs[best] : inputs[i] < inputs[best]) best = i;
  }
  ActivationEval out;
  out.value = inputs[best];
  out.partials.assign(inputs.size(), 0.0);
  out.partials[best] = 1.0;
  out.argmax_index = best;
  return out;
}

inline double sum(std::span<const double> inputs) {
  double s = 0.0;
  for (double x : inputs) s += x;
  return s;
}

}  // namespace detail

/// g-and: Godel min, otherwise sigm(sum - k + offset).
inline ActivationEval eval_conj(Family family, std::span<const double> inputs,
                                double offset = kDefaultConjOffset) {
  detail::require_inputs(inputs, "conjunction");
  if (family == Family::Godel) return detail::select_one(inputs, false);
  const double z = detail::sum(inputs) - static_cast<double>(inputs.size()) + offset;
  ActivationEval out;
  out.value = sigm(z);
  const double d = out.value * (1.0 - out.value);
  out.partials.assign(inputs.size(), d);
  out.offset_partial = d;
  return out;
}

/// g-and*: max for Godel and Max-Sigmoid, arithmetic mean for Avg-Sigmoid.
inline ActivationEval eval_agg(Family family, std::span<const double> inputs) {
  detail::require_inputs(inputs, "aggregation");
  if (family != Family::AvgSigmoid) return detail::select_one(inputs, true);
  const double m = static_cast<double>(inputs.size());
  ActivationEval out;
  out.value = detail::sum(inputs) / m;
  out.partials.assign(inputs.size(), 1.0 / m);
  return out;
}

/// g-or: Godel max, Max-Sigmoid sigm(sum + offset), Avg-Sigmoid sum + offset.
inline ActivationEval eval_disj(Family family, std::span<const double> inputs,
                                double offset = kDefaultDisjOffset) {
  detail::require_inputs(inputs, "disjunction");
  if (family == Family::Godel) return detail::select_one(inputs, true);
  const double z = detail::sum(inputs) + offset;
  ActivationEval out;
  if (family == Family::MaxSigmoid) {
    out.value = sigm(z);
    const double d = out.value * (1.0 - out.value);
    out.partials.assign(inputs.size(), d);
    out.offset_partial = d;
  } else {
    out.value = z;
    out.partials.assign(inputs.size(), 1.0);
    out.offset_partial = 1.0;
  }
  return out;
}

}  // namespace lrnn
