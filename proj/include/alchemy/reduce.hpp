#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <variant>

#include "alchemy/expr.hpp"

namespace alchemy {

struct ReductionLimits {
    std::uint32_t max_steps = 8000;
    std::uint32_t max_vertices = 1000;

    ReductionLimits() = default;
    ReductionLimits(std::uint32_t steps, std::uint32_t vertices) : max_steps(steps), max_vertices(vertices) {
        if (steps == 0 || vertices == 0) throw std::invalid_argument("reduction limits must be positive");
    }
};

struct NormalForm {
    Expr expr;
    std::uint32_t steps_used = 0;
};
struct StepLimitExceeded {};
struct SizeLimitExceeded {};

using ReductionOutcome = std::variant<NormalForm, StepLimitExceeded, SizeLimitExceeded>;

inline bool is_normal_form(const ReductionOutcome& o) { return std::holds_alternative<NormalForm>(o); }
inline const NormalForm* as_normal_form(const ReductionOutcome& o) { return std::get_if<NormalForm>(&o); }

// Leftmost-outermost beta reduction. One contraction is one step; the whole
// term's vertex count is checked against max_vertices before reduction starts
// and after every contraction.
ReductionOutcome reduce_to_normal_form(const Expr& e, const ReductionLimits& limits = {});

// reduce_to_normal_form(Application(function, argument)) without building the
// application first.
ReductionOutcome apply_and_reduce(const Expr& function, const Expr& argument, const ReductionLimits& limits = {});

// True when the term contains no beta redex.
bool in_normal_form(const Expr& e);

}  // namespace alchemy
