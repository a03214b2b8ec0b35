#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "alchemy/expr.hpp"

namespace alchemy {

enum class Combinator {
    S, K, I, P,
    True, False, And, Or, Not,
    Scc, Add, Add2,
    Pred, Sub, IsZero, Eq,
};

// Closed normal-form term for each named combinator. Definitions that contain
// redexes as written (add2, eq) are returned already normalized.
const Expr& combinator(Combinator c);

std::string_view name_of(Combinator c);
std::optional<Combinator> combinator_from_name(std::string_view name);

// \a.\b. a (a ... (a b)) with n applications.
Expr church(std::uint32_t n);

// n when e is alpha-equivalent to church(n).
std::optional<std::uint32_t> decode_church(const Expr& e);

// Left-nested application f a1 a2 ... an.
Expr apply(const Expr& f, std::initializer_list<Expr> args);

}  // namespace alchemy
