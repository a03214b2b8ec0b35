#include "alchemy/stdlib.hpp"

#include <array>
#include <stdexcept>

#include "alchemy/reduce.hpp"

namespace alchemy {

namespace {

constexpr std::array<std::string_view, 16> kNames = {
    "S", "K", "I", "P", "true", "false", "and", "or", "not",
    "scc", "add", "add2", "pred", "sub", "iszero", "eq",
};

Expr closed(std::string_view text) { return parse(text, {.require_closed = true}); }

Expr normalized(const Expr& e) {
    auto out = reduce_to_normal_form(e, ReductionLimits(100000, 100000));
    auto nf = as_normal_form(out);
    if (!nf) throw std::logic_error("library combinator failed to normalize");
    return nf->expr;
}

Expr lam(const Expr& b) { return Expr::lam(b); }
Expr v(std::uint32_t i) { return Expr::var(i); }

struct Library {
    std::array<Expr, kNames.size()> table;

    Library() {
        auto set = [&](Combinator c, Expr e) { table[static_cast<std::size_t>(c)] = std::move(e); };
        set(Combinator::S, closed(R"(\x.\y.\z.x z (y z))"));
        set(Combinator::K, closed(R"(\x.\y.x)"));
        set(Combinator::I, closed(R"(\x.x)"));
        set(Combinator::P, closed(R"(\s.\a.\b.a s b)"));
        auto t = closed(R"(\a.\b.a)");
        auto f = closed(R"(\a.\b.b)");
        set(Combinator::True, t);
        set(Combinator::False, f);
        set(Combinator::And, closed(R"(\a.\b.a b a)"));
        set(Combinator::Or, closed(R"(\a.\b.a a b)"));
        set(Combinator::Not, lam(apply(v(0), {f, t})));

        auto scc = closed(R"(\n.\a.\b.a (n a b))");
        set(Combinator::Scc, scc);
        // add = \n.\m. n scc m
        set(Combinator::Add, lam(lam(apply(v(1), {scc, v(0)}))));
        // add2 = \n. scc (scc n)
        set(Combinator::Add2, normalized(lam(apply(scc, {apply(scc, {v(0)})}))));

        auto pred = closed(R"(\n.\f.\x.n (\g.\h.h (g f)) (\u.x) (\u.u))");
        set(Combinator::Pred, pred);
        // sub = \m.\n. n pred m
        auto sub = lam(lam(apply(v(0), {pred, v(1)})));
        set(Combinator::Sub, sub);
        // iszero = \n. n (\x.false) true
        auto is_zero = lam(apply(v(0), {lam(f), t}));
        set(Combinator::IsZero, is_zero);
        // eq = \m.\n. m step base (n succ_s zero_s): n becomes a Scott numeral
        // (constant-time predecessor) and m peels one layer per iteration.
        // The and/sub formulation needs several thousand vertices at n = 20.
        auto eq = closed(R"(\m.\n. m (\r.\x. x (\a.\b.b) r) (\x. x (\a.\b.a) (\y.\a.\b.b))
                                (n (\p.\z.\s. s p) (\z.\s.z)))");
        set(Combinator::Eq, normalized(eq));
    }
};

const Library& library() {
    static const Library lib;
    return lib;
}

}  // namespace

const Expr& combinator(Combinator c) { return library().table[static_cast<std::size_t>(c)]; }

std::string_view name_of(Combinator c) { return kNames[static_cast<std::size_t>(c)]; }

std::optional<Combinator> combinator_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kNames.size(); ++i)
        if (kNames[i] == name) return static_cast<Combinator>(i);
    return std::nullopt;
}

Expr church(std::uint32_t n) {
    Code c;
    c.reserve(2 * n + 3);
    c.push_back(code::lam());
    c.push_back(code::lam());
    for (std::uint32_t i = 0; i < n; ++i) {
        c.push_back(code::app());
        c.push_back(code::var(1));
    }
    c.push_back(code::var(0));
    return Expr::from_code(std::move(c));
}

std::optional<std::uint32_t> decode_church(const Expr& e) {
    const auto& c = e.tokens();
    // Shape: lam lam (app var1)^n var0
    if (c.size() < 3 || c.size() % 2 == 0) return std::nullopt;
    if (c[0] != code::lam() || c[1] != code::lam() || c.back() != code::var(0)) return std::nullopt;
    for (std::size_t i = 2; i + 1 < c.size(); i += 2)
        if (c[i] != code::app() || c[i + 1] != code::var(1)) return std::nullopt;
    return static_cast<std::uint32_t>((c.size() - 3) / 2);
}

Expr apply(const Expr& f, std::initializer_list<Expr> args) {
    Expr r = f;
    for (const auto& a : args) r = Expr::app(r, a);
    return r;
}

}  // namespace alchemy
