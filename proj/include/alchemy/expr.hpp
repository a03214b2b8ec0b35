#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace alchemy {

enum class Kind : std::uint8_t { Variable = 0, Abstraction = 1, Application = 2 };

// Pre-order token stream of a nameless term. Variables carry their de Bruijn
// index (0 = innermost binder); indices past the binder depth are free.
using Code = std::vector<std::uint32_t>;

namespace code {
inline constexpr std::uint32_t kTagBits = 2;
inline constexpr std::uint32_t kTagMask = 3;
inline constexpr std::uint32_t kMaxIndex = (1u << 30) - 1;

constexpr std::uint32_t var(std::uint32_t index) { return index << kTagBits; }
constexpr std::uint32_t lam() { return 1; }
constexpr std::uint32_t app() { return 2; }
constexpr Kind kind(std::uint32_t tok) { return static_cast<Kind>(tok & kTagMask); }
constexpr std::uint32_t index(std::uint32_t tok) { return tok >> kTagBits; }

// Length of the subterm starting at `pos`.
std::size_t extent(std::span<const std::uint32_t> c, std::size_t pos);
}  // namespace code

// Read-only cursor into a term's token stream.
class ExprView {
public:
    ExprView() = default;
    ExprView(std::span<const std::uint32_t> tokens, std::size_t pos = 0)
        : tokens_(tokens), pos_(pos) {}

    Kind kind() const { return code::kind(tokens_[pos_]); }
    bool is_var() const { return kind() == Kind::Variable; }
    bool is_lam() const { return kind() == Kind::Abstraction; }
    bool is_app() const { return kind() == Kind::Application; }

    std::uint32_t index() const;
    ExprView body() const;
    ExprView function() const;
    ExprView argument() const;

    std::size_t size() const { return code::extent(tokens_, pos_); }
    std::span<const std::uint32_t> tokens() const { return tokens_.subspan(pos_, size()); }

private:
    std::span<const std::uint32_t> tokens_;
    std::size_t pos_ = 0;
};

// Immutable lambda term. Copies share storage. Two terms compare equal iff they
// are alpha-equivalent, since bound variables have no names internally.
class Expr {
public:
    Expr();  // the identity \x.x

    static Expr var(std::uint32_t index);
    static Expr lam(const Expr& body);
    static Expr app(const Expr& function, const Expr& argument);
    static Expr from_code(Code tokens);  // throws std::invalid_argument if malformed
    static Expr from_view(ExprView v) { return from_code(Code(v.tokens().begin(), v.tokens().end())); }

    ExprView view() const { return ExprView(data_->tokens); }
    const Code& tokens() const { return data_->tokens; }

    Kind kind() const { return view().kind(); }
    std::size_t size() const { return data_->tokens.size(); }
    std::size_t hash() const { return data_->hash; }

    // Smallest k such that every free index is below k at the root; 0 if closed.
    std::uint32_t free_bound() const;
    bool closed() const { return free_bound() == 0; }

    friend bool operator==(const Expr& a, const Expr& b) {
        return a.data_ == b.data_ || (a.data_->hash == b.data_->hash && a.data_->tokens == b.data_->tokens);
    }

    bool same_storage(const Expr& other) const { return data_ == other.data_; }

private:
    struct Data {
        Code tokens;
        std::size_t hash;
    };
    explicit Expr(std::shared_ptr<const Data> d) : data_(std::move(d)) {}
    static Expr make(Code tokens);

    std::shared_ptr<const Data> data_;
};

inline std::size_t size(const Expr& e) { return e.size(); }
inline bool alpha_equivalent(const Expr& a, const Expr& b) { return a == b; }

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t position)
        : std::runtime_error(what + " at position " + std::to_string(position)), position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

struct ParseOptions {
    // Reject free variables instead of assigning them indices.
    bool require_closed = false;
};

struct ParseResult {
    Expr expr;
    // Free variable names; name k corresponds to index depth + k.
    std::vector<std::string> free_names;
};

// Grammar: expr := abs | app ; abs := ("\" | "λ") ident "." expr ;
//          app := atom { atom } ; atom := ident | "(" expr ")"
ParseResult parse_with_free(std::string_view text, ParseOptions opts = {});
Expr parse(std::string_view text, ParseOptions opts = {});

// Binders are named a, b, ..., z, a1, b1, ... by depth. Free variable k prints as
// free_names[k] when given, otherwise as F<k>.
std::string print(const Expr& e, std::span<const std::string> free_names = {});

}  // namespace alchemy

template <>
struct std::hash<alchemy::Expr> {
    std::size_t operator()(const alchemy::Expr& e) const noexcept { return e.hash(); }
};
