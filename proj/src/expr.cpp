#include "alchemy/expr.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace alchemy {

namespace code {
std::size_t extent(std::span<const std::uint32_t> c, std::size_t pos) {
    // Number of subterms still owed: each app owes one more, each var closes one.
    std::size_t pending = 1;
    std::size_t i = pos;
    while (pending > 0) {
        switch (kind(c[i])) {
        case Kind::Variable: --pending; break;
        case Kind::Abstraction: break;
        case Kind::Application: ++pending; break;
        }
        ++i;
    }
    return i - pos;
}
}  // namespace code

std::uint32_t ExprView::index() const {
    if (!is_var()) throw std::logic_error("index() on a non-variable");
    return code::index(tokens_[pos_]);
}

ExprView ExprView::body() const {
    if (!is_lam()) throw std::logic_error("body() on a non-abstraction");
    return ExprView(tokens_, pos_ + 1);
}

ExprView ExprView::function() const {
    if (!is_app()) throw std::logic_error("function() on a non-application");
    return ExprView(tokens_, pos_ + 1);
}

ExprView ExprView::argument() const {
    if (!is_app()) throw std::logic_error("argument() on a non-application");
    return ExprView(tokens_, pos_ + 1 + code::extent(tokens_, pos_ + 1));
}

namespace {

std::size_t hash_tokens(const Code& c) {
    // FNV-1a over 32-bit words, then a final avalanche.
    std::uint64_t h = 1469598103934665603ull;
    for (auto t : c) {
        h ^= t;
        h *= 1099511628211ull;
    }
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdull;
    h ^= h >> 33;
    return static_cast<std::size_t>(h);
}

bool well_formed(const Code& c) {
    if (c.empty()) return false;
    std::size_t pending = 1;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (pending == 0) return false;
        auto k = code::kind(c[i]);
        if (k == Kind::Variable) --pending;
        else if (k == Kind::Application) ++pending;
        else if (c[i] != code::lam()) return false;
        if (k == Kind::Application && c[i] != code::app()) return false;
    }
    return pending == 0;
}

}  // namespace

Expr::Expr() {
    static const Expr identity = make({code::lam(), code::var(0)});
    data_ = identity.data_;
}

Expr Expr::make(Code tokens) {
    auto h = hash_tokens(tokens);
    return Expr(std::make_shared<const Data>(Data{std::move(tokens), h}));
}

Expr Expr::var(std::uint32_t index) {
    if (index > code::kMaxIndex) throw std::invalid_argument("variable index out of range");
    return make({code::var(index)});
}

Expr Expr::lam(const Expr& body) {
    Code c;
    c.reserve(body.size() + 1);
    c.push_back(code::lam());
    c.insert(c.end(), body.tokens().begin(), body.tokens().end());
    return make(std::move(c));
}

Expr Expr::app(const Expr& function, const Expr& argument) {
    Code c;
    c.reserve(function.size() + argument.size() + 1);
    c.push_back(code::app());
    c.insert(c.end(), function.tokens().begin(), function.tokens().end());
    c.insert(c.end(), argument.tokens().begin(), argument.tokens().end());
    return make(std::move(c));
}

Expr Expr::from_code(Code tokens) {
    if (!well_formed(tokens)) throw std::invalid_argument("malformed term encoding");
    return make(std::move(tokens));
}

std::uint32_t Expr::free_bound() const {
    // Binder depth at each token: walk with an explicit stack of pending depths.
    std::uint32_t bound = 0;
    std::vector<std::uint32_t> depths{0};
    for (auto t : tokens()) {
        auto depth = depths.back();
        depths.pop_back();
        switch (code::kind(t)) {
        case Kind::Variable:
            if (code::index(t) >= depth) bound = std::max(bound, code::index(t) - depth + 1);
            break;
        case Kind::Abstraction: depths.push_back(depth + 1); break;
        case Kind::Application:
            depths.push_back(depth);
            depths.push_back(depth);
            break;
        }
    }
    return bound;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class Parser {
public:
    Parser(std::string_view text, ParseOptions opts) : text_(text), opts_(opts) {}

    ParseResult run() {
        Code out;
        expr(out);
        skip_space();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return {Expr::from_code(std::move(out)), std::move(free_)};
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool at_lambda() {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == '\\') return true;
        return text_.substr(pos_, 2) == "\xCE\xBB";
    }

    void eat_lambda() { pos_ += text_[pos_] == '\\' ? 1 : 2; }

    bool at_atom() {
        skip_space();
        if (pos_ >= text_.size()) return false;
        char c = text_[pos_];
        return c == '(' || std::isalpha(static_cast<unsigned char>(c));
    }

    std::string ident() {
        skip_space();
        auto start = pos_;
        if (pos_ >= text_.size() || !std::isalpha(static_cast<unsigned char>(text_[pos_])))
            fail("expected identifier");
        while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        return std::string(text_.substr(start, pos_ - start));
    }

    void expect(char c) {
        skip_space();
        if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    void expr(Code& out) {
        if (at_lambda()) {
            eat_lambda();
            scope_.push_back(ident());
            expect('.');
            out.push_back(code::lam());
            expr(out);
            scope_.pop_back();
            return;
        }
        app(out);
    }

    // Left-associative: a b c is (a b) c.
    void app(Code& out) {
        Code first;
        atom(first);
        std::vector<Code> args;
        while (at_atom()) {
            args.emplace_back();
            atom(args.back());
        }
        out.insert(out.end(), args.size(), code::app());
        out.insert(out.end(), first.begin(), first.end());
        for (auto& a : args) out.insert(out.end(), a.begin(), a.end());
    }

    void atom(Code& out) {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        if (text_[pos_] == '(') {
            ++pos_;
            expr(out);
            expect(')');
            return;
        }
        auto at = pos_;
        auto name = ident();
        auto depth = static_cast<std::uint32_t>(scope_.size());
        for (std::uint32_t k = 0; k < depth; ++k) {
            if (scope_[depth - 1 - k] == name) {
                out.push_back(code::var(k));
                return;
            }
        }
        if (opts_.require_closed) throw ParseError("unbound variable '" + name + "'", at);
        auto it = std::find(free_.begin(), free_.end(), name);
        auto slot = static_cast<std::uint32_t>(it - free_.begin());
        if (it == free_.end()) free_.push_back(name);
        out.push_back(code::var(depth + slot));
    }

    std::string_view text_;
    ParseOptions opts_;
    std::size_t pos_ = 0;
    std::vector<std::string> scope_;
    std::vector<std::string> free_;
};

}  // namespace

ParseResult parse_with_free(std::string_view text, ParseOptions opts) {
    return Parser(text, opts).run();
}

Expr parse(std::string_view text, ParseOptions opts) { return parse_with_free(text, opts).expr; }

// ---------------------------------------------------------------------------
// Printing

namespace {

class Printer {
public:
    explicit Printer(std::span<const std::string> free_names) : free_(free_names) {
        reserved_.insert(free_.begin(), free_.end());
    }

    void term(ExprView v, std::string& out) {
        switch (v.kind()) {
        case Kind::Variable: variable(v.index(), out); break;
        case Kind::Abstraction:
            out += '\\';
            scope_.push_back(binder_name(scope_.size()));
            out += scope_.back();
            out += '.';
            term(v.body(), out);
            scope_.pop_back();
            break;
        case Kind::Application: {
            auto f = v.function();
            if (f.is_lam()) {
                out += '(';
                term(f, out);
                out += ')';
            } else {
                term(f, out);
            }
            out += ' ';
            auto a = v.argument();
            if (a.is_var()) {
                term(a, out);
            } else {
                out += '(';
                term(a, out);
                out += ')';
            }
            break;
        }
        }
    }

private:
    void variable(std::uint32_t index, std::string& out) const {
        auto depth = scope_.size();
        if (index < depth) {
            out += scope_[depth - 1 - index];
            return;
        }
        auto k = index - depth;
        if (k < free_.size()) out += free_[k];
        else out += "F" + std::to_string(k);
    }

    std::string binder_name(std::size_t depth) {
        // Depth d takes the d-th unreserved name of a, b, ..., z, a1, ..., z1, a2, ...
        while (names_.size() <= depth) {
            for (;;) {
                auto n = next_++;
                std::string s(1, static_cast<char>('a' + n % 26));
                if (n >= 26) s += std::to_string(n / 26);
                if (!reserved_.count(s)) {
                    names_.push_back(std::move(s));
                    break;
                }
            }
        }
        return names_[depth];
    }

    std::span<const std::string> free_;
    std::unordered_set<std::string> reserved_;
    std::vector<std::string> names_;
    std::size_t next_ = 0;
    std::vector<std::string> scope_;
};

}  // namespace

std::string print(const Expr& e, std::span<const std::string> free_names) {
    std::string out;
    Printer(free_names).term(e.view(), out);
    return out;
}

}  // namespace alchemy
