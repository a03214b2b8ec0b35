#include "alchemy/reduce.hpp"

#include <vector>

namespace alchemy {

namespace {

using NodeId = std::uint32_t;

struct Node {
    Kind kind;
    std::uint32_t index;  // variables only
    NodeId left;          // abstraction body or application function
    NodeId right;         // application argument
    std::uint64_t size;   // tree size, shared subterms counted per occurrence
    std::uint32_t free_bound;
};

struct StepLimit {};
struct SizeLimit {};

// Terms live in a bump arena as a DAG. Substitution and shifting leave any
// subterm untouched when it cannot contain the affected indices, so unchanged
// parts (closed arguments in particular) are shared rather than copied.
class Reducer {
public:
    explicit Reducer(const ReductionLimits& limits) : limits_(limits) { nodes_.reserve(4096); }

    NodeId load(std::span<const std::uint32_t> tokens) {
        std::size_t pos = 0;
        return load_at(tokens, pos);
    }

    NodeId mk_app(NodeId f, NodeId a) {
        const auto& nf = nodes_[f];
        const auto& na = nodes_[a];
        auto size = nf.size + na.size + 1;
        auto fb = std::max(nf.free_bound, na.free_bound);
        nodes_.push_back({Kind::Application, 0, f, a, size, fb});
        return static_cast<NodeId>(nodes_.size() - 1);
    }

    ReductionOutcome run(NodeId root) {
        if (nodes_[root].size > limits_.max_vertices) return SizeLimitExceeded{};
        try {
            auto nf = normalize(root, 0);
            Code out;
            out.reserve(nodes_[nf].size);
            emit(nf, out);
            return NormalForm{Expr::from_code(std::move(out)), steps_};
        } catch (const StepLimit&) {
            return StepLimitExceeded{};
        } catch (const SizeLimit&) {
            return SizeLimitExceeded{};
        }
    }

private:
    NodeId load_at(std::span<const std::uint32_t> tokens, std::size_t& pos) {
        auto tok = tokens[pos++];
        switch (code::kind(tok)) {
        case Kind::Variable: return mk_var(code::index(tok));
        case Kind::Abstraction: {
            auto body = load_at(tokens, pos);
            return mk_lam(body);
        }
        case Kind::Application: {
            auto f = load_at(tokens, pos);
            auto a = load_at(tokens, pos);
            return mk_app(f, a);
        }
        }
        return 0;
    }

    NodeId mk_var(std::uint32_t index) {
        nodes_.push_back({Kind::Variable, index, 0, 0, 1, index + 1});
        return static_cast<NodeId>(nodes_.size() - 1);
    }

    NodeId mk_lam(NodeId body) {
        const auto& nb = nodes_[body];
        auto fb = nb.free_bound > 0 ? nb.free_bound - 1 : 0;
        auto size = nb.size + 1;
        nodes_.push_back({Kind::Abstraction, 0, body, 0, size, fb});
        return static_cast<NodeId>(nodes_.size() - 1);
    }

    // Add `by` to every index >= cutoff.
    NodeId shift(NodeId t, std::uint32_t by, std::uint32_t cutoff) {
        if (by == 0 || nodes_[t].free_bound <= cutoff) return t;
        const Node n = nodes_[t];
        switch (n.kind) {
        case Kind::Variable: return mk_var(n.index + by);
        case Kind::Abstraction: return mk_lam(shift(n.left, by, cutoff + 1));
        case Kind::Application: {
            auto f = shift(n.left, by, cutoff);
            auto a = shift(n.right, by, cutoff);
            return mk_app(f, a);
        }
        }
        return t;
    }

    // body[depth := arg], removing the binder: indices above depth drop by one.
    NodeId subst(NodeId t, NodeId arg, std::uint32_t depth) {
        if (nodes_[t].free_bound <= depth) return t;
        const Node n = nodes_[t];
        switch (n.kind) {
        case Kind::Variable:
            if (n.index == depth) return shift(arg, depth, 0);
            return mk_var(n.index - 1);  // n.index > depth here
        case Kind::Abstraction: return mk_lam(subst(n.left, arg, depth + 1));
        case Kind::Application: {
            auto f = subst(n.left, arg, depth);
            auto a = subst(n.right, arg, depth);
            return mk_app(f, a);
        }
        }
        return t;
    }

    // Normal form of t, where `outside` is the vertex count of the enclosing
    // term excluding t.
    NodeId normalize(NodeId t, std::uint64_t outside) {
        std::vector<NodeId> args;
        for (;;) {
            if (nodes_[t].kind == Kind::Abstraction) {
                auto body = normalize(nodes_[t].left, outside + 1);
                return body == nodes_[t].left ? t : mk_lam(body);
            }
            args.clear();
            auto head = t;
            while (nodes_[head].kind == Kind::Application) {
                args.push_back(nodes_[head].right);
                head = nodes_[head].left;
            }
            // args holds the spine arguments right-to-left.
            if (nodes_[head].kind == Kind::Abstraction && !args.empty()) {
                if (steps_ == limits_.max_steps) throw StepLimit{};
                ++steps_;
                auto r = subst(nodes_[head].left, args.back(), 0);
                for (auto it = args.rbegin() + 1; it != args.rend(); ++it) r = mk_app(r, *it);
                t = r;
                if (outside + nodes_[t].size > limits_.max_vertices) throw SizeLimit{};
                continue;
            }
            // Head is a variable: the spine is stable, normalize arguments left to right.
            std::uint64_t current = nodes_[t].size;
            NodeId r = head;
            for (auto it = args.rbegin(); it != args.rend(); ++it) {
                auto a = *it;
                auto before = nodes_[a].size;
                auto na = normalize(a, outside + current - before);
                current = current - before + nodes_[na].size;
                r = mk_app(r, na);
            }
            return r;
        }
    }

    void emit(NodeId t, Code& out) const {
        const Node& n = nodes_[t];
        switch (n.kind) {
        case Kind::Variable: out.push_back(code::var(n.index)); break;
        case Kind::Abstraction:
            out.push_back(code::lam());
            emit(n.left, out);
            break;
        case Kind::Application:
            out.push_back(code::app());
            emit(n.left, out);
            emit(n.right, out);
            break;
        }
    }

    ReductionLimits limits_;
    std::vector<Node> nodes_;
    std::uint32_t steps_ = 0;
};

bool has_redex(ExprView v) {
    switch (v.kind()) {
    case Kind::Variable: return false;
    case Kind::Abstraction: return has_redex(v.body());
    case Kind::Application:
        return v.function().is_lam() || has_redex(v.function()) || has_redex(v.argument());
    }
    return false;
}

}  // namespace

ReductionOutcome reduce_to_normal_form(const Expr& e, const ReductionLimits& limits) {
    Reducer r(limits);
    return r.run(r.load(e.tokens()));
}

ReductionOutcome apply_and_reduce(const Expr& function, const Expr& argument, const ReductionLimits& limits) {
    Reducer r(limits);
    auto f = r.load(function.tokens());
    auto a = r.load(argument.tokens());
    return r.run(r.mk_app(f, a));
}

bool in_normal_form(const Expr& e) { return !has_redex(e.view()); }

}  // namespace alchemy
