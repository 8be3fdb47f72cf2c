#include "setiss/gains.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace setiss::gains {

using nlohmann::json;

const char* to_string(FnClass c) {
    switch (c) {
        case FnClass::G: return "G";
        case FnClass::K: return "K";
        case FnClass::KInf: return "K_inf";
        case FnClass::Unverified: return "unverified";
    }
    return "?";
}

namespace detail {

struct Node {
    enum class Kind { Zero, Identity, Affine, Power, Custom, Compose, Max, Min, Sum, ScaleOut, ScaleArg, Inverse };
    Kind kind = Kind::Zero;
    double a = 0.0;  // affine slope / scale factor / exponent
    double b = 0.0;  // affine offset
    std::string name;
    std::function<double(double)> fn;
    std::shared_ptr<const Node> lhs, rhs;
};

using NodePtr = std::shared_ptr<const Node>;

namespace {

double eval_node(const Node& n, double s);

// Bracketed bisection for y = f(s) with geometric bracket expansion.
// Returns s with |f(s) - y| <= 1e-10 * max(1, y) (and typically far better;
// the loop drives the bracket to ~1e-13 relative width).
double bisect_inverse(const Node& f, double y, double domain_cap,
                      std::optional<Interval> hint, bool as_inverse_node) {
    const double f0 = eval_node(f, 0.0);
    if (y <= f0) {
        if (y >= f0 - 1e-12) return 0.0;
        if (as_inverse_node) throw NonInvertible("inverse node: target below f(0)");
        throw OutOfRange("invert: target below f(0)");
    }

    double lo = 0.0, hi = 1.0;
    if (hint && hint->hi > hint->lo && hint->lo >= 0.0) {
        lo = hint->lo;
        hi = hint->hi;
        if (eval_node(f, lo) > y) lo = 0.0;
    }
    if (std::isfinite(domain_cap)) hi = std::min(hi, domain_cap);

    // Expand until f(hi) >= y or we run out of domain/headroom.
    int guard = 0;
    while (eval_node(f, hi) < y) {
        if (std::isfinite(domain_cap) && hi >= domain_cap) {
            if (as_inverse_node) throw NonInvertible("inverse node: target above f(domain_max)");
            throw OutOfRange("invert: target above f on its domain");
        }
        lo = hi;
        hi *= 2.0;
        if (std::isfinite(domain_cap)) hi = std::min(hi, domain_cap);
        if (++guard > 1100 || hi > 1e160) {
            if (as_inverse_node) throw NonInvertible("inverse node: bracket expansion failed");
            throw OutOfRange("invert: target appears to exceed sup f");
        }
    }

    for (int it = 0; it < 300; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (hi - lo <= std::max(1e-13 * mid, 1e-18)) break;
        if (eval_node(f, mid) < y) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

double eval_node(const Node& n, double s) {
    switch (n.kind) {
        case Node::Kind::Zero: return 0.0;
        case Node::Kind::Identity: return s;
        case Node::Kind::Affine: return n.a * s + n.b;
        case Node::Kind::Power: return std::pow(s, n.a);
        case Node::Kind::Custom: return n.fn(s);
        case Node::Kind::Compose: return eval_node(*n.lhs, eval_node(*n.rhs, s));
        case Node::Kind::Max: return std::max(eval_node(*n.lhs, s), eval_node(*n.rhs, s));
        case Node::Kind::Min: return std::min(eval_node(*n.lhs, s), eval_node(*n.rhs, s));
        case Node::Kind::Sum: return eval_node(*n.lhs, s) + eval_node(*n.rhs, s);
        case Node::Kind::ScaleOut: return n.a * eval_node(*n.lhs, s);
        case Node::Kind::ScaleArg: return eval_node(*n.lhs, n.a * s);
        case Node::Kind::Inverse:
            return bisect_inverse(*n.lhs, s, ComparisonFunction::infinity(), {}, true);
    }
    throw Error("corrupt expression tree");
}

NodePtr make(Node n) { return std::make_shared<const Node>(std::move(n)); }

// Class-tag lattice order for propagation: Unverified < G < K < KInf.
int rank(FnClass c) {
    switch (c) {
        case FnClass::Unverified: return 0;
        case FnClass::G: return 1;
        case FnClass::K: return 2;
        case FnClass::KInf: return 3;
    }
    return 0;
}

FnClass weaker(FnClass x, FnClass y) { return rank(x) <= rank(y) ? x : y; }
FnClass stronger(FnClass x, FnClass y) { return rank(x) >= rank(y) ? x : y; }

bool at_least_k(FnClass c) { return rank(c) >= rank(FnClass::K); }

}  // namespace
}  // namespace detail

using detail::Node;

ComparisonFunction::ComparisonFunction()
    : node_(detail::make(Node{})), tag_(FnClass::G), domain_max_(infinity()) {}

ComparisonFunction::ComparisonFunction(std::shared_ptr<const Node> n, FnClass tag, double dmax)
    : node_(std::move(n)), tag_(tag), domain_max_(dmax) {}

ComparisonFunction ComparisonFunction::identity() {
    Node n; n.kind = Node::Kind::Identity;
    return {detail::make(std::move(n)), FnClass::KInf, infinity()};
}

ComparisonFunction ComparisonFunction::affine(double a, double b) {
    Node n; n.kind = Node::Kind::Affine; n.a = a; n.b = b;
    FnClass tag = FnClass::Unverified;
    if (a > 0.0 && b == 0.0) tag = FnClass::KInf;
    else if (a == 0.0 && b == 0.0) tag = FnClass::G;
    return {detail::make(std::move(n)), tag, infinity()};
}

ComparisonFunction ComparisonFunction::linear(double c) { return affine(c, 0.0); }

ComparisonFunction ComparisonFunction::power(double p) {
    Node n; n.kind = Node::Kind::Power; n.a = p;
    return {detail::make(std::move(n)), p > 0.0 ? FnClass::KInf : FnClass::Unverified, infinity()};
}

ComparisonFunction ComparisonFunction::custom(std::string name, std::function<double(double)> fn,
                                              FnClass tag, double domain_max) {
    Node n; n.kind = Node::Kind::Custom; n.name = std::move(name); n.fn = std::move(fn);
    return {detail::make(std::move(n)), tag, domain_max};
}

ComparisonFunction ComparisonFunction::compose(ComparisonFunction f, ComparisonFunction g) {
    Node n; n.kind = Node::Kind::Compose; n.lhs = f.node_; n.rhs = g.node_;
    // K o K = K, G o K = G, ...: the composite inherits the weaker class.
    return {detail::make(std::move(n)), detail::weaker(f.tag_, g.tag_), g.domain_max_};
}

ComparisonFunction ComparisonFunction::max_of(ComparisonFunction f, ComparisonFunction g) {
    Node n; n.kind = Node::Kind::Max; n.lhs = f.node_; n.rhs = g.node_;
    // max of two strictly increasing maps is strictly increasing and grows
    // like the larger one; with a merely non-decreasing branch only G survives.
    FnClass tag = FnClass::Unverified;
    if (detail::at_least_k(f.tag_) && detail::at_least_k(g.tag_)) tag = detail::stronger(f.tag_, g.tag_);
    else if (f.tag_ != FnClass::Unverified && g.tag_ != FnClass::Unverified) tag = FnClass::G;
    return {detail::make(std::move(n)), tag, std::min(f.domain_max_, g.domain_max_)};
}

ComparisonFunction ComparisonFunction::min_of(ComparisonFunction f, ComparisonFunction g) {
    Node n; n.kind = Node::Kind::Min; n.lhs = f.node_; n.rhs = g.node_;
    FnClass tag = FnClass::Unverified;
    if (f.tag_ != FnClass::Unverified && g.tag_ != FnClass::Unverified)
        tag = detail::weaker(f.tag_, g.tag_);
    return {detail::make(std::move(n)), tag, std::min(f.domain_max_, g.domain_max_)};
}

ComparisonFunction ComparisonFunction::sum_of(ComparisonFunction f, ComparisonFunction g) {
    Node n; n.kind = Node::Kind::Sum; n.lhs = f.node_; n.rhs = g.node_;
    FnClass tag = FnClass::Unverified;
    if (f.tag_ != FnClass::Unverified && g.tag_ != FnClass::Unverified)
        tag = detail::stronger(f.tag_, g.tag_);
    return {detail::make(std::move(n)), tag, std::min(f.domain_max_, g.domain_max_)};
}

ComparisonFunction ComparisonFunction::scaled(double c, ComparisonFunction f) {
    if (c < 0.0) throw DomainMismatch("scaled: negative factor");
    if (c == 0.0) return ComparisonFunction();
    Node n; n.kind = Node::Kind::ScaleOut; n.a = c; n.lhs = f.node_;
    return {detail::make(std::move(n)), f.tag_, f.domain_max_};
}

ComparisonFunction ComparisonFunction::scale_arg(ComparisonFunction f, double c) {
    if (c < 0.0) throw DomainMismatch("scale_arg: negative factor");
    if (c == 0.0) return ComparisonFunction();
    Node n; n.kind = Node::Kind::ScaleArg; n.a = c; n.lhs = f.node_;
    return {detail::make(std::move(n)), f.tag_, f.domain_max_ / c};
}

ComparisonFunction ComparisonFunction::inverse_of(ComparisonFunction f) {
    FnClass tag = f.tag_;
    if (!detail::at_least_k(tag)) {
        tag = verify_class(f, 1024);
        if (!detail::at_least_k(tag))
            throw NotStrictlyIncreasing("inverse_of: wrapped function is not strictly increasing");
    }
    // Closed forms for the two leaves that dominate the built-in gain trees.
    if (f.node_->kind == Node::Kind::Power)
        return power(1.0 / f.node_->a);
    if (f.node_->kind == Node::Kind::Affine && f.node_->a > 0.0)
        return affine(1.0 / f.node_->a, -f.node_->b / f.node_->a);
    Node n; n.kind = Node::Kind::Inverse; n.lhs = f.node_;
    // The inverse of a bounded class-K map has a bounded domain (sup f); it is
    // not computed here, out-of-domain targets surface as NonInvertible.
    return {detail::make(std::move(n)), tag == FnClass::KInf ? FnClass::KInf : FnClass::K, infinity()};
}

double ComparisonFunction::eval(double s) const {
    if (!(s >= 0.0) || s > domain_max_ * (1.0 + 1e-12))
        throw DomainError("eval: argument outside [0, domain_max]");
    return detail::eval_node(*node_, s);
}

double ComparisonFunction::invert(double y, std::optional<Interval> bracket_hint) const {
    if (!(y >= 0.0)) throw OutOfRange("invert: negative target");
    FnClass tag = tag_;
    if (!detail::at_least_k(tag)) {
        tag = verify_class(*this, 1024);
        if (!detail::at_least_k(tag))
            throw NotStrictlyIncreasing("invert: function is not strictly increasing");
    }
    return detail::bisect_inverse(*node_, y, domain_max_, bracket_hint, false);
}

bool ComparisonFunction::is_zero() const { return node_->kind == Node::Kind::Zero; }

ComparisonFunction ComparisonFunction::with_tag(FnClass tag) const {
    return {node_, tag, domain_max_};
}

ComparisonFunction ComparisonFunction::verified(int grid_size) const {
    return with_tag(verify_class(*this, grid_size));
}

FnClass verify_class(const ComparisonFunction& f, int grid_size) {
    if (grid_size < 16) throw Error("verify_class: grid_size must be >= 16");
    constexpr double tol_zero = 1e-12;
    constexpr double tol_mono = 1e-12;

    double f0;
    try {
        f0 = f.eval(0.0);
    } catch (const Error&) {
        return FnClass::Unverified;
    }
    if (!(std::abs(f0) <= tol_zero)) return FnClass::Unverified;

    // Canonical grid: log-spaced over [1e-2, 1e2], clipped to the domain.
    // Steeper-than-quartic tails can fall below tol_mono per step on a finer
    // grid near zero; this range keeps polynomial increments resolvable.
    const double hi = std::min(f.domain_max(), 1e2);
    const double lo = std::min(1e-2, hi * 1e-4);
    std::vector<double> grid(static_cast<size_t>(grid_size));
    const double ratio = std::log(hi / lo) / (grid_size - 1);
    for (int i = 0; i < grid_size; ++i) grid[static_cast<size_t>(i)] = lo * std::exp(ratio * i);

    bool nondecreasing = true, strict = true;
    double prev = f0;
    try {
        // from 0 to the first grid point as well; strictness is measured
        // relative to the running value so steep compositions (degree-12
        // polynomials near zero) still register their increments
        for (double s : grid) {
            const double v = f.eval(s);
            if (!std::isfinite(v) || v < -tol_zero) return FnClass::Unverified;
            if (v < prev - tol_zero) nondecreasing = false;
            if (!(v > prev + tol_mono * std::max(prev, 1e-30)) && !(prev == 0.0 && v > 0.0))
                strict = false;
            prev = v;
        }
        if (!nondecreasing) return FnClass::Unverified;
        if (!strict) return FnClass::G;

        if (std::isfinite(f.domain_max())) return FnClass::K;  // bounded domain cannot be K_inf

        // Unboundedness probe: persistent growth out to 1e8.
        const double g1 = f.eval(1e2), g2 = f.eval(1e5), g3 = f.eval(1e8);
        if (g2 <= g1 + tol_mono || g3 <= g2 + tol_mono) return FnClass::K;
        return (g3 >= 1.5 * g2) ? FnClass::KInf : FnClass::K;
    } catch (const Error&) {
        return FnClass::Unverified;
    }
}

SmallGainReport small_gain_holds(const ComparisonFunction& f, double mu, double Delta,
                                 int grid_size) {
    if (!(mu < Delta)) throw EmptyInterval("small_gain_holds: mu >= Delta");
    if (grid_size < 2) throw Error("small_gain_holds: grid too small");

    // Open-interval condition sampled on a shrunken closed interval.
    const double lo = mu > 0.0 ? mu * (1.0 + 1e-6) : Delta * 1e-12;
    const double hi = Delta * (1.0 - 1e-6);

    SmallGainReport rep;
    rep.holds = true;
    rep.worst_margin = std::numeric_limits<double>::infinity();
    const double ratio = std::log(hi / lo) / (grid_size - 1);
    for (int i = 0; i < grid_size; ++i) {
        const double s = lo * std::exp(ratio * i);
        const double margin = s - f.eval(s);
        if (margin < rep.worst_margin) {
            rep.worst_margin = margin;
            rep.worst_point = s;
        }
        if (margin <= 0.0) {
            rep.holds = false;
            if (std::isnan(rep.first_failure)) rep.first_failure = s;
        }
    }
    return rep;
}

bool KLEnvelope::non_increasing(double tol) const {
    for (size_t i = 1; i < samples.size(); ++i)
        if (samples[i].second > samples[i - 1].second + tol) return false;
    return true;
}

// --- serialization -----------------------------------------------------------

namespace {

json node_to_json(const Node& n) {
    switch (n.kind) {
        case Node::Kind::Zero: return {{"op", "zero"}};
        case Node::Kind::Identity: return {{"op", "identity"}};
        case Node::Kind::Affine: return {{"op", "affine"}, {"args", {n.a, n.b}}};
        case Node::Kind::Power: return {{"op", "power"}, {"args", {n.a}}};
        case Node::Kind::Custom:
            throw NotSerializable("gain tree contains opaque user map '" + n.name + "'");
        case Node::Kind::Compose: return {{"op", "compose"}, {"args", {node_to_json(*n.lhs), node_to_json(*n.rhs)}}};
        case Node::Kind::Max: return {{"op", "max"}, {"args", {node_to_json(*n.lhs), node_to_json(*n.rhs)}}};
        case Node::Kind::Min: return {{"op", "min"}, {"args", {node_to_json(*n.lhs), node_to_json(*n.rhs)}}};
        case Node::Kind::Sum: return {{"op", "sum"}, {"args", {node_to_json(*n.lhs), node_to_json(*n.rhs)}}};
        case Node::Kind::ScaleOut: return {{"op", "scale"}, {"args", {n.a, node_to_json(*n.lhs)}}};
        case Node::Kind::ScaleArg: return {{"op", "scale_arg"}, {"args", {n.a, node_to_json(*n.lhs)}}};
        case Node::Kind::Inverse: return {{"op", "invert"}, {"args", {node_to_json(*n.lhs)}}};
    }
    throw Error("corrupt expression tree");
}

double num_arg(const json& j, size_t i, const char* op) {
    if (!j.contains("args") || !j["args"].is_array() || j["args"].size() <= i || !j["args"][i].is_number())
        throw ConfigError(std::string("gain json: op '") + op + "' needs numeric arg " + std::to_string(i));
    return j["args"][i].get<double>();
}

json tree_arg(const json& j, size_t i, const char* op) {
    if (!j.contains("args") || !j["args"].is_array() || j["args"].size() <= i || !j["args"][i].is_object())
        throw ConfigError(std::string("gain json: op '") + op + "' needs subtree arg " + std::to_string(i));
    return j["args"][i];
}

}  // namespace

json ComparisonFunction::to_json() const { return node_to_json(*node_); }

ComparisonFunction ComparisonFunction::from_json(const json& j) {
    if (!j.is_object() || !j.contains("op") || !j["op"].is_string())
        throw ConfigError("gain json: expected {\"op\": ..., \"args\": [...]}");
    const std::string op = j["op"].get<std::string>();
    using CF = ComparisonFunction;
    if (op == "zero") return CF();
    if (op == "identity") return CF::identity();
    if (op == "affine") return CF::affine(num_arg(j, 0, "affine"), num_arg(j, 1, "affine"));
    if (op == "linear") return CF::linear(num_arg(j, 0, "linear"));
    if (op == "power") return CF::power(num_arg(j, 0, "power"));
    if (op == "scale") return CF::scaled(num_arg(j, 0, "scale"), from_json(tree_arg(j, 1, "scale")));
    if (op == "scale_arg") return CF::scale_arg(from_json(tree_arg(j, 1, "scale_arg")), num_arg(j, 0, "scale_arg"));
    if (op == "compose") return CF::compose(from_json(tree_arg(j, 0, "compose")), from_json(tree_arg(j, 1, "compose")));
    if (op == "max") return CF::max_of(from_json(tree_arg(j, 0, "max")), from_json(tree_arg(j, 1, "max")));
    if (op == "min") return CF::min_of(from_json(tree_arg(j, 0, "min")), from_json(tree_arg(j, 1, "min")));
    if (op == "sum") return CF::sum_of(from_json(tree_arg(j, 0, "sum")), from_json(tree_arg(j, 1, "sum")));
    if (op == "invert") return CF::inverse_of(from_json(tree_arg(j, 0, "invert")));
    // named built-ins
    if (op == "c3") return c3_gain(num_arg(j, 0, "c3"));
    if (op == "oscillator_gamma") return oscillator_gamma(num_arg(j, 0, "oscillator_gamma"));
    if (op == "oscillator_gamma_theta") return oscillator_gamma_theta();
    if (op == "stuart_landau_gamma")
        return stuart_landau_gamma(num_arg(j, 0, "stuart_landau_gamma"), num_arg(j, 1, "stuart_landau_gamma"));
    if (op == "stuart_landau_gamma_theta")
        return stuart_landau_gamma_theta(num_arg(j, 0, "stuart_landau_gamma_theta"), num_arg(j, 1, "stuart_landau_gamma_theta"));
    throw ConfigError("gain json: unknown op '" + op + "'");
}

// --- built-in gain trees ------------------------------------------------------

ComparisonFunction c3_gain(double alpha) {
    using CF = ComparisonFunction;
    return CF::min_of(CF::scaled(0.51 * alpha * alpha, CF::power(2)),
                      CF::scaled(0.49 * alpha, CF::power(4)));
}

ComparisonFunction oscillator_gamma(double mu, ComparisonFunction eta) {
    using CF = ComparisonFunction;
    const double c1 = std::sqrt(1.0 + 4.0 / (mu * mu)) * 8.0 / mu;
    const double c2 = std::sqrt(1.0 + mu * mu / 4.0);
    return CF::max_of(CF::linear(c1),
                      CF::scaled(c2, CF::scale_arg(CF::inverse_of(std::move(eta)), 4.0)));
}

ComparisonFunction oscillator_gamma_theta(ComparisonFunction eta) {
    using CF = ComparisonFunction;
    CF eta_inv = CF::inverse_of(std::move(eta));
    CF quartic = CF::scaled(10.0, CF::compose(CF::power(4), eta_inv));
    CF square = CF::scaled(10.0, CF::compose(CF::power(2), eta_inv));
    return CF::max_of(CF::max_of(std::move(quartic), std::move(square)),
                      CF::linear(24.0 * std::sqrt(10.0)));
}

ComparisonFunction stuart_landau_gamma(double nu_r, double alpha) {
    using CF = ComparisonFunction;
    return CF::compose(CF::inverse_of(c3_gain(alpha)),
                       CF::scaled(4.0 / (nu_r * nu_r), CF::power(2)));
}

ComparisonFunction stuart_landau_gamma_theta(double nu_r, double alpha) {
    using CF = ComparisonFunction;
    return CF::compose(CF::inverse_of(c3_gain(alpha)),
                       CF::scaled(2.0 / (nu_r * nu_r), CF::power(2)));
}

}  // namespace setiss::gains
