#pragma once

// Comparison-function algebra: scalar monotone maps on [0, s_max] built as
// expression trees, with certified monotone inversion, class verification and
// small-gain interval checks. These are the currency of every gain
// computation in the library.

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "setiss/errors.hpp"

namespace setiss::gains {

/// Comparison-function classes. G: continuous, zero at zero, non-decreasing.
/// K: additionally strictly increasing. KInf: additionally unbounded.
enum class FnClass { G, K, KInf, Unverified };

const char* to_string(FnClass c);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

namespace detail { struct Node; }

/// A scalar monotone map represented as an immutable expression tree.
/// Values are safe to copy and share across threads; evaluation never
/// mutates state.
class ComparisonFunction {
  public:
    /// The zero function (class G).
    ComparisonFunction();

    // --- leaf constructors -------------------------------------------------
    static ComparisonFunction identity();
    /// a*s + b. Class K_inf when a > 0 and b == 0, unverified otherwise.
    static ComparisonFunction affine(double a, double b);
    /// c*s, shorthand for affine(c, 0).
    static ComparisonFunction linear(double c);
    /// s^p on [0, inf). Class K_inf for p > 0.
    static ComparisonFunction power(double p);
    /// Opaque user map. The class tag is taken on trust (default unverified);
    /// not serializable.
    static ComparisonFunction custom(std::string name,
                                     std::function<double(double)> fn,
                                     FnClass tag = FnClass::Unverified,
                                     double domain_max = infinity());

    // --- combinators -------------------------------------------------------
    /// f(g(s)).
    static ComparisonFunction compose(ComparisonFunction f, ComparisonFunction g);
    static ComparisonFunction max_of(ComparisonFunction f, ComparisonFunction g);
    static ComparisonFunction min_of(ComparisonFunction f, ComparisonFunction g);
    static ComparisonFunction sum_of(ComparisonFunction f, ComparisonFunction g);
    /// c * f(s), c >= 0.
    static ComparisonFunction scaled(double c, ComparisonFunction f);
    /// f(c * s), c >= 0.
    static ComparisonFunction scale_arg(ComparisonFunction f, double c);
    /// f^{-1}. Requires f strictly increasing (class K/K_inf tag, or a
    /// monotonicity probe must succeed). Power and affine leaves invert in
    /// closed form; everything else resolves by bracketed bisection at
    /// evaluation time.
    static ComparisonFunction inverse_of(ComparisonFunction f);

    // --- evaluation --------------------------------------------------------
    /// Evaluate at s >= 0. Inverse nodes are resolved by bracketed bisection
    /// to relative tolerance 1e-10.
    /// Throws DomainError if s is outside [0, domain_max]; NonInvertible if an
    /// inverse node's bracket cannot be expanded to enclose the target.
    double eval(double s) const;
    double operator()(double s) const { return eval(s); }

    /// Solve f(s) = y for s, |f(s) - y| <= 1e-10 * max(1, y).
    /// Requires f strictly increasing; throws NotStrictlyIncreasing otherwise
    /// and OutOfRange if y exceeds sup f.
    double invert(double y, std::optional<Interval> bracket_hint = {}) const;

    FnClass class_tag() const { return tag_; }
    double domain_max() const { return domain_max_; }
    bool is_zero() const;

    /// Copy sharing the same tree with a different class tag.
    ComparisonFunction with_tag(FnClass tag) const;
    /// Copy re-tagged by verify_class.
    ComparisonFunction verified(int grid_size = 4096) const;

    // --- serialization -----------------------------------------------------
    /// Expression-tree JSON: {"op": "...", "args": [...]}. Custom nodes are
    /// not serializable (throws NotSerializable).
    nlohmann::json to_json() const;
    static ComparisonFunction from_json(const nlohmann::json& j);

    static constexpr double infinity() { return std::numeric_limits<double>::infinity(); }

  private:
    ComparisonFunction(std::shared_ptr<const detail::Node> n, FnClass tag, double dmax);

    std::shared_ptr<const detail::Node> node_;
    FnClass tag_ = FnClass::Unverified;
    double domain_max_ = infinity();
};

/// Sampling-based class verdict: zero-at-zero, monotonicity and unboundedness
/// probes on a log-spaced canonical grid over [1e-2, 1e2] (clipped to the
/// domain), plus growth probes out to 1e8. grid_size >= 16.
FnClass verify_class(const ComparisonFunction& f, int grid_size = 4096);

struct SmallGainReport {
    bool holds = false;
    double worst_point = 0.0;   ///< argmin of the margin s - f(s)
    double worst_margin = 0.0;  ///< min margin over the sampled grid
    double first_failure = std::numeric_limits<double>::quiet_NaN();  ///< smallest sampled s with f(s) >= s
};

/// Checks f(s) < s on the open interval (mu, Delta), sampled log-spaced with
/// a 1e-6 relative inset at both ends. Throws EmptyInterval if mu >= Delta.
SmallGainReport small_gain_holds(const ComparisonFunction& f, double mu, double Delta,
                                 int grid_size = 2048);

/// Empirical surrogate for a decaying bound: (time-offset, bound) samples,
/// non-increasing in the offset.
struct KLEnvelope {
    std::vector<std::pair<double, double>> samples;
    double anchor = 0.0;  ///< bound at offset 0

    bool non_increasing(double tol = 0.0) const;
};

// --- named built-in gains ---------------------------------------------------
// Pure expression trees for the gains the built-in case studies use; also
// reachable from JSON by op name.

/// c3(s) = min{0.51 a^2 s^2, 0.49 a s^4}.
ComparisonFunction c3_gain(double alpha);
/// Oscillator disturbance gain
/// max{sqrt(1+4/mu^2) * (8/mu) s, sqrt(1+mu^2/4) * eta^{-1}(4 s)}.
ComparisonFunction oscillator_gamma(double mu, ComparisonFunction eta = ComparisonFunction::power(3));
/// Oscillator delayed-feedback gain
/// max{10 eta^{-1}(s)^4, 10 eta^{-1}(s)^2, 24 sqrt(10) s}.
ComparisonFunction oscillator_gamma_theta(ComparisonFunction eta = ComparisonFunction::power(3));
/// Stuart-Landau input gain c3^{-1}((4/nu_R^2) s^2).
ComparisonFunction stuart_landau_gamma(double nu_r, double alpha);
/// Stuart-Landau delayed-feedback gain c3^{-1}((2/nu_R^2) s^2).
ComparisonFunction stuart_landau_gamma_theta(double nu_r, double alpha);

}  // namespace setiss::gains
