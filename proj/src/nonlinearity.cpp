#include "minkgs/nonlinearity.hpp"

#include "minkgs/errors.hpp"

#include <cmath>

// Boost 1.74's pchip calls isnan unqualified.
using std::isnan;

#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <numbers>
#include <sstream>

namespace minkgs {

namespace {

constexpr double kQuadratureAbsTol = 1e-12;
constexpr unsigned kQuadratureDepth = 18;
// Tighter relative targets sit below the rounding floor of the Kronrod/Gauss
// difference; Boost then bisects to full depth and sums inflated estimates.
constexpr double kQuadratureRelTol = 1e-13;

void require_finite(double s, const char* what) {
    if (!std::isfinite(s)) {
        throw PreconditionError(std::string(what) + ": argument must be finite");
    }
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// Bisects a predicate that is false at lo and true at hi down to
// kThresholdWidth; returns the midpoint of the final bracket.
template <class Pred>
double bisect_predicate(double lo, double hi, Pred holds) {
    while (hi - lo > kThresholdWidth) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (holds(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return 0.5 * (lo + hi);
}

template <class Pred>
double bisect_hint(const std::pair<double, double>& hint, Pred holds, const char* name) {
    auto [lo, hi] = hint;
    if (!(lo < hi) || holds(lo) || !holds(hi)) {
        throw PreconditionError(std::string("threshold hint for ") + name + " [" + fmt(lo) + ", " +
                                fmt(hi) + "] does not bracket a sign change");
    }
    return bisect_predicate(lo, hi, holds);
}

}  // namespace

// -- construction ----------------------------------------------------------

Nonlinearity Nonlinearity::power(double lambda, double q) {
    if (!(lambda > 0.0) || !(q > 1.0) || !std::isfinite(lambda) || !std::isfinite(q)) {
        throw PreconditionError("power family requires lambda > 0 and q > 1");
    }
    Nonlinearity nl;
    nl.family_ = "power";
    nl.params_ = {{"lambda", lambda}, {"q", q}};
    nl.f_ = [lambda, q](double s) { return -lambda * s + std::pow(s, q); };
    nl.primitive_ = [lambda, q](double s) {
        return -0.5 * lambda * s * s + std::pow(s, q + 1.0) / (q + 1.0);
    };
    return nl;
}

Nonlinearity Nonlinearity::sine(double q) {
    if (!(q >= 1.0) || !std::isfinite(q)) {
        throw PreconditionError("sine family requires q >= 1");
    }
    Nonlinearity nl;
    nl.family_ = "sine";
    nl.params_ = {{"q", q}};
    nl.f_ = [q](double s) {
        const double sn = std::sin(s);
        return -s * sn * std::pow(std::abs(sn), q - 1.0);
    };
    if (q == 1.0) {
        nl.primitive_ = [](double s) { return s * std::cos(s) - std::sin(s); };
    }
    nl.set_scan_max(kDefaultScanMax);  // fills the breakpoint table at k*pi
    return nl;
}

Nonlinearity Nonlinearity::tabulated(std::vector<double> s, std::vector<double> f) {
    if (s.size() != f.size() || s.size() < 4) {
        throw PreconditionError("tabulated nonlinearity needs at least four (s, f) pairs");
    }
    if (s.front() != 0.0) {
        throw PreconditionError("tabulated nonlinearity must start at s = 0");
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!std::isfinite(s[i]) || !std::isfinite(f[i])) {
            throw PreconditionError("tabulated nonlinearity contains a non-finite entry");
        }
        if (i > 0 && !(s[i] > s[i - 1])) {
            throw PreconditionError("tabulated abscissae must increase strictly");
        }
    }
    Nonlinearity nl;
    nl.family_ = "tabulated";
    nl.tabulated_ = true;
    nl.domain_max_ = s.back();
    nl.breakpoints_ = s;
    auto interp = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(
        std::move(s), std::move(f));
    nl.f_ = [interp](double x) { return (*interp)(x); };
    nl.set_scan_max(std::min(kDefaultScanMax, nl.domain_max_));
    return nl;
}

Nonlinearity Nonlinearity::custom(std::string name, ScalarFunction f,
                                  std::optional<ScalarFunction> primitive) {
    if (!f) throw PreconditionError("custom nonlinearity needs a callable");
    Nonlinearity nl;
    nl.family_ = std::move(name);
    nl.f_ = std::move(f);
    if (primitive) nl.primitive_ = std::move(*primitive);
    return nl;
}

Nonlinearity& Nonlinearity::set_scan_max(double value) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw PreconditionError("scan_max must be positive and finite");
    }
    scan_max_ = std::min(value, domain_max_);

    // Sine kinks sit at k*pi; cache F there so that each F(s) costs one
    // quadrature over a single smooth piece.
    if (family_ == "sine") {
        breakpoints_.clear();
        const double top = std::max(scan_max_, 64.0);
        for (int k = 0; k * std::numbers::pi <= top + std::numbers::pi; ++k) {
            breakpoints_.push_back(k * std::numbers::pi);
        }
    }
    if (!breakpoints_.empty()) {
        std::vector<double> values(breakpoints_.size(), 0.0);
        for (std::size_t k = 1; k < breakpoints_.size(); ++k) {
            values[k] = values[k - 1] + quadrature(breakpoints_[k - 1], breakpoints_[k]);
        }
        breakpoint_F_ = std::make_shared<const std::vector<double>>(std::move(values));
    }
    return *this;
}

Nonlinearity& Nonlinearity::set_hints(ThresholdHints hints) {
    hints_ = std::move(hints);
    return *this;
}

// -- evaluation ------------------------------------------------------------

double Nonlinearity::raw_f(double s) const {
    if (s < 0.0) return 0.0;
    if (truncation_ && s > *truncation_) return 0.0;
    if (s > domain_max_) {
        throw PreconditionError("f evaluated at s = " + fmt(s) + " beyond the tabulated range [0, " +
                                fmt(domain_max_) + "]");
    }
    return f_(s);
}

double Nonlinearity::f(double s) const {
    require_finite(s, "eval_f");
    return raw_f(s);
}

double Nonlinearity::quadrature(double a, double b) const {
    using boost::math::quadrature::gauss_kronrod;
    if (a == b) return 0.0;
    double error = 0.0;
    double l1 = 0.0;
    auto integrand = [this](double x) { return raw_f(x); };
    auto allowed_for = [](double norm) {
        return std::max(kQuadratureAbsTol, 100.0 * std::numeric_limits<double>::epsilon() * norm);
    };
    // One panel first: when its estimate is already at the rounding floor the
    // recursion would only add up roundoff from every subinterval.
    double value = gauss_kronrod<double, 31>::integrate(integrand, a, b, 0, kQuadratureRelTol, &error, &l1);
    if (error <= allowed_for(l1)) return value;
    // algebraic behaviour at an endpoint, e.g. |sin s|^q near k pi
    thread_local boost::math::quadrature::tanh_sinh<double> ts;
    double ts_error = 0.0;
    double ts_l1 = 0.0;
    const double ts_value = ts.integrate(integrand, a, b, kQuadratureRelTol, &ts_error, &ts_l1);
    if (ts_error <= allowed_for(ts_l1)) return ts_value;
    value = gauss_kronrod<double, 31>::integrate(integrand, a, b, kQuadratureDepth, kQuadratureRelTol, &error, &l1);
    if (!(error <= allowed_for(l1))) {
        throw NumericalError("quadrature of f over [" + fmt(a) + ", " + fmt(b) +
                             "] did not converge: achieved error estimate " + fmt(error));
    }
    return value;
}

double Nonlinearity::integrate(double a, double b) const {
    require_finite(a, "integrate");
    require_finite(b, "integrate");
    if (a > b) return -integrate(b, a);
    // Split at 0, at the truncation level and at breakpoints so every piece
    // is smooth.
    std::vector<double> cuts{a};
    auto add_cut = [&](double c) {
        if (c > a && c < b) cuts.push_back(c);
    };
    add_cut(0.0);
    if (truncation_) add_cut(*truncation_);
    for (double c : breakpoints_) add_cut(c);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double lo = cuts[i];
        const double hi = cuts[i + 1];
        if (hi <= 0.0) continue;  // f vanishes on the negative axis
        if (truncation_ && lo >= *truncation_) continue;
        total += quadrature(lo, hi);
    }
    return total;
}

double Nonlinearity::raw_F(double s) const {
    if (s <= 0.0) return 0.0;
    if (primitive_) return primitive_(s);
    if (breakpoint_F_ && !breakpoints_.empty()) {
        auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), s);
        const auto k = static_cast<std::size_t>(std::distance(breakpoints_.begin(), it)) - 1;
        if (k + 1 < breakpoints_.size() || s == breakpoints_.back()) {
            return (*breakpoint_F_)[k] + quadrature(breakpoints_[k], s);
        }
        return breakpoint_F_->back() + integrate(breakpoints_.back(), s);
    }
    return integrate(0.0, s);
}

double Nonlinearity::F(double s) const {
    require_finite(s, "eval_F");
    if (truncation_ && s > *truncation_) return raw_F(*truncation_);
    return raw_F(s);
}

double Nonlinearity::F_by_quadrature(double s) const {
    require_finite(s, "F_by_quadrature");
    if (s <= 0.0) return 0.0;
    return integrate(0.0, s);
}

double eval_f(const Nonlinearity& nl, double s) { return nl.f(s); }
double eval_F(const Nonlinearity& nl, double s) { return nl.F(s); }

Nonlinearity with_truncation(const Nonlinearity& nl, double level) {
    Nonlinearity out = nl;
    out.truncation_ = nl.truncation_ ? std::min(*nl.truncation_, level) : level;
    return out;
}

Nonlinearity truncate_at_beta(const Nonlinearity& nl, const Thresholds& th) {
    if (!th.beta_finite()) return nl;
    return with_truncation(nl, th.beta);
}

// -- thresholds ------------------------------------------------------------

Thresholds compute_thresholds(const Nonlinearity& nl, int N) {
    if (N < 2) throw PreconditionError("dimension N must be at least 2");
    const double top = std::min(nl.scan_max(), nl.domain_max());
    if (!(top > 0.0)) throw PreconditionError("scan_max must be positive");
    const double h = top / kThresholdScanPoints;
    auto node = [&](int k) { return k == kThresholdScanPoints ? top : k * h; };

    Thresholds th;
    auto f_nonneg = [&](double s) { return nl.f(s) >= 0.0; };
    auto F_pos = [&](double s) { return nl.F(s) > 0.0; };

    // alpha = inf{s > 0 : f(s) >= 0}
    int k_alpha = 0;
    if (nl.hints().alpha) {
        th.alpha = bisect_hint(*nl.hints().alpha, f_nonneg, "alpha");
        k_alpha = static_cast<int>(std::floor(th.alpha / h));
    } else {
        for (int k = 1; k <= kThresholdScanPoints; ++k) {
            if (f_nonneg(node(k))) {
                k_alpha = k;
                break;
            }
        }
        if (k_alpha == 0) {
            throw AssumptionError("(f3) violated: f < 0 on all of (0, " + fmt(top) + "]");
        }
        double lo = node(k_alpha - 1);
        const double hi = node(k_alpha);
        if (k_alpha == 1) {
            // f already non-negative at the first scan point: look closer to 0.
            lo = 0.0;
            double probe = hi;
            for (int j = 0; j < 60; ++j) {
                probe *= 0.5;
                if (!f_nonneg(probe)) {
                    lo = probe;
                    break;
                }
            }
            if (lo == 0.0) {
                throw AssumptionError("(f3) violated: f >= 0 arbitrarily close to 0, so alpha = 0");
            }
        }
        th.alpha = bisect_predicate(lo, hi, f_nonneg);
    }

    // xi0 = inf{s > 0 : F(s) > 0}
    double first_positive = 0.0;
    if (nl.hints().xi0) {
        th.xi0 = bisect_hint(*nl.hints().xi0, F_pos, "xi0");
        first_positive = nl.hints().xi0->second;
    } else {
        int k_xi0 = 0;
        for (int k = std::max(1, k_alpha); k <= kThresholdScanPoints; ++k) {
            if (F_pos(node(k))) {
                k_xi0 = k;
                break;
            }
        }
        if (k_xi0 == 0) {
            throw AssumptionError("(f5) violated: F <= 0 on all of (0, " + fmt(top) + "]");
        }
        first_positive = node(k_xi0);
        th.xi0 = bisect_predicate(std::max(th.alpha, node(k_xi0 - 1)), first_positive, F_pos);
    }

    // beta = inf{s > xi0 : f(s) = 0}, located as the first sign change of f
    // above xi0.
    auto f_nonpos = [&](double s) { return nl.f(s) <= 0.0; };
    if (nl.hints().beta) {
        th.beta = bisect_hint(*nl.hints().beta, f_nonpos, "beta");
    } else {
        const int k_start = static_cast<int>(std::floor(th.xi0 / h)) + 1;
        for (int k = std::max(1, k_start); k <= kThresholdScanPoints; ++k) {
            const double s = node(k);
            if (s <= th.xi0) continue;
            if (f_nonpos(s)) {
                th.beta = bisect_predicate(std::max(th.xi0, node(k - 1)), s, f_nonpos);
                break;
            }
        }
    }

    // gamma: first scan point with F > 0, pulled once toward xi0.
    th.gamma = first_positive;
    const double pulled = 0.5 * (th.xi0 + first_positive);
    if (F_pos(pulled)) th.gamma = pulled;
    if (!F_pos(th.gamma)) {
        throw AssumptionError("(f5) violated: no witness gamma with F(gamma) > 0 found");
    }
    return th;
}

// -- assumption report -----------------------------------------------------

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::Fail: return "fail";
        case Verdict::NotApplicable: return "not-applicable";
    }
    return "unknown";
}

bool AssumptionReport::passed() const {
    return std::none_of(status.begin(), status.end(),
                        [](const auto& kv) { return kv.second == Verdict::Fail; });
}

AssumptionReport check_assumptions(const Nonlinearity& nl, int N) {
    if (N < 2) throw PreconditionError("dimension N must be at least 2");
    AssumptionReport rep;
    rep.tabulated = nl.is_tabulated();
    for (const char* key : {"f1", "f2", "f3", "f4", "f5", "f6"}) rep.status[key] = Verdict::Fail;

    // (f1)
    const double f0 = nl.f(0.0);
    rep.status["f1"] = std::abs(f0) <= 1e-12 ? Verdict::Pass : Verdict::Fail;
    rep.evidence.push_back({"f1", 0.0, f0, "f(0)"});

    Thresholds th;
    try {
        th = compute_thresholds(nl, N);
        rep.thresholds = th;
    } catch (const AssumptionError& e) {
        rep.failure = e.what();
        const std::string msg = e.what();
        if (msg.find("(f3)") != std::string::npos) {
            rep.status["f3"] = Verdict::Fail;
            rep.status["f5"] = Verdict::NotApplicable;
        } else {
            rep.status["f3"] = Verdict::Pass;
            rep.status["f5"] = Verdict::Fail;
        }
        rep.status["f2"] = Verdict::NotApplicable;
        rep.status["f4"] = Verdict::NotApplicable;
        rep.status["f6"] = Verdict::NotApplicable;
        return rep;
    }

    // (f2) heuristic: difference quotients on nested dyadic grids over
    // [0, L] must stay below 1e6, scaled by the size of f on [0, L].
    {
        const double L = th.upper(std::min(nl.scan_max(), nl.domain_max()));
        double fmax = 0.0;
        double worst = 0.0;
        double worst_at = 0.0;
        constexpr int kFinest = 16;
        const int n = 1 << kFinest;
        std::vector<double> vals(static_cast<std::size_t>(n) + 1);
        for (int i = 0; i <= n; ++i) {
            vals[static_cast<std::size_t>(i)] = nl.f(L * i / n);
            fmax = std::max(fmax, std::abs(vals[static_cast<std::size_t>(i)]));
        }
        for (int level = 4; level <= kFinest; ++level) {
            const int stride = 1 << (kFinest - level);
            const double dx = L / (1 << level);
            for (int i = 0; i + stride <= n; i += stride) {
                const double dq = std::abs(vals[static_cast<std::size_t>(i + stride)] -
                                           vals[static_cast<std::size_t>(i)]) / dx;
                if (dq > worst) {
                    worst = dq;
                    worst_at = L * i / n;
                }
            }
        }
        const double bound = 1e6 * std::max(1.0, fmax / L);
        rep.status["f2"] = worst <= bound ? Verdict::Pass : Verdict::Fail;
        rep.evidence.push_back({"f2", worst_at, worst,
                                "max difference quotient on dyadic grids over [0, " + fmt(L) +
                                    "], bound " + fmt(bound)});
    }

    // (f3)
    rep.status["f3"] = th.alpha > 0.0 ? Verdict::Pass : Verdict::Fail;
    rep.evidence.push_back({"f3", th.alpha, nl.f(th.alpha), "alpha and f(alpha)"});

    // (f4), only required for N >= 3
    {
        double min_q = std::numeric_limits<double>::infinity();
        std::vector<double> quotients;
        for (int k = 3; k <= 8; ++k) {
            const double d = std::pow(10.0, -k);
            const double qk = nl.f(th.alpha + d) / d;
            quotients.push_back(qk);
            min_q = std::min(min_q, qk);
            rep.evidence.push_back({"f4", th.alpha + d, qk, "f(alpha+d)/d"});
        }
        rep.f4_limit_estimate = quotients.back();
        bool growing = true;
        for (std::size_t i = 1; i < quotients.size(); ++i) {
            growing = growing && quotients[i] > 5.0 * quotients[i - 1] && quotients[i - 1] > 0.0;
        }
        rep.f4_unbounded = growing;
        if (N == 2) {
            rep.status["f4"] = Verdict::NotApplicable;
        } else {
            rep.status["f4"] = min_q > 1e-6 ? Verdict::Pass : Verdict::Fail;
        }
    }

    // (f5)
    const double Fg = nl.F(th.gamma);
    rep.status["f5"] = Fg > 0.0 ? Verdict::Pass : Verdict::Fail;
    rep.evidence.push_back({"f5", th.gamma, Fg, "F(gamma)"});

    // (f6): f > 0 on (alpha, xi0]
    {
        constexpr int kSamples = 1000;
        double min_f = std::numeric_limits<double>::infinity();
        double min_at = th.xi0;
        for (int j = 1; j <= kSamples; ++j) {
            const double s = th.alpha + (th.xi0 - th.alpha) * j / kSamples;
            const double v = nl.f(s);
            if (v < min_f) {
                min_f = v;
                min_at = s;
            }
        }
        rep.status["f6"] = min_f > 0.0 ? Verdict::Pass : Verdict::Fail;
        rep.evidence.push_back({"f6", min_at, min_f, "min f over 1000 samples of (alpha, xi0]"});
    }
    return rep;
}

}  // namespace minkgs
