#include "minkgs/integrator.hpp"

#include "minkgs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace minkgs {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Continuous extension (Hairer, Norsett & Wanner).
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

}  // namespace

void IntegratorConfig::validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw PreconditionError("tolerances must be positive");
    if (!(r_start > 0.0)) throw PreconditionError("r_start must be positive");
    if (!(h_max > 0.0)) throw PreconditionError("h_max must be positive");
    if (!(sample_stride > 0.0)) throw PreconditionError("sample_stride must be positive");
}

double slope_from_flux(double q) { return q / std::sqrt(1.0 + q * q); }

double flux_from_slope(double t) {
    if (!(std::abs(t) < 1.0)) throw PreconditionError("phi' is defined only for |t| < 1");
    return t / std::sqrt((1.0 - t) * (1.0 + t));
}

double slope_margin(double q) {
    const double w = std::sqrt(1.0 + q * q);
    return 1.0 / (w * (w + std::abs(q)));
}

double hamiltonian_from_flux(double q) {
    // sqrt(1+q^2) - 1 rewritten to avoid cancellation for small q
    return q * q / (std::sqrt(1.0 + q * q) + 1.0);
}

Derivative vector_field(int N, const Nonlinearity& nl, const RadialState& s) {
    if (!(s.r > 0.0)) throw PreconditionError("vector_field requires r > 0");
    const double w = std::sqrt(1.0 + s.q * s.q);
    Derivative d;
    d.du = s.q / w;
    d.dq = -((N - 1) / s.r) * s.q - nl.f(s.u);
    d.dD = s.q * s.q / (s.r * w);
    return d;
}

RadialState taylor_start(int N, const Nonlinearity& nl, double xi, double r0) {
    if (!(r0 > 0.0)) throw PreconditionError("taylor_start requires r0 > 0");
    const double fx = nl.f(xi);
    RadialState s;
    s.r = r0;
    s.u = xi - fx * r0 * r0 / (2.0 * N);
    s.q = -fx * r0 / N;
    s.D = fx * fx * r0 * r0 / (2.0 * N * N);
    return s;
}

double energy_residual(const Nonlinearity& nl, int N, double xi, const RadialState& s) {
    return hamiltonian_from_flux(s.q) + (N - 1) * s.D - nl.F(xi) + nl.F(s.u);
}

ProfileRow make_row(const Nonlinearity& nl, int N, double xi, const RadialState& s) {
    return {s.r, s.u, slope_from_flux(s.q), s.q, s.D, energy_residual(nl, N, xi, s)};
}

// -- Dormand-Prince stepper -------------------------------------------------

RadialIntegrator::RadialIntegrator(int N, const Nonlinearity& nl, IntegratorConfig cfg,
                                   RadialState start)
    : N_(N), nl_(&nl), cfg_(cfg), current_(start), previous_(start) {
    if (N < 2) throw PreconditionError("dimension N must be at least 2");
    cfg_.validate();
    if (!(start.r > 0.0)) throw PreconditionError("integration must start at r > 0");
    // The (N-1)/r damping sets the natural scale near the origin.
    h_ = std::min(cfg_.h_max, 0.5 * start.r);
    k1_ = rhs(start.r, {start.u, start.q, start.D});
}

RadialIntegrator::Vec RadialIntegrator::rhs(double r, const Vec& y) {
    ++rhs_evals_;
    // a non-finite stage poisons the error estimate and the step is rejected
    if (!std::isfinite(y[0]) || !std::isfinite(y[1]) || !std::isfinite(y[2])) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        return {nan, nan, nan};
    }
    const Derivative d = vector_field(N_, *nl_, {r, y[0], y[1], y[2]});
    return {d.du, d.dq, d.dD};
}

void RadialIntegrator::step(double r_limit) {
    const double r = current_.r;
    if (!(r_limit > r)) throw PreconditionError("step: r_limit must exceed the current radius");
    const Vec y{current_.u, current_.q, current_.D};

    while (true) {
        const double h_ctrl = std::min(h_, cfg_.h_max);
        if (h_ctrl < kMinStep) {
            throw StiffnessError("step size underflow (h = " + std::to_string(h_ctrl) +
                                     ") at r = " + std::to_string(r),
                                 current_);
        }
        if (r_limit - r < kMinStep) {
            // remaining gap is below resolution: snap to the limit
            previous_ = current_;
            current_.r = r_limit;
            dense_r0_ = r;
            dense_h_ = 0.0;
            return;
        }
        const double h = std::min(h_ctrl, r_limit - r);
        const bool clipped = h < h_ctrl;
        auto axpy = [&](std::initializer_list<std::pair<double, const Vec*>> terms) {
            Vec out = y;
            for (const auto& [c, k] : terms) {
                for (int i = 0; i < 3; ++i) out[i] += h * c * (*k)[i];
            }
            return out;
        };
        const Vec& k1 = k1_;
        const Vec k2 = rhs(r + c2 * h, axpy({{a21, &k1}}));
        const Vec k3 = rhs(r + c3 * h, axpy({{a31, &k1}, {a32, &k2}}));
        const Vec k4 = rhs(r + c4 * h, axpy({{a41, &k1}, {a42, &k2}, {a43, &k3}}));
        const Vec k5 = rhs(r + c5 * h, axpy({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
        const Vec k6 =
            rhs(r + h, axpy({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
        const Vec y_new =
            axpy({{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
        const Vec k7 = rhs(r + h, y_new);

        double err = 0.0;
        double err_u = 0.0;
        for (int i = 0; i < 3; ++i) {
            const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                                  e7 * k7[i]);
            const double scale =
                cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
            const double ratio = std::abs(e) / scale;
            // a NaN estimate must reject the step, std::max would drop it
            err = std::isnan(ratio) ? std::numeric_limits<double>::infinity() : std::max(err, ratio);
            if (i == 0) err_u = std::abs(e);
        }

        if (err <= 1.0) {
            const Vec diff{y_new[0] - y[0], y_new[1] - y[1], y_new[2] - y[2]};
            for (int i = 0; i < 3; ++i) {
                dense_[0][i] = y[i];
                dense_[1][i] = diff[i];
                const double bspl = h * k1[i] - diff[i];
                dense_[2][i] = bspl;
                dense_[3][i] = diff[i] - h * k7[i] - bspl;
                dense_[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                                    d6 * k6[i] + d7 * k7[i]);
            }
            dense_r0_ = r;
            dense_h_ = h;
            previous_ = current_;
            current_ = {r + h, y_new[0], y_new[1], y_new[2]};
            if (clipped && h == r_limit - r) current_.r = r_limit;
            k1_ = k7;
            ++accepted_;
            error_sum_ += err_u;
            const double grow = err == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(err, -0.2));
            if (!clipped) h_ = h * std::max(1.0, grow);
            return;
        }
        ++rejected_;
        h_ = h * std::max(0.2, 0.9 * std::pow(err, -0.2));
    }
}

RadialState RadialIntegrator::interpolate(double r) const {
    if (accepted_ == 0) return current_;
    if (r <= previous_.r) return previous_;
    if (r >= current_.r || dense_h_ == 0.0) return current_;
    const double theta = (r - dense_r0_) / dense_h_;
    const double theta1 = 1.0 - theta;
    std::array<double, 3> y{};
    for (int i = 0; i < 3; ++i) {
        y[i] = dense_[0][i] +
               theta * (dense_[1][i] +
                        theta1 * (dense_[2][i] + theta * (dense_[3][i] + theta1 * dense_[4][i])));
    }
    return {r, y[0], y[1], y[2]};
}

AdvanceResult advance(int N, const Nonlinearity& nl, const IntegratorConfig& cfg,
                      const RadialState& s, double r_target) {
    if (!(s.r < r_target)) throw PreconditionError("advance requires s.r < r_target");
    RadialIntegrator integ(N, nl, cfg, s);
    AdvanceResult out;
    const double stride = cfg.sample_stride;
    auto next_index = static_cast<long long>(std::floor(s.r / stride)) + 1;
    while (integ.state().r < r_target) {
        integ.step(r_target);
        const double r_hi = integ.state().r;
        while (next_index * stride <= r_hi) {
            out.samples.push_back(integ.interpolate(next_index * stride));
            ++next_index;
        }
    }
    out.state = integ.state();
    out.steps = integ.accepted_steps();
    out.error_estimate = integ.accumulated_error();
    return out;
}

}  // namespace minkgs
