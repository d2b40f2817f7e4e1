#include "gwperc/analytics.hpp"

#include <cmath>

#include "gwperc/errors.hpp"

namespace gwperc {

double geometric_sum(double x, std::int64_t terms) {
    if (terms <= 0) return 0.0;
    if (std::abs(1.0 - x) >= kSingularTol)
        return (1.0 - std::pow(x, static_cast<double>(terms))) / (1.0 - x);
    double sum = 0.0;
    double power = 1.0;
    for (std::int64_t k = 0; k < terms; ++k) {
        sum += power;
        power *= x;
    }
    return sum;
}

double geometric_sum_derivative(double x, std::int64_t terms) {
    if (terms <= 1) return 0.0;
    if (std::abs(1.0 - x) >= kSingularTol) {
        const double m = static_cast<double>(terms);
        const double num = 1.0 - m * std::pow(x, m - 1.0) + (m - 1.0) * std::pow(x, m);
        return num / ((1.0 - x) * (1.0 - x));
    }
    double sum = 0.0;
    double power = 1.0;  // x^{k-1}
    for (std::int64_t k = 1; k < terms; ++k) {
        sum += static_cast<double>(k) * power;
        power *= x;
    }
    return sum;
}

std::pair<double, double> nu_moments(const OffspringDistribution& dist, double p) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidParameter("p must lie strictly inside (0,1)");
    return {dist.mu() * p, (dist.mu() - 1.0) * p};
}

std::pair<double, double> sigma_moments(const OffspringDistribution& dist, double p) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidParameter("p must lie strictly inside (0,1)");
    const double common = p * p * dist.sigma2();
    return {p * (1.0 - p) * dist.mu() + common, p * (1.0 - p) * (dist.mu() - 1.0) + common};
}

std::pair<double, double> d_moments(double q, int r) {
    if (!(q > 0.0 && q < 1.0)) throw InvalidParameter("q must lie strictly inside (0,1)");
    if (r < 0) throw InvalidParameter("source depth must be >= 0");
    const double mean = q * geometric_sum(q, r);
    const double factorial2 = 2.0 * q * q * geometric_sum_derivative(q, r);
    return {mean, factorial2};
}

std::vector<double> upward_reach_pmf(double q, int r) {
    std::vector<double> pmf(static_cast<std::size_t>(r) + 1);
    double qk = 1.0;
    for (int k = 0; k < r; ++k) {
        pmf[k] = qk * (1.0 - q);
        qk *= q;
    }
    pmf[r] = qk;
    return pmf;
}

std::pair<double, double> subtree_moments(std::optional<std::int64_t> depth_to_boundary,
                                          double nu_plus, double sigma2_plus) {
    if (!depth_to_boundary) {
        if (nu_plus >= 1.0)
            throw SupercriticalInfinite("subtree moments are infinite on the infinite tree when mu*p >= 1");
        if (1.0 - nu_plus < kSingularTol)
            throw NearCritical("mu*p within 1e-9 of the critical point on the infinite tree");
        const double first = 1.0 / (1.0 - nu_plus);
        const double second = first * first * (1.0 + sigma2_plus / (1.0 - nu_plus));
        return {first, second};
    }

    const std::int64_t m = *depth_to_boundary;
    if (m < 0) throw InvalidParameter("depth to boundary must be >= 0");
    const double first = geometric_sum(nu_plus, m + 1);
    if (std::abs(1.0 - nu_plus) >= kSingularTol) {
        const double md = static_cast<double>(m);
        const double one_minus = 1.0 - nu_plus;
        const double second = sigma2_plus / (one_minus * one_minus) *
                                  (geometric_sum(nu_plus, 2 * m + 1) -
                                   (2.0 * md + 1.0) * std::pow(nu_plus, md)) +
                              first * first;
        return {first, second};
    }
    // Explicit recursion over the subtree depth; exact at the critical point.
    double f = 1.0;
    double s = 1.0;
    for (std::int64_t step = 0; step < m; ++step) {
        const double s_next = 1.0 + 2.0 * nu_plus * f + nu_plus * s +
                              (sigma2_plus + nu_plus * nu_plus - nu_plus) * f * f;
        f = 1.0 + nu_plus * f;
        s = s_next;
    }
    return {f, s};
}

std::pair<double, double> excluded_subtree_moments(double inner_first, double inner_second,
                                                   double nu_minus, double sigma2_minus) {
    const double first = 1.0 + nu_minus * inner_first;
    const double second = 1.0 + 2.0 * nu_minus * inner_first + nu_minus * inner_second +
                          (sigma2_minus + nu_minus * nu_minus - nu_minus) * inner_first * inner_first;
    return {first, second};
}

namespace {

// Proof-skeleton form of the truncated first moment: exact for every
// parameter value, used as the fallback near the removable singularities.
double first_moment_truncated_by_sum(const Scenario& sc) {
    const auto [nu_p, nu_m] = nu_moments(sc.dist, sc.p);
    const int r = sc.source_depth;
    const std::int64_t R = *sc.radius;
    double total = geometric_sum(nu_p, R - r + 1) + sc.q * geometric_sum(sc.q, r);
    double q_pow = sc.q;
    for (int i = 0; i < r; ++i) {
        total += nu_m * q_pow * geometric_sum(nu_p, R - r + i + 1);
        q_pow *= sc.q;
    }
    return total;
}

}  // namespace

double first_moment(const Scenario& scenario) {
    scenario.validate();
    const double mu = scenario.dist.mu();
    const double p = scenario.p;
    const double q = scenario.q;
    const int r = scenario.source_depth;
    const double nu_p = mu * p;

    if (scenario.infinite_radius()) {
        if (nu_p >= 1.0)
            throw SupercriticalInfinite("first moment is infinite on the infinite tree when mu*p >= 1");
        if (1.0 - nu_p < kSingularTol)
            throw NearCritical("mu*p within 1e-9 of the critical point on the infinite tree");
        return (1.0 + q * geometric_sum(q, r) * (1.0 - p)) / (1.0 - nu_p);
    }

    const std::int64_t R = *scenario.radius;
    const double mpq = mu * p * q;
    if (std::abs(1.0 - nu_p) < kSingularTol || std::abs(1.0 - mpq) < kSingularTol)
        return first_moment_truncated_by_sum(scenario);

    const double up_term = q * geometric_sum(q, r) * (1.0 - p);
    const double boundary = std::pow(nu_p, static_cast<double>(R - r + 1)) *
                            (1.0 - p * q * (1.0 + (mu - 1.0) * std::pow(mpq, static_cast<double>(r)))) /
                            (1.0 - mpq);
    return (1.0 + up_term - boundary) / (1.0 - nu_p);
}

double first_moment_symmetric(const Scenario& scenario) {
    scenario.validate();
    if (scenario.infinite_radius())
        throw InvalidScenario("symmetric first moment is defined for finite radius");
    if (scenario.p != scenario.q)
        throw InvalidScenario("symmetric first moment requires p == q");

    const double mu = scenario.dist.mu();
    const double p = scenario.p;
    const int r = scenario.source_depth;
    const std::int64_t R = *scenario.radius;
    const double nu_p = mu * p;
    const double mp2 = mu * p * p;
    if (std::abs(1.0 - nu_p) < kSingularTol || std::abs(1.0 - mp2) < kSingularTol)
        return first_moment_truncated_by_sum(scenario);

    const double boundary = std::pow(nu_p, static_cast<double>(R - r + 1)) *
                            (1.0 - p * p * (1.0 + (mu - 1.0) * std::pow(mp2, static_cast<double>(r)))) /
                            (1.0 - mp2);
    return (1.0 + p * (1.0 - std::pow(p, static_cast<double>(r))) - boundary) / (1.0 - nu_p);
}

double second_moment_infinite(const Scenario& scenario) {
    scenario.validate();
    if (!scenario.infinite_radius())
        throw InvalidScenario("second moment closed form is defined on the infinite tree only");
    const auto [nu_p, nu_m] = nu_moments(scenario.dist, scenario.p);
    if (nu_p >= 1.0)
        throw SupercriticalInfinite("second moment is infinite on the infinite tree when mu*p >= 1");
    if (1.0 - nu_p < kSingularTol)
        throw NearCritical("mu*p within 1e-9 of the critical point on the infinite tree");

    const auto [sig_p, sig_m] = sigma_moments(scenario.dist, scenario.p);
    const auto [src_first, src_second] = subtree_moments(std::nullopt, nu_p, sig_p);
    const auto [exc_first, exc_second] = excluded_subtree_moments(src_first, src_second, nu_m, sig_m);
    const auto [d_mean, d_fact2] = d_moments(scenario.q, scenario.source_depth);

    return src_second + (2.0 * src_first * exc_first + exc_second) * d_mean +
           exc_first * exc_first * d_fact2;
}

double first_moment_by_conditioning(const Scenario& scenario) {
    scenario.validate();
    const auto [nu_p, nu_m] = nu_moments(scenario.dist, scenario.p);
    const auto [sig_p, sig_m] = sigma_moments(scenario.dist, scenario.p);
    const int r = scenario.source_depth;
    const bool finite = !scenario.infinite_radius();

    auto boundary_of = [&](int depth) -> std::optional<std::int64_t> {
        if (!finite) return std::nullopt;
        return *scenario.radius - depth;
    };

    const auto pmf = upward_reach_pmf(scenario.q, r);
    const double src_first = subtree_moments(boundary_of(r), nu_p, sig_p).first;

    // Moments of the i-th ancestor's subtree excluding its on-path child,
    // whose inner subtree is rooted one level deeper.
    std::vector<double> exc_first(static_cast<std::size_t>(r) + 1, 0.0);
    for (int i = 1; i <= r; ++i) {
        const auto inner = subtree_moments(boundary_of(r - i + 1), nu_p, sig_p);
        exc_first[i] = excluded_subtree_moments(inner.first, inner.second, nu_m, sig_m).first;
    }

    double total = 0.0;
    for (int k = 0; k <= r; ++k) {
        double conditional = src_first;
        for (int i = 1; i <= k; ++i) conditional += exc_first[i];
        total += conditional * pmf[k];
    }
    return total;
}

double second_moment_by_conditioning(const Scenario& scenario) {
    scenario.validate();
    if (!scenario.infinite_radius())
        throw InvalidScenario("second moment assembly is defined on the infinite tree only");
    const auto [nu_p, nu_m] = nu_moments(scenario.dist, scenario.p);
    const auto [sig_p, sig_m] = sigma_moments(scenario.dist, scenario.p);
    const auto [src_first, src_second] = subtree_moments(std::nullopt, nu_p, sig_p);
    const auto [exc_first, exc_second] = excluded_subtree_moments(src_first, src_second, nu_m, sig_m);

    const int r = scenario.source_depth;
    const auto pmf = upward_reach_pmf(scenario.q, r);
    double total = 0.0;
    for (int k = 0; k <= r; ++k) {
        const double kd = static_cast<double>(k);
        const double conditional = src_second + 2.0 * src_first * kd * exc_first + kd * exc_second +
                                   kd * (kd - 1.0) * exc_first * exc_first;
        total += conditional * pmf[k];
    }
    return total;
}

double chebyshev_tail_bound(const Scenario& scenario, std::int64_t n) {
    const double first = first_moment(scenario);
    const double second = second_moment_infinite(scenario);
    if (static_cast<double>(n) <= first)
        throw InvalidThreshold("threshold must exceed the mean cluster size");
    const double gap = static_cast<double>(n) - first;
    return second / (gap * gap);
}

double diameter_tail_bound(const Scenario& scenario, int n) {
    scenario.validate();
    const double nu_p = scenario.nu_plus();
    if (nu_p >= 1.0)
        throw SupercriticalInfinite("diameter tail bound requires the subcritical phase mu*p < 1");
    if (n <= scenario.source_depth)
        throw InvalidRange("diameter tail bound is stated for n > source depth");
    const double prefactor = geometric_sum(scenario.q / nu_p, scenario.source_depth + 1);
    return prefactor * std::pow(nu_p, static_cast<double>(n));
}

std::vector<double> expected_front_profile(const Scenario& scenario, int n_max) {
    scenario.validate();
    if (n_max < 0) throw InvalidParameter("profile length must be >= 0");
    const double nu_p = scenario.nu_plus();
    const int r = scenario.source_depth;
    std::vector<double> profile(static_cast<std::size_t>(n_max) + 1);
    profile[0] = 1.0;
    double q_pow = scenario.q;  // q^{n+1}
    for (int n = 0; n < n_max; ++n) {
        profile[n + 1] = nu_p * profile[n];
        if (n < r) profile[n + 1] += (1.0 - scenario.p) * q_pow;
        q_pow *= scenario.q;
    }
    return profile;
}

ExactReport exact_report(const Scenario& scenario) {
    scenario.validate();
    ExactReport report;
    report.scenario = scenario;
    std::tie(report.nu_plus, report.nu_minus) = nu_moments(scenario.dist, scenario.p);
    std::tie(report.sigma2_plus, report.sigma2_minus) = sigma_moments(scenario.dist, scenario.p);
    std::tie(report.d_mean, report.d_factorial2) = d_moments(scenario.q, scenario.source_depth);
    report.first_moment = first_moment(scenario);
    if (scenario.infinite_radius()) {
        report.second_moment = second_moment_infinite(scenario);
        report.variance = *report.second_moment - report.first_moment * report.first_moment;
    }
    return report;
}

}  // namespace gwperc
