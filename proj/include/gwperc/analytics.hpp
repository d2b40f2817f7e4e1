#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "gwperc/offspring.hpp"
#include "gwperc/simulator.hpp"

namespace gwperc {

/// Every closed-form quantity for a scenario. second_moment and variance are
/// present only on the infinite tree in the subcritical phase.
struct ExactReport {
    Scenario scenario;
    double first_moment = 0.0;
    std::optional<double> second_moment;
    std::optional<double> variance;
    double nu_plus = 0.0;
    double nu_minus = 0.0;
    double sigma2_plus = 0.0;
    double sigma2_minus = 0.0;
    double d_mean = 0.0;
    double d_factorial2 = 0.0;
};

/// Parameters within this distance of a removable singularity are evaluated
/// by explicit summation instead of the closed form.
inline constexpr double kSingularTol = 1e-9;

/// sum_{k=0}^{terms-1} x^k. Closed form (1-x^terms)/(1-x) when |1-x| >=
/// kSingularTol, explicit loop otherwise. Zero for terms <= 0.
double geometric_sum(double x, std::int64_t terms);

/// sum_{k=1}^{terms-1} k x^{k-1}, the derivative of geometric_sum in x,
/// with the same guarded evaluation.
double geometric_sum_derivative(double x, std::int64_t terms);

/// (nu_plus, nu_minus) = (mu p, (mu - 1) p): mean wet offspring of a wet
/// vertex, with and without a designated on-path child.
std::pair<double, double> nu_moments(const OffspringDistribution& dist, double p);

/// (Sigma2_plus, Sigma2_minus) = (p(1-p)mu + p^2 sigma^2,
/// p(1-p)(mu-1) + p^2 sigma^2), by the law of total variance.
std::pair<double, double> sigma_moments(const OffspringDistribution& dist, double p);

/// (E(D), E(D(D-1))) for the upward reach D with pmf q^k(1-q), k < r, and
/// q^r at k = r.
std::pair<double, double> d_moments(double q, int r);

/// pmf of D as a vector of length r + 1.
std::vector<double> upward_reach_pmf(double q, int r);

/// First and second moment of the size of the downward wet subtree rooted at
/// a wet vertex with depth_to_boundary = R - j levels below it (nullopt =
/// infinite tree, requires nu_plus < 1).
std::pair<double, double> subtree_moments(std::optional<std::int64_t> depth_to_boundary,
                                          double nu_plus, double sigma2_plus);

/// Moments of the subtree of a path vertex excluding its on-path child's
/// subtree, given the inner subtree's moments.
std::pair<double, double> excluded_subtree_moments(double inner_first, double inner_second,
                                                   double nu_minus, double sigma2_minus);

/// E_r(S): mean cluster size. Truncated trees use the radius-R closed form
/// (explicit-sum fallback near mu*p = 1 or mu*p*q = 1); the infinite tree
/// requires the subcritical phase and throws SupercriticalInfinite or
/// NearCritical otherwise.
double first_moment(const Scenario& scenario);

/// The p = q specialization of the truncated first moment, evaluated from
/// its own displayed formula. Requires finite radius and p == q.
double first_moment_symmetric(const Scenario& scenario);

/// E_r(S^2) on the infinite tree, subcritical phase only.
double second_moment_infinite(const Scenario& scenario);

/// The same two moments assembled by direct summation over the upward reach
/// D (conditional expectation times pmf, term by term). Independent code
/// paths used to cross-check the closed forms.
double first_moment_by_conditioning(const Scenario& scenario);
double second_moment_by_conditioning(const Scenario& scenario);

/// Chebyshev bound on P(S > n): E(S^2) / (n - E(S))^2. Infinite radius,
/// subcritical, n > E(S) (InvalidThreshold otherwise).
double chebyshev_tail_bound(const Scenario& scenario, std::int64_t n);

/// Bound on P(diam >= 2n) for n > r in the subcritical phase:
/// (sum_{k=0}^{r} (q/(mu p))^k) * (mu p)^n, the geometric prefactor handling
/// q = mu p exactly.
double diameter_tail_bound(const Scenario& scenario, int n);

/// E_r(X_0 .. X_{n_max}) for the front profile X_n (wet vertices at distance
/// n from the highest wet vertex), via the linear recursion seeded at
/// E_r(X_0) = 1.
std::vector<double> expected_front_profile(const Scenario& scenario, int n_max);

/// Assembles the full report for a scenario.
ExactReport exact_report(const Scenario& scenario);

}  // namespace gwperc
