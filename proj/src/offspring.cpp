#include "gwperc/offspring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "gwperc/errors.hpp"

namespace gwperc {

namespace {

std::string format_param(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// Tail mass below which the shifted-Poisson cdf table stops; the residual is
// folded into the cutoff atom.
constexpr double kPoissonTailCut = 1e-15;

}  // namespace

OffspringDistribution OffspringDistribution::deterministic(int k) {
    if (k < 1) throw InvalidParameter("deterministic offspring count must be >= 1");
    OffspringDistribution d;
    d.kind_ = Kind::Deterministic;
    d.det_k_ = k;
    d.mu_ = static_cast<double>(k);
    d.sigma2_ = 0.0;
    d.descriptor_ = "det:" + std::to_string(k);
    return d;
}

OffspringDistribution OffspringDistribution::shifted_geometric(double a) {
    if (!(a > 0.0 && a < 1.0)) throw InvalidParameter("geometric parameter must lie in (0,1)");
    OffspringDistribution d;
    d.kind_ = Kind::ShiftedGeometric;
    d.geom_a_ = a;
    d.mu_ = 1.0 / a;
    d.sigma2_ = (1.0 - a) / (a * a);
    d.descriptor_ = "geom:" + format_param(a);
    return d;
}

OffspringDistribution OffspringDistribution::shifted_poisson(double lambda) {
    if (!(lambda > 0.0)) throw InvalidParameter("poisson rate must be > 0");
    if (lambda > 1e6) throw InvalidParameter("poisson rate too large (max 1e6)");
    OffspringDistribution d;
    d.kind_ = Kind::ShiftedPoisson;
    d.pois_lambda_ = lambda;
    d.mu_ = 1.0 + lambda;
    d.sigma2_ = lambda;
    d.descriptor_ = "pois1:" + format_param(lambda);

    // cdf table of Y = 1 + Poisson(lambda); per-atom log-space evaluation so
    // large rates do not underflow the recurrence.
    double cum = 0.0;
    const double log_lambda = std::log(lambda);
    for (int j = 0;; ++j) {
        const double pj = std::exp(j * log_lambda - lambda - std::lgamma(j + 1.0));
        cum += pj;
        d.atoms_.emplace_back(j + 1, pj);
        d.cum_.push_back(cum);
        if (1.0 - cum < kPoissonTailCut) break;
    }
    d.atoms_.back().second += 1.0 - cum;
    d.cum_.back() = 1.0;
    return d;
}

OffspringDistribution OffspringDistribution::table(std::vector<std::pair<int, double>> atoms) {
    return table_with_descriptor(std::move(atoms), "table:-");
}

OffspringDistribution OffspringDistribution::table_with_descriptor(
    std::vector<std::pair<int, double>> atoms, std::string descriptor) {
    if (atoms.empty()) throw InvalidPmf("table pmf is empty");
    std::sort(atoms.begin(), atoms.end());
    double sum = 0.0;
    std::vector<std::pair<int, double>> kept;
    int prev_k = -1;
    for (const auto& [k, w] : atoms) {
        if (k < 0) throw InvalidPmf("table pmf has negative support point");
        if (k == prev_k) throw InvalidPmf("table pmf has duplicate support point " + std::to_string(k));
        prev_k = k;
        if (w < 0.0) throw InvalidPmf("table pmf has negative mass at k=" + std::to_string(k));
        if (k == 0) {
            if (w > 0.0) throw InvalidPmf("table pmf puts positive mass on k=0");
            continue;
        }
        if (w > 0.0) kept.emplace_back(k, w);
        sum += w;
    }
    if (kept.empty()) throw InvalidPmf("table pmf has no positive mass on {1,2,...}");
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidPmf("table pmf sums to " + format_param(sum));

    OffspringDistribution d;
    d.kind_ = Kind::Table;
    d.descriptor_ = std::move(descriptor);
    d.atoms_ = std::move(kept);
    double cum = 0.0;
    for (auto& [k, w] : d.atoms_) {
        w /= sum;
        cum += w;
        d.cum_.push_back(cum);
    }
    d.cum_.back() = 1.0;

    double mu = 0.0;
    for (const auto& [k, w] : d.atoms_) mu += k * w;
    double var = 0.0;
    for (const auto& [k, w] : d.atoms_) var += (k - mu) * (k - mu) * w;
    d.mu_ = mu;
    d.sigma2_ = var;
    return d;
}

int OffspringDistribution::sample(RngStream& rng) const {
    switch (kind_) {
        case Kind::Deterministic:
            return det_k_;
        case Kind::ShiftedGeometric: {
            // Inversion: P(Y > k) = (1-a)^k.
            const double u = rng.next_double();
            const double v = std::log1p(-u) / std::log1p(-geom_a_);
            return 1 + static_cast<int>(std::min(v, 2147483000.0));
        }
        case Kind::ShiftedPoisson:
        case Kind::Table: {
            const double u = rng.next_double();
            const auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
            const auto idx = std::min<std::size_t>(it - cum_.begin(), cum_.size() - 1);
            return atoms_[idx].first;
        }
    }
    return 1;  // unreachable
}

double OffspringDistribution::pmf(int k) const {
    if (k < 1) return 0.0;
    switch (kind_) {
        case Kind::Deterministic:
            return k == det_k_ ? 1.0 : 0.0;
        case Kind::ShiftedGeometric:
            return geom_a_ * std::pow(1.0 - geom_a_, k - 1);
        case Kind::ShiftedPoisson:
        case Kind::Table: {
            const auto it = std::lower_bound(atoms_.begin(), atoms_.end(), std::make_pair(k, 0.0));
            if (it != atoms_.end() && it->first == k) return it->second;
            return 0.0;
        }
    }
    return 0.0;
}

bool OffspringDistribution::operator==(const OffspringDistribution& other) const {
    if (kind_ != other.kind_) return false;
    switch (kind_) {
        case Kind::Deterministic: return det_k_ == other.det_k_;
        case Kind::ShiftedGeometric: return geom_a_ == other.geom_a_;
        case Kind::ShiftedPoisson: return pois_lambda_ == other.pois_lambda_;
        case Kind::Table: return atoms_ == other.atoms_;
    }
    return false;
}

OffspringDistribution parse_distribution(const std::string& descriptor) {
    const auto colon = descriptor.find(':');
    if (colon == std::string::npos)
        throw InvalidParameter("bad distribution descriptor '" + descriptor +
                               "' (expected det:<k>, geom:<a>, pois1:<lambda> or table:<path>)");
    const std::string head = descriptor.substr(0, colon);
    const std::string rest = descriptor.substr(colon + 1);
    if (rest.empty()) throw InvalidParameter("bad distribution descriptor '" + descriptor + "'");

    if (head == "table") return load_table_csv(rest);

    std::size_t pos = 0;
    try {
        if (head == "det") {
            const int k = std::stoi(rest, &pos);
            if (pos != rest.size()) throw InvalidParameter("trailing characters in '" + descriptor + "'");
            return OffspringDistribution::deterministic(k);
        }
        if (head == "geom") {
            const double a = std::stod(rest, &pos);
            if (pos != rest.size()) throw InvalidParameter("trailing characters in '" + descriptor + "'");
            return OffspringDistribution::shifted_geometric(a);
        }
        if (head == "pois1") {
            const double lambda = std::stod(rest, &pos);
            if (pos != rest.size()) throw InvalidParameter("trailing characters in '" + descriptor + "'");
            return OffspringDistribution::shifted_poisson(lambda);
        }
    } catch (const std::invalid_argument&) {
        throw InvalidParameter("unparseable number in distribution descriptor '" + descriptor + "'");
    } catch (const std::out_of_range&) {
        throw InvalidParameter("number out of range in distribution descriptor '" + descriptor + "'");
    }
    throw InvalidParameter("unknown distribution kind '" + head + "'");
}

OffspringDistribution load_table_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidParameter("cannot open table file '" + path + "'");

    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };

    std::string line;
    if (!std::getline(in, line) || trim(line) != "k,prob")
        throw InvalidPmf("table file '" + path + "' must start with header 'k,prob'");

    std::vector<std::pair<int, double>> atoms;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw InvalidPmf("table file '" + path + "' line " + std::to_string(lineno) + ": missing comma");
        try {
            const int k = std::stoi(trim(line.substr(0, comma)));
            const double w = std::stod(trim(line.substr(comma + 1)));
            atoms.emplace_back(k, w);
        } catch (const std::exception&) {
            throw InvalidPmf("table file '" + path + "' line " + std::to_string(lineno) + ": unparseable row");
        }
    }
    return OffspringDistribution::table_with_descriptor(std::move(atoms), "table:" + path);
}

}  // namespace gwperc
