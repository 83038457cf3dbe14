#include "rwre/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>

namespace rwre {

namespace {

constexpr double kProbTol = 1e-12;

std::string fnv_hash_hex(int b, const std::vector<SiblingAtom>& atoms) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto feed = [&h](const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 0x100000001B3ULL;
        }
    };
    feed(&b, sizeof b);
    for (const auto& atom : atoms) {
        feed(atom.values.data(), atom.values.size() * sizeof(double));
        feed(&atom.prob, sizeof atom.prob);
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace

VertexAddress VertexAddress::parent() const {
    if (digits.empty()) throw std::logic_error("root has no parent");
    VertexAddress p{digits};
    p.digits.pop_back();
    return p;
}

VertexAddress VertexAddress::child(unsigned digit) const {
    VertexAddress c{digits};
    c.digits.push_back(static_cast<std::uint8_t>(digit));
    return c;
}

std::string VertexAddress::to_string() const {
    if (digits.empty()) return "e";
    std::string s;
    s.reserve(digits.size());
    for (auto d : digits) s.push_back(static_cast<char>('0' + d));
    return s;
}

VertexAddress address_from_string(const std::string& s) {
    VertexAddress a;
    if (s == "e" || s.empty()) return a;
    for (char c : s) {
        if (c < '0' || c > '9') throw std::invalid_argument("bad address digit");
        a.digits.push_back(static_cast<std::uint8_t>(c - '0'));
    }
    return a;
}

EnvSpec::EnvSpec(int b, std::vector<SiblingAtom> atoms) : b_(b), atoms_(std::move(atoms)) {
    if (b_ < 2) throw std::invalid_argument("branching factor must be >= 2");
    if (atoms_.empty()) throw std::invalid_argument("sibling law needs at least one atom");

    double psum = 0.0;
    a_min_ = atoms_.front().values.empty() ? 0.0 : atoms_.front().values.front();
    a_max_ = a_min_;
    for (const auto& atom : atoms_) {
        if (static_cast<int>(atom.values.size()) != b_)
            throw std::invalid_argument("atom arity does not match b");
        if (atom.prob <= 0.0) throw std::invalid_argument("atom probabilities must be positive");
        psum += atom.prob;
        for (double v : atom.values) {
            if (!(v > 0.0) || !std::isfinite(v))
                throw std::invalid_argument("A-values must be positive and finite");
            a_min_ = std::min(a_min_, v);
            a_max_ = std::max(a_max_, v);
        }
    }
    if (std::fabs(psum - 1.0) > kProbTol)
        throw std::invalid_argument("atom probabilities must sum to 1");

    atom_cum_.reserve(atoms_.size());
    double acc = 0.0;
    for (const auto& atom : atoms_) {
        acc += atom.prob;
        atom_cum_.push_back(acc);
    }
    atom_cum_.back() = 1.0;

    // Coordinates must be identically distributed (marginals agree).
    std::vector<std::map<double, double>> per_coord(static_cast<std::size_t>(b_));
    for (const auto& atom : atoms_)
        for (int i = 0; i < b_; ++i) per_coord[static_cast<std::size_t>(i)][atom.values[static_cast<std::size_t>(i)]] += atom.prob;
    const auto& first = per_coord.front();
    for (const auto& coord : per_coord) {
        if (coord.size() != first.size())
            throw std::invalid_argument("sibling coordinates are not identically distributed");
        auto it = first.begin();
        for (const auto& [v, p] : coord) {
            if (v != it->first || std::fabs(p - it->second) > kProbTol)
                throw std::invalid_argument("sibling coordinates are not identically distributed");
            ++it;
        }
    }
    marginal_.assign(first.begin(), first.end());
    degenerate_ = marginal_.size() == 1;
    hash_ = fnv_hash_hex(b_, atoms_);
}

std::size_t EnvSpec::pick_atom(std::uint64_t chain_state) const {
    const double u = u01_from_bits(chain_state);
    auto it = std::upper_bound(atom_cum_.begin(), atom_cum_.end(), u);
    if (it == atom_cum_.end()) --it;
    return static_cast<std::size_t>(it - atom_cum_.begin());
}

EnvSpec make_two_point_env(int b, double a_hi, double a_lo, double q) {
    if (b < 2) throw std::invalid_argument("branching factor must be >= 2");
    if (!(a_lo > 0.0) || !(a_hi > 0.0) || a_lo > a_hi)
        throw std::invalid_argument("need 0 < a_lo <= a_hi");
    if (!(q > 0.0) || !(q < 1.0)) throw std::invalid_argument("need 0 < q < 1");
    if (b > 20) throw std::invalid_argument("product-law enumeration capped at b = 20");

    std::vector<SiblingAtom> atoms;
    const std::size_t count = std::size_t{1} << b;
    atoms.reserve(count);
    for (std::size_t mask = 0; mask < count; ++mask) {
        SiblingAtom atom;
        atom.values.reserve(static_cast<std::size_t>(b));
        atom.prob = 1.0;
        for (int i = 0; i < b; ++i) {
            const bool hi = (mask >> i) & 1u;
            atom.values.push_back(hi ? a_hi : a_lo);
            atom.prob *= hi ? q : 1.0 - q;
        }
        atoms.push_back(std::move(atom));
    }
    return EnvSpec(b, std::move(atoms));
}

EnvSpec make_critical_two_point(int b) {
    if (b < 2) throw std::invalid_argument("branching factor must be >= 2");
    const double bd = static_cast<double>(b);
    const double s = bd + std::sqrt(bd * bd - 1.0);
    return make_two_point_env(b, s, 1.0 / s, 1.0 / (s * s + 1.0));
}

EnvSpec make_constant_env(int b, double a) {
    SiblingAtom atom;
    atom.values.assign(static_cast<std::size_t>(b), a);
    atom.prob = 1.0;
    return EnvSpec(b, {std::move(atom)});
}

double psi(const EnvSpec& spec, double t) {
    if (t < 0.0) throw std::invalid_argument("psi requires t >= 0");
    double s = 0.0;
    for (const auto& [a, p] : spec.marginal()) s += p * std::pow(a, t);
    return std::log(s);
}

double psi_prime(const EnvSpec& spec, double t) {
    double s = 0.0, ds = 0.0;
    for (const auto& [a, p] : spec.marginal()) {
        const double at = std::pow(a, t);
        s += p * at;
        ds += p * at * std::log(a);
    }
    return ds / s;
}

double compute_p(const EnvSpec& spec) {
    // psi is convex (Hoelder), so golden-section bracketing converges.
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = 0.0, hi = 1.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = psi(spec, x1), f2 = psi(spec, x2);
    while (hi - lo > 1e-10) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = psi(spec, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = psi(spec, x2);
        }
    }
    const double interior = std::min(f1, f2);
    const double best = std::min({psi(spec, 0.0), psi(spec, 1.0), interior});
    return std::exp(best);
}

namespace {

double expected_A_pow(const EnvSpec& spec, double t) {
    double s = 0.0;
    for (const auto& [a, p] : spec.marginal()) s += p * std::pow(a, t);
    return s;
}

}  // namespace

std::optional<double> theta(const EnvSpec& spec) {
    const double inv_b = 1.0 / spec.b();
    if (std::fabs(compute_p(spec) - inv_b) > 1e-9) return std::nullopt;
    const double d1 = psi_prime(spec, 1.0);
    if (std::fabs(d1) <= 1e-12) return 1.0;  // psi'(1) = 0: theta = 1 by convention
    if (d1 < 0.0) return std::nullopt;

    double lo = 0.0, hi = 1.0;  // psi'(0) < 0 < psi'(1) when the minimum is interior
    for (int iter = 0; iter < 200 && hi - lo > 1e-12; ++iter) {
        const double mid = 0.5 * (lo + hi);
        (psi_prime(spec, mid) < 0.0 ? lo : hi) = mid;
    }
    const double th = 0.5 * (lo + hi);
    if (std::fabs(expected_A_pow(spec, th) - inv_b) > 1e-9)
        throw std::logic_error("theta consistency check failed: spec is not critical");
    return th;
}

std::optional<double> kappa(const EnvSpec& spec) {
    const double inv_b = 1.0 / spec.b();
    if (std::fabs(expected_A_pow(spec, 1.0) - inv_b) > 1e-9) return std::nullopt;
    if (psi_prime(spec, 1.0) >= -1e-12) return std::nullopt;
    if (spec.a_max() <= 1.0) return std::numeric_limits<double>::infinity();

    auto f = [&](double t) { return expected_A_pow(spec, t) - inv_b; };
    double hi = 2.0;
    while (f(hi) <= 0.0) {
        hi *= 2.0;
        if (hi > 1e6) return std::numeric_limits<double>::infinity();
    }
    double lo = 1.0 + 1e-6;
    while (f(lo) >= 0.0 && lo > 1.0 + 1e-15) lo = 1.0 + (lo - 1.0) / 2.0;
    for (int iter = 0; iter < 200 && hi - lo > 1e-12; ++iter) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

const char* to_string(RegimeTag tag) {
    switch (tag) {
        case RegimeTag::PositiveRecurrent: return "PositiveRecurrent";
        case RegimeTag::NullRecurrentSubdiffusive: return "NullRecurrentSubdiffusive";
        case RegimeTag::NullRecurrentSlow: return "NullRecurrentSlow";
        case RegimeTag::Transient: return "Transient";
    }
    return "?";
}

Regime classify_regime(const EnvSpec& spec) {
    constexpr double tol = 1e-9;
    Regime r;
    r.p = compute_p(spec);
    r.psi_prime_1 = psi_prime(spec, 1.0);
    const double inv_b = 1.0 / spec.b();
    if (r.p > inv_b + tol) {
        r.tag = RegimeTag::Transient;
    } else if (r.p < inv_b - tol) {
        r.tag = RegimeTag::PositiveRecurrent;
    } else if (r.psi_prime_1 < -1e-12) {
        r.tag = RegimeTag::NullRecurrentSubdiffusive;
        r.kappa = kappa(spec);
    } else {
        r.tag = RegimeTag::NullRecurrentSlow;
        r.theta = theta(spec);
    }
    return r;
}

TransitionWeights omega_from_A(const EnvSpec& spec, std::span<const double> a_values,
                               bool is_root) {
    if (static_cast<int>(a_values.size()) != spec.b())
        throw std::invalid_argument("sibling vector arity does not match b");
    const double slack = 1e-12 * spec.a_max();
    double sum = 0.0;
    for (double a : a_values) {
        if (a < spec.a_min() - slack || a > spec.a_max() + slack)
            throw std::invalid_argument("A-value outside the support bounds");
        sum += a;
    }
    TransitionWeights w;
    w.to_child.reserve(a_values.size());
    if (is_root) {
        for (double a : a_values) w.to_child.push_back(a / sum);
    } else {
        w.to_parent = 1.0 / (1.0 + sum);
        for (double a : a_values) w.to_child.push_back(a / (1.0 + sum));
    }
    return w;
}

double epsilon0(const EnvSpec& spec) {
    return std::min(1.0, spec.a_min()) / (1.0 + spec.b() * spec.a_max());
}

std::vector<double> realize_A(const EnvSpec& spec, std::uint64_t seed,
                              const VertexAddress& addr) {
    std::uint64_t state = chain_root(seed);
    for (auto d : addr.digits) state = chain_child(state, d);
    return spec.atoms()[spec.pick_atom(state)].values;
}

}  // namespace rwre
