#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rwre/rng.hpp"

namespace rwre {

// A tree vertex as the sequence of child indices from the root; the root is
// the empty sequence.
struct VertexAddress {
    std::vector<std::uint8_t> digits;

    std::size_t depth() const { return digits.size(); }
    bool is_root() const { return digits.empty(); }

    VertexAddress parent() const;
    VertexAddress child(unsigned digit) const;
    std::string to_string() const;

    bool operator==(const VertexAddress&) const = default;
};

VertexAddress address_from_string(const std::string& s);

// One atom of the joint sibling law: the A-values of the b children of a
// vertex, drawn together with probability `prob`.
struct SiblingAtom {
    std::vector<double> values;
    double prob = 0.0;
};

// The law of the sibling vector (A(x_1),...,A(x_b)) plus the branching
// factor b: the single annealed object everything else derives from.
//
// Finite support only: bounded A gives the ellipticity constant directly and
// makes psi, p, theta and kappa exactly computable.
class EnvSpec {
  public:
    EnvSpec(int b, std::vector<SiblingAtom> atoms);

    int b() const { return b_; }
    const std::vector<SiblingAtom>& atoms() const { return atoms_; }
    double a_min() const { return a_min_; }
    double a_max() const { return a_max_; }

    // Marginal law of a single coordinate, merged by value and sorted.
    const std::vector<std::pair<double, double>>& marginal() const { return marginal_; }

    // Single-atom laws are outside the paper's non-degeneracy assumption but
    // provide the closed-form fixtures (A = const); accepted with a flag.
    bool is_degenerate() const { return degenerate_; }

    std::size_t pick_atom(std::uint64_t chain_state) const;

    const std::string& hash_hex() const { return hash_; }

  private:
    int b_;
    std::vector<SiblingAtom> atoms_;
    std::vector<double> atom_cum_;
    std::vector<std::pair<double, double>> marginal_;
    double a_min_ = 0.0;
    double a_max_ = 0.0;
    bool degenerate_ = false;
    std::string hash_;
};

// Product law where each coordinate is a_hi with probability q, a_lo with
// probability 1-q, independently across siblings.
EnvSpec make_two_point_env(int b, double a_hi, double a_lo, double q);

// Two-point law with E(A) = 1/b and E(A log A) = 0: a_hi = s, a_lo = 1/s,
// q = 1/(s^2+1) with s = b + sqrt(b^2-1).
EnvSpec make_critical_two_point(int b);

// Degenerate law A = a at every vertex.
EnvSpec make_constant_env(int b, double a);

// psi(t) = log E(A^t), exact for finite support.
double psi(const EnvSpec& spec, double t);
double psi_prime(const EnvSpec& spec, double t);

// p = inf over t in [0,1] of E(A^t); golden-section search on the convex psi
// refined to 1e-10 in t, with both endpoints always evaluated.
double compute_p(const EnvSpec& spec);

// Unique theta in (0,1] with psi'(theta) = 0 and E(A^theta) = 1/b, when
// p = 1/b and psi'(1) > 0; theta = 1 by convention when psi'(1) = 0; absent
// otherwise.
std::optional<double> theta(const EnvSpec& spec);

// kappa = inf{t > 1 : E(A^t) = 1/b}, infinity when the infimum is empty;
// absent unless E(A) = 1/b and psi'(1) < 0.
std::optional<double> kappa(const EnvSpec& spec);

enum class RegimeTag {
    PositiveRecurrent,
    NullRecurrentSubdiffusive,
    NullRecurrentSlow,
    Transient,
};

const char* to_string(RegimeTag tag);

struct Regime {
    RegimeTag tag;
    double p = 0.0;
    double psi_prime_1 = 0.0;
    std::optional<double> theta;
    std::optional<double> kappa;
};

// Transient iff p > 1/b, positive recurrent iff p < 1/b; at p = 1/b the sign
// of psi'(1) splits the null recurrent case (tolerance 1e-9 on p).
Regime classify_regime(const EnvSpec& spec);

struct TransitionWeights {
    double to_parent = 0.0;  // zero at the root
    std::vector<double> to_child;
};

// Inverts A(x) = omega(parent,x)/omega(parent,grandparent): at a non-root
// vertex omega(x,parent) = 1/(1+sum A(x_i)), omega(x,x_i) = A(x_i)/(1+sum);
// the root has no parent and gets omega(e,e_i) proportional to A(e_i).
TransitionWeights omega_from_A(const EnvSpec& spec, std::span<const double> a_values,
                               bool is_root);

// Uniform lower bound on every transition weight, derived from the support.
double epsilon0(const EnvSpec& spec);

// Sibling vector at the children of `addr`: a pure function of (seed, addr)
// via the counter-based hash chain, so repeated calls agree bit-exactly and
// distinct addresses behave as independent draws.
std::vector<double> realize_A(const EnvSpec& spec, std::uint64_t seed,
                              const VertexAddress& addr);

}  // namespace rwre
