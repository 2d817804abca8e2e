#pragma once

#include "rirs/norms.hpp"
#include "rirs/risk.hpp"
#include "rirs/signed_variable.hpp"
#include "rirs/step_variable.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rirs {

// ---------------------------------------------------------------------------
// Fatou probes
// ---------------------------------------------------------------------------

struct FatouProbeReport {
    std::string measure;
    std::string variable;
    std::string sequence_kind;  // "truncation" | "lemma31:same" | "lemma31:pospart"
    std::vector<double> levels;
    std::vector<double> rho_values;
    double rho_at_x = 0.0;
    double liminf_estimate = 0.0;
    double gap = 0.0;
    std::string verdict;  // FATOU_FAILS | FATOU_HOLDS | INCONCLUSIVE
    std::string note;
};

/// Truncation sequence X_n = (X v -n) ^ n along the given levels.
FatouProbeReport fatou_probe_truncation(const RiskMeasure& rho, const SignedVariable& x,
                                        const std::vector<double>& levels, double tol = 1e-6);

/// Y_n = X 1_{A_n^c} + c_n 1_{A_n^c} + Y 1_{A_n} with Y = X or Y = X^+ and
/// A_n the mass-a_n sets hugging the negative singularity. For measures
/// declared decreasing, every rho(Y_n) <= rho(X) is asserted.
FatouProbeReport fatou_probe_lemma31(const RiskMeasure& rho, const SignedVariable& x,
                                     Lemma31Target target, const std::vector<double>& c_seq,
                                     const std::vector<Rat>& a_seq, double tol = 1e-6);

// ---------------------------------------------------------------------------
// AOCEA certificate for Orlicz spaces
// ---------------------------------------------------------------------------

struct AoceaCertificate {
    double epsilon = 0.0;
    double eta = 0.0;
    unsigned k = 0;
    std::vector<unsigned> indices;        // n_1..n_k
    std::vector<double> tail_integrals;   // E[Phi(eta X 1_{A_{n_i}})]
    double budget = 0.0;                  // sum of the tail integrals
    double certified_bound = 0.0;         // epsilon, from the budget argument
    double reevaluated_norm = 0.0;        // independent Luxemburg of Z
    Profile z;                            // k disjoint scaled copies

    bool invariants_ok() const {
        return k > 0 && static_cast<double>(k) * eta * epsilon >= 1.0 - 1e-12 &&
               budget <= 1.0 + 1e-12 && reevaluated_norm <= certified_bound * (1.0 + 1e-9);
    }
};

/// Constructive Prop.-2.4 witness: eta with E[Phi(eta X)] < infinity,
/// k = ceil(1/(eta eps)), a uniform tail index n* with budget <= 1, and
/// Z = (1/k) sum of disjoint copies of X 1_{A_{n*}} with ||Z|| <= eps
/// certified twice (budget bound and direct Luxemburg bisection).
AoceaCertificate aocea_orlicz_certificate(const AnalyticRearrangement& x,
                                          const OrliczFunction& phi, double eps);

// ---------------------------------------------------------------------------
// Appendix B: exact inequality chain and the separation search
// ---------------------------------------------------------------------------

struct AppendixBChainRow {
    unsigned m = 0;
    Rat lower_partial;   // certified lower bound of ∫_0^{c_m} X*
    Rat lower_target;    // 1/((m+1) 2^m)
    bool lower_ok = false;
    Rat upper_bound;     // certified upper bound of ∫_0^{s_m} X*
    Rat upper_target;    // 3/(m 2^m)
    bool upper_ok = false;
    double tau_lo = 0.0;  // m 2^m ∫_0^{s_m} X* bracket
    double tau_hi = 0.0;
};

/// Exact rational verification of the two Appendix-B inequalities for each
/// m in [m_lo, m_hi]; any violation throws EvaluationError.
std::vector<AppendixBChainRow> verify_appendix_b_chain(unsigned m_lo, unsigned m_hi);

struct AoceaSearchReport {
    unsigned trials = 0;
    unsigned n_head = 0;
    unsigned max_copies = 0;
    std::uint64_t seed = 0;
    double min_distance = 0.0;
    std::size_t argmin_trial = 0;
    unsigned argmin_copies = 0;
    double control_min_distance_l1 = 0.0;  // same candidates under the L1 norm
    std::vector<double> sample_distances;  // first few, for the report
};

/// Seeded search over convex combinations of equidistributed copies of the
/// staircase (head pieces relocated, the analytic tail moved as one
/// order-preserving block), minimizing d(Y, X_a) in the Appendix-B norm.
AoceaSearchReport aocea_search_appendix_b(unsigned n_head, unsigned max_copies, unsigned trials,
                                          std::uint64_t seed, unsigned threads = 1);

// ---------------------------------------------------------------------------
// Partition averaging (Lemmas 4.1 and 4.2)
// ---------------------------------------------------------------------------

struct BlockwiseAverageResult {
    StepVariable x_prime;
    StepVariable v;          // at step scale V = X' with distance 0
    std::vector<Rat> lambdas;
    double epsilon = 0.0;    // honored trivially; recorded
    double distance = 0.0;
    bool blockwise_equidistributed = false;
    bool conditional_mean_preserved = false;
};

/// X' = sum lambda_i X_i with every X_i block-wise equidistributed with X;
/// E[X'|pi] = E[X|pi] exactly.
BlockwiseAverageResult blockwise_equidistributed_average(const StepVariable& x,
                                                         const Partition& pi, double eps,
                                                         const NormSpec& norm, unsigned copies,
                                                         std::uint64_t seed);

struct PairedSwapReport {
    unsigned m1 = 0, m2 = 0;
    std::size_t pairs = 0;
    bool each_pair_equidistributed = false;   // X_(tau,sigma) ~ X'
    bool eq42_equidistributed = false;        // X_(tau,sigma) - V_(tau,sigma) ~ X' - V
    bool v_average_exact = false;             // avg V_(tau,sigma) = E[V|pi]
    bool final_bound_holds = false;           // ||avg X - E[X|pi]|| <= (C+1)||X'-V||
    double bound_lhs = 0.0;
    double bound_rhs = 0.0;
    double constant_used = 0.0;
};

/// Lemma 4.2 machinery on a two-block partition: V must be constant on the
/// equal-mass positional subdivision of each block into m1 (resp. m2)
/// sub-blocks. Enumerates all (tau, sigma) pairs when m1! m2! <= max_pairs,
/// otherwise a seeded sample.
PairedSwapReport paired_swap_average(const StepVariable& x_prime, const StepVariable& v,
                                     const Partition& pi, unsigned m1, unsigned m2,
                                     const NormSpec& norm, std::size_t max_pairs = 40320,
                                     std::uint64_t seed = 1);

}  // namespace rirs
