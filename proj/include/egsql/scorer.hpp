#pragma once

#include <cmath>
#include <concepts>
#include <set>
#include <string>
#include <vector>

#include "egsql/actions.hpp"
#include "egsql/errors.hpp"
#include "egsql/table.hpp"

namespace egsql {

struct ScoredAction {
    Action action;
    double prob;
};

// Contract every decoder-pluggable scorer satisfies. step() must return a
// probability distribution over actions legal at the state's grammar position.
template <typename S>
concept ScorerContract = requires(const S& s, const typename S::State& st, const Action& a, const Example& ex,
                                  const Table& t) {
    typename S::State;
    { s.init(ex, t) } -> std::same_as<typename S::State>;
    { s.step(st) } -> std::same_as<std::vector<ScoredAction>>;
    { s.advance(st, a) } -> std::same_as<typename S::State>;
};

inline std::vector<ScoredAction> uniform_over(const std::vector<Action>& actions) {
    std::vector<ScoredAction> out;
    out.reserve(actions.size());
    double p = actions.empty() ? 0.0 : 1.0 / static_cast<double>(actions.size());
    for (const auto& a : actions) out.push_back({a, p});
    return out;
}

// Enforced at every decode step: legality, no duplicates, probabilities in
// [0, 1], total mass 1 within tolerance.
inline void validate_distribution(const std::vector<ScoredAction>& dist, const GrammarCursor& cur, int ncols,
                                  int qlen, const GrammarLimits& lim, double tol = 1e-6) {
    if (dist.empty()) throw ScorerViolation(std::string("empty distribution at position ") + position_tag(cur.pos));
    double sum = 0;
    std::set<std::string> seen;
    for (const auto& sa : dist) {
        if (!std::isfinite(sa.prob) || sa.prob < 0)
            throw ScorerViolation("probability " + std::to_string(sa.prob) + " for action " + encode_action(sa.action));
        if (!action_legal(cur, sa.action, ncols, qlen, lim))
            throw ScorerViolation("illegal action " + encode_action(sa.action) + " at position " +
                                  position_tag(cur.pos));
        if (!seen.insert(encode_action(sa.action)).second)
            throw ScorerViolation("duplicate action " + encode_action(sa.action) + " in distribution");
        sum += sa.prob;
    }
    if (std::abs(sum - 1.0) > tol)
        throw ScorerViolation("distribution mass " + std::to_string(sum) + " at position " + position_tag(cur.pos));
}

}  // namespace egsql
