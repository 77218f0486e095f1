#pragma once

#include <cstdint>
#include <memory>

#include "json.hpp"

namespace crmdp {

/**
 * A stateful decision-maker. Each cycle it is shown the current state and
 * that state's observed reward, and must return an action. Agents never see
 * true rewards.
 *
 * reset(seed) must restore a freshly-constructed agent with the given RNG
 * stream, so the same seed always yields the same behavior.
 */
class Agent {
  public:
    virtual ~Agent() = default;
    virtual void reset(uint64_t seed) = 0;
    virtual int act(int state, double observed_reward) = 0;

    /// Opaque diagnostic record (phase, committed state, learned tables, ...).
    virtual nlohmann::json snapshot() const { return nlohmann::json::object(); }
};

using AgentPtr = std::unique_ptr<Agent>;

/// Plays one action forever.
class FixedActionAgent final : public Agent {
  public:
    explicit FixedActionAgent(int action) : action_(action) {}
    void reset(uint64_t) override {}
    int act(int, double) override { return action_; }
    nlohmann::json snapshot() const override { return {{"type", "fixed"}, {"action", action_}}; }

  private:
    int action_;
};

} // namespace crmdp
