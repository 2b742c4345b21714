#pragma once

#include "reflex/events.hpp"
#include "reflex/rng.hpp"
#include "reflex/types.hpp"

#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <vector>

namespace reflex {

enum class ActionKind : std::uint8_t { OneShot, Periodic };

// Deterministic discrete-event scheduler. Every behavior in a simulation runs
// inside the dispatch of one of its events, and the dispatch order is a pure
// function of the scheduled set: minimal (due, seq) first, clock advanced to
// the due time of whatever is dispatched.
//
// There is no fixed time step. Continuous quantities (membrane decay) are
// integrated lazily at event arrival from the elapsed interval, which keeps
// the dynamics exact without slicing time.
class Engine {
public:
    using Handler = std::function<void(const Event &)>;
    using ActionFn = std::function<void(SimTime)>;

    explicit Engine(std::uint64_t seed) : rng_(seed) {}

    SimTime now() const { return now_; }
    Rng &rng() { return rng_; }

    // Handler invoked for every dispatched event that is not an ActionTick.
    void set_handler(Handler handler) { handler_ = std::move(handler); }

    std::uint64_t schedule(SimTime due, AgentId target, EventPayload payload) {
        if (due < now_) {
            throw DomainError("schedule: event due " + std::to_string(due) +
                              " lies before engine clock " + std::to_string(now_));
        }
        const std::uint64_t seq = next_seq_++;
        queue_.push(Event{due, seq, target, std::move(payload)});
        return seq;
    }

    std::uint64_t schedule(const Dispatch &d) { return schedule(d.due, d.target, d.payload); }

    // Registers an action owned by `owner`. A periodic action re-enqueues
    // exactly once per execution at due + interval until cancelled.
    ActionId add_action(AgentId owner, SimTime first_due, ActionFn fn,
                        std::optional<SimTime> interval = std::nullopt) {
        if (interval.has_value() && !(*interval > 0.0)) {
            throw DomainError("add_action: periodic interval must be > 0");
        }
        const ActionId id = next_action_++;
        ActionRecord rec;
        rec.kind = interval.has_value() ? ActionKind::Periodic : ActionKind::OneShot;
        rec.interval = interval.value_or(0.0);
        rec.owner = owner;
        rec.fn = std::move(fn);
        actions_.emplace(id, std::move(rec));
        schedule(first_due, owner, ActionTick{id});
        return id;
    }

    void cancel_action(ActionId id) { actions_.erase(id); }

    bool empty() const { return queue_.empty(); }
    std::size_t pending() const { return queue_.size(); }

    // Dispatches exactly the minimal (due, seq) event and advances the clock
    // to its due time. Returns nothing on an empty queue, clock untouched.
    std::optional<Event> step() {
        if (queue_.empty()) {
            return std::nullopt;
        }
        Event ev = queue_.top();
        queue_.pop();
        now_ = ev.due;
        dispatch(ev);
        return ev;
    }

    // Dispatches every event with due <= t_end, then parks the clock at t_end.
    std::size_t run_until(SimTime t_end) {
        if (t_end < now_) {
            throw DomainError("run_until: t_end lies before engine clock");
        }
        std::size_t dispatched = 0;
        while (!queue_.empty() && queue_.top().due <= t_end) {
            step();
            ++dispatched;
        }
        now_ = t_end;
        return dispatched;
    }

private:
    struct ActionRecord {
        ActionKind kind = ActionKind::OneShot;
        SimTime interval = 0.0;
        AgentId owner = 0;
        ActionFn fn;
    };

    void dispatch(const Event &ev) {
        if (const auto *tick = std::get_if<ActionTick>(&ev.payload)) {
            auto it = actions_.find(tick->action);
            if (it == actions_.end()) {
                return; // cancelled while queued
            }
            if (it->second.kind == ActionKind::Periodic) {
                schedule(ev.due + it->second.interval, it->second.owner, ActionTick{tick->action});
            } else {
                // Detach the one-shot before running so the callback may
                // re-register under a fresh id.
                ActionFn fn = std::move(it->second.fn);
                actions_.erase(it);
                if (fn) {
                    fn(now_);
                }
                return;
            }
            if (it->second.fn) {
                it->second.fn(now_);
            }
            return;
        }
        if (handler_) {
            handler_(ev);
        }
    }

    SimTime now_ = 0.0;
    std::uint64_t next_seq_ = 0;
    ActionId next_action_ = 1;
    std::priority_queue<Event, std::vector<Event>, EventAfter> queue_;
    std::map<ActionId, ActionRecord> actions_;
    Handler handler_;
    Rng rng_;
};

} // namespace reflex
