#pragma once

#include "muster/bigint.hpp"
#include "muster/bitstring.hpp"

#include <cassert>
#include <coroutine>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace muster {

// What an agent perceives at the start of a round. Node identity is never
// part of it; cardinality is the only inter-agent signal.
struct Observation {
    std::uint32_t degree = 0;
    std::optional<std::uint32_t> entry_port;  // port of last entry, empty before any move
    std::uint32_t cur_card = 1;               // agents at the current node, including self
    std::uint64_t own_label = 0;

    friend bool operator==(const Observation&, const Observation&) = default;
};

// Thrown out of a co_await when an interrupt guard fires; unwinds the
// fragment stack up to the frame that installed the guard.
struct InterruptSignal {
    std::uint64_t guard_id = 0;
};

enum class WaitKind : std::uint8_t {
    Unconditional,  // will be emitted regardless of observations
    WhileFrozen,    // committed only while the observation stream stays constant
};

// Instruction handed to the engine, plus wait-commitment bookkeeping.
struct PendingAction {
    enum class Kind : std::uint8_t { None, TakePort, Wait, Declare };
    Kind kind = Kind::None;
    std::uint32_t port = 0;
    WaitKind wait_kind = WaitKind::Unconditional;
    BigInt remaining = 0;  // wait rounds not yet consumed
    BigInt consumed = 0;   // wait rounds consumed since submission
};

class AgentRt;

// Thin facade fragments see; one per agent runtime.
class AgentCtx {
  public:
    explicit AgentCtx(AgentRt* rt) : rt_(rt) {}
    AgentRt* rt() const { return rt_; }

    const Observation& obs() const;
    const BigInt& now() const;

    // Primitive awaitables (defined below, after AgentRt).
    auto take_port(std::uint32_t port);
    auto wait(const BigInt& rounds);         // unconditional; earns full credit
    auto wait_frozen(const BigInt& rounds);  // credit valid only while observations are frozen
    auto declare();

    void annotate(const std::string& key, const std::string& value);
    void set_leader(std::uint64_t label);
    void set_size(std::uint64_t size);
    void set_inventory(std::vector<std::pair<BitString, std::uint64_t>> inv);

  private:
    AgentRt* rt_;
};

namespace detail {

struct PromiseBase {
    AgentRt* rt = nullptr;
    std::coroutine_handle<> continuation;
    std::exception_ptr error;

    // Every fragment must take AgentCtx& as its first parameter; the promise
    // captures the runtime from it. Fragments without it fail to compile.
    PromiseBase() = delete;
    template <typename... Args>
    explicit PromiseBase(AgentCtx& ctx, Args&...) : rt(ctx.rt()) {}

    std::suspend_always initial_suspend() noexcept { return {}; }
    void unhandled_exception() { error = std::current_exception(); }
};

}  // namespace detail

// Coroutine task type for agent behaviors. A fragment suspends whenever it
// submits a move instruction; awaiting a child fragment transfers control
// into it so the whole stack suspends and resumes as one.
template <typename T>
class [[nodiscard]] Frag;

namespace detail {

template <typename Promise>
struct FinalAwaiter {
    bool await_ready() noexcept { return false; }
    std::coroutine_handle<> await_suspend(std::coroutine_handle<Promise> h) noexcept;
    void await_resume() noexcept {}
};

}  // namespace detail

template <typename T>
class [[nodiscard]] Frag {
  public:
    struct promise_type : detail::PromiseBase {
        using detail::PromiseBase::PromiseBase;
        std::optional<T> value;

        Frag get_return_object() {
            return Frag(std::coroutine_handle<promise_type>::from_promise(*this));
        }
        detail::FinalAwaiter<promise_type> final_suspend() noexcept { return {}; }
        void return_value(T v) { value = std::move(v); }
    };

    Frag() = default;
    explicit Frag(std::coroutine_handle<promise_type> h) : h_(h) {}
    Frag(Frag&& other) noexcept : h_(std::exchange(other.h_, nullptr)) {}
    Frag& operator=(Frag&& other) noexcept {
        if (this != &other) {
            destroy();
            h_ = std::exchange(other.h_, nullptr);
        }
        return *this;
    }
    Frag(const Frag&) = delete;
    Frag& operator=(const Frag&) = delete;
    ~Frag() { destroy(); }

    std::coroutine_handle<promise_type> handle() const { return h_; }

    bool await_ready() const noexcept { return false; }
    std::coroutine_handle<> await_suspend(std::coroutine_handle<> parent);
    T await_resume() {
        if (h_.promise().error) std::rethrow_exception(h_.promise().error);
        return std::move(*h_.promise().value);
    }

  private:
    void destroy() {
        if (h_) {
            h_.destroy();
            h_ = nullptr;
        }
    }
    std::coroutine_handle<promise_type> h_;
};

template <>
class [[nodiscard]] Frag<void> {
  public:
    struct promise_type : detail::PromiseBase {
        using detail::PromiseBase::PromiseBase;

        Frag get_return_object() {
            return Frag(std::coroutine_handle<promise_type>::from_promise(*this));
        }
        detail::FinalAwaiter<promise_type> final_suspend() noexcept { return {}; }
        void return_void() {}
    };

    Frag() = default;
    explicit Frag(std::coroutine_handle<promise_type> h) : h_(h) {}
    Frag(Frag&& other) noexcept : h_(std::exchange(other.h_, nullptr)) {}
    Frag& operator=(Frag&& other) noexcept {
        if (this != &other) {
            destroy();
            h_ = std::exchange(other.h_, nullptr);
        }
        return *this;
    }
    Frag(const Frag&) = delete;
    Frag& operator=(const Frag&) = delete;
    ~Frag() { destroy(); }

    std::coroutine_handle<promise_type> handle() const { return h_; }

    bool await_ready() const noexcept { return false; }
    std::coroutine_handle<> await_suspend(std::coroutine_handle<> parent);
    void await_resume() {
        if (h_.promise().error) std::rethrow_exception(h_.promise().error);
    }

  private:
    void destroy() {
        if (h_) {
            h_.destroy();
            h_ = nullptr;
        }
    }
    std::coroutine_handle<promise_type> h_;
};

using Program = Frag<void>;

struct AgentOutputs {
    std::optional<std::uint64_t> leader;
    std::optional<std::uint64_t> size;
    std::vector<std::pair<BitString, std::uint64_t>> inventory;
};

// Per-agent runtime: the channel between one agent coroutine and the engine.
class AgentRt {
  public:
    using AnnotationSink =
        std::function<void(const BigInt& round, std::uint64_t label, const std::string& key,
                           const std::string& value)>;

    AgentRt() : ctx_(this) {}
    AgentRt(const AgentRt&) = delete;
    AgentRt& operator=(const AgentRt&) = delete;
    ~AgentRt() {
        // The program frame must unwind while the guard stacks still exist:
        // scope objects inside suspended coroutines pop them on destruction.
        program_ = Program();
    }

    AgentCtx& ctx() { return ctx_; }

    void install(Program program) {
        program_ = std::move(program);
        current_ = program_.handle();
    }

    // --- engine side ---------------------------------------------------

    struct Decision {
        enum class Kind : std::uint8_t { Move, Wait, Declare, Finished };
        Kind kind = Kind::Finished;
        std::uint32_t port = 0;
    };

    // Delivers the round snapshot and runs the program until it submits its
    // next instruction (or finishes). Must not be called while an earlier
    // wait still has rounds left.
    Decision demand(const Observation& obs, const BigInt& now) {
        obs_ = obs;
        now_ = &now;
        if (done_) return {Decision::Kind::Finished, 0};
        assert(pending_.kind != PendingAction::Kind::Wait || pending_.remaining == 0);
        current_.resume();
        if (done_ || !current_ || current_.done()) {
            done_ = true;
            if (program_.handle() && program_.handle().promise().error) {
                error_ = program_.handle().promise().error;
            }
            pending_ = {};
            return {Decision::Kind::Finished, 0};
        }
        switch (pending_.kind) {
            case PendingAction::Kind::TakePort:
                return {Decision::Kind::Move, pending_.port};
            case PendingAction::Kind::Wait:
                return {Decision::Kind::Wait, 0};
            case PendingAction::Kind::Declare:
                return {Decision::Kind::Declare, 0};
            case PendingAction::Kind::None:
                break;
        }
        assert(false && "fragment suspended without submitting an instruction");
        return {Decision::Kind::Finished, 0};
    }

    bool has_pending_wait() const {
        return pending_.kind == PendingAction::Kind::Wait && pending_.remaining > 0;
    }
    const PendingAction& pending() const { return pending_; }
    bool done() const { return done_; }
    std::exception_ptr error() const { return error_; }

    // Consumes k rounds from the pending wait.
    void consume_wait(const BigInt& k) {
        assert(has_pending_wait() && pending_.remaining >= k);
        pending_.remaining -= k;
        pending_.consumed += k;
        for (auto& b : budget_guards_) b.remaining -= k;
    }

    // Invalidates the frozen-wait commitment beyond already-consumed rounds.
    void invalidate_frozen() {
        if (pending_.kind == PendingAction::Kind::Wait &&
            pending_.wait_kind == WaitKind::WhileFrozen) {
            pending_.remaining = 0;
        }
    }

    void clear_pending() { pending_ = {}; }

    const AgentOutputs& outputs() const { return outputs_; }
    void set_annotation_sink(AnnotationSink sink) { annotation_sink_ = std::move(sink); }
    void set_label(std::uint64_t label) { label_ = label; }
    std::uint64_t label() const { return label_; }

    // --- fragment side --------------------------------------------------

    const Observation& obs() const { return obs_; }
    const BigInt& now() const { return *now_; }

    struct ObsGuard {
        std::uint64_t id;
        std::function<bool(const Observation&)> predicate;
    };
    struct BudgetGuard {
        std::uint64_t id;
        BigInt remaining;
    };

    std::uint64_t push_obs_guard(std::function<bool(const Observation&)> pred) {
        const std::uint64_t id = next_guard_id_++;
        obs_guards_.push_back({id, std::move(pred)});
        return id;
    }
    void pop_obs_guard(std::uint64_t id) {
        assert(!obs_guards_.empty() && obs_guards_.back().id == id);
        (void)id;
        obs_guards_.pop_back();
    }
    std::uint64_t push_budget_guard(const BigInt& instruction_budget) {
        const std::uint64_t id = next_guard_id_++;
        budget_guards_.push_back({id, instruction_budget});
        return id;
    }
    void pop_budget_guard(std::uint64_t id) {
        assert(!budget_guards_.empty() && budget_guards_.back().id == id);
        (void)id;
        budget_guards_.pop_back();
    }

    std::uint64_t push_min_tracker() {
        const std::uint64_t id = next_guard_id_++;
        // Starts empty: the minimum is over the snapshots at which
        // instructions are submitted under the tracker, nothing earlier.
        trackers_.push_back({id, UINT32_MAX});
        return id;
    }
    std::uint32_t pop_min_tracker(std::uint64_t id) {
        assert(!trackers_.empty() && trackers_.back().id == id);
        (void)id;
        const std::uint32_t m = trackers_.back().min_card;
        trackers_.pop_back();
        return m;
    }

    std::uint64_t push_entry_recorder() {
        const std::uint64_t id = next_guard_id_++;
        recorders_.push_back({id, {}});
        return id;
    }
    std::vector<std::uint32_t> pop_entry_recorder(std::uint64_t id) {
        assert(!recorders_.empty() && recorders_.back().id == id);
        (void)id;
        auto entries = std::move(recorders_.back().entries);
        recorders_.pop_back();
        return entries;
    }

    bool guards_active() const { return !obs_guards_.empty(); }
    bool trackers_active() const { return !trackers_.empty(); }

    // Called before any submission; budget exhaustion interrupts here so the
    // wrapped fragment executes exactly its budget of instructions.
    void check_submit_guards() {
        for (const auto& b : budget_guards_) {
            if (b.remaining <= 0) throw InterruptSignal{b.id};
        }
    }

    void submit(PendingAction action) {
        for (auto& t : trackers_) {
            if (obs_.cur_card < t.min_card) t.min_card = obs_.cur_card;
        }
        if (action.kind == PendingAction::Kind::Wait) {
            // Cap the commitment so a budget guard can fire exactly on time.
            for (const auto& b : budget_guards_) {
                if (b.remaining < action.remaining) action.remaining = b.remaining;
            }
            assert(action.remaining > 0);
        } else {
            for (auto& b : budget_guards_) b.remaining -= 1;
        }
        pending_ = std::move(action);
        last_was_move_ = pending_.kind == PendingAction::Kind::TakePort;
    }

    // Runs on every resume that delivers a fresh observation.
    void on_delivery() {
        if (last_was_move_) {
            for (auto& r : recorders_) r.entries.push_back(*obs_.entry_port);
            last_was_move_ = false;
        }
        for (const auto& g : obs_guards_) {
            if (g.predicate(obs_)) throw InterruptSignal{g.id};
        }
    }

    void annotate(const std::string& key, const std::string& value) {
        if (annotation_sink_) annotation_sink_(*now_, label_, key, value);
    }

    void mark_done() { done_ = true; }
    void set_current(std::coroutine_handle<> h) { current_ = h; }

    AgentOutputs outputs_;

  private:
    struct Tracker {
        std::uint64_t id;
        std::uint32_t min_card;
    };
    struct Recorder {
        std::uint64_t id;
        std::vector<std::uint32_t> entries;
    };

    AgentCtx ctx_;
    Program program_;
    std::coroutine_handle<> current_;
    Observation obs_;
    const BigInt* now_ = nullptr;
    PendingAction pending_;
    bool done_ = false;
    bool last_was_move_ = false;
    std::exception_ptr error_;
    std::uint64_t label_ = 0;
    std::uint64_t next_guard_id_ = 1;
    std::vector<ObsGuard> obs_guards_;
    std::vector<BudgetGuard> budget_guards_;
    std::vector<Tracker> trackers_;
    std::vector<Recorder> recorders_;
    AnnotationSink annotation_sink_;
};

namespace detail {

template <typename Promise>
std::coroutine_handle<> FinalAwaiter<Promise>::await_suspend(
    std::coroutine_handle<Promise> h) noexcept {
    auto& p = h.promise();
    p.rt->set_current(p.continuation);
    if (!p.continuation) {
        p.rt->mark_done();
        return std::noop_coroutine();
    }
    return p.continuation;
}

struct ActAwaiter {
    AgentRt* rt;
    PendingAction action;

    bool await_ready() {
        rt->check_submit_guards();
        return false;
    }
    void await_suspend(std::coroutine_handle<>) { rt->submit(std::move(action)); }
    void await_resume() { rt->on_delivery(); }
};

struct WaitAwaiter {
    AgentRt* rt;
    BigInt rounds;
    WaitKind kind;

    bool await_ready() {
        if (rounds <= 0) return true;
        rt->check_submit_guards();
        return false;
    }
    void await_suspend(std::coroutine_handle<>) {
        PendingAction a;
        a.kind = PendingAction::Kind::Wait;
        a.wait_kind = kind;
        a.remaining = rounds;
        rt->submit(std::move(a));
    }
    BigInt await_resume() {
        if (rounds <= 0) return 0;
        BigInt consumed = rt->pending().consumed;
        rt->clear_pending();
        rt->on_delivery();
        return consumed;
    }
};

}  // namespace detail

inline const Observation& AgentCtx::obs() const { return rt_->obs(); }
inline const BigInt& AgentCtx::now() const { return rt_->now(); }

inline auto AgentCtx::take_port(std::uint32_t port) {
    PendingAction a;
    a.kind = PendingAction::Kind::TakePort;
    a.port = port;
    return detail::ActAwaiter{rt_, std::move(a)};
}

inline auto AgentCtx::wait(const BigInt& rounds) {
    // Unconditional credit is only sound where no observation can matter.
    assert(!rt_->guards_active() && !rt_->trackers_active());
    return detail::WaitAwaiter{rt_, rounds, WaitKind::Unconditional};
}

inline auto AgentCtx::wait_frozen(const BigInt& rounds) {
    return detail::WaitAwaiter{rt_, rounds, WaitKind::WhileFrozen};
}

inline auto AgentCtx::declare() {
    PendingAction a;
    a.kind = PendingAction::Kind::Declare;
    return detail::ActAwaiter{rt_, std::move(a)};
}

inline void AgentCtx::annotate(const std::string& key, const std::string& value) {
    rt_->annotate(key, value);
}
inline void AgentCtx::set_leader(std::uint64_t label) { rt_->outputs_.leader = label; }
inline void AgentCtx::set_size(std::uint64_t size) { rt_->outputs_.size = size; }
inline void AgentCtx::set_inventory(std::vector<std::pair<BitString, std::uint64_t>> inv) {
    rt_->outputs_.inventory = std::move(inv);
}

template <typename T>
std::coroutine_handle<> Frag<T>::await_suspend(std::coroutine_handle<> parent) {
    h_.promise().continuation = parent;
    h_.promise().rt->set_current(h_);
    return h_;
}

inline std::coroutine_handle<> Frag<void>::await_suspend(std::coroutine_handle<> parent) {
    h_.promise().continuation = parent;
    h_.promise().rt->set_current(h_);
    return h_;
}

// RAII scope for observation-interrupt guards.
class GuardScope {
  public:
    GuardScope(AgentCtx& ctx, std::function<bool(const Observation&)> pred)
        : rt_(ctx.rt()), id_(rt_->push_obs_guard(std::move(pred))) {}
    ~GuardScope() { rt_->pop_obs_guard(id_); }
    GuardScope(const GuardScope&) = delete;
    GuardScope& operator=(const GuardScope&) = delete;
    std::uint64_t id() const { return id_; }
    bool fired(const InterruptSignal& s) const { return s.guard_id == id_; }

  private:
    AgentRt* rt_;
    std::uint64_t id_;
};

// RAII scope limiting the wrapped code to an exact instruction budget.
class BudgetScope {
  public:
    BudgetScope(AgentCtx& ctx, const BigInt& budget)
        : rt_(ctx.rt()), id_(rt_->push_budget_guard(budget)) {}
    ~BudgetScope() { rt_->pop_budget_guard(id_); }
    BudgetScope(const BudgetScope&) = delete;
    BudgetScope& operator=(const BudgetScope&) = delete;
    std::uint64_t id() const { return id_; }
    bool fired(const InterruptSignal& s) const { return s.guard_id == id_; }

  private:
    AgentRt* rt_;
    std::uint64_t id_;
};

// RAII scope tracking the minimum cardinality observed while instructions
// execute under it.
class MinCardScope {
  public:
    explicit MinCardScope(AgentCtx& ctx) : rt_(ctx.rt()), id_(rt_->push_min_tracker()) {}
    ~MinCardScope() {
        if (!taken_) rt_->pop_min_tracker(id_);
    }
    MinCardScope(const MinCardScope&) = delete;
    MinCardScope& operator=(const MinCardScope&) = delete;
    std::uint32_t take() {
        taken_ = true;
        return rt_->pop_min_tracker(id_);
    }

  private:
    AgentRt* rt_;
    std::uint64_t id_;
    bool taken_ = false;
};

// RAII scope capturing the ports by which the agent enters nodes.
class EntryRecorderScope {
  public:
    explicit EntryRecorderScope(AgentCtx& ctx) : rt_(ctx.rt()), id_(rt_->push_entry_recorder()) {}
    ~EntryRecorderScope() {
        if (!taken_) (void)rt_->pop_entry_recorder(id_);
    }
    EntryRecorderScope(const EntryRecorderScope&) = delete;
    EntryRecorderScope& operator=(const EntryRecorderScope&) = delete;
    std::vector<std::uint32_t> take() {
        taken_ = true;
        return rt_->pop_entry_recorder(id_);
    }

  private:
    AgentRt* rt_;
    std::uint64_t id_;
    bool taken_ = false;
};

// n poll-style waits: interrupt guards see every observation change, and the
// committed remainder still compresses under fast-forward while nobody moves.
Frag<void> wait_poll(AgentCtx& ctx, BigInt rounds);

// Waits until the agent has seen `window` consecutive rounds without any
// variation of its cardinality, the round of the latest change included.
Frag<void> wait_until_stable(AgentCtx& ctx, BigInt window);

}  // namespace muster
