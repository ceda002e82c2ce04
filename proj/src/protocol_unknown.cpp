#include "muster/protocol_unknown.hpp"

#include "muster/enumerate.hpp"
#include "muster/primitives.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <stdexcept>

namespace muster {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

bool Configuration::has_label(std::uint64_t label) const {
    for (const auto& [l, v] : labeled_nodes) {
        if (l == label) return true;
    }
    return false;
}

std::uint32_t Configuration::node_of(std::uint64_t label) const {
    for (const auto& [l, v] : labeled_nodes) {
        if (l == label) return v;
    }
    throw std::out_of_range("label not in configuration");
}

std::uint64_t Configuration::rank(std::uint64_t label) const {
    std::uint64_t r = 0;
    for (const auto& [l, v] : labeled_nodes) {
        if (l < label) ++r;
    }
    return r;
}

Path Configuration::path_to_central(std::uint64_t label) const {
    auto p = lex_shortest_path(graph, node_of(label), central_node());
    return *p;  // the graph is connected by construction
}

std::uint64_t Configuration::weight() const {
    std::uint64_t w = n() + graph.edge_count();
    for (const auto& [l, v] : labeled_nodes) w += bit_length(l);
    return w;
}

std::string Configuration::canonical_encoding() const {
    const std::size_t nn = graph.node_count();
    std::vector<std::uint32_t> perm(nn);
    std::iota(perm.begin(), perm.end(), 0u);
    std::string best;
    do {
        std::string enc = plain_encode(relabel(graph, perm));
        std::vector<std::uint64_t> labels(nn, 0);
        for (const auto& [l, v] : labeled_nodes) labels[perm[v]] = l;
        for (std::uint64_t l : labels) {
            enc.push_back(':');
            enc += std::to_string(l);
        }
        if (best.empty() || enc < best) best = std::move(enc);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

Configuration scenario_configuration(const Scenario& s) {
    Configuration c;
    c.graph = s.graph;
    for (const auto& a : s.agents) c.labeled_nodes.push_back({a.label, a.start_node});
    std::sort(c.labeled_nodes.begin(), c.labeled_nodes.end());
    return c;
}

// ---------------------------------------------------------------------------
// Omega
// ---------------------------------------------------------------------------

namespace {

// Distinct ascending label sets with an exact total bit length.
void collect_label_sets(std::uint64_t remaining_bits, std::uint64_t min_label,
                        std::uint64_t max_count, std::vector<std::uint64_t>& current,
                        std::vector<std::vector<std::uint64_t>>& out) {
    if (remaining_bits == 0) {
        if (current.size() >= 2) out.push_back(current);
        return;
    }
    if (current.size() == max_count) return;
    for (std::uint64_t label = min_label; bit_length(label) <= remaining_bits; ++label) {
        current.push_back(label);
        collect_label_sets(remaining_bits - bit_length(label), label + 1, max_count, current, out);
        current.pop_back();
    }
}

}  // namespace

struct Omega::Impl {
    std::mutex mutex;
    // Deque: config() hands out references that must survive later growth.
    std::deque<Configuration> configs;
    std::vector<std::uint64_t> prefix_max_n;
    std::vector<std::uint64_t> count_by_weight;  // [w]: configs with weight <= w
    std::uint64_t next_weight = 6;               // the least possible weight

    void generate_next_weight() {
        const std::uint64_t w = next_weight++;
        std::map<std::string, Configuration> batch;
        for (std::uint64_t n = 2; n <= 6; ++n) {
            if (n + (n - 1) + 3 > w) break;  // lightest option for this size
            auto graphs = enumerate_graphs_exact(n);
            for (const auto& g : *graphs) {
                const std::uint64_t e = g.edge_count();
                if (n + e + 3 > w) continue;
                const std::uint64_t bits = w - n - e;
                std::vector<std::vector<std::uint64_t>> label_sets;
                std::vector<std::uint64_t> scratch;
                collect_label_sets(bits, 1, n, scratch, label_sets);
                for (const auto& labels : label_sets) {
                    // All injective placements of the label set.
                    std::vector<std::uint32_t> nodes(n);
                    std::iota(nodes.begin(), nodes.end(), 0u);
                    std::vector<std::uint32_t> pick(labels.size());
                    // Enumerate ordered tuples of distinct nodes.
                    std::vector<std::uint32_t> idx(labels.size(), 0);
                    std::vector<bool> used(n, false);
                    std::function<void(std::size_t)> place = [&](std::size_t depth) {
                        if (depth == labels.size()) {
                            Configuration c;
                            c.graph = g;
                            for (std::size_t t = 0; t < labels.size(); ++t) {
                                c.labeled_nodes.push_back({labels[t], pick[t]});
                            }
                            std::sort(c.labeled_nodes.begin(), c.labeled_nodes.end());
                            batch.emplace(c.canonical_encoding(), std::move(c));
                            return;
                        }
                        for (std::uint32_t v = 0; v < n; ++v) {
                            if (used[v]) continue;
                            used[v] = true;
                            pick[depth] = v;
                            place(depth + 1);
                            used[v] = false;
                        }
                    };
                    place(0);
                }
            }
        }
        for (auto& [canon, c] : batch) {
            const std::uint64_t nn = c.n();
            configs.push_back(std::move(c));
            prefix_max_n.push_back(prefix_max_n.empty() ? nn
                                                        : std::max(prefix_max_n.back(), nn));
        }
        count_by_weight.resize(w + 1, 0);
        count_by_weight[w] = configs.size();
        generated_weight = w;
    }

    std::uint64_t generated_weight = 5;

    void extend_to(std::size_t count) {
        while (configs.size() < count) generate_next_weight();
    }
};

Omega::Omega() : impl_(std::make_unique<Impl>()) {}
Omega::~Omega() = default;

std::shared_ptr<Omega> Omega::shared() {
    static std::shared_ptr<Omega> instance = std::make_shared<Omega>();
    return instance;
}

const Configuration& Omega::config(std::uint64_t h) {
    if (h == 0) throw std::invalid_argument("hypothesis indices start at 1");
    std::lock_guard<std::mutex> lock(impl_->mutex);
    impl_->extend_to(h);
    return impl_->configs[h - 1];
}

std::uint64_t Omega::index_of(const Configuration& c) {
    const std::string canon = c.canonical_encoding();
    const std::uint64_t w = c.weight();
    std::lock_guard<std::mutex> lock(impl_->mutex);
    while (impl_->generated_weight < w) impl_->generate_next_weight();
    for (std::uint64_t h = 1; h <= impl_->configs.size(); ++h) {
        if (impl_->configs[h - 1].canonical_encoding() == canon) return h;
    }
    throw std::logic_error("configuration missing from its weight class");
}

std::uint64_t Omega::max_size_up_to(std::uint64_t h) {
    std::lock_guard<std::mutex> lock(impl_->mutex);
    impl_->extend_to(h);
    return impl_->prefix_max_n[h - 1];
}

std::uint64_t Omega::count_with_weight_up_to(std::uint64_t w) {
    std::lock_guard<std::mutex> lock(impl_->mutex);
    while (impl_->generated_weight < w) impl_->generate_next_weight();
    std::uint64_t count = 0;
    for (const auto& c : impl_->configs) {
        if (c.weight() <= w) ++count;
    }
    return count;
}

// ---------------------------------------------------------------------------
// UnknownSchedule
// ---------------------------------------------------------------------------

struct UnknownSchedule::Impl {
    ProfileId profile;
    std::shared_ptr<Omega> omega;
    std::shared_ptr<const EstEntry> est;  // desk profile only
    std::mutex mutex;
    std::deque<HypothesisRow> rows;  // row() references must survive growth
    BigInt t_sum;  // sum of t_hyp over materialized rows
    std::uint64_t max_sensitive_n = 0;
    BigInt max_sensitive;
    std::uint64_t max_reach_main = 0;

    static constexpr std::size_t kEstSizeCap = 4;

    BigInt desk_sensitive(std::uint64_t n, std::uint64_t k, std::uint64_t l_sweep,
                          std::uint64_t t_est) const {
        const BigInt ensure = BigInt(2) * bigpow(n - 1, l_sweep) * 2 * l_sweep;
        return BigInt(4) * (n - 1) * k + ensure + BigInt(2) * k * t_est;
    }

    HypothesisRow make_row(std::uint64_t h) {
        const Configuration& cfg = omega->config(h);
        HypothesisRow row;
        row.h = h;
        row.n = cfg.n();
        row.k = cfg.k();
        row.m = omega->max_size_up_to(h);

        if (profile == ProfileId::Desk) {
            if (row.n > est->n_max) {
                throw std::logic_error("desk schedule needs size-learning measurements beyond n=" +
                                       std::to_string(est->n_max));
            }
            row.t_est = est->t_est[row.n];
            row.l_sweep = est->reach[row.n] + 1;
            const BigInt sens =
                desk_sensitive(row.n, row.k, row.l_sweep, est->t_est[row.n]);
            if (sens > max_sensitive) max_sensitive = sens;
            row.zeta = max_sensitive + 1;
            const std::uint64_t reach_main = (row.n - 1) + row.l_sweep;
            max_reach_main = std::max(max_reach_main, reach_main);
            row.radius = 2 * max_reach_main;
            row.t_bt = bigpow(row.n - 1, row.radius) * 2 * row.radius * (row.zeta + 1);
            // Required inequalities, re-derived from the profile's values.
            if (row.zeta <= sens) throw std::logic_error("slowdown must exceed the sensitive part");
            if (row.t_bt < BigInt(3) * row.n + sens) {
                throw std::logic_error("ball traversal bound too small for the main-part bound");
            }
            if (row.radius < reach_main + max_reach_main) {
                throw std::logic_error(
                    "ball radius below main-part reach plus prior-hypotheses reach");
            }
        } else {
            // Literal schedule: radius 4*h*m^5, slowdown 7*m^(2*m^5),
            // traversal bound 64*h*m^(7*h*m^5), turn budget n^5.
            const BigInt m = row.m;
            const BigInt m5 = bigpow(m, 5);
            row.t_est = bigpow(row.n, 5);
            row.l_sweep = (bigpow(row.n, 5) + 1).convert_to<std::uint64_t>();
            row.zeta = 7 * bigpow(m, (2 * m5).convert_to<std::uint64_t>());
            row.radius = (4 * h * m5).convert_to<std::uint64_t>();
            row.t_bt = 64 * h * bigpow(m, (7 * h * m5).convert_to<std::uint64_t>());
            const BigInt sens = BigInt(4) * (row.n - 1) * row.k +
                                BigInt(2) * bigpow(row.n - 1, row.l_sweep) * 2 * row.l_sweep +
                                BigInt(2) * row.k * row.t_est;
            if (row.zeta <= sens) throw std::logic_error("slowdown below the sensitive-part bound");
            const BigInt exact_bt =
                bigpow(row.n - 1, row.radius) * 2 * row.radius * (row.zeta + 1);
            if (row.t_bt < exact_bt) throw std::logic_error("ball traversal bound too small");
        }

        row.s = row.t_bt + t_sum;
        const BigInt first_part = 3 * row.s + 2 * row.t_bt;
        if (profile == ProfileId::Desk) {
            row.t_hyp = (row.zeta + 2) * first_part;
        } else {
            row.t_hyp = 8 * bigpow(BigInt(row.m), (2 * bigpow(BigInt(row.m), 5)).convert_to<std::uint64_t>()) *
                        first_part;
        }
        // The failed-hypothesis padding demands that everything before it
        // fits: first part plus a slowdown-spaced backtrack of its trail.
        if (row.t_hyp < first_part + (row.zeta + 1) * first_part) {
            throw std::logic_error("hypothesis budget cannot cover its own backtrack");
        }
        t_sum += row.t_hyp;
        return row;
    }
};

UnknownSchedule::UnknownSchedule(ProfileId profile, std::shared_ptr<Omega> omega)
    : impl_(std::make_unique<Impl>()) {
    impl_->profile = profile;
    impl_->omega = std::move(omega);
    if (profile == ProfileId::Desk) {
        impl_->est = PrimitivesStore::instance().est(Impl::kEstSizeCap);
    }
}

UnknownSchedule::~UnknownSchedule() = default;

ProfileId UnknownSchedule::profile() const { return impl_->profile; }
std::shared_ptr<Omega> UnknownSchedule::omega() const { return impl_->omega; }
std::size_t UnknownSchedule::est_size_cap() const { return Impl::kEstSizeCap; }

const HypothesisRow& UnknownSchedule::row(std::uint64_t h) {
    std::lock_guard<std::mutex> lock(impl_->mutex);
    while (impl_->rows.size() < h) {
        impl_->rows.push_back(impl_->make_row(impl_->rows.size() + 1));
    }
    return impl_->rows[h - 1];
}

BigInt UnknownSchedule::run_limit_through(std::uint64_t h) {
    (void)row(h);
    std::lock_guard<std::mutex> lock(impl_->mutex);
    BigInt sum = 8;
    for (std::uint64_t i = 0; i < h; ++i) sum += impl_->rows[i].t_hyp;
    return sum;
}

UnknownSchedulePtr make_unknown_schedule(ProfileId profile) {
    return std::make_shared<UnknownSchedule>(profile, Omega::shared());
}

// ---------------------------------------------------------------------------
// Fragments
// ---------------------------------------------------------------------------

namespace {

// Lexicographic odometer over {0..alphabet-1}^length.
bool next_word(std::vector<std::uint32_t>& word, std::uint32_t alphabet) {
    for (std::size_t i = word.size(); i > 0; --i) {
        if (word[i - 1] + 1 < alphabet) {
            word[i - 1] += 1;
            std::fill(word.begin() + static_cast<std::ptrdiff_t>(i), word.end(), 0u);
            return true;
        }
    }
    return false;
}

}  // namespace

Frag<bool> ball_traversal(AgentCtx& ctx, UnknownSchedulePtr sched, std::uint64_t h) {
    const HypothesisRow row = sched->row(h);
    ctx.annotate("ball_start", std::to_string(h));
    const BigInt start = ctx.now();
    const auto alphabet = static_cast<std::uint32_t>(row.n - 1);
    std::vector<std::uint32_t> word(row.radius, 0);
    std::vector<std::uint32_t> entries(row.radius, 0);
    bool more = row.radius > 0;
    while (more) {
        bool valid = true;
        std::uint64_t i = 1;
        while (valid && i <= row.radius) {
            if (ctx.obs().degree >= row.n) co_return false;
            if (word[i - 1] >= ctx.obs().degree) {
                valid = false;
            } else {
                co_await ctx.wait(row.zeta);
                co_await ctx.take_port(word[i - 1]);
                entries[i - 1] = *ctx.obs().entry_port;
                i += 1;
            }
        }
        while (i > 1) {
            i -= 1;
            co_await ctx.wait(row.zeta);
            co_await ctx.take_port(entries[i - 1]);
        }
        more = next_word(word, alphabet);
    }
    // Pad to exactly the traversal bound. The walk's length depends on the
    // start node, and the central-node watch downstream needs every agent's
    // preprocessing to end in lock-step: otherwise an agent whose own start
    // is the supposed central node can still be mid-traversal while a
    // faster teammate arrives, latches onto it and burns its confirmation
    // window before the resident ever enters its own watch.
    const BigInt spent = ctx.now() - start;
    if (spent > row.t_bt) {
        throw std::logic_error("ball traversal overran its bound at h=" + std::to_string(h));
    }
    if (spent < row.t_bt) co_await ctx.wait(row.t_bt - spent);
    ctx.annotate("ball_end", std::to_string(h));
    co_return true;
}

Frag<bool> move_to_central(AgentCtx& ctx, UnknownSchedulePtr sched, std::uint64_t h,
                           std::uint64_t label) {
    const HypothesisRow row = sched->row(h);
    const Configuration& cfg = sched->omega()->config(h);
    ctx.annotate("mtc_start", std::to_string(h));
    if (!cfg.has_label(label)) co_return false;
    const Path p = cfg.path_to_central(label);
    for (std::uint32_t port : p) {
        if (port >= ctx.obs().degree) co_return false;
        co_await ctx.take_port(port);
    }
    const BigInt bound = row.s + cfg.n();
    BigInt waited = 0;
    while (ctx.obs().cur_card != cfg.k() && waited < bound) {
        waited += co_await ctx.wait_frozen(bound - waited);
    }
    if (ctx.obs().cur_card == cfg.k()) {
        ctx.annotate("mtc_watch", std::to_string(h));
        co_await ctx.wait(bound);
        if (ctx.obs().cur_card == cfg.k()) {
            ctx.annotate("mtc_true", std::to_string(h));
            co_return true;
        }
    }
    ctx.annotate("mtc_false", std::to_string(h));
    co_return false;
}

Frag<bool> star_check(AgentCtx& ctx, UnknownSchedulePtr sched, std::uint64_t h,
                      std::uint64_t label) {
    const Configuration& cfg = sched->omega()->config(h);
    const std::uint32_t d = ctx.obs().degree;
    const std::uint64_t kh = cfg.k();
    const std::uint64_t own_rank = cfg.rank(label);
    bool ok = true;
    ctx.annotate("star_start", std::to_string(h));
    for (int t = 1; t <= 2; ++t) {
        for (std::uint64_t i = 0; i < kh; ++i) {
            if (i == own_rank && (t == 1 || ok)) {
                for (std::uint32_t j = 0; j < d; ++j) {
                    co_await ctx.take_port(j);
                    const std::uint32_t back = *ctx.obs().entry_port;
                    if (t == 1 && ctx.obs().cur_card != 1) ok = false;
                    co_await ctx.take_port(back);
                    if (ctx.obs().cur_card != kh) ok = false;
                }
            } else {
                for (std::uint32_t j = 1; j <= 2 * d; ++j) {
                    co_await ctx.wait_frozen(1);
                    if (j % 2 == 1) {
                        if (ctx.obs().cur_card != kh - 1) ok = false;
                    } else {
                        if (ctx.obs().cur_card != kh) ok = false;
                    }
                }
            }
        }
    }
    ctx.annotate("star_end", std::to_string(h) + (ok ? ":true" : ":false"));
    co_return ok;
}

Frag<bool> ensure_clean_exploration(AgentCtx& ctx, UnknownSchedulePtr sched, std::uint64_t h) {
    const HypothesisRow row = sched->row(h);
    const auto alphabet = static_cast<std::uint32_t>(row.n - 1);
    ctx.annotate("ensure_start", std::to_string(h));
    for (int t = 1; t <= 2; ++t) {
        std::vector<std::uint32_t> word(row.l_sweep, 0);
        std::vector<std::uint32_t> entries(row.l_sweep, 0);
        bool more = row.l_sweep > 0;
        while (more) {
            bool valid = true;
            std::uint64_t i = 1;
            while (valid && i <= row.l_sweep) {
                if (word[i - 1] >= ctx.obs().degree) {
                    valid = false;
                } else {
                    co_await ctx.take_port(word[i - 1]);
                    if (ctx.obs().cur_card != row.k) {
                        ctx.annotate("ensure_end", std::to_string(h) + ":false");
                        co_return false;
                    }
                    entries[i - 1] = *ctx.obs().entry_port;
                    i += 1;
                }
            }
            while (i > 1) {
                i -= 1;
                co_await ctx.take_port(entries[i - 1]);
            }
            more = next_word(word, alphabet);
        }
    }
    ctx.annotate("ensure_end", std::to_string(h) + ":true");
    co_return true;
}

Frag<bool> graph_size_check(AgentCtx& ctx, UnknownSchedulePtr sched, std::uint64_t h,
                            std::uint64_t label) {
    const HypothesisRow row = sched->row(h);
    const Configuration& cfg = sched->omega()->config(h);
    ctx.annotate("gsc_start", std::to_string(h));
    const BigInt start = ctx.now();
    bool ok = false;
    for (std::uint64_t i = 1; i <= cfg.k(); ++i) {
        if (i == cfg.rank(label) + 1) {
            ok = co_await est_plus(ctx, cfg.n(), row.t_est, sched->est_size_cap());
        }
        const BigInt target = start + BigInt(2) * i * row.t_est;
        if (ctx.now() < target) co_await ctx.wait(target - ctx.now());
    }
    ctx.annotate("gsc_end", std::to_string(h) + (ok ? ":true" : ":false"));
    co_return ok;
}

Frag<bool> hypothesis(AgentCtx& ctx, UnknownSchedulePtr sched, std::uint64_t h,
                      std::uint64_t label) {
    const HypothesisRow row = sched->row(h);
    ctx.annotate("hyp_start", std::to_string(h));
    const BigInt start = ctx.now();
    bool result = false;
    std::vector<std::uint32_t> trail;
    {
        EntryRecorderScope recorder(ctx);
        if (co_await ball_traversal(ctx, sched, h)) {
            co_await ctx.wait(row.s);
            if (co_await move_to_central(ctx, sched, h, label)) {
                if (co_await star_check(ctx, sched, h, label)) {
                    if (co_await ensure_clean_exploration(ctx, sched, h)) {
                        if (co_await graph_size_check(ctx, sched, h, label)) {
                            result = true;
                        }
                    }
                }
            }
        }
        trail = recorder.take();
    }
    if (result) {
        ctx.annotate("hyp_end", std::to_string(h) + ":true");
        co_return true;
    }
    for (auto it = trail.rbegin(); it != trail.rend(); ++it) {
        co_await ctx.wait(row.zeta);
        co_await ctx.take_port(*it);
    }
    const BigInt spent = ctx.now() - start;
    if (spent > row.t_hyp) {
        throw std::logic_error("hypothesis overran its budget at h=" + std::to_string(h));
    }
    if (spent < row.t_hyp) co_await ctx.wait(row.t_hyp - spent);
    ctx.annotate("hyp_end", std::to_string(h) + ":false");
    co_return false;
}

Frag<UnknownResult> gather_unknown_core(AgentCtx& ctx, UnknownSchedulePtr sched,
                                        std::uint64_t label) {
    std::uint64_t h = 0;
    while (true) {
        h += 1;
        if (co_await hypothesis(ctx, sched, h, label)) break;
    }
    const Configuration& cfg = sched->omega()->config(h);
    UnknownResult result{cfg.smallest_label(), cfg.n(), h};
    ctx.set_leader(result.leader);
    ctx.set_size(result.size);
    co_await ctx.declare();
    co_return result;
}

Program gather_unknown_program(AgentCtx& ctx, UnknownSchedulePtr sched, std::uint64_t label) {
    (void)co_await gather_unknown_core(ctx, sched, label);
}

}  // namespace muster
