#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "simbank/engine.hpp"
#include "simbank/interventions.hpp"
#include "simbank/process.hpp"

namespace simbank {

inline constexpr std::size_t kPrefixFeatureCount = kActivityCount + 6;  // 15

// Aggregation encoding of a running case: activity counts plus the current
// observable attributes, scaled to comparable magnitudes.
inline std::vector<double> prefix_features(const CaseState& st) {
    std::vector<double> f(kPrefixFeatureCount, 0.0);
    for (const auto& ev : st.events) f[static_cast<std::size_t>(ev.activity)] += 1.0;
    f[kActivityCount + 0] = st.est_quality;
    f[kActivityCount + 1] = st.unc_quality;
    f[kActivityCount + 2] = st.amount / 1e4;
    f[kActivityCount + 3] = st.cost / 1e2;
    f[kActivityCount + 4] = st.clock / 10.0;
    f[kActivityCount + 5] = st.hq_contacted ? 1.0 : 0.0;
    return f;
}

// Slot of `action` within its intervention's canonical action list.
inline int action_slot(InterventionKind kind, ActionId action) {
    const auto& actions = intervention_spec(kind).actions;
    for (std::size_t i = 0; i < actions.size(); ++i) {
        if (actions[i] == action) return static_cast<int>(i);
    }
    throw std::invalid_argument("action does not belong to intervention");
}

// Prefix features concatenated with the one-hot candidate action.
inline std::vector<double> encode_prefix(const CaseState& st, InterventionKind kind, ActionId action) {
    std::vector<double> f = prefix_features(st);
    const int width = intervention_spec(kind).width;
    const int slot = action_slot(kind, action);
    f.resize(kPrefixFeatureCount + static_cast<std::size_t>(width), 0.0);
    f[kPrefixFeatureCount + static_cast<std::size_t>(slot)] = 1.0;
    return f;
}

// ---------------------------------------------------------------------------
// Ridge regression
// ---------------------------------------------------------------------------

namespace detail {

// In-place Cholesky solve of A x = b for symmetric positive-definite A
// (row-major n x n). Returns false when a pivot collapses.
inline bool cholesky_solve(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) diag -= a[j * n + k] * a[j * n + k];
        if (!(diag > 1e-12)) return false;
        const double root = std::sqrt(diag);
        a[j * n + j] = root;
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = v / root;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {  // L y = b
        double v = b[i];
        for (std::size_t k = 0; k < i; ++k) v -= a[i * n + k] * b[k];
        b[i] = v / a[i * n + i];
    }
    for (std::size_t ii = n; ii-- > 0;) {  // L^T x = y
        double v = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) v -= a[k * n + ii] * b[k];
        b[ii] = v / a[ii * n + ii];
    }
    return true;
}

}  // namespace detail

// Solves (X^T X + lambda I) w = X^T y.
inline std::vector<double> fit_ridge(const std::vector<std::vector<double>>& x,
                                     const std::vector<double>& y, double lambda) {
    if (x.empty() || x.size() != y.size()) throw std::invalid_argument("fit_ridge: bad shapes");
    const std::size_t d = x[0].size();
    std::vector<double> a(d * d, 0.0);
    std::vector<double> g(d, 0.0);
    for (std::size_t r = 0; r < x.size(); ++r) {
        const auto& row = x[r];
        if (row.size() != d) throw std::invalid_argument("fit_ridge: ragged rows");
        for (std::size_t i = 0; i < d; ++i) {
            g[i] += row[i] * y[r];
            for (std::size_t j = i; j < d; ++j) a[i * d + j] += row[i] * row[j];
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        a[i * d + i] += lambda;
        for (std::size_t j = 0; j < i; ++j) a[i * d + j] = a[j * d + i];
    }
    if (!detail::cholesky_solve(a, g, d)) {
        throw std::invalid_argument("rank-deficient; increase lambda");
    }
    return g;
}

// ---------------------------------------------------------------------------
// S-learner
// ---------------------------------------------------------------------------

// One training observation: the prefix at a decision point, the action taken
// there, and the case's final profit.
struct PrefixSample {
    std::vector<double> features;  // prefix_features at the decision point
    InterventionKind kind = InterventionKind::choose_procedure;
    int point_index = 0;
    ActionId action = ActionId::standard;
    double profit = 0.0;
};

// Single ridge model over (prefix, candidate action). The regression basis
// augments the one-hot action block with feature-action interaction terms, so
// the linear fit can express case-dependent action effects.
struct SLearnerModel {
    InterventionKind kind = InterventionKind::choose_procedure;
    double lambda = 1.0;
    std::vector<double> weights;  // empty until fitted
    std::optional<double> tau;    // trigger threshold, timed interventions only

    int width() const { return intervention_spec(kind).width; }
    bool fitted() const { return !weights.empty(); }

    // Quadratic terms in the attributes that drive the value curves, so the
    // ridge fit can bend where the profit surface does.
    static std::vector<double> augment(std::vector<double> f) {
        const double est = f[kActivityCount + 0];
        const double unc = f[kActivityCount + 1];
        const double amount = f[kActivityCount + 2];
        f.push_back(est * est);
        f.push_back(unc * unc);
        f.push_back(amount * amount);
        f.push_back(est * amount);
        f.push_back(est * unc);
        return f;
    }

    static std::vector<double> expand(const std::vector<double>& raw, int slot, int width) {
        const auto features = augment(raw);
        const std::size_t f = features.size();
        std::vector<double> row(1 + f + static_cast<std::size_t>(width) * (1 + f), 0.0);
        row[0] = 1.0;
        std::copy(features.begin(), features.end(), row.begin() + 1);
        const std::size_t base = 1 + f + static_cast<std::size_t>(slot) * (1 + f);
        row[base] = 1.0;
        std::copy(features.begin(), features.end(), row.begin() + static_cast<std::ptrdiff_t>(base) + 1);
        return row;
    }

    double predict(const std::vector<double>& features, int slot) const {
        if (!fitted()) throw std::logic_error("model not fitted");
        const auto row = expand(features, slot, width());
        if (row.size() != weights.size()) throw std::logic_error("feature dimension mismatch");
        double v = 0.0;
        for (std::size_t i = 0; i < row.size(); ++i) v += row[i] * weights[i];
        return v;
    }

    double predict_state(const CaseState& st, ActionId action) const {
        return predict(prefix_features(st), action_slot(kind, action));
    }

    void fit(const std::vector<PrefixSample>& samples, double lambda_in) {
        lambda = lambda_in;
        std::vector<std::vector<double>> x;
        std::vector<double> y;
        for (const auto& s : samples) {
            if (s.kind != kind) continue;
            x.push_back(expand(s.features, action_slot(kind, s.action), width()));
            y.push_back(s.profit);
        }
        if (x.empty()) throw std::invalid_argument("no training samples for intervention");
        weights = fit_ridge(x, y, lambda);
    }
};

// Deployment rule. Depth-1 interventions take the argmax of predicted profit
// (ties to the earlier action); time_contact_hq contacts when predicted
// uplift over waiting exceeds the tuned threshold.
inline ActionId s_learner_act(const SLearnerModel& model, const CaseState& st,
                              const DecisionPoint& point) {
    if (!model.fitted()) throw std::logic_error("model not fitted");
    if (point.kind != model.kind) throw std::invalid_argument("model/point intervention mismatch");
    const auto features = prefix_features(st);
    if (point.kind == InterventionKind::time_contact_hq) {
        if (!model.tau) throw std::logic_error("threshold not tuned");
        const double uplift = model.predict(features, action_slot(point.kind, ActionId::contact)) -
                              model.predict(features, action_slot(point.kind, ActionId::wait));
        return uplift > *model.tau ? ActionId::contact : ActionId::wait;
    }
    const auto& actions = point.allowed;
    std::size_t best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < actions.size(); ++i) {
        const double v = model.predict(features, action_slot(point.kind, actions[i]));
        if (v > best_v) {
            best_v = v;
            best = i;
        }
    }
    return actions[best];
}

// ---------------------------------------------------------------------------
// Threshold tuning for timed interventions
// ---------------------------------------------------------------------------

// Predicted uplifts at every timing point of the validation cases, visited by
// wait-always rollouts (which pass through all realized points).
inline std::vector<double> collect_validation_uplifts(const SLearnerModel& model,
                                                      const InterventionSequence& active,
                                                      std::int64_t base_case, int n_cases,
                                                      std::uint64_t seed, const SimConfig& cfg) {
    std::vector<double> uplifts;
    const StreamProvider streams(seed);
    for (int i = 0; i < n_cases; ++i) {
        Session session(base_case + i, active, streams, cfg);
        while (!session.done()) {
            const auto& point = session.pending();
            if (point.kind == InterventionKind::time_contact_hq) {
                const auto f = prefix_features(session.state());
                uplifts.push_back(model.predict(f, action_slot(point.kind, ActionId::contact)) -
                                  model.predict(f, action_slot(point.kind, ActionId::wait)));
                session.step(ActionId::wait);
            } else {
                session.step(s_learner_act(model, session.state(), point));
            }
        }
    }
    return uplifts;
}

// Evenly spaced quantiles of the uplift pool, the candidate thresholds.
inline std::vector<double> make_tau_grid(std::vector<double> uplifts, int grid_size) {
    if (grid_size < 1) throw std::invalid_argument("grid size must be positive");
    if (uplifts.empty()) return {0.0};
    std::sort(uplifts.begin(), uplifts.end());
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(grid_size));
    for (int i = 0; i < grid_size; ++i) {
        const double q = grid_size == 1 ? 0.0 : static_cast<double>(i) / (grid_size - 1);
        const auto idx = static_cast<std::size_t>(std::llround(q * static_cast<double>(uplifts.size() - 1)));
        grid.push_back(uplifts[idx]);
    }
    return grid;
}

// Replays the validation cases once per candidate threshold and returns the
// profit-maximizing one; ties resolve to the smallest.
inline double tune_threshold(SLearnerModel model, const InterventionSequence& active,
                             std::int64_t base_case, int n_cases, std::uint64_t seed,
                             const SimConfig& cfg, const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("threshold grid must be nonempty");
    const StreamProvider streams(seed);
    double best_tau = grid.front();
    double best_profit = -std::numeric_limits<double>::infinity();
    std::vector<double> sorted_grid = grid;
    std::sort(sorted_grid.begin(), sorted_grid.end());
    for (const double tau : sorted_grid) {
        model.tau = tau;
        double total = 0.0;
        for (int i = 0; i < n_cases; ++i) {
            Session session(base_case + i, active, streams, cfg);
            while (!session.done()) {
                session.step(s_learner_act(model, session.state(), session.pending()));
            }
            total += session.result().profit;
        }
        if (total > best_profit) {
            best_profit = total;
            best_tau = tau;
        }
    }
    return best_tau;
}

// ---------------------------------------------------------------------------
// K-means (Lloyd iterations, farthest-point start)
// ---------------------------------------------------------------------------

struct KMeansResult {
    std::vector<std::vector<double>> centroids;
    std::vector<double> inertia_history;  // inertia at each assignment step
    int iterations = 0;
};

namespace detail {

inline double sqdist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace detail

inline int nearest_centroid(const std::vector<std::vector<double>>& centroids,
                            const std::vector<double>& v) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        const double d = detail::sqdist(centroids[c], v);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    return best;
}

inline KMeansResult kmeans_fit(const std::vector<std::vector<double>>& points, int k, int max_iters,
                               std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (points.empty()) throw std::invalid_argument("no points");
    const std::size_t n = points.size();

    KMeansResult res;
    // Farthest-point start: seed picks the first centroid, after which each
    // new centroid is the point farthest from the chosen set (ties to the
    // lowest index).
    std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
    std::size_t first = static_cast<std::size_t>(detail::mix64(seed) % n);
    res.centroids.push_back(points[first]);
    while (res.centroids.size() < static_cast<std::size_t>(k)) {
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            min_d[i] = std::min(min_d[i], detail::sqdist(points[i], res.centroids.back()));
            if (min_d[i] > far_d) {
                far_d = min_d[i];
                far = i;
            }
        }
        if (far_d <= 0.0) throw std::invalid_argument("k exceeds the number of distinct vectors");
        res.centroids.push_back(points[far]);
    }

    std::vector<int> assign(n, -1);
    for (res.iterations = 0; res.iterations < max_iters; ++res.iterations) {
        bool changed = false;
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const int c = nearest_centroid(res.centroids, points[i]);
            inertia += detail::sqdist(res.centroids[static_cast<std::size_t>(c)], points[i]);
            if (c != assign[i]) {
                assign[i] = c;
                changed = true;
            }
        }
        res.inertia_history.push_back(inertia);
        if (!changed) break;
        const std::size_t dim = points[0].size();
        std::vector<std::vector<double>> sums(static_cast<std::size_t>(k), std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(assign[i]);
            ++counts[c];
            for (std::size_t j = 0; j < dim; ++j) sums[c][j] += points[i][j];
        }
        for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
            if (counts[c] == 0) continue;  // keep the old centroid
            for (std::size_t j = 0; j < dim; ++j) {
                res.centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
            }
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Tabular Q-learning
// ---------------------------------------------------------------------------

// Sparse Q-table over integer state keys and small action ids. Missing
// entries read as zero.
class TabularQ {
public:
    TabularQ(double alpha, double gamma) : alpha_(alpha), gamma_(gamma) {}

    double alpha() const { return alpha_; }
    double gamma() const { return gamma_; }
    std::size_t size() const { return table_.size(); }

    // With visit decay the step size for the n-th update of an entry is
    // min(alpha, 1/n), so entry estimates settle instead of fluctuating at a
    // constant-alpha noise floor.
    void set_visit_decay(bool on) { visit_decay_ = on; }

    double value(std::int64_t state, int action) const {
        const auto it = table_.find(pack(state, action));
        return it == table_.end() ? 0.0 : it->second.q;
    }

    // One TD step: Q(s,a) += step * (r + gamma * max_a' Q(s',a') - Q(s,a))
    // where step is alpha (or the decayed rate). `next_actions` empty means
    // terminal. Returns the applied delta.
    double update(std::int64_t state, int action, double reward, std::int64_t next_state,
                  const std::vector<int>& next_actions) {
        double bootstrap = 0.0;
        if (!next_actions.empty()) {
            bootstrap = -std::numeric_limits<double>::infinity();
            for (const int a : next_actions) bootstrap = std::max(bootstrap, value(next_state, a));
            bootstrap *= gamma_;
        }
        Cell& cell = table_[pack(state, action)];
        cell.visits += 1;
        const double step = visit_decay_ ? std::min(alpha_, 1.0 / static_cast<double>(cell.visits))
                                         : alpha_;
        const double delta = step * (reward + bootstrap - cell.q);
        cell.q += delta;
        return delta;
    }

    // Highest-valued action; ties resolve to the first listed.
    int greedy(std::int64_t state, const std::vector<int>& allowed) const {
        if (allowed.empty()) throw std::invalid_argument("no actions");
        int best = allowed[0];
        double best_v = value(state, allowed[0]);
        for (std::size_t i = 1; i < allowed.size(); ++i) {
            const double v = value(state, allowed[i]);
            if (v > best_v) {
                best_v = v;
                best = allowed[i];
            }
        }
        return best;
    }

private:
    struct Cell {
        double q = 0.0;
        std::uint32_t visits = 0;
    };

    static std::uint64_t pack(std::int64_t state, int action) {
        return (static_cast<std::uint64_t>(state) << 8) | static_cast<std::uint64_t>(action & 0xff);
    }

    double alpha_;
    double gamma_;
    bool visit_decay_ = false;
    std::unordered_map<std::uint64_t, Cell> table_;
};

// Environment concept for q_learn_run:
//   bool reset(episode)                 start an episode; false = no decisions
//   std::int64_t state_key()            current state
//   const std::vector<int>& behavior_actions()   behavior/bootstrap action set
//   QStepResult step(int action)        apply an action
struct QStepResult {
    std::int64_t state = 0;
    double reward = 0.0;
    bool done = false;
};

// Generic episodic driver with epsilon-greedy behavior; epsilon decays
// linearly across episodes. Exploration noise is keyed by (episode, step), so
// training is deterministic for a fixed provider.
template <class Env>
void q_learn_run(TabularQ& q, Env& env, std::int64_t episodes, double eps_start, double eps_end,
                 const StreamProvider& noise) {
    for (std::int64_t e = 0; e < episodes; ++e) {
        const double eps =
            episodes > 1 ? eps_start + (eps_end - eps_start) * static_cast<double>(e) /
                                            static_cast<double>(episodes - 1)
                         : eps_start;
        if (!env.reset(e)) continue;
        std::int64_t s = env.state_key();
        std::uint32_t t = 0;
        while (true) {
            const auto& behavior = env.behavior_actions();
            const StreamKey key{e, StreamPurpose::policy_noise, t};
            int a;
            if (eps > 0.0 && noise.bernoulli(key, eps, 0)) {
                a = behavior[noise.uniform_int(key, static_cast<std::uint32_t>(behavior.size()), 1)];
            } else {
                a = q.greedy(s, behavior);
            }
            const QStepResult r = env.step(a);
            if (r.done) {
                q.update(s, a, r.reward, 0, {});
                break;
            }
            q.update(s, a, r.reward, r.state, env.behavior_actions());
            s = r.state;
            ++t;
        }
    }
}

// ---------------------------------------------------------------------------
// K-means-based Q-learning over simulator sessions
// ---------------------------------------------------------------------------

// State abstraction: (prefix cluster, last activity, point index).
inline std::int64_t q_state_key(int cluster, ActivityKind last, int point_index) {
    return (static_cast<std::int64_t>(cluster) * static_cast<std::int64_t>(kActivityCount) +
            static_cast<std::int64_t>(last)) *
               8 +
           point_index;
}

// Per-dimension standardization fitted on the clustering dataset, applied
// before any centroid distance so no single raw scale dominates.
struct FeatureScaler {
    std::vector<double> mean;
    std::vector<double> sd;

    static FeatureScaler fit(const std::vector<std::vector<double>>& points) {
        FeatureScaler s;
        if (points.empty()) throw std::invalid_argument("no points to scale");
        const std::size_t dim = points[0].size();
        s.mean.assign(dim, 0.0);
        s.sd.assign(dim, 0.0);
        for (const auto& p : points) {
            for (std::size_t j = 0; j < dim; ++j) s.mean[j] += p[j];
        }
        for (std::size_t j = 0; j < dim; ++j) s.mean[j] /= static_cast<double>(points.size());
        for (const auto& p : points) {
            for (std::size_t j = 0; j < dim; ++j) {
                const double d = p[j] - s.mean[j];
                s.sd[j] += d * d;
            }
        }
        for (std::size_t j = 0; j < dim; ++j) {
            s.sd[j] = std::sqrt(s.sd[j] / static_cast<double>(points.size()));
            if (s.sd[j] < 1e-12) s.sd[j] = 1.0;  // constant feature
        }
        return s;
    }

    std::vector<double> apply(std::vector<double> v) const {
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = (v[j] - mean[j]) / sd[j];
        return v;
    }
};

struct KMeansQModel {
    InterventionSequence active;
    FeatureScaler scaler;
    KMeansResult clusters;
    TabularQ table{0.1, 1.0};
    std::vector<int> union_actions;  // global ActionId values across `active`
};

namespace detail {

inline std::vector<int> union_action_ids(const InterventionSequence& active) {
    std::vector<int> ids;
    for (const auto kind : active) {
        for (const auto a : intervention_spec(kind).actions) ids.push_back(static_cast<int>(a));
    }
    return ids;
}

inline std::vector<int> allowed_ids(const DecisionPoint& point) {
    std::vector<int> ids;
    ids.reserve(point.allowed.size());
    for (const auto a : point.allowed) ids.push_back(static_cast<int>(a));
    return ids;
}

// Session-backed environment. Actions outside the pending point's allowed set
// incur the illegal-intervention penalty and fall back to the point's first
// action so the episode can continue.
class SimQEnv {
public:
    SimQEnv(const InterventionSequence& active, const FeatureScaler& scaler,
            const KMeansResult& clusters, const StreamProvider& env_streams, const SimConfig& cfg,
            std::int64_t base_case)
        : active_(active),
          scaler_(&scaler),
          clusters_(&clusters),
          streams_(env_streams),
          cfg_(&cfg),
          base_case_(base_case),
          behavior_(union_action_ids(active)) {}

    bool reset(std::int64_t episode) {
        session_.emplace(base_case_ + episode, active_, streams_, *cfg_);
        return !session_->done();
    }

    std::int64_t state_key() const {
        const auto& st = session_->state();
        const int cluster =
            nearest_centroid(clusters_->centroids, scaler_->apply(prefix_features(st)));
        return q_state_key(cluster, st.last_activity(), session_->pending().point_index);
    }

    const std::vector<int>& behavior_actions() const { return behavior_; }

    QStepResult step(int action) {
        const auto& point = session_->pending();
        const auto ids = allowed_ids(point);
        QStepResult out;
        if (std::find(ids.begin(), ids.end(), action) == ids.end()) {
            out.reward += cfg_->q_illegal_penalty;
            session_->step(point.allowed.front());
        } else {
            session_->step(static_cast<ActionId>(action));
        }
        if (session_->done()) {
            out.done = true;
            out.reward += session_->result().profit / cfg_->q_reward_scale;
        } else {
            out.state = state_key();
        }
        return out;
    }

private:
    InterventionSequence active_;
    const FeatureScaler* scaler_;
    const KMeansResult* clusters_;
    StreamProvider streams_;
    const SimConfig* cfg_;
    std::int64_t base_case_;
    std::vector<int> behavior_;
    std::optional<Session> session_;
};

}  // namespace detail

// Full pipeline: cluster prefixes from a side dataset, then run online
// epsilon-greedy episodes against fresh cases.
inline KMeansQModel q_learn(const InterventionSequence& active, std::int64_t episodes,
                            std::uint64_t env_seed, std::uint64_t aux_seed, double delta_aux,
                            const SimConfig& cfg) {
    validate_sequence(active);
    KMeansQModel model;
    model.active = active;
    model.union_actions = detail::union_action_ids(active);

    // Side dataset: prefix vectors at the active decision points.
    std::vector<std::vector<double>> vectors;
    {
        const StreamProvider aux_streams(aux_seed);
        const auto regime = PolicyRegime::mixed(delta_aux);
        CaseObserver observer;
        observer.on_decision = [&vectors](const CaseState& st, const DecisionPoint&,
                                          const PolicyDecision&) {
            vectors.push_back(prefix_features(st));
        };
        for (int i = 0; i < cfg.aux_cases; ++i) {
            simulate_case(kAuxCaseBase + i, active, regime, aux_streams, cfg, &observer);
        }
    }
    model.scaler = FeatureScaler::fit(vectors);
    for (auto& v : vectors) v = model.scaler.apply(std::move(v));
    model.clusters = kmeans_fit(vectors, cfg.kmeans_k, cfg.kmeans_max_iters, aux_seed);

    model.table = TabularQ(cfg.q_alpha, cfg.q_gamma);
    model.table.set_visit_decay(true);
    const StreamProvider env_streams(env_seed);
    const StreamProvider noise(derive_seed(env_seed, 0x9e5u));
    detail::SimQEnv env(active, model.scaler, model.clusters, env_streams, cfg, 0);
    q_learn_run(model.table, env, episodes, cfg.q_eps_start, cfg.q_eps_end, noise);
    return model;
}

// Greedy deployment of a learned table: argmax over the point's allowed
// actions only.
inline ActionId kmeans_q_act(const KMeansQModel& model, const CaseState& st,
                             const DecisionPoint& point) {
    const int cluster =
        nearest_centroid(model.clusters.centroids, model.scaler.apply(prefix_features(st)));
    const auto key = q_state_key(cluster, st.last_activity(), point.point_index);
    return static_cast<ActionId>(model.table.greedy(key, detail::allowed_ids(point)));
}

}  // namespace simbank
