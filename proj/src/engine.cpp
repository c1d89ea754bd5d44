#include "lifespace/engine.hpp"

#include <json.hpp>

namespace lifespace {

using Json = nlohmann::ordered_json;

std::string_view to_string(ViewMode m) { return m == ViewMode::observable ? "observable" : "unobservable"; }

std::optional<ViewMode> parse_view_mode(std::string_view s) {
    if (s == "observable") return ViewMode::observable;
    if (s == "unobservable") return ViewMode::unobservable;
    return std::nullopt;
}

bool visible_in(ViewMode mode, const SimEvent& event) {
    return mode == ViewMode::observable || event.as<ev::UserExchange>() != nullptr;
}

std::string envelope_json(const StreamEnvelope& envelope) {
    Json j;
    j["type"] = "event";
    j["visible"] = envelope.visible;
    j["event"] = Json::parse(to_json_line(envelope.event));
    return j.dump();
}

std::string expression_json(const SimState& state) {
    Json agents = Json::object();
    for (const auto& a : state.roster.agents()) agents[a.profile.id] = std::string(to_string(a.state.mode));
    Json j;
    j["type"] = "expression";
    j["tick"] = state.tick;
    j["agents"] = std::move(agents);
    return j.dump();
}

namespace {

Json pos(Position p) { return Json::array({p.x, p.y}); }

template <typename T>
Json opt(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}

Json map_view(const WorldMap& map) {
    Json rows = Json::array();
    for (int y = 0; y < map.height(); ++y) {
        std::string row;
        for (int x = 0; x < map.width(); ++x) row += map.walkable({x, y}) ? '.' : '#';
        rows.push_back(row);
    }
    Json scenes = Json::array();
    for (const auto& s : map.scenes()) {
        Json tiles = Json::array();
        for (auto t : s.tiles) tiles.push_back(pos(t));
        scenes.push_back({{"id", s.id},
                          {"label", s.label},
                          {"category", std::string(to_string(s.category))},
                          {"anchor", pos(scene_anchor(map, s.id))},
                          {"tiles", std::move(tiles)}});
    }
    return {{"width", map.width()}, {"height", map.height()}, {"rows", std::move(rows)}, {"scenes", std::move(scenes)}};
}

}  // namespace

class Engine::Handle final : public SimHandle {
public:
    explicit Handle(Engine& engine) : engine_(engine) {}

    AgentProfile profile(const AgentId& agent) const override { return engine_.snapshot()->roster.at(agent).profile; }

    ContextBundle context(const AgentId& agent) const override {
        auto snap = engine_.snapshot();
        auto it = snap->memories.find(agent);
        if (it == snap->memories.end()) throw UnknownAgentError("unknown agent '" + agent + "'");
        return assemble_context(it->second);
    }

    const WorldMap& map() const override { return engine_.map_; }
    std::uint64_t current_tick() const override { return engine_.snapshot()->tick; }
    CognitionProvider& conversationalist() override { return *engine_.providers_.conversationalist; }
    bool chat_holds_agent() const override { return engine_.config_.chat_holds_agent; }

    void inject_user_exchange(const AgentId& agent, const MemoryEvent& exchange, const std::string& session,
                              const std::string& user_text, const std::string& reply) override {
        engine_.snapshot()->roster.at(agent);
        validate_memory_event(exchange);
        if (exchange.track != Track::interaction)
            throw TrackMismatchError("user exchanges belong to the interaction track");
        engine_.enqueue([=](Simulation& sim) { sim.inject_user_exchange(agent, exchange, session, user_text, reply); });
    }

    void request_replan(const AgentId& agent, const PlanDecision& decision) override {
        engine_.snapshot()->roster.at(agent);
        if (!engine_.map_.has_scene(decision.destination))
            throw UnknownSceneError("unknown scene '" + decision.destination + "'");
        engine_.enqueue([=](Simulation& sim) { sim.request_replan(agent, decision); });
    }

    void set_chat_hold(const AgentId& agent, bool held) override {
        engine_.enqueue([=](Simulation& sim) { sim.set_chat_hold(agent, held); });
    }

private:
    Engine& engine_;
};

Engine::Engine(WorldMap map, SimState state, SimConfig config, Providers providers)
    : map_(std::move(map)), config_(config), providers_(std::move(providers)) {
    sim_ = std::make_unique<Simulation>(map_, std::move(state), config_, providers_);
    published_ = std::make_shared<const SimState>(sim_->state());
    log_base_ = published_->next_event_seq - 1;
    handle_ = std::make_unique<Handle>(*this);
}

SimHandle& Engine::handle() { return *handle_; }

Engine::~Engine() {
    try {
        stop();
    } catch (...) {
    }
}

void Engine::enqueue(std::function<void(Simulation&)> input) {
    std::lock_guard lock(inbox_mutex_);
    inbox_.push_back(std::move(input));
}

void Engine::attach_log(std::ostream& out) {
    std::lock_guard lock(sim_mutex_);
    log_writer_.emplace(out);
    log_writer_->header(map_, config_, sim_->state());
}

void Engine::start(bool background) {
    if (started_.exchange(true)) throw PreconditionError("engine already started");
    background_ = background;
    stopping_ = false;
    if (background) thread_ = std::thread([this] { loop(); });
}

void Engine::stop() {
    if (!started_) return;
    {
        std::lock_guard lock(published_mutex_);
        stopping_ = true;
    }
    published_cv_.notify_all();
    if (thread_.joinable()) thread_.join();
    started_ = false;
    background_ = false;
    std::lock_guard lock(sim_mutex_);
    if (log_writer_) {
        log_writer_->trailer(sim_->state());
        log_writer_.reset();
    }
}

void Engine::step(std::uint64_t ticks) {
    if (!started_) throw EngineNotStartedError("engine not started");
    if (background_) throw PreconditionError("engine is ticking in the background");
    for (std::uint64_t i = 0; i < ticks; ++i) tick_once();
}

void Engine::loop() {
    using clock = std::chrono::steady_clock;
    auto next = clock::now();
    while (!stopping_) {
        tick_once();
        next += std::chrono::milliseconds(config_.tick_ms);
        std::unique_lock lock(published_mutex_);
        if (config_.tick_ms > 0) {
            published_cv_.wait_until(lock, next, [this] { return stopping_.load(); });
        } else {
            next = clock::now();
        }
    }
}

void Engine::tick_once() {
    std::deque<std::function<void(Simulation&)>> inputs;
    {
        std::lock_guard lock(inbox_mutex_);
        inputs.swap(inbox_);
    }
    std::lock_guard lock(sim_mutex_);
    for (auto& input : inputs) {
        try {
            input(*sim_);
        } catch (const Error&) {
        }
    }
    auto events = sim_->tick();
    if (log_writer_) {
        log_writer_->events(events);
        log_writer_->checkpoint(sim_->state());
    }
    auto snap = std::make_shared<const SimState>(sim_->state());
    {
        std::lock_guard plock(published_mutex_);
        for (auto& e : events) log_.push_back(std::move(e));
        published_ = std::move(snap);
    }
    published_cv_.notify_all();
}

std::shared_ptr<const SimState> Engine::snapshot() const {
    if (!started_) throw EngineNotStartedError("engine not started");
    std::lock_guard lock(published_mutex_);
    return published_;
}

std::string Engine::state_json() const {
    auto snap = snapshot();
    Json agents = Json::array();
    for (const auto& a : snap->roster.agents()) {
        const auto& s = a.state;
        auto scene = scene_at(map_, s.position);
        agents.push_back({{"id", a.profile.id},
                          {"name", a.profile.name},
                          {"occupation", a.profile.occupation},
                          {"personality", a.profile.personality},
                          {"home_scene", a.profile.home_scene},
                          {"primary", a.profile.primary},
                          {"position", pos(s.position)},
                          {"scene", opt(scene)},
                          {"mode", std::string(to_string(s.mode))},
                          {"destination", opt(s.destination)},
                          {"activity", opt(s.activity)},
                          {"activity_ticks_left", s.activity_ticks_left},
                          {"path_remaining", s.remaining_steps()},
                          {"conversation", opt(s.conversation)},
                          {"cooldown", s.cooldown}});
    }
    Json conversations = Json::array();
    for (const auto& [id, c] : snap->conversations) {
        Json turns = Json::array();
        for (const auto& t : c.turns) turns.push_back({{"speaker", t.speaker}, {"text", t.text}});
        conversations.push_back({{"id", id},
                                 {"initiator", c.initiator},
                                 {"partner", c.partner},
                                 {"started_tick", c.started_tick},
                                 {"turns", std::move(turns)}});
    }
    Json j;
    j["tick"] = snap->tick;
    j["mode"] = std::string(to_string(mode()));
    j["last_seq"] = snap->next_event_seq - 1;
    j["digest"] = state_digest(*snap);
    j["agents"] = std::move(agents);
    j["conversations"] = std::move(conversations);
    j["map"] = map_view(map_);
    return j.dump();
}

ViewMode Engine::set_mode(ViewMode mode) {
    std::lock_guard lock(admin_mutex_);
    ViewMode previous = mode_.exchange(mode);
    std::uint64_t tick = 0;
    {
        std::lock_guard plock(published_mutex_);
        tick = published_->tick;
    }
    mode_changes_.push_back({tick, last_seq(), mode});
    return previous;
}

std::vector<ModeChange> Engine::mode_changes() const {
    std::lock_guard lock(admin_mutex_);
    return mode_changes_;
}

std::vector<SimEvent> Engine::events_after(std::uint64_t since, std::size_t max) const {
    std::lock_guard lock(published_mutex_);
    std::size_t begin = since > log_base_ ? static_cast<std::size_t>(since - log_base_) : 0;
    std::vector<SimEvent> out;
    for (std::size_t i = begin; i < log_.size() && out.size() < max; ++i) out.push_back(log_[i]);
    return out;
}

bool Engine::wait_for_events(std::uint64_t since, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(published_mutex_);
    return published_cv_.wait_for(lock, timeout, [&] {
        return stopping_.load() || log_base_ + log_.size() > since;
    }) && log_base_ + log_.size() > since;
}

std::uint64_t Engine::last_seq() const {
    std::lock_guard lock(published_mutex_);
    return log_base_ + log_.size();
}

std::uint64_t Engine::epoch() const {
    std::lock_guard lock(published_mutex_);
    return epoch_;
}

std::unique_ptr<Subscription> Engine::subscribe(std::uint64_t since, std::size_t max_lag) {
    return std::make_unique<Subscription>(*this, since, max_lag);
}

void Engine::save_snapshot(const std::string& path) {
    std::lock_guard lock(sim_mutex_);
    lifespace::save_snapshot(path, map_, config_, sim_->state());
}

void Engine::load_snapshot(const std::string& path) {
    Snapshot loaded = lifespace::load_snapshot(path);
    if (!(loaded.map == map_)) throw ValidationError("snapshot map differs from the running map");
    std::lock_guard lock(sim_mutex_);
    if (log_writer_) {
        log_writer_->trailer(sim_->state());
        log_writer_.reset();
    }
    sim_ = std::make_unique<Simulation>(map_, std::move(loaded.state), config_, providers_);
    auto snap = std::make_shared<const SimState>(sim_->state());
    {
        std::lock_guard plock(published_mutex_);
        log_.clear();
        log_base_ = snap->next_event_seq - 1;
        ++epoch_;
        published_ = std::move(snap);
    }
    published_cv_.notify_all();
}

Subscription::Subscription(Engine& engine, std::uint64_t since, std::size_t max_lag)
    : engine_(engine), cursor_(since), max_lag_(max_lag), epoch_(engine.epoch()) {}

std::vector<StreamEnvelope> Subscription::poll_envelopes(std::size_t max_batch) {
    if (engine_.epoch() != epoch_) throw Error("event stream reset by snapshot load");
    auto head = engine_.last_seq();
    if (head > cursor_ && head - cursor_ > max_lag_)
        throw StreamOverflowError("subscriber fell " + std::to_string(head - cursor_) + " events behind");
    auto events = engine_.events_after(cursor_, max_batch);
    ViewMode mode = engine_.mode();
    std::vector<StreamEnvelope> out;
    out.reserve(events.size());
    for (auto& e : events) {
        cursor_ = e.seq;
        bool visible = visible_in(mode, e);
        out.push_back({std::move(e), visible});
    }
    return out;
}

std::vector<std::string> Subscription::poll(std::size_t max_batch) {
    ViewMode mode = engine_.mode();
    auto envelopes = poll_envelopes(max_batch);
    std::vector<std::string> frames;
    for (const auto& e : envelopes) frames.push_back(envelope_json(e));
    if (!envelopes.empty() && mode == ViewMode::unobservable) frames.push_back(expression_json(*engine_.snapshot()));
    return frames;
}

std::vector<std::string> Subscription::wait(std::chrono::milliseconds timeout, std::size_t max_batch) {
    engine_.wait_for_events(cursor_, timeout);
    return poll(max_batch);
}

}  // namespace lifespace
