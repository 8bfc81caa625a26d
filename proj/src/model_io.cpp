#include "qposs/model_io.hpp"

#include "qposs/errors.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_map>

namespace qposs {

using Json = nlohmann::ordered_json;

std::string_view to_string(ModelKind kind) noexcept {
    switch (kind) {
    case ModelKind::kPiMdp: return "pi-mdp";
    case ModelKind::kPiPomdp: return "pi-pomdp";
    case ModelKind::kPiMomdp: return "pi-momdp";
    }
    return "unknown";
}

std::string format_label(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

const QualitativeScale& ModelDocument::scale() const noexcept {
    return std::visit([](const auto& m) -> const QualitativeScale& { return m.scale(); }, model);
}

namespace {

class Names {
public:
    Names(std::vector<std::string> list, const std::string& what) : list_(std::move(list)) {
        for (std::size_t i = 0; i < list_.size(); ++i)
            if (!index_.emplace(list_[i], i).second)
                throw ModelError("duplicate " + what + " name '" + list_[i] + "'");
    }
    std::size_t size() const noexcept { return list_.size(); }
    const std::string& operator[](std::size_t i) const { return list_[i]; }
    std::optional<std::size_t> find(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end())
            return std::nullopt;
        return it->second;
    }
    const std::vector<std::string>& list() const noexcept { return list_; }

private:
    std::vector<std::string> list_;
    std::unordered_map<std::string, std::size_t> index_;
};

class Reader {
public:
    explicit Reader(const Json& doc) : doc_(doc) {}

    const Json& field(const char* key) const {
        auto it = doc_.find(key);
        if (it == doc_.end())
            throw ModelError(std::string("missing field '") + key + "'");
        return *it;
    }
    const Json* optional_field(const char* key) const {
        auto it = doc_.find(key);
        return it == doc_.end() ? nullptr : &*it;
    }

    Names names(const char* key) const {
        const Json& j = field(key);
        if (!j.is_array() || j.empty())
            throw ModelError(std::string("'") + key + "' must be a non-empty array of names");
        std::vector<std::string> out;
        for (const auto& e : j) {
            if (!e.is_string())
                throw ModelError(std::string("'") + key + "' must contain only strings");
            out.push_back(e.get<std::string>());
        }
        return Names(std::move(out), key);
    }

    void set_scale(const QualitativeScale& scale) {
        scale_ = &scale;
        texts_.clear();
        for (double l : scale.labels())
            texts_.emplace(format_label(l), Level{static_cast<std::uint16_t>(texts_.size())});
    }

    Level label(const Json& j, const std::string& where) const {
        if (!j.is_number())
            throw ModelError(where + ": expected a scale label");
        const std::string text = format_label(j.get<double>());
        auto it = texts_.find(text);
        if (it == texts_.end())
            throw UnknownLabelError("unknown scale label " + text + " at " + where);
        return it->second;
    }

    // Element i of an outer table level: array in declaration order or object keyed by name.
    static const Json& element(const Json& table, const Names& names, std::size_t i,
                               const std::string& where) {
        if (table.is_array()) {
            if (table.size() != names.size())
                throw DimensionError(where + ": expected " + std::to_string(names.size()) +
                                     " entries, got " + std::to_string(table.size()));
            return table[i];
        }
        if (table.is_object()) {
            check_keys(table, names, where);
            auto it = table.find(names[i]);
            if (it == table.end())
                throw ModelError(where + ": missing entry '" + names[i] + "'");
            return *it;
        }
        throw ModelError(where + ": expected an array or an object");
    }

    std::vector<Level> row(const Json& j, const Names& names, const std::string& where) const {
        std::vector<Level> out(names.size(), scale_->bottom());
        if (j.is_array()) {
            if (j.size() != names.size())
                throw DimensionError(where + ": expected " + std::to_string(names.size()) +
                                     " labels, got " + std::to_string(j.size()));
            for (std::size_t i = 0; i < names.size(); ++i)
                out[i] = label(j[i], where + "[" + std::to_string(i) + "]");
            return out;
        }
        if (j.is_object()) {
            check_keys(j, names, where);
            for (auto it = j.begin(); it != j.end(); ++it)
                out[*names.find(it.key())] = label(it.value(), where + "." + it.key());
            return out;
        }
        throw ModelError(where + ": expected an array or an object");
    }

    // Row over visible x hidden product elements.
    std::vector<Level> product_row(const Json& j, const Names& visible, const Names& hidden,
                                   const std::string& where) const {
        std::vector<Level> out(visible.size() * hidden.size(), scale_->bottom());
        auto fill = [&](std::size_t v, const Json& sub, const std::string& at) {
            auto r = row(sub, hidden, at);
            std::copy(r.begin(), r.end(), out.begin() + v * hidden.size());
        };
        if (j.is_array()) {
            if (j.size() != visible.size())
                throw DimensionError(where + ": expected " + std::to_string(visible.size()) +
                                     " entries, got " + std::to_string(j.size()));
            for (std::size_t v = 0; v < visible.size(); ++v)
                fill(v, j[v], where + "[" + std::to_string(v) + "]");
            return out;
        }
        if (j.is_object()) {
            check_keys(j, visible, where);
            for (auto it = j.begin(); it != j.end(); ++it)
                fill(*visible.find(it.key()), it.value(), where + "." + it.key());
            return out;
        }
        throw ModelError(where + ": expected an array or an object");
    }

    std::optional<std::size_t> optional_name(const char* key, const Names& names) const {
        const Json* j = optional_field(key);
        if (!j || j->is_null())
            return std::nullopt;
        if (!j->is_string())
            throw ModelError(std::string("'") + key + "' must be a name");
        auto idx = names.find(j->get<std::string>());
        if (!idx)
            throw ModelError(std::string("'") + key + "' names unknown element '" +
                             j->get<std::string>() + "'");
        return idx;
    }

private:
    static void check_keys(const Json& j, const Names& names, const std::string& where) {
        for (auto it = j.begin(); it != j.end(); ++it)
            if (!names.find(it.key()))
                throw ModelError(where + ": unknown name '" + it.key() + "'");
    }

    const Json& doc_;
    const QualitativeScale* scale_ = nullptr;
    std::unordered_map<std::string, Level> texts_;
};

std::string at(const char* table, std::initializer_list<std::size_t> idx) {
    std::string out = table;
    for (auto i : idx)
        out += "[" + std::to_string(i) + "]";
    return out;
}

std::vector<Successor> sparse(std::span<const Level> dense) {
    std::vector<Successor> out;
    for (std::size_t i = 0; i < dense.size(); ++i)
        if (dense[i] != Level{0})
            out.push_back({static_cast<StateIndex>(i), dense[i]});
    return out;
}

PossibilityDistribution distribution(std::vector<Level> values, const QualitativeScale& scale,
                                     const char* what) {
    if (!is_normalized(values, scale))
        throw ModelError(std::string(what) + " not normalized");
    return PossibilityDistribution(std::move(values), scale);
}

ModelDocument parse_document(const Json& doc) {
    if (!doc.is_object())
        throw ModelError("model file must hold a JSON object");
    Reader r(doc);
    const Json& kind_j = r.field("kind");
    if (!kind_j.is_string())
        throw ModelError("'kind' must be a string");
    const std::string kind = kind_j.get<std::string>();
    if (kind != "pi-mdp" && kind != "pi-pomdp" && kind != "pi-momdp")
        throw ModelError("unknown model kind '" + kind + "'");

    const Json& scale_j = r.field("scale");
    if (!scale_j.is_array())
        throw ModelError("'scale' must be an array of labels");
    std::vector<double> labels;
    for (const auto& e : scale_j) {
        if (!e.is_number())
            throw ModelError("'scale' must contain only numbers");
        labels.push_back(e.get<double>());
    }
    auto scale = QualitativeScale::make(labels);
    r.set_scale(scale);

    const Names actions = r.names("actions");
    const auto stay = r.optional_name("stay_action", actions);
    const std::optional<ActionIndex> stay_action =
        stay ? std::optional<ActionIndex>(static_cast<ActionIndex>(*stay)) : std::nullopt;
    const std::size_t na = actions.size();
    ModelNames names;
    names.actions = actions.list();

    if (kind == "pi-momdp") {
        const Names visible = r.names("visible_states");
        const Names hidden = r.names("hidden_states");
        const Names obs = r.names("hidden_observations");
        const std::size_t nv = visible.size(), nh = hidden.size(), no = obs.size();
        const Json& tr = r.field("transition");
        const Json& ob = r.field("observation");
        const Json& pref = r.field("preference");
        std::vector<std::vector<Successor>> rows(nv * nh * na);
        std::vector<Level> observation(nv * nh * na * no);
        std::vector<Level> preference(nv * nh);
        for (std::size_t v = 0; v < nv; ++v) {
            const Json& tv = Reader::element(tr, visible, v, at("transition", {v}));
            const Json& ov = Reader::element(ob, visible, v, at("observation", {v}));
            auto pv = r.row(Reader::element(pref, visible, v, at("preference", {v})), hidden,
                            at("preference", {v}));
            for (std::size_t h = 0; h < nh; ++h) {
                const std::size_t s = v * nh + h;
                preference[s] = pv[h];
                const Json& th = Reader::element(tv, hidden, h, at("transition", {v, h}));
                const Json& oh = Reader::element(ov, hidden, h, at("observation", {v, h}));
                for (std::size_t a = 0; a < na; ++a) {
                    rows[s * na + a] = sparse(r.product_row(
                        Reader::element(th, actions, a, at("transition", {v, h, a})), visible,
                        hidden, at("transition", {v, h, a})));
                    auto orow = r.row(Reader::element(oh, actions, a, at("observation", {v, h, a})),
                                      obs, at("observation", {v, h, a}));
                    std::copy(orow.begin(), orow.end(), observation.begin() + (s * na + a) * no);
                }
            }
        }
        const Json& init = r.field("initial");
        if (!init.is_object())
            throw ModelError("'initial' must be an object with 'visible' and 'hidden'");
        Reader ir(init);
        ir.set_scale(scale);
        const auto v0 = ir.optional_name("visible", visible);
        if (!v0)
            throw ModelError("'initial' needs a visible state name");
        auto h0 = distribution(ir.row(ir.field("hidden"), hidden, "initial.hidden"), scale,
                               "initial hidden belief");
        const auto stay_obs = r.optional_name("stay_observation", obs);
        names.visible = visible.list();
        names.hidden = hidden.list();
        names.observations = obs.list();
        PiMomdpModel model(
            scale, nv, nh, na, no, std::move(rows), std::move(observation), std::move(preference),
            MixedBelief{static_cast<StateIndex>(*v0), std::move(h0)}, stay_action,
            stay_obs ? std::optional<ObservationIndex>(static_cast<ObservationIndex>(*stay_obs))
                     : std::nullopt);
        return ModelDocument{std::move(model), std::move(names)};
    }

    const Names states = r.names("states");
    const std::size_t ns = states.size();
    const Json& tr = r.field("transition");
    std::vector<std::vector<Successor>> rows(ns * na);
    for (std::size_t s = 0; s < ns; ++s) {
        const Json& ts = Reader::element(tr, states, s, at("transition", {s}));
        for (std::size_t a = 0; a < na; ++a)
            rows[s * na + a] = sparse(r.row(Reader::element(ts, actions, a, at("transition", {s, a})),
                                            states, at("transition", {s, a})));
    }
    auto preference = r.row(r.field("preference"), states, "preference");
    names.states = states.list();
    PiMdpModel mdp(scale, ns, na, std::move(rows), std::move(preference), stay_action);
    if (kind == "pi-mdp")
        return ModelDocument{std::move(mdp), std::move(names)};

    const Names obs = r.names("observations");
    const std::size_t no = obs.size();
    const Json& ob = r.field("observation");
    std::vector<Level> observation(ns * na * no);
    for (std::size_t s = 0; s < ns; ++s) {
        const Json& os = Reader::element(ob, states, s, at("observation", {s}));
        for (std::size_t a = 0; a < na; ++a) {
            auto orow = r.row(Reader::element(os, actions, a, at("observation", {s, a})), obs,
                              at("observation", {s, a}));
            std::copy(orow.begin(), orow.end(), observation.begin() + (s * na + a) * no);
        }
    }
    auto b0 = distribution(r.row(r.field("initial_belief"), states, "initial_belief"), scale,
                           "initial belief");
    const auto stay_obs = r.optional_name("stay_observation", obs);
    names.observations = obs.list();
    PiPomdpModel model(
        std::move(mdp), no, std::move(observation), std::move(b0),
        stay_obs ? std::optional<ObservationIndex>(static_cast<ObservationIndex>(*stay_obs))
                 : std::nullopt);
    return ModelDocument{std::move(model), std::move(names)};
}

Json labels_json(const QualitativeScale& scale, std::span<const Level> values) {
    Json out = Json::array();
    for (Level l : values)
        out.push_back(scale.label(l));
    return out;
}

Json common_header(const ModelDocument& d, const QualitativeScale& scale) {
    Json out = Json::object();
    out["kind"] = std::string(to_string(d.kind()));
    out["scale"] = Json(std::vector<double>(scale.labels().begin(), scale.labels().end()));
    return out;
}

void serialize_mdp_part(Json& out, const PiMdpModel& m, const ModelNames& n) {
    out["states"] = n.states;
    out["actions"] = n.actions;
    if (m.stay_action())
        out["stay_action"] = n.actions[*m.stay_action()];
    Json tr = Json::array();
    for (StateIndex s = 0; s < m.num_states(); ++s) {
        Json ts = Json::array();
        for (ActionIndex a = 0; a < m.num_actions(); ++a) {
            Json row = Json::object();
            for (const Successor& e : m.successors(s, a))
                row[n.states[e.state]] = m.scale().label(e.possibility);
            ts.push_back(std::move(row));
        }
        tr.push_back(std::move(ts));
    }
    out["transition"] = std::move(tr);
    out["preference"] = labels_json(m.scale(), m.preference());
}

} // namespace

ModelDocument parse_model(std::string_view text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        std::string what = e.what();
        auto pos = what.find("] ");
        throw ParseError(pos == std::string::npos ? what : what.substr(pos + 2));
    }
    try {
        return parse_document(doc);
    } catch (const Json::exception& e) {
        throw ModelError(std::string("malformed model: ") + e.what());
    }
}

ModelDocument load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open model file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad())
        throw IoError("cannot read model file '" + path.string() + "'");
    return parse_model(buf.str());
}

std::string serialize_model(const ModelDocument& d) {
    const auto& scale = d.scale();
    Json out = common_header(d, scale);
    const ModelNames& n = d.names;
    switch (d.kind()) {
    case ModelKind::kPiMdp:
        serialize_mdp_part(out, std::get<PiMdpModel>(d.model), n);
        break;
    case ModelKind::kPiPomdp: {
        const auto& m = std::get<PiPomdpModel>(d.model);
        serialize_mdp_part(out, m.dynamics(), n);
        out["observations"] = n.observations;
        if (m.stay_observation())
            out["stay_observation"] = n.observations[*m.stay_observation()];
        Json ob = Json::array();
        for (StateIndex s = 0; s < m.num_states(); ++s) {
            Json os = Json::array();
            for (ActionIndex a = 0; a < m.num_actions(); ++a)
                os.push_back(labels_json(scale, m.observation_row(s, a)));
            ob.push_back(std::move(os));
        }
        out["observation"] = std::move(ob);
        out["initial_belief"] = labels_json(scale, m.initial_belief().values());
        break;
    }
    case ModelKind::kPiMomdp: {
        const auto& m = std::get<PiMomdpModel>(d.model);
        const std::size_t nh = m.num_hidden();
        out["visible_states"] = n.visible;
        out["hidden_states"] = n.hidden;
        out["hidden_observations"] = n.observations;
        out["actions"] = n.actions;
        if (m.stay_action())
            out["stay_action"] = n.actions[*m.stay_action()];
        if (m.stay_observation())
            out["stay_observation"] = n.observations[*m.stay_observation()];
        Json tr = Json::array(), ob = Json::array(), pref = Json::array();
        for (StateIndex v = 0; v < m.num_visible(); ++v) {
            Json tv = Json::array(), ov = Json::array(), pv = Json::array();
            for (StateIndex h = 0; h < nh; ++h) {
                const StateIndex s = m.state_index(v, h);
                Json th = Json::array(), oh = Json::array();
                for (ActionIndex a = 0; a < m.num_actions(); ++a) {
                    Json row = Json::object();
                    for (const Successor& e : m.dynamics().successors(s, a))
                        row[n.visible[e.state / nh]][n.hidden[e.state % nh]] =
                            scale.label(e.possibility);
                    th.push_back(std::move(row));
                    oh.push_back(labels_json(scale, m.hidden_observation_row(s, a)));
                }
                tv.push_back(std::move(th));
                ov.push_back(std::move(oh));
                pv.push_back(scale.label(m.preference(v, h)));
            }
            tr.push_back(std::move(tv));
            ob.push_back(std::move(ov));
            pref.push_back(std::move(pv));
        }
        out["transition"] = std::move(tr);
        out["observation"] = std::move(ob);
        out["preference"] = std::move(pref);
        out["initial"] = Json{{"visible", n.visible[m.initial().visible]},
                              {"hidden", labels_json(scale, m.initial().hidden.values())}};
        break;
    }
    }
    return out.dump(2) + "\n";
}

ModelDocument make_grid_document(const GridConfig& cfg) {
    auto model = build_possibilistic_grid(cfg);
    const GridGeometry geo(cfg.g);
    ModelNames names;
    for (StateIndex v = 0; v < geo.num_cells(); ++v) {
        const Cell c = geo.cell(v);
        names.visible.push_back("x" + std::to_string(c.x) + "y" + std::to_string(c.y));
    }
    names.hidden = {"A1", "A2"};
    names.actions = {"stay", "north", "south", "east", "west"};
    names.observations = {"AA", "AB", "BA", "BB", "nothing"};
    return ModelDocument{std::move(model), std::move(names)};
}

} // namespace qposs
