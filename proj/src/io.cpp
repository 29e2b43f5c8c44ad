#include "coalsec/io.hpp"

#include "coalsec/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <system_error>

namespace coalsec {

using nlohmann::json;

namespace {

// Reads the members of one JSON object, remembering which keys were used so
// that leftovers can be reported.
class ObjectReader
{
public:
    ObjectReader(const json& object, std::string path) : object_(object), path_(std::move(path))
    {
        if (!object.is_object())
            throw ParseError(where() + "expected a JSON object");
    }

    const json* find(const std::string& key)
    {
        seen_.insert(key);
        const auto it = object_.find(key);
        return it == object_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& out)
    {
        if (const json* v = find(key)) {
            if (!v->is_number())
                throw ParseError(where(key) + "expected a number");
            out = v->get<double>();
        }
    }

    template <typename Int>
    void count(const std::string& key, Int& out)
    {
        if (const json* v = find(key)) {
            if (v->is_number_integer() && !v->is_number_unsigned())
                throw ValidationError(where(key) + "must be non-negative");
            if (!v->is_number_unsigned())
                throw ParseError(where(key) + "expected a non-negative integer");
            out = static_cast<Int>(v->get<std::uint64_t>());
        }
    }

    template <typename Parse>
    void word(const std::string& key, Parse parse)
    {
        if (const json* v = find(key)) {
            if (!v->is_string())
                throw ParseError(where(key) + "expected a string");
            parse(v->get<std::string>());
        }
    }

    void finish() const
    {
        for (const auto& item : object_.items())
            if (!seen_.count(item.key()))
                throw ParseError(where(item.key()) + "unknown key");
    }

    std::string where(const std::string& key = {}) const
    {
        std::string p = path_;
        if (!key.empty())
            p += p.empty() ? key : "." + key;
        return p.empty() ? std::string() : "key '" + p + "': ";
    }

private:
    const json& object_;
    std::string path_;
    std::set<std::string> seen_;
};

double watts_to_dbm(double w)
{
    return 10.0 * std::log10(w) + 30.0;
}

double linear_to_db(double x)
{
    return 10.0 * std::log10(x);
}

std::string line_and_column(const std::string& text, std::size_t byte)
{
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k + 1 < byte && k < text.size(); ++k) {
        if (text[k] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

void read_formation(const json& j, FormationConfig& f)
{
    ObjectReader r(j, "formation");
    r.count("max_merge_set", f.max_merge_set);
    r.count("max_coalition_size", f.max_coalition_size);
    r.count("max_rounds", f.max_rounds);
    r.finish();
}

void read_mobility(const json& j, MobilityConfig& m)
{
    ObjectReader r(j, "mobility");
    try {
        r.word("model", [&](const std::string& s) { m.model = parse_mobility_model(s); });
        r.word("movers", [&](const std::string& s) { m.movers = parse_mover_role(s); });
    } catch (const ValidationError& e) {
        throw ParseError(std::string("mobility: ") + e.what());
    }
    r.number("speed_kmh", m.speed_kmh);
    r.number("decision_interval_s", m.decision_interval_s);
    r.number("reformation_period_s", m.reformation_period_s);
    r.number("duration_s", m.duration_s);
    if (const json* d = r.find("direction")) {
        if (!d->is_array() || d->size() != 2 || !(*d)[0].is_number() || !(*d)[1].is_number())
            throw ParseError(r.where("direction") + "expected [x, y]");
        m.direction = {(*d)[0].get<double>(), (*d)[1].get<double>()};
    }
    if (const json* u = r.find("moving_users")) {
        if (!u->is_array())
            throw ParseError(r.where("moving_users") + "expected an array of user ids");
        m.moving_users.clear();
        for (const auto& id : *u) {
            if (!id.is_number_unsigned())
                throw ParseError(r.where("moving_users") + "expected an array of user ids");
            m.moving_users.push_back(id.get<UserId>());
        }
    }
    r.finish();
}

} // namespace

RunConfig parse_config_text(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("malformed JSON at " + line_and_column(text, e.byte));
    }

    RunConfig cfg;
    ScenarioConfig& s = cfg.scenario;
    s.radio.noise_variance_w = dbm_to_watts(-90.0);
    ObjectReader r(doc, "");
    r.number("area_side_m", s.area_side_m);
    r.count("N", s.num_users);
    r.count("M", s.num_destinations);
    r.count("K", s.num_eavesdroppers);
    double power_dbm = watts_to_dbm(s.radio.total_slot_power_w);
    double noise_dbm = -90.0;
    double nu0_db = linear_to_db(s.radio.exchange_snr_linear);
    r.number("slot_power_dbm", power_dbm);
    r.number("noise_dbm", noise_dbm);
    r.number("nu0_db", nu0_db);
    s.radio.total_slot_power_w = dbm_to_watts(power_dbm);
    s.radio.noise_variance_w = dbm_to_watts(noise_dbm);
    s.radio.exchange_snr_linear = db_to_linear(nu0_db);
    r.number("pathloss_exponent", s.radio.pathloss_exponent);
    r.number("wavelength_m", s.radio.carrier_wavelength_m);
    r.word("phase_model", [&](const std::string& v) {
        if (v == "geometric")
            s.radio.phase_model = PhaseModel::geometric;
        else if (v == "uniform")
            s.radio.phase_model = PhaseModel::uniform;
        else
            throw ParseError(r.where("phase_model") + "expected \"geometric\" or \"uniform\"");
    });
    r.count("phase_seed", s.radio.phase_seed);
    r.word("protocol", [&](const std::string& v) {
        try {
            s.scheme = parse_scheme(v);
        } catch (const ValidationError&) {
            throw ParseError(r.where("protocol") + "expected \"df\", \"af\" or \"noncoop\"");
        }
    });
    r.count("seed", s.seed);
    r.count("num_deployments", s.num_deployments);
    if (const json* f = r.find("formation"))
        read_formation(*f, s.formation);
    if (const json* m = r.find("mobility"))
        read_mobility(*m, cfg.mobility);
    r.finish();

    s.validate();
    cfg.mobility.validate();
    for (UserId u : cfg.mobility.moving_users)
        if (u >= s.num_users)
            throw ValidationError("mobility.moving_users: user " + std::to_string(u) +
                                  " does not exist");
    return cfg;
}

RunConfig parse_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

json config_to_json(const RunConfig& cfg)
{
    const ScenarioConfig& s = cfg.scenario;
    const MobilityConfig& m = cfg.mobility;
    return json{
        {"area_side_m", s.area_side_m},
        {"N", s.num_users},
        {"M", s.num_destinations},
        {"K", s.num_eavesdroppers},
        {"slot_power_dbm", watts_to_dbm(s.radio.total_slot_power_w)},
        {"noise_dbm", watts_to_dbm(s.radio.noise_variance_w)},
        {"nu0_db", linear_to_db(s.radio.exchange_snr_linear)},
        {"pathloss_exponent", s.radio.pathloss_exponent},
        {"wavelength_m", s.radio.carrier_wavelength_m},
        {"phase_model", s.radio.phase_model == PhaseModel::geometric ? "geometric" : "uniform"},
        {"phase_seed", s.radio.phase_seed},
        {"protocol", to_string(s.scheme)},
        {"seed", s.seed},
        {"num_deployments", s.num_deployments},
        {"formation",
         {{"max_merge_set", s.formation.max_merge_set},
          {"max_coalition_size", s.formation.max_coalition_size},
          {"max_rounds", s.formation.max_rounds}}},
        {"mobility",
         {{"model", to_string(m.model)},
          {"speed_kmh", m.speed_kmh},
          {"decision_interval_s", m.decision_interval_s},
          {"direction", {m.direction.x, m.direction.y}},
          {"reformation_period_s", m.reformation_period_s},
          {"duration_s", m.duration_s},
          {"movers", to_string(m.movers)},
          {"moving_users", m.moving_users}}},
    };
}

std::string format_number(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x < 0 ? "-inf" : "inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows)
{
    os << sweep_csv_header << '\n';
    for (const auto& r : rows)
        os << r.param << ',' << format_number(r.value) << ',' << to_string(r.scheme) << ','
           << r.seed_count << ',' << format_number(r.avg_secrecy_rate) << ','
           << format_number(r.stderr_secrecy_rate) << ',' << format_number(r.avg_coalition_size)
           << ',' << format_number(r.avg_max_coalition_size) << ','
           << format_number(r.merges_per_min) << ',' << format_number(r.splits_per_min) << '\n';
}

void write_timeseries_csv(std::ostream& os, const MobileRun& run)
{
    os << timeseries_csv_header << '\n';
    for (const auto& s : run.snapshots)
        os << format_number(s.time_s) << ',' << s.metrics.num_coalitions << ',' << s.merges << ','
           << s.splits << ',' << format_number(s.metrics.avg_secrecy_rate_per_user) << ','
           << format_number(s.metrics.avg_coalition_size) << '\n';
}

namespace {

json coalitions_to_json(const std::vector<Coalition>& cs)
{
    json out = json::array();
    for (const auto& c : cs)
        out.push_back(c.members());
    return out;
}

std::vector<Coalition> coalitions_from_json(const json& j)
{
    std::vector<Coalition> out;
    for (const auto& c : j)
        out.emplace_back(c.get<std::vector<UserId>>());
    return out;
}

json payoffs_to_json(const PayoffVector& v)
{
    json out = json::array();
    for (const auto& [u, p] : v.entries()) {
        if (p.is_negative_infinity())
            out.push_back(json::array({u, "-inf"}));
        else
            out.push_back(json::array({u, p.value()}));
    }
    return out;
}

PayoffVector payoffs_from_json(const json& j)
{
    std::vector<std::pair<UserId, Payoff>> entries;
    for (const auto& e : j) {
        const auto u = e.at(0).get<UserId>();
        if (e.at(1).is_string()) {
            if (e.at(1).get<std::string>() != "-inf")
                throw ParseError("payoff must be a number or \"-inf\"");
            entries.emplace_back(u, Payoff::negative_infinity());
        } else {
            entries.emplace_back(u, Payoff::rate(e.at(1).get<double>()));
        }
    }
    return PayoffVector(std::move(entries));
}

json positions_to_json(const std::vector<Vec2>& ps)
{
    json out = json::array();
    for (const auto& p : ps)
        out.push_back(json::array({p.x, p.y}));
    return out;
}

std::vector<Vec2> positions_from_json(const json& j)
{
    std::vector<Vec2> out;
    for (const auto& p : j)
        out.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    return out;
}

} // namespace

void write_trace_jsonl(std::ostream& os, const FormationTrace& trace)
{
    for (const auto& e : trace.events) {
        const json line{
            {"round", e.round},
            {"time_s", e.time_s},
            {"kind", to_string(e.kind)},
            {"before", coalitions_to_json(e.before)},
            {"after", coalitions_to_json(e.after)},
            {"payoffs_before", payoffs_to_json(e.payoffs_before)},
            {"payoffs_after", payoffs_to_json(e.payoffs_after)},
        };
        os << line.dump() << '\n';
    }
}

FormationTrace read_trace_jsonl(std::istream& is)
{
    FormationTrace trace;
    std::string line;
    std::size_t number = 0;
    while (std::getline(is, line)) {
        ++number;
        if (line.empty())
            continue;
        try {
            const json j = json::parse(line);
            FormationEvent e;
            e.round = j.at("round").get<std::size_t>();
            e.time_s = j.at("time_s").get<double>();
            const auto kind = j.at("kind").get<std::string>();
            if (kind == "merge")
                e.kind = EventKind::merge;
            else if (kind == "split")
                e.kind = EventKind::split;
            else
                throw ParseError("unknown event kind '" + kind + "'");
            e.before = coalitions_from_json(j.at("before"));
            e.after = coalitions_from_json(j.at("after"));
            e.payoffs_before = payoffs_from_json(j.at("payoffs_before"));
            e.payoffs_after = payoffs_from_json(j.at("payoffs_after"));
            trace.events.push_back(std::move(e));
        } catch (const json::exception& ex) {
            throw ParseError("trace line " + std::to_string(number) + ": " + ex.what());
        } catch (const ParseError& ex) {
            throw ParseError("trace line " + std::to_string(number) + ": " + ex.what());
        }
    }
    return trace;
}

json state_to_json(const NetworkState& state)
{
    const RadioParams& r = state.radio;
    return json{
        {"users", positions_to_json(state.user_positions)},
        {"destinations", positions_to_json(state.destination_positions)},
        {"eavesdroppers", positions_to_json(state.eavesdropper_positions)},
        {"assignment", state.assignment},
        {"radio",
         {{"total_slot_power_w", r.total_slot_power_w},
          {"noise_variance_w", r.noise_variance_w},
          {"pathloss_exponent", r.pathloss_exponent},
          {"exchange_snr_linear", r.exchange_snr_linear},
          {"carrier_wavelength_m", r.carrier_wavelength_m},
          {"phase_model", r.phase_model == PhaseModel::geometric ? "geometric" : "uniform"},
          {"phase_seed", r.phase_seed}}},
    };
}

NetworkState state_from_json(const json& j)
{
    try {
        NetworkState s;
        s.user_positions = positions_from_json(j.at("users"));
        s.destination_positions = positions_from_json(j.at("destinations"));
        s.eavesdropper_positions = positions_from_json(j.at("eavesdroppers"));
        s.assignment = j.at("assignment").get<std::vector<std::size_t>>();
        const json& r = j.at("radio");
        s.radio.total_slot_power_w = r.at("total_slot_power_w").get<double>();
        s.radio.noise_variance_w = r.at("noise_variance_w").get<double>();
        s.radio.pathloss_exponent = r.at("pathloss_exponent").get<double>();
        s.radio.exchange_snr_linear = r.at("exchange_snr_linear").get<double>();
        s.radio.carrier_wavelength_m = r.at("carrier_wavelength_m").get<double>();
        const auto phase = r.at("phase_model").get<std::string>();
        if (phase != "geometric" && phase != "uniform")
            throw ParseError("unknown phase model '" + phase + "'");
        s.radio.phase_model = phase == "geometric" ? PhaseModel::geometric : PhaseModel::uniform;
        s.radio.phase_seed = r.at("phase_seed").get<std::uint64_t>();
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw ParseError(std::string("network state: ") + e.what());
    }
}

json partition_to_json(const Partition& p)
{
    return coalitions_to_json(p.blocks());
}

Partition partition_from_json(const json& j, std::size_t num_users)
{
    try {
        return Partition(coalitions_from_json(j), num_users);
    } catch (const json::exception& e) {
        throw ParseError(std::string("partition: ") + e.what());
    }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out)
            throw std::runtime_error("short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " +
                                 ec.message());
}

} // namespace coalsec
