#include "mdma/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "mdma/error.hpp"

namespace mdma {

using nlohmann::json;

namespace {

Point read_point(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw ConfigError(std::string(what) + " must be an [x, y] pair");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

json write_point(const Point& p) { return json::array({p.x, p.y}); }

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const char* where) {
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* a : allowed) known = known || key == a;
        if (!known) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

double read_number(const json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(std::string(key) + " must be a number");
    return v.get<double>();
}

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

Setup parse_setup(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config must be a JSON object");
    check_keys(root, {"topology", "system"}, "config");

    Setup s = default_paper_setup();
    if (root.contains("topology")) {
        const json& t = root.at("topology");
        check_keys(t, {"s1", "s2", "d", "relays", "alpha"}, "topology");
        if (t.contains("s1")) s.topology.s1 = read_point(t.at("s1"), "s1");
        if (t.contains("s2")) s.topology.s2 = read_point(t.at("s2"), "s2");
        if (t.contains("d")) s.topology.d = read_point(t.at("d"), "d");
        if (t.contains("relays")) {
            const json& r = t.at("relays");
            if (!r.is_array()) throw ConfigError("relays must be a list of [x, y] pairs");
            s.topology.relays.clear();
            for (const auto& p : r) s.topology.relays.push_back(read_point(p, "relay"));
        }
        s.topology.alpha = read_number(t, "alpha", s.topology.alpha);
    }
    if (root.contains("system")) {
        const json& c = root.at("system");
        check_keys(c,
                   {"power_dbm", "noise_dbm", "rate_r0", "total_bits", "eta", "granularity", "bandwidth_units",
                    "power_units"},
                   "system");
        s.config.power_dbm = read_number(c, "power_dbm", s.config.power_dbm);
        if (c.contains("noise_dbm") && c.at("noise_dbm").is_string()) {
            if (c.at("noise_dbm").get<std::string>() != "-inf") throw ConfigError("noise_dbm must be a number or \"-inf\"");
            s.config.noise_dbm = -std::numeric_limits<double>::infinity();
        } else {
            s.config.noise_dbm = read_number(c, "noise_dbm", s.config.noise_dbm);
        }
        s.config.rate_r0 = read_number(c, "rate_r0", s.config.rate_r0);
        s.config.total_bits = read_number(c, "total_bits", s.config.total_bits);
        s.config.eta = read_number(c, "eta", s.config.eta);
        if (c.contains("granularity")) {
            if (!c.at("granularity").is_number_integer()) throw ConfigError("granularity must be an integer");
            s.config.granularity = c.at("granularity").get<int>();
        }
        s.config.bandwidth_units = read_number(c, "bandwidth_units", s.config.bandwidth_units);
        s.config.power_units = read_number(c, "power_units", s.config.power_units);
    }
    s.topology.validate();
    s.config.validate();
    return s;
}

Setup load_setup_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_setup(buf.str());
}

std::string setup_to_json(const Setup& s) {
    json relays = json::array();
    for (const auto& r : s.topology.relays) relays.push_back(write_point(r));
    json system = {{"power_dbm", s.config.power_dbm},
                   {"rate_r0", s.config.rate_r0},
                   {"total_bits", s.config.total_bits},
                   {"eta", s.config.eta},
                   {"granularity", s.config.granularity},
                   {"bandwidth_units", s.config.bandwidth_units},
                   {"power_units", s.config.power_units}};
    if (std::isinf(s.config.noise_dbm)) {
        system["noise_dbm"] = "-inf";
    } else {
        system["noise_dbm"] = s.config.noise_dbm;
    }
    json root = {{"topology",
                  {{"s1", write_point(s.topology.s1)},
                   {"s2", write_point(s.topology.s2)},
                   {"d", write_point(s.topology.d)},
                   {"relays", relays},
                   {"alpha", s.topology.alpha}}},
                 {"system", system}};
    return root.dump(2);
}

std::string chain_to_json(const TransitionMatrix& chain, std::span<const double> stationary,
                          const StepOutageSet& o, const ChainSolution* solution) {
    json states = json::array();
    const ProtocolLayout& layout = chain.layout();
    for (std::size_t i = 0; i < layout.size(); ++i) {
        const auto& s = layout.state(i);
        states.push_back({{"index", i},
                          {"label", s.label()},
                          {"phase", phase_name(s.phase)},
                          {"step", s.step},
                          {"repetition", s.repetition}});
    }
    json transitions = json::array();
    for (const auto& e : chain.entries()) transitions.push_back(json::array({e.from, e.to, e.probability}));
    json root = {{"beta_s", layout.beta_s()},
                 {"beta_p", layout.beta_p()},
                 {"states", states},
                 {"transitions", transitions},
                 {"stationary", std::vector<double>(stationary.begin(), stationary.end())},
                 {"step_outages",
                  {{"pIS1s1", o.op_pIS1s1},
                   {"pIS1s2", o.op_pIS1s2},
                   {"pIIS1s1", o.op_pIIS1s1},
                   {"pIIS1s2", o.op_pIIS1s2},
                   {"pIIS2s1", o.op_pIIS2s1},
                   {"pIIS2s2", o.op_pIIS2s2},
                   {"empty_set_prob_s1", o.empty_set_prob_s1},
                   {"empty_set_prob_s2", o.empty_set_prob_s2}}}};
    if (solution != nullptr) {
        root["overall_op"] = solution->overall_op;
        root["slot_cost"] = solution->slot_cost;
        root["efficiency"] = solution->efficiency;
    }
    return root.dump(2);
}

std::string estimate_to_json(const SimEstimate& e) {
    static const char* kinds[kStepKinds] = {"pIS1s1", "pIS1s2", "pIIS1s1", "pIIS1s2", "pIIS2s1", "pIIS2s2"};
    json steps = json::object();
    for (std::size_t k = 0; k < kStepKinds; ++k) {
        const Proportion& p = e.step_outage[k];
        if (p.trials == 0) continue;
        steps[kinds[k]] = {{"op", p.estimate()}, {"stderr", p.standard_error()}, {"attempts", p.trials}};
    }
    auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json root = {{"scheme", scheme_name(e.scheme)},
                 {"slots", e.slots},
                 {"attempts", e.outage.trials},
                 {"failures", e.outage.hits},
                 {"overall_op", e.overall_op()},
                 {"overall_op_stderr", e.overall_op_stderr()},
                 {"step_outages", steps},
                 {"empty_set_s1", e.empty_set_s1.estimate()},
                 {"empty_set_s2", e.empty_set_s2.estimate()},
                 {"slot_cost", finite_or_null(e.slot_cost())},
                 {"slot_cost_stderr", finite_or_null(e.slot_cost_stderr())},
                 {"pairs", e.pairs},
                 {"slots_per_pair", finite_or_null(e.slots_per_pair())},
                 {"efficiency", e.efficiency()},
                 {"efficiency_stderr", e.efficiency_stderr()},
                 {"bandwidth_units", e.bandwidth_units},
                 {"power_units", e.power_units}};
    if (!e.occupancy_counts.empty()) {
        json occ = json::object();
        const auto freq = e.occupancy();
        for (std::size_t i = 0; i < freq.size(); ++i) occ[e.state_labels.at(i)] = freq[i];
        root["occupancy"] = occ;
    }
    return root.dump(2);
}

void write_trace_csv(std::ostream& out, std::span<const SlotEvent> trace) {
    out << "slot,scheme,state,outcome,mrc_total,decode_set_bitmask\n";
    for (const auto& ev : trace) {
        out << ev.slot << ',' << scheme_name(ev.scheme) << ",\"" << ev.state << "\","
            << (ev.success ? "success" : "failure") << ',' << fmt(ev.mrc_total) << ",0x" << std::hex
            << ev.decode_set << std::dec << '\n';
    }
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace mdma
