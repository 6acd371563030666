#include "bplab/network_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace bplab {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    out << text;
    if (!out) throw FormatError("write failed for " + path.string());
}

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("malformed JSON: ") + e.what());
    }
}

template <typename T>
T field(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) throw FormatError(where + ": missing field '" + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw FormatError(where + ": bad field '" + key + "': " + e.what());
    }
}

}  // namespace

BayesNet parse_network(const std::string& text) {
    const json doc = parse_json(text);
    const int version = field<int>(doc, "version", "network");
    if (version != kNetworkFormatVersion)
        throw FormatError("network: unsupported version " + std::to_string(version));
    const json nodes_json = field<json>(doc, "nodes", "network");
    if (!nodes_json.is_array()) throw FormatError("network: 'nodes' must be an array");

    std::vector<NodeSpec> nodes;
    nodes.reserve(nodes_json.size());
    for (std::size_t i = 0; i < nodes_json.size(); ++i) {
        const json& nj = nodes_json[i];
        const std::string where = "node[" + std::to_string(i) + "]";
        NodeSpec spec;
        const auto id = field<long long>(nj, "id", where);
        if (id < 0 || static_cast<std::size_t>(id) != i)
            throw FormatError(where + ": ids must be consecutive integers from 0");
        spec.id = static_cast<NodeId>(id);
        spec.name = nj.contains("name") ? field<std::string>(nj, "name", where) : std::string{};
        spec.arity = field<int>(nj, "arity", where);
        for (long long p : field<std::vector<long long>>(nj, "parents", where)) {
            if (p < 0) throw FormatError(where + ": negative parent id");
            spec.parents.push_back(static_cast<NodeId>(p));
        }
        const json cj = field<json>(nj, "cpd", where);
        const auto type = field<std::string>(cj, "type", where + ".cpd");
        if (type == "table") {
            spec.cpd = TableCpd{field<std::vector<std::vector<double>>>(cj, "rows", where + ".cpd")};
        } else if (type == "noisy_or") {
            spec.cpd = NoisyOrCpd{field<double>(cj, "theta0", where + ".cpd"),
                                  field<std::vector<double>>(cj, "thetas", where + ".cpd")};
        } else {
            throw FormatError(where + ": unknown cpd type '" + type + "'");
        }
        nodes.push_back(std::move(spec));
    }
    return BayesNet(std::move(nodes));
}

std::string format_network(const BayesNet& net) {
    json nodes = json::array();
    for (const NodeSpec& n : net.nodes()) {
        json cpd;
        if (const auto* t = std::get_if<TableCpd>(&n.cpd)) {
            cpd = {{"type", "table"}, {"rows", t->rows}};
        } else {
            const auto& nor = std::get<NoisyOrCpd>(n.cpd);
            cpd = {{"type", "noisy_or"}, {"theta0", nor.theta0}, {"thetas", nor.thetas}};
        }
        nodes.push_back(
            {{"id", n.id}, {"name", n.name}, {"arity", n.arity}, {"parents", n.parents}, {"cpd", std::move(cpd)}});
    }
    json doc = {{"version", kNetworkFormatVersion}, {"nodes", std::move(nodes)}};
    return doc.dump(1) + "\n";
}

BayesNet load_network(const std::filesystem::path& path) { return parse_network(read_file(path)); }

void save_network(const BayesNet& net, const std::filesystem::path& path) { write_file(path, format_network(net)); }

Evidence parse_evidence(const std::string& text) {
    const json doc = parse_json(text);
    const auto obs = field<json>(doc, "observations", "evidence");
    if (!obs.is_array()) throw FormatError("evidence: 'observations' must be an array");
    Evidence ev;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const std::string where = "observation[" + std::to_string(i) + "]";
        const auto node = field<long long>(obs[i], "node", where);
        const auto state = field<int>(obs[i], "state", where);
        if (node < 0) throw FormatError(where + ": negative node id");
        try {
            ev.observe(static_cast<NodeId>(node), state);
        } catch (const ModelError& e) {
            throw FormatError(where + ": " + e.what());
        }
    }
    return ev;
}

std::string format_evidence(const Evidence& ev) {
    json obs = json::array();
    for (const auto& [node, state] : ev.items()) obs.push_back({{"node", node}, {"state", state}});
    return json{{"observations", std::move(obs)}}.dump(1) + "\n";
}

Evidence load_evidence(const std::filesystem::path& path) { return parse_evidence(read_file(path)); }

void save_evidence(const Evidence& ev, const std::filesystem::path& path) { write_file(path, format_evidence(ev)); }

}  // namespace bplab
