#include <string>

#include "json_codec.hpp"
#include "pedcloud/classifier.hpp"
#include "pedcloud/errors.hpp"
#include "pedcloud/model_io.hpp"

namespace pedcloud {

using detail::json;

namespace {

json spec_to_json(const NetSpec& spec) {
    json sa = json::array();
    for (const auto& layer : spec.sa_layers) {
        json branches = json::array();
        for (const auto& b : layer.branches) {
            branches.push_back({{"radius", b.radius}, {"max_neighbors", b.max_neighbors}, {"mlp_widths", b.mlp_widths}});
        }
        sa.push_back({{"num_centroids", layer.num_centroids}, {"branches", branches}});
    }
    return {{"input_points", spec.input_points},
            {"sa_layers", sa},
            {"global_mlp_widths", spec.global_mlp_widths},
            {"head_widths", spec.head_widths},
            {"dropout_keep", spec.dropout_keep}};
}

std::vector<std::size_t> widths_from(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_array()) throw ParseError(std::string("net spec lacks '") + key + "'");
    std::vector<std::size_t> out;
    for (const auto& v : *it) {
        if (!v.is_number_unsigned()) throw ParseError(std::string("'") + key + "' must hold non-negative integers");
        out.push_back(v.get<std::size_t>());
    }
    return out;
}

std::size_t count_from(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number_unsigned()) {
        throw ParseError(std::string("net spec field '") + key + "' must be a non-negative integer");
    }
    return it->get<std::size_t>();
}

NetSpec spec_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("net spec must be an object");
    NetSpec spec;
    spec.input_points = count_from(j, "input_points");
    auto sa = j.find("sa_layers");
    if (sa == j.end() || !sa->is_array()) throw ParseError("net spec lacks 'sa_layers'");
    for (const auto& l : *sa) {
        SALayerSpec layer;
        layer.num_centroids = count_from(l, "num_centroids");
        auto br = l.find("branches");
        if (br == l.end() || !br->is_array()) throw ParseError("SA layer lacks 'branches'");
        for (const auto& b : *br) {
            GroupingBranch g;
            g.radius = detail::require_number(b, "radius");
            g.max_neighbors = count_from(b, "max_neighbors");
            g.mlp_widths = widths_from(b, "mlp_widths");
            layer.branches.push_back(std::move(g));
        }
        spec.sa_layers.push_back(std::move(layer));
    }
    spec.global_mlp_widths = widths_from(j, "global_mlp_widths");
    spec.head_widths = widths_from(j, "head_widths");
    spec.dropout_keep = detail::require_number(j, "dropout_keep");
    try {
        validate_spec(spec);
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what());
    }
    return spec;
}

}  // namespace

std::string write_net_spec(const NetSpec& spec) { return spec_to_json(spec).dump(2) + "\n"; }

NetSpec parse_net_spec(std::string_view text) {
    try {
        return spec_from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw ParseError(std::string("net spec: ") + e.what());
    }
}

std::string write_checkpoint(const NetSpec& spec, const NetParams& params) {
    json layers = json::array();
    for (const auto& l : params.layers) {
        layers.push_back({{"in", l.in}, {"out", l.out}, {"weight", l.weight}, {"bias", l.bias}});
    }
    json j{{"schema_version", kCheckpointSchemaVersion},
           {"layout_version", kParamsLayoutVersion},
           {"spec", spec_to_json(spec)},
           {"layers", layers}};
    return j.dump() + "\n";
}

Checkpoint parse_checkpoint(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("checkpoint: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("checkpoint must be a JSON object");
    auto v = j.find("schema_version");
    if (v == j.end() || !v->is_number_integer()) throw ParseError("checkpoint lacks schema_version");
    if (v->get<int>() != kCheckpointSchemaVersion) {
        throw VersionError("unsupported checkpoint schema_version " + std::to_string(v->get<int>()));
    }
    if (auto lv = j.find("layout_version"); lv != j.end() && lv->get<int>() != kParamsLayoutVersion) {
        throw VersionError("unsupported parameter layout_version");
    }
    if (!j.contains("spec")) throw ParseError("checkpoint lacks 'spec'");
    Checkpoint cp;
    cp.spec = spec_from_json(j.at("spec"));
    auto layers = j.find("layers");
    if (layers == j.end() || !layers->is_array()) throw ParseError("checkpoint lacks 'layers'");
    try {
        for (const auto& l : *layers) {
            DenseLayer<double> d;
            d.in = l.at("in").get<std::size_t>();
            d.out = l.at("out").get<std::size_t>();
            d.weight = l.at("weight").get<std::vector<double>>();
            d.bias = l.at("bias").get<std::vector<double>>();
            cp.params.layers.push_back(std::move(d));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("checkpoint layers: ") + e.what());
    }
    const auto shapes = layer_shapes(cp.spec);
    if (shapes.size() != cp.params.layers.size()) throw ShapeError("checkpoint layer count does not match its spec");
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        const auto& l = cp.params.layers[i];
        if (l.in != shapes[i].in || l.out != shapes[i].out || l.weight.size() != l.in * l.out ||
            l.bias.size() != l.out) {
            throw ShapeError("checkpoint layer " + std::to_string(i) + " does not match its spec");
        }
    }
    return cp;
}

void save_params(const NetSpec& spec, const NetParams& params, const std::filesystem::path& path) {
    write_file_atomic(path, write_checkpoint(spec, params));
}

Checkpoint load_params(const std::filesystem::path& path) { return parse_checkpoint(read_file(path)); }

Checkpoint load_params(const std::filesystem::path& path, const NetSpec& expected) {
    auto cp = load_params(path);
    if (!(cp.spec == expected)) throw ShapeError("checkpoint was trained for a different network spec");
    return cp;
}

}  // namespace pedcloud
