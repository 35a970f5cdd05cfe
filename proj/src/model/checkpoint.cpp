#include "arramon/model/checkpoint.h"

#include <fstream>
#include <map>

#include "arramon/error.h"

namespace arramon {

using nlohmann::json;

namespace {

json config_json(const ModelConfig& c) {
    return {{"hidden", c.hidden},
            {"word_dim", c.word_dim},
            {"action_dim", c.action_dim},
            {"grid", c.features.grid},
            {"bin_deg", c.features.bin_deg},
            {"view_range", c.features.view_range},
            {"dropout", c.dropout},
            {"init_range", c.init_range},
            {"zero_output_init", c.zero_output_init},
            {"modality", std::string(name(c.modality))},
            {"seed", c.seed}};
}

ModelConfig config_from(const json& j) {
    ModelConfig c;
    c.hidden = j.at("hidden").get<int>();
    c.word_dim = j.at("word_dim").get<int>();
    c.action_dim = j.at("action_dim").get<int>();
    c.features.grid = j.at("grid").get<int>();
    c.features.bin_deg = j.at("bin_deg").get<double>();
    c.features.view_range = j.at("view_range").get<double>();
    c.dropout = j.at("dropout").get<double>();
    c.init_range = j.at("init_range").get<double>();
    c.zero_output_init = j.at("zero_output_init").get<bool>();
    auto m = parse_modality(j.at("modality").get<std::string>());
    if (!m) throw SchemaError("unknown modality");
    c.modality = *m;
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

} // namespace

nlohmann::json checkpoint_json(const Network& net) {
    json tensors = json::array();
    for (const ad::Param* p : net.params()) {
        std::vector<double> data;
        data.reserve(static_cast<std::size_t>(p->value.size()));
        for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
            for (Eigen::Index c = 0; c < p->value.cols(); ++c) data.push_back(p->value(r, c));
        }
        tensors.push_back({{"name", p->name}, {"shape", {p->value.rows(), p->value.cols()}}, {"data", data}});
    }
    return {{"format", "arramon-checkpoint"},
            {"version", 1},
            {"config", config_json(net.config())},
            {"vocab", net.vocab().words()},
            {"tensors", tensors}};
}

Network network_from_json(const nlohmann::json& j) {
    try {
        if (j.value("format", std::string{}) != "arramon-checkpoint" || j.value("version", 0) != 1) {
            throw SchemaError("not an arramon checkpoint");
        }
        const auto words = j.at("vocab").get<std::vector<std::string>>();
        Network net(config_from(j.at("config")), Vocab::from_words(words));
        std::map<std::string, const json*> by_name;
        for (const auto& t : j.at("tensors")) by_name[t.at("name").get<std::string>()] = &t;
        for (ad::Param* p : net.params()) {
            auto it = by_name.find(p->name);
            if (it == by_name.end()) throw SchemaError("missing tensor " + p->name);
            const json& t = *it->second;
            const auto shape = t.at("shape").get<std::vector<Eigen::Index>>();
            if (shape.size() != 2 || shape[0] != p->value.rows() || shape[1] != p->value.cols()) {
                throw SchemaError("shape mismatch for " + p->name);
            }
            const auto& data = t.at("data");
            if (static_cast<Eigen::Index>(data.size()) != p->value.size()) throw SchemaError("size mismatch for " + p->name);
            std::size_t k = 0;
            for (Eigen::Index r = 0; r < shape[0]; ++r) {
                for (Eigen::Index c = 0; c < shape[1]; ++c) p->value(r, c) = data[k++].get<double>();
            }
            p->zero_grad();
        }
        return net;
    } catch (const json::exception& e) {
        throw SchemaError(e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const Network& net) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << checkpoint_json(net).dump() << '\n';
}

Network load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path.string());
    try {
        return network_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
}

} // namespace arramon
