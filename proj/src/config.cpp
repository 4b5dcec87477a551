#include "prl/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace prl {

FrdfMode frdf_mode_from_string(const std::string& s) {
    if (s == "warp") return FrdfMode::kWarp;
    if (s == "additive") return FrdfMode::kAdditive;
    throw Error("unknown frdf mode '" + s + "' (expected warp|additive)");
}

std::string to_string(FrdfMode m) { return m == FrdfMode::kWarp ? "warp" : "additive"; }

int NetConfig::effective_window(int grid) const {
    if (grid % window_size == 0) return window_size;
    if (grid < window_size) return grid;  // global single-window attention
    throw Error("token grid " + std::to_string(grid) + " is neither divisible by nor smaller than window " +
                std::to_string(window_size));
}

void NetConfig::validate_shapes() const {
    if (patch_size < 1 || image_size < 1 || embed_dim < 1 || window_size < 1)
        throw Error("config extents must be positive");
    if (image_size % (patch_size * 8) != 0)
        throw Error("image size must be divisible by patch_size * 8");
    if (heads.size() != 4 || blocks.size() != 4)
        throw Error("heads and blocks must list exactly 4 stages");
    if (embed_dim % 2 != 0) throw Error("embed dim must be even for patch merging");
    for (int i = 0; i < 4; ++i) {
        const int ch = embed_dim * (1 << i);
        if (heads[i] < 1 || ch % heads[i] != 0)
            throw Error("stage " + std::to_string(i + 1) + " channels not divisible by head count");
        if (blocks[i] < 1) throw Error("each stage needs at least one STB pair");
    }
    if (fusion_heads < 1 || (8 * embed_dim) % fusion_heads != 0)
        throw Error("fusion width not divisible by fusion head count");
    if (frdf_iterations < 0) throw Error("frdf iterations must be >= 0");
}

void NetConfig::validate() const {
    validate_shapes();
    for (int i = 0; i < 4; ++i) {
        const int grid = image_size / patch_size / (1 << i);
        effective_window(grid);  // throws on bad divisibility
    }
}

std::map<std::string, std::string> parse_ini(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.erase(comment);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(path + ":" + std::to_string(lineno) + ": expected key=value");
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

namespace {

std::vector<int> parse_int_list(const std::string& v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    return out;
}

}  // namespace

void apply_config_entry(NetConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "image_size") cfg.image_size = std::stoi(value);
    else if (key == "patch_size") cfg.patch_size = std::stoi(value);
    else if (key == "embed_dim") cfg.embed_dim = std::stoi(value);
    else if (key == "window_size") cfg.window_size = std::stoi(value);
    else if (key == "heads") cfg.heads = parse_int_list(value);
    else if (key == "blocks") cfg.blocks = parse_int_list(value);
    else if (key == "fusion_heads") cfg.fusion_heads = std::stoi(value);
    else if (key == "frdf_iterations") cfg.frdf_iterations = std::stoi(value);
    else if (key == "frdf_mode") cfg.frdf_mode = frdf_mode_from_string(value);
    else throw Error("unknown config key '" + key + "'");
}

NetConfig load_net_config(const std::string& path, NetConfig base) {
    for (const auto& [k, v] : parse_ini(path)) apply_config_entry(base, k, v);
    base.validate();
    return base;
}

}  // namespace prl
