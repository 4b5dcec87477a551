#pragma once

#include <map>
#include <string>
#include <vector>

#include "prl/errors.hpp"

namespace prl {

enum class FrdfMode { kWarp, kAdditive };

FrdfMode frdf_mode_from_string(const std::string& s);
std::string to_string(FrdfMode m);

struct NetConfig {
    int image_size = 96;  // h = w
    int patch_size = 4;
    int embed_dim = 16;  // c
    int window_size = 6;
    std::vector<int> heads = {2, 2, 2, 2};   // per encoder stage
    std::vector<int> blocks = {1, 1, 1, 1};  // STB pairs per stage
    int fusion_heads = 2;
    int frdf_iterations = 5;
    FrdfMode frdf_mode = FrdfMode::kWarp;

    static NetConfig toy() { return {}; }
    static NetConfig paper() {
        NetConfig c;
        c.image_size = 384;
        c.embed_dim = 128;
        c.window_size = 7;
        return c;
    }

    // Effective window at a grid: the configured size when it divides the
    // grid, the whole grid (global attention) when the grid is smaller.
    int effective_window(int grid) const;
    // Dimension arithmetic only; enough for a dry-run shape chain.
    void validate_shapes() const;
    // Full constructibility: also window divisibility at every stage grid.
    void validate() const;
};

// key=value lines; '#' and ';' start comments; unknown keys are errors.
std::map<std::string, std::string> parse_ini(const std::string& path);
void apply_config_entry(NetConfig& cfg, const std::string& key, const std::string& value);
NetConfig load_net_config(const std::string& path, NetConfig base = NetConfig::toy());

}  // namespace prl
