#include "masim/system_config.hpp"

#include <fstream>
#include <sstream>

namespace masim {

void SystemConfig::validate() const {
    if (num_antennas < 1) throw ConfigError("m must be positive");
    if (num_online < 1) throw ConfigError("n must be positive");
    if (block_len < 1) throw ConfigError("d must be positive");
    if (frame_len < 1) throw ConfigError("t must be positive");
    if (iterations < 1) throw ConfigError("k must be positive");
    if (block_len >= frame_len)
        throw ConfigError("d must be smaller than t (precoding extends short messages)");
    if (static_cast<long>(iterations) * block_len >
        static_cast<long>(num_antennas) * frame_len)
        throw ConfigError("k*d must not exceed m*t");
    if (max_active < 1 || max_active > num_online)
        throw ConfigError("na_max must be in [1, n]");
    if (activity.kind == Activity::Kind::FixedCount) {
        if (activity.count < 1 || activity.count > num_online)
            throw ConfigError("fixed activity count must be in [1, n]");
        if (activity.count > max_active)
            throw ConfigError("fixed activity count must not exceed na_max");
        if (activity.count == max_active && iterations < max_active)
            throw ConfigError("k must be at least na_max for fixed activity at the cap");
    } else {
        if (!(activity.prob > 0.0 && activity.prob < 1.0))
            throw ConfigError("bernoulli probability must lie in (0,1)");
    }
    if (coded && 2 * block_len != 248)
        throw ConfigError("coded payloads require d = 124 (248 coded bits)");
}

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

SystemConfig SystemConfig::from_text(const std::string& text) {
    SystemConfig cfg;
    bool saw_na_max = false;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line missing '=': " + line);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "m") cfg.num_antennas = std::stoi(value);
            else if (key == "n") cfg.num_online = std::stoi(value);
            else if (key == "d") cfg.block_len = std::stoi(value);
            else if (key == "t") cfg.frame_len = std::stoi(value);
            else if (key == "k") cfg.iterations = std::stoi(value);
            else if (key == "snr_db") cfg.snr_db = std::stod(value);
            else if (key == "seed") cfg.seed = std::stoull(value);
            else if (key == "na_max") { cfg.max_active = std::stoi(value); saw_na_max = true; }
            else if (key == "coded") cfg.coded = (value == "1" || value == "true");
            else if (key == "activity") {
                size_t colon = value.find(':');
                if (colon == std::string::npos)
                    throw ConfigError("activity must be fixed:<count> or bernoulli:<p>");
                std::string kind = trim(value.substr(0, colon));
                std::string arg = trim(value.substr(colon + 1));
                if (kind == "fixed") cfg.activity = Activity::fixed(std::stoi(arg));
                else if (kind == "bernoulli") cfg.activity = Activity::bernoulli(std::stod(arg));
                else throw ConfigError("unknown activity kind: " + kind);
            } else {
                throw ConfigError("unknown config key: " + key);
            }
        } catch (const std::invalid_argument&) {
            throw ConfigError("bad value for " + key + ": " + value);
        } catch (const std::out_of_range&) {
            throw ConfigError("value out of range for " + key + ": " + value);
        }
    }
    if (!saw_na_max) {
        cfg.max_active = cfg.activity.kind == Activity::Kind::FixedCount
                             ? cfg.activity.count
                             : cfg.num_online;
    }
    cfg.validate();
    return cfg;
}

SystemConfig SystemConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_text(buf.str());
}

}  // namespace masim
