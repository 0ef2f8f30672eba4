#include "fband/market/artifact.hpp"

#include <algorithm>
#include <fstream>

#include "fband/error.hpp"

namespace fband::market {

using nlohmann::json;

namespace {

json components_json(const std::vector<std::vector<double>>& comps) { return json(comps); }

std::vector<std::vector<double>> components_from(const json& j, const char* field, std::size_t n) {
    auto comps = j.at(field).get<std::vector<std::vector<double>>>();
    if (comps.size() != 2) throw ParseError(field, 0, "expected 2 components");
    for (const auto& c : comps)
        if (c.size() != n) throw ParseError(field, 0, "component length does not match the grid");
    return comps;
}

json equilibrium_json(const std::optional<Equilibrium>& eq) {
    if (!eq) return nullptr;
    return json{{"Q", eq->quantity}, {"P", eq->price}};
}

}  // namespace

json artifact_to_json(const DayArtifact& a) {
    std::vector<std::vector<double>> mod;
    for (std::size_t j = 0; j < a.modulation.p(); ++j) {
        const auto c = a.modulation.component(j);
        mod.emplace_back(c.begin(), c.end());
    }
    json j{
        {"version", 1},
        {"day", a.day.str()},
        {"grid", {{"lo", a.grid.lo()}, {"hi", a.grid.hi()}, {"n", a.grid.size()}}},
        {"window", a.window},
        {"l", a.l},
        {"b", a.b},
        {"m", a.m},
        {"center", components_json(a.center.components())},
        {"modulation", mod},
        {"scores", a.scores},
        {"observed", a.observed ? components_json(a.observed->components()) : json(nullptr)},
        {"equilibrium", equilibrium_json(a.observed_equilibrium)},
    };
    return j;
}

DayArtifact artifact_from_json(const json& j) {
    try {
        if (j.at("version").get<int>() != 1) throw ParseError("version", 0, "unsupported artifact version");
        DayArtifact a;
        a.day = Date::parse(j.at("day").get<std::string>());
        const auto& g = j.at("grid");
        a.grid = Grid(g.at("lo").get<double>(), g.at("hi").get<double>(), g.at("n").get<std::size_t>());
        a.window = j.at("window").get<std::size_t>();
        a.l = j.at("l").get<std::size_t>();
        a.b = j.at("b").get<std::size_t>();
        a.m = j.at("m").get<std::size_t>();
        const std::size_t n = a.grid.size();
        a.center = FunctionalSample(a.grid, components_from(j, "center", n));
        a.modulation = ModulationFunction({a.grid, a.grid}, components_from(j, "modulation", n));
        a.scores = j.at("scores").get<std::vector<double>>();
        if (!j.at("observed").is_null()) a.observed = FunctionalSample(a.grid, components_from(j, "observed", n));
        if (const auto& e = j.at("equilibrium"); !e.is_null())
            a.observed_equilibrium = Equilibrium{e.at("Q").get<double>(), e.at("P").get<double>()};
        return a;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception& e) {
        throw ParseError("artifact", 0, e.what());
    }
}

void write_artifacts(const std::filesystem::path& dir, const std::vector<DayArtifact>& artifacts,
                     const std::string& config_hash) {
    std::filesystem::create_directories(dir);
    for (const auto& a : artifacts) {
        json j = artifact_to_json(a);
        if (!config_hash.empty()) j["config_hash"] = config_hash;
        std::ofstream out(dir / (a.day.str() + ".json"));
        if (!out) throw ArgumentError("cannot write artifact for " + a.day.str());
        out << j.dump() << '\n';
    }
}

DayArtifact read_artifact(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string(), 0, "cannot open artifact");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ParseError(path.string(), 0, e.what());
    }
    try {
        return artifact_from_json(j);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ":" + e.path(), e.line(), e.message());
    }
}

std::vector<DayArtifact> read_artifact_dir(const std::filesystem::path& dir) {
    std::vector<DayArtifact> out;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json" && entry.path().filename() != "index.json")
            out.push_back(read_artifact(entry.path()));
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.day < b.day; });
    return out;
}

}  // namespace fband::market
