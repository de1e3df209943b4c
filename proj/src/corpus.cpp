#include "timebound/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "timebound/errors.hpp"

namespace timebound {

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p);
    if (!f) throw IoError("cannot read " + p.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void parse_props(Fixture& fx, const std::string& text) {
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        lineno++;
        std::string s = raw;
        std::size_t c = s.find('#');
        if (c != std::string::npos) s = s.substr(0, c);
        std::istringstream ls(s);
        std::string key, value;
        if (!(ls >> key)) continue;
        if (!(ls >> value)) throw AsmError(lineno, "property '" + key + "' needs a value");
        if (key == "single_path") fx.single_path = value == "true";
        else if (key == "stack_exact") fx.stack_exact = value == "true";
        else if (key == "expect_infeasible") fx.expect_infeasible = std::stoi(value);
        else if (key == "max_ratio") fx.max_ratio = std::stod(value);
        else throw AsmError(lineno, "unknown property '" + key + "'");
    }
}

} // namespace

std::vector<Fixture> load_corpus(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw IoError("corpus directory not found: " + dir);

    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".s") names.push_back(entry.path().stem().string());
    std::sort(names.begin(), names.end());
    if (names.empty()) throw IoError("no fixtures in " + dir);

    std::vector<Fixture> out;
    for (const auto& name : names) {
        Fixture fx;
        fx.name = name;
        fs::path base = fs::path(dir) / name;
        fx.source = slurp(base.replace_extension(".s"));
        try {
            fx.image = assemble(fx.source);
        } catch (const AsmError& e) {
            throw IoError("fixture " + name + " does not assemble: " + e.what());
        }
        fs::path ann = fs::path(dir) / (name + ".ann");
        if (fs::exists(ann)) fx.ann = parse_annotations(slurp(ann));
        fs::path props = fs::path(dir) / (name + ".props");
        if (fs::exists(props)) parse_props(fx, slurp(props));
        out.push_back(std::move(fx));
    }
    return out;
}

} // namespace timebound
